#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace rmscca {

// Classical (maximum likelihood) or rank-based covariance.
enum class EstimatorMode { Pearson, Spearman };

std::string_view to_string(EstimatorMode mode) noexcept;
EstimatorMode parse_estimator_mode(std::string_view text);

// Two sample-aligned matrices: rows are observations, columns variables.
struct DataPair {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;

  Eigen::Index n() const noexcept { return x.rows(); }
  Eigen::Index p() const noexcept { return x.cols(); }
  Eigen::Index q() const noexcept { return y.cols(); }

  // Throws InvalidInput on shape problems or non-finite cells and
  // DegenerateColumn on a constant column.
  void validate() const;
};

// Scaled cross-covariance K = Dxx^{-1/2} Sxy Dyy^{-1/2} with the diagonal
// scalings kept so canonical vectors can be recovered from singular vectors.
struct KMatrix {
  Eigen::MatrixXd k;
  Eigen::VectorXd dxx_inv_sqrt;
  Eigen::VectorXd dyy_inv_sqrt;
  EstimatorMode mode = EstimatorMode::Pearson;
};

struct CovarianceEstimate {
  Eigen::MatrixXd matrix;
  // Columns whose variance is exactly zero.
  std::vector<Eigen::Index> degenerate;
};

// Column-wise midranks (ties share the mean of the ranks they span).
Eigen::MatrixXd rank_transform(const Eigen::MatrixXd& m);

// Sample covariance with divisor n-1; Spearman mode works on column ranks.
CovarianceEstimate covariance(const Eigen::MatrixXd& m, EstimatorMode mode);

// Cross covariance between the columns of x and y (divisor n-1).
Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                 EstimatorMode mode);

KMatrix build_k(const DataPair& data, EstimatorMode mode);

// Centers every column and scales it to unit sample variance. Constant
// columns are only centered.
void standardize_columns(Eigen::MatrixXd& m);

}  // namespace rmscca
