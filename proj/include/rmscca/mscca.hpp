#pragma once

#include "rmscca/covariance.hpp"
#include "rmscca/scca.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rmscca {

// Penalty grid used by the simulation studies: 0, 0.1, ..., 0.5.
std::vector<double> default_lambda_grid();

inline constexpr int kDefaultFolds = 5;

// Cross-validation layout shared by every pair of a fit (and by every
// permutation of a permutation study).
struct CvPlan {
  int n_cv = kDefaultFolds;
  std::vector<int> folds;  // fold id in [0, n_cv) per observation
  std::vector<double> lambda_grid = default_lambda_grid();
  std::uint64_t seed = 0;

  // Folds partition the rows and none is empty; grid strictly ascending
  // inside [0, 2].
  void validate(Eigen::Index n) const;
};

// Balanced random fold ids: sizes differ by at most one, fixed by `seed`.
std::vector<int> make_folds(Eigen::Index n, int n_cv, std::uint64_t seed);

CvPlan make_plan(Eigen::Index n, int n_cv, std::uint64_t seed,
                 std::vector<double> lambda_grid = default_lambda_grid());

struct FitOptions {
  EstimatorMode mode = EstimatorMode::Pearson;
  // Correlation used to score held-out projections; defaults to `mode`.
  std::optional<EstimatorMode> test_cor;
  double tol = 1e-6;
  int max_iter = 1000;
  // Worker count for grid cells x folds; 0 = all cores.
  unsigned threads = 1;

  EstimatorMode test_mode() const noexcept { return test_cor.value_or(mode); }
};

struct GridCell {
  double lambda_u = 0.0;
  double lambda_v = 0.0;
  // Mean held-out correlation; -infinity when any fold was degenerate.
  double cc_test_mean = 0.0;
  int nonconverged_folds = 0;

  bool viable() const noexcept;
};

struct CvSelection {
  double lambda_u_star = 0.0;
  double lambda_v_star = 0.0;
  double cc_test_mean = 0.0;
  std::vector<GridCell> cells;  // lambda_u-major grid order
};

struct PriorPair {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

// k - (u' k v) u v'.
Eigen::MatrixXd deflate(const Eigen::MatrixXd& k, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& v);

// Ordering used to pick the winning cell: higher mean test correlation, then
// the sparser cell (larger lambda_u + lambda_v), then larger lambda_u.
bool cell_preferred(const GridCell& a, const GridCell& b) noexcept;

// Scores every grid cell by cross-validation for the next pair after `prior`.
// Throws NoViableLambda(pair_index) when no cell is viable.
CvSelection cv_select(const DataPair& data, std::span<const PriorPair> prior, const CvPlan& plan,
                      const FitOptions& options, int pair_index = 0);

struct FitResult {
  std::vector<CanonicalPair> pairs;
  std::vector<CvSelection> selections;
  EstimatorMode mode = EstimatorMode::Pearson;
  CvPlan plan;
  int pq_star = 0;
};

// Sequential sparse canonical pairs with per-pair cross-validated penalties
// and deflation of the full-data K between pairs.
FitResult fit_pairs(const DataPair& data, int pq_star, const CvPlan& plan,
                    const FitOptions& options);

}  // namespace rmscca
