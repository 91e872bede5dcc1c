#include "rmscca/covariance.hpp"

#include "rmscca/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rmscca {

namespace {

Eigen::MatrixXd centered(const Eigen::MatrixXd& m) {
  return m.rowwise() - m.colwise().mean();
}

std::string name_at(const std::vector<std::string>& names, Eigen::Index j) {
  return static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                     : std::string{};
}

Eigen::VectorXd column_variances(const Eigen::MatrixXd& centered_m) {
  const double denom = static_cast<double>(centered_m.rows() - 1);
  return centered_m.colwise().squaredNorm().transpose() / denom;
}

Eigen::VectorXd inv_sqrt_or_throw(const Eigen::VectorXd& var, const char* block,
                                  const std::vector<std::string>& names) {
  Eigen::VectorXd out(var.size());
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    if (!(var(j) > 0.0) || !std::isfinite(var(j))) {
      throw DegenerateColumn(block, static_cast<long>(j), name_at(names, j));
    }
    out(j) = 1.0 / std::sqrt(var(j));
  }
  return out;
}

}  // namespace

std::string_view to_string(EstimatorMode mode) noexcept {
  return mode == EstimatorMode::Pearson ? "pearson" : "spearman";
}

EstimatorMode parse_estimator_mode(std::string_view text) {
  if (text == "pearson") return EstimatorMode::Pearson;
  if (text == "spearman") return EstimatorMode::Spearman;
  throw InvalidInput("unknown estimator mode '" + std::string(text) + "'");
}

void DataPair::validate() const {
  if (x.rows() != y.rows()) {
    throw InvalidInput("x has " + std::to_string(x.rows()) + " rows but y has " +
                       std::to_string(y.rows()));
  }
  if (x.rows() < 3) throw InvalidInput("at least 3 observations are required");
  if (x.cols() == 0 || y.cols() == 0) throw InvalidInput("x and y need at least one column");
  if (!x.allFinite() || !y.allFinite()) throw InvalidInput("data contains missing or non-finite values");
  if (!x_names.empty() && static_cast<Eigen::Index>(x_names.size()) != x.cols()) {
    throw InvalidInput("x column name count does not match x");
  }
  if (!y_names.empty() && static_cast<Eigen::Index>(y_names.size()) != y.cols()) {
    throw InvalidInput("y column name count does not match y");
  }
  inv_sqrt_or_throw(column_variances(centered(x)), "x", x_names);
  inv_sqrt_or_throw(column_variances(centered(y)), "y", y_names);
}

Eigen::MatrixXd rank_transform(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("rank_transform: empty matrix");
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd ranks(n, m.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return m(a, j) < m(b, j); });
    Eigen::Index start = 0;
    while (start < n) {
      Eigen::Index stop = start + 1;
      while (stop < n && m(order[stop], j) == m(order[start], j)) ++stop;
      // 1-based ranks start+1 .. stop share their mean.
      const double midrank = 0.5 * static_cast<double>(start + 1 + stop);
      for (Eigen::Index t = start; t < stop; ++t) ranks(order[t], j) = midrank;
      start = stop;
    }
  }
  return ranks;
}

CovarianceEstimate covariance(const Eigen::MatrixXd& m, EstimatorMode mode) {
  if (m.rows() < 2) throw InvalidInput("covariance: at least 2 rows are required");
  if (m.cols() == 0) throw InvalidInput("covariance: empty matrix");
  const Eigen::MatrixXd c =
      centered(mode == EstimatorMode::Spearman ? rank_transform(m) : m);
  CovarianceEstimate est;
  est.matrix = (c.transpose() * c) / static_cast<double>(m.rows() - 1);
  // Exact symmetry regardless of the product kernel's summation order.
  est.matrix = (0.5 * (est.matrix + est.matrix.transpose())).eval();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (est.matrix(j, j) <= 0.0) {
      est.matrix(j, j) = 0.0;
      est.degenerate.push_back(j);
    }
  }
  return est;
}

Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                 EstimatorMode mode) {
  if (x.rows() != y.rows()) throw InvalidInput("cross_covariance: row counts differ");
  if (x.rows() < 2) throw InvalidInput("cross_covariance: at least 2 rows are required");
  if (mode == EstimatorMode::Spearman) {
    return centered(rank_transform(x)).transpose() * centered(rank_transform(y)) /
           static_cast<double>(x.rows() - 1);
  }
  return centered(x).transpose() * centered(y) / static_cast<double>(x.rows() - 1);
}

KMatrix build_k(const DataPair& data, EstimatorMode mode) {
  if (data.x.rows() != data.y.rows()) throw InvalidInput("build_k: x and y row counts differ");
  if (data.x.rows() < 2) throw InvalidInput("build_k: at least 2 rows are required");
  if (data.x.cols() == 0 || data.y.cols() == 0) throw InvalidInput("build_k: empty matrix");

  Eigen::MatrixXd xc;
  Eigen::MatrixXd yc;
  if (mode == EstimatorMode::Spearman) {
    xc = centered(rank_transform(data.x));
    yc = centered(rank_transform(data.y));
  } else {
    xc = centered(data.x);
    yc = centered(data.y);
  }
  const double denom = static_cast<double>(data.x.rows() - 1);

  KMatrix out;
  out.mode = mode;
  out.dxx_inv_sqrt = inv_sqrt_or_throw(column_variances(xc), "x", data.x_names);
  out.dyy_inv_sqrt = inv_sqrt_or_throw(column_variances(yc), "y", data.y_names);
  out.k = out.dxx_inv_sqrt.asDiagonal() * ((xc.transpose() * yc) / denom) *
          out.dyy_inv_sqrt.asDiagonal();
  if (!out.k.allFinite()) throw InvalidInput("build_k: non-finite entries in K");
  return out;
}

void standardize_columns(Eigen::MatrixXd& m) {
  if (m.rows() < 2) return;
  m = centered(m);
  const Eigen::VectorXd var = column_variances(m);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (var(j) > 0.0) m.col(j) /= std::sqrt(var(j));
  }
}

}  // namespace rmscca
