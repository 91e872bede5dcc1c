#include "rmscca/scca.hpp"

#include "rmscca/error.hpp"

#include <algorithm>
#include <cmath>

namespace rmscca {

namespace {

bool normalize_in_place(Eigen::VectorXd& w) {
  const double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  w /= norm;
  return true;
}

// One half-step of the alternating update: project, normalize, threshold,
// normalize.
void thresholded_update(Eigen::VectorXd& out, double lambda, const SparsePairConfig& cfg) {
  if (!normalize_in_place(out)) throw DegeneratePair(cfg.lambda_u, cfg.lambda_v);
  if (lambda > 0.0) out = soft_threshold(out, lambda);
  if (!normalize_in_place(out)) throw DegeneratePair(cfg.lambda_u, cfg.lambda_v);
}

}  // namespace

void SparsePairConfig::validate() const {
  if (!(lambda_u >= 0.0 && lambda_u <= 2.0) || !(lambda_v >= 0.0 && lambda_v <= 2.0)) {
    throw InvalidInput("penalties must lie in [0, 2]");
  }
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidInput("tol must lie in (0, 1)");
  if (max_iter < 1) throw InvalidInput("max_iter must be positive");
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& w, double lambda) {
  const double half = 0.5 * lambda;
  Eigen::VectorXd out(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double shrunk = std::abs(w(j)) - half;
    if (shrunk > 0.0 && w(j) != 0.0) {
      out(j) = w(j) > 0.0 ? shrunk : -shrunk;
    } else {
      out(j) = 0.0;
    }
  }
  return out;
}

CanonicalPair sparse_singular_pair(const Eigen::MatrixXd& k, const SparsePairConfig& cfg,
                                   const std::optional<InitialVectors>& init) {
  cfg.validate();
  if (k.rows() == 0 || k.cols() == 0) throw InvalidInput("sparse_singular_pair: empty K");

  Eigen::VectorXd u_prev = init ? init->first : Eigen::VectorXd(k.rowwise().mean());
  Eigen::VectorXd v_prev = init ? init->second : Eigen::VectorXd(k.colwise().mean().transpose());
  if (u_prev.size() != k.rows() || v_prev.size() != k.cols()) {
    throw InvalidInput("sparse_singular_pair: initial vectors do not match K");
  }
  if (!normalize_in_place(u_prev) || !normalize_in_place(v_prev)) {
    throw InvalidInput("sparse_singular_pair: zero initial vector");
  }

  CanonicalPair pair;
  Eigen::VectorXd u(k.rows());
  Eigen::VectorXd v = v_prev;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    u.noalias() = k * v;
    thresholded_update(u, cfg.lambda_u, cfg);
    v.noalias() = k.transpose() * u;
    thresholded_update(v, cfg.lambda_v, cfg);

    const double change = std::max((u - u_prev).lpNorm<Eigen::Infinity>(),
                                   (v - v_prev).lpNorm<Eigen::Infinity>());
    u_prev = u;
    v_prev = v;
    pair.iterations = it;
    if (change < cfg.tol) {
      pair.converged = true;
      break;
    }
  }

  Eigen::Index lead = 0;
  u.cwiseAbs().maxCoeff(&lead);
  if (u(lead) < 0.0) {
    u = -u;
    v = -v;
  }
  pair.cc = u.dot(k * v);
  pair.u = std::move(u);
  pair.v = std::move(v);
  pair.lambda_u_star = cfg.lambda_u;
  pair.lambda_v_star = cfg.lambda_v;
  return pair;
}

CanonicalPair sparse_singular_pair(const KMatrix& k, const SparsePairConfig& cfg,
                                   const std::optional<InitialVectors>& init) {
  return sparse_singular_pair(k.k, cfg, init);
}

CanonicalPair canonical_vectors(CanonicalPair pair, const Eigen::VectorXd& dxx_inv_sqrt,
                                const Eigen::VectorXd& dyy_inv_sqrt) {
  if (pair.u.size() != dxx_inv_sqrt.size() || pair.v.size() != dyy_inv_sqrt.size()) {
    throw InvalidInput("canonical_vectors: scaling does not match singular vectors");
  }
  pair.alpha = dxx_inv_sqrt.cwiseProduct(pair.u);
  pair.beta = dyy_inv_sqrt.cwiseProduct(pair.v);
  return pair;
}

CanonicalPair canonical_vectors(CanonicalPair pair, const KMatrix& k) {
  return canonical_vectors(std::move(pair), k.dxx_inv_sqrt, k.dyy_inv_sqrt);
}

ProjectedCorrelation correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 EstimatorMode mode) {
  if (a.size() != b.size()) throw InvalidInput("correlation: length mismatch");
  if (a.size() < 2) throw InvalidInput("correlation: at least 2 observations are required");
  Eigen::VectorXd ca;
  Eigen::VectorXd cb;
  if (mode == EstimatorMode::Spearman) {
    ca = rank_transform(a);
    cb = rank_transform(b);
  } else {
    ca = a;
    cb = b;
  }
  ca.array() -= ca.mean();
  cb.array() -= cb.mean();
  const double sa = ca.squaredNorm();
  const double sb = cb.squaredNorm();
  if (!(sa > 0.0) || !(sb > 0.0)) return {0.0, true};
  const double r = ca.dot(cb) / std::sqrt(sa * sb);
  return {std::clamp(r, -1.0, 1.0), false};
}

ProjectedCorrelation projected_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                           const Eigen::VectorXd& alpha,
                                           const Eigen::VectorXd& beta, EstimatorMode mode) {
  if (x.cols() != alpha.size() || y.cols() != beta.size()) {
    throw InvalidInput("projected_correlation: coefficient length mismatch");
  }
  if (x.rows() != y.rows()) throw InvalidInput("projected_correlation: row counts differ");
  return correlation(x * alpha, y * beta, mode);
}

ProjectedCorrelation projected_correlation(const DataPair& data, const Eigen::VectorXd& alpha,
                                           const Eigen::VectorXd& beta, EstimatorMode mode) {
  return projected_correlation(data.x, data.y, alpha, beta, mode);
}

}  // namespace rmscca
