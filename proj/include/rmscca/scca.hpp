#pragma once

#include "rmscca/covariance.hpp"

#include <Eigen/Dense>

#include <optional>
#include <utility>

namespace rmscca {

struct SparsePairConfig {
  double lambda_u = 0.0;
  double lambda_v = 0.0;
  double tol = 1e-6;
  int max_iter = 1000;

  // Penalties must lie in [0, 2], tol in (0, 1), max_iter >= 1.
  void validate() const;
};

// One fitted canonical pair.
//
// `cc` is the singular value estimate u' K v on the (possibly deflated) K the
// pair was fitted on. `cc_full` is the correlation between the full-data
// projections x*alpha and y*beta, and `cc_test_mean` the cross-validated mean
// of held-out projection correlations; both are filled in by fit_pairs.
struct CanonicalPair {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  double cc = 0.0;
  double cc_full = 0.0;
  double cc_test_mean = 0.0;
  double lambda_u_star = 0.0;
  double lambda_v_star = 0.0;
  bool converged = false;
  int iterations = 0;
};

// (|w_j| - lambda/2)_+ * sign(w_j), entrywise.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& w, double lambda);

using InitialVectors = std::pair<Eigen::VectorXd, Eigen::VectorXd>;

// Alternating thresholded power iteration for the leading sparse singular
// pair of k. Without `init`, u and v start at the row and column means of k.
// Throws DegeneratePair when thresholding zeroes u or v entirely and
// InvalidInput for a zero starting vector.
CanonicalPair sparse_singular_pair(const Eigen::MatrixXd& k, const SparsePairConfig& cfg,
                                   const std::optional<InitialVectors>& init = std::nullopt);
CanonicalPair sparse_singular_pair(const KMatrix& k, const SparsePairConfig& cfg,
                                   const std::optional<InitialVectors>& init = std::nullopt);

// alpha = Dxx^{-1/2} u, beta = Dyy^{-1/2} v.
CanonicalPair canonical_vectors(CanonicalPair pair, const KMatrix& k);
CanonicalPair canonical_vectors(CanonicalPair pair, const Eigen::VectorXd& dxx_inv_sqrt,
                                const Eigen::VectorXd& dyy_inv_sqrt);

struct ProjectedCorrelation {
  double value = 0.0;
  // Set when either projection has zero variance; value is then 0.
  bool degenerate = false;
};

// Pearson or Spearman correlation between x*alpha and y*beta.
ProjectedCorrelation projected_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                           const Eigen::VectorXd& alpha,
                                           const Eigen::VectorXd& beta, EstimatorMode mode);
ProjectedCorrelation projected_correlation(const DataPair& data, const Eigen::VectorXd& alpha,
                                           const Eigen::VectorXd& beta, EstimatorMode mode);

// Pearson or Spearman correlation of two equally long vectors (0 and
// degenerate when either is constant).
ProjectedCorrelation correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 EstimatorMode mode);

}  // namespace rmscca
