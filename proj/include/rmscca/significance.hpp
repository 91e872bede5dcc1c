#pragma once

#include "rmscca/mscca.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace rmscca {

inline constexpr int kDefaultPermutations = 100;
inline constexpr double kDefaultQuantile = 0.9;

using Permutation = std::vector<Eigen::Index>;

// Uniform random permutation of 0..n-1, fixed by `seed`.
Permutation random_permutation(Eigen::Index n, std::uint64_t seed);

// Row i of the result is row perm[i] of m.
Eigen::MatrixXd apply_row_permutation(const Eigen::MatrixXd& m, const Permutation& perm);

Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& y, std::uint64_t seed);

// Seed of the r-th permutation stream derived from the study's master seed.
std::uint64_t permutation_seed(std::uint64_t master_seed, int index) noexcept;

// Row r holds the mean held-out correlations of every pair fitted on
// (x, y permuted by perms[r]). A pair whose grid had no viable cell (and every
// later pair of that row) is recorded as -infinity. Rows are computed on
// `options.threads` workers; each fit runs single-threaded.
Eigen::MatrixXd permutation_distribution(const DataPair& data, int pq_star, const CvPlan& plan,
                                         const FitOptions& options,
                                         std::span<const Permutation> perms);

Eigen::MatrixXd permutation_distribution(const DataPair& data, int pq_star, const CvPlan& plan,
                                         const FitOptions& options, int n_perm,
                                         std::uint64_t master_seed);

// Type-7 (linear interpolation) empirical quantile. -infinity values sort
// first; a quantile that interpolates toward -infinity is -infinity.
double empirical_quantile(std::vector<double> values, double q);

struct PermutationSummary {
  int n_perm = 0;
  double q_level = kDefaultQuantile;
  Eigen::MatrixXd perm_cc;   // n_perm x pq*
  Eigen::VectorXd observed;  // observed mean test correlations
  Eigen::VectorXd cutoffs;   // per-pair q_level quantiles of perm_cc
  int j_star = 0;
};

// Longest prefix of pairs whose observed value beats its cutoff.
PermutationSummary count_significant(const Eigen::VectorXd& observed_cc_test,
                                     const Eigen::MatrixXd& perm_cc, double q_level);

Eigen::VectorXd observed_cc_test(const FitResult& fit);

}  // namespace rmscca
