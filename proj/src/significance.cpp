#include "rmscca/significance.hpp"

#include "rmscca/error.hpp"
#include "rmscca/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace rmscca {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Permutation random_permutation(Eigen::Index n, std::uint64_t seed) {
  Permutation perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

Eigen::MatrixXd apply_row_permutation(const Eigen::MatrixXd& m, const Permutation& perm) {
  if (static_cast<Eigen::Index>(perm.size()) != m.rows()) {
    throw InvalidInput("permutation length does not match the row count");
  }
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
  }
  return out;
}

Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& y, std::uint64_t seed) {
  return apply_row_permutation(y, random_permutation(y.rows(), seed));
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t permutation_seed(std::uint64_t master_seed, int index) noexcept {
  // Hash the master first so runs with neighbouring seeds get unrelated streams.
  return splitmix64(splitmix64(master_seed) + static_cast<std::uint64_t>(index));
}

Eigen::MatrixXd permutation_distribution(const DataPair& data, int pq_star, const CvPlan& plan,
                                         const FitOptions& options,
                                         std::span<const Permutation> perms) {
  data.validate();
  plan.validate(data.n());
  if (pq_star < 0 || pq_star > std::min(data.p(), data.q())) {
    throw InvalidInput("pq_star must lie in [0, min(p, q)]");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(perms.size()), pq_star, kNegInf);

  FitOptions inner = options;
  inner.threads = 1;
  parallel_for(perms.size(), options.threads, [&](std::size_t r) {
    DataPair permuted{data.x, apply_row_permutation(data.y, perms[r]), {}, {}};
    // A pair without a viable cell keeps the values of the pairs before it.
    try {
      const FitResult fit = fit_pairs(permuted, pq_star, plan, inner);
      for (int j = 0; j < pq_star; ++j) {
        out(static_cast<Eigen::Index>(r), j) = fit.pairs[static_cast<std::size_t>(j)].cc_test_mean;
      }
    } catch (const NoViableLambda& e) {
      if (e.pair_index() > 0) {
        const FitResult partial = fit_pairs(permuted, e.pair_index(), plan, inner);
        for (int j = 0; j < e.pair_index(); ++j) {
          out(static_cast<Eigen::Index>(r), j) = partial.pairs[static_cast<std::size_t>(j)].cc_test_mean;
        }
      }
    }
  });
  return out;
}

Eigen::MatrixXd permutation_distribution(const DataPair& data, int pq_star, const CvPlan& plan,
                                         const FitOptions& options, int n_perm,
                                         std::uint64_t master_seed) {
  if (n_perm < 1) throw InvalidInput("n_perm must be at least 1");
  std::vector<Permutation> perms;
  perms.reserve(static_cast<std::size_t>(n_perm));
  for (int r = 0; r < n_perm; ++r) {
    perms.push_back(random_permutation(data.n(), permutation_seed(master_seed, r)));
  }
  return permutation_distribution(data, pq_star, plan, options, perms);
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("empirical_quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("empirical_quantile: q must lie in [0, 1]");
  for (double& v : values) {
    if (std::isnan(v)) v = kNegInf;
  }
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  if (values[lo] == kNegInf) return kNegInf;
  return values[lo] + frac * (values[hi] - values[lo]);
}

PermutationSummary count_significant(const Eigen::VectorXd& observed_cc_test,
                                     const Eigen::MatrixXd& perm_cc, double q_level) {
  if (observed_cc_test.size() != perm_cc.cols()) {
    throw InvalidInput("count_significant: observed length differs from the pair count");
  }
  if (!(q_level > 0.0 && q_level < 1.0)) throw InvalidInput("q_level must lie in (0, 1)");
  if (perm_cc.rows() < 1) throw InvalidInput("count_significant: no permutations");

  PermutationSummary s;
  s.n_perm = static_cast<int>(perm_cc.rows());
  s.q_level = q_level;
  s.perm_cc = perm_cc;
  s.observed = observed_cc_test;
  s.cutoffs.resize(perm_cc.cols());
  for (Eigen::Index j = 0; j < perm_cc.cols(); ++j) {
    std::vector<double> column(perm_cc.col(j).data(), perm_cc.col(j).data() + perm_cc.rows());
    s.cutoffs(j) = empirical_quantile(std::move(column), q_level);
  }
  s.j_star = 0;
  while (s.j_star < observed_cc_test.size() &&
         observed_cc_test(s.j_star) > s.cutoffs(s.j_star)) {
    ++s.j_star;
  }
  return s;
}

Eigen::VectorXd observed_cc_test(const FitResult& fit) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(fit.pairs.size()));
  for (std::size_t i = 0; i < fit.pairs.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = fit.pairs[i].cc_test_mean;
  }
  return out;
}

}  // namespace rmscca
