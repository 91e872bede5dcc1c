#include "oracles.hpp"

#include "rmscca/error.hpp"
#include "rmscca/significance.hpp"
#include "rmscca/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>

using namespace rmscca;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

DataPair null_data(Eigen::Index n, Eigen::Index p, Eigen::Index q, std::uint64_t seed) {
  SimulationSpec spec;
  spec.n = n;
  spec.p = p;
  spec.q = q;
  spec.groups = {};
  spec.seed = seed;
  return generate(spec).data;
}

}  // namespace

TEST_CASE("permute_rows reorders whole rows") {
  Eigen::MatrixXd y(6, 3);
  for (Eigen::Index i = 0; i < 6; ++i) y.row(i) << i, 10 * i, 100 * i;
  const Eigen::MatrixXd py = permute_rows(y, 77);
  for (Eigen::Index j = 0; j < 3; ++j) {
    Eigen::VectorXd a = y.col(j);
    Eigen::VectorXd b = py.col(j);
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    CHECK(a == b);
  }
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(py(i, 1) == 10 * py(i, 0));
    CHECK(py(i, 2) == 100 * py(i, 0));
  }
  CHECK(permute_rows(y, 77) == py);
}

TEST_CASE("random_permutation is a permutation") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Permutation p = random_permutation(13, s);
    std::sort(p.begin(), p.end());
    Permutation id(13);
    std::iota(id.begin(), id.end(), Eigen::Index{0});
    CHECK(p == id);
  }
  CHECK(permutation_seed(5, 0) != permutation_seed(5, 1));
  CHECK(permutation_seed(5, 1) != permutation_seed(6, 0));
}

TEST_CASE("identity permutation reproduces the observed fit") {
  SimulationSpec spec;
  spec.n = 80;
  spec.p = 10;
  spec.q = 12;
  spec.groups = {{3, 3}};
  spec.seed = 4;
  const DataPair data = generate(spec).data;
  const CvPlan plan = make_plan(data.n(), 4, 8, {0.0, 0.2, 0.4});
  FitOptions opts;
  const FitResult fit = fit_pairs(data, 2, plan, opts);
  Permutation id(static_cast<std::size_t>(data.n()));
  std::iota(id.begin(), id.end(), Eigen::Index{0});
  const std::vector<Permutation> perms{id};
  const Eigen::MatrixXd dist = permutation_distribution(data, 2, plan, opts, perms);
  REQUIRE(dist.rows() == 1);
  REQUIRE(dist.cols() == 2);
  const Eigen::VectorXd obs = observed_cc_test(fit);
  CHECK(dist(0, 0) == obs(0));
  CHECK(dist(0, 1) == obs(1));
}

TEST_CASE("permutation distribution is deterministic across thread counts") {
  const DataPair data = null_data(50, 8, 9, 12);
  const CvPlan plan = make_plan(data.n(), 5, 3, {0.0, 0.3});
  FitOptions one;
  FitOptions many;
  many.threads = 3;
  const Eigen::MatrixXd a = permutation_distribution(data, 2, plan, one, 7, 99);
  const Eigen::MatrixXd b = permutation_distribution(data, 2, plan, many, 7, 99);
  CHECK(a == b);
  CHECK(a.rows() == 7);
  const Eigen::MatrixXd c = permutation_distribution(data, 2, plan, one, 7, 100);
  CHECK(a != c);
}

TEST_CASE("empirical_quantile uses linear interpolation") {
  std::vector<double> v(10);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(empirical_quantile(v, 0.9) == doctest::Approx(9.1));
  CHECK(empirical_quantile(v, 0.0) == 1.0);
  CHECK(empirical_quantile(v, 1.0) == 10.0);
  CHECK(empirical_quantile({3.0}, 0.5) == 3.0);
  CHECK(empirical_quantile({kNegInf, kNegInf, 1.0}, 0.9) == kNegInf);
  CHECK(empirical_quantile({1.0, kNegInf, kNegInf}, 1.0) == 1.0);
  CHECK(empirical_quantile({kNegInf, 0.5, 1.0}, 0.25) == kNegInf);
  CHECK(empirical_quantile({kNegInf, 0.5, 1.0}, 0.5) == 0.5);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), InvalidInput);
  CHECK_THROWS_AS(empirical_quantile({1.0}, 1.5), InvalidInput);
}

TEST_CASE("count_significant takes the leading run") {
  Eigen::MatrixXd perm(10, 3);
  for (int r = 0; r < 10; ++r) perm.row(r) << 0.01 * (r + 1), 0.02 * (r + 1), 0.01 * (r + 1);
  Eigen::VectorXd obs(3);

  obs << 0.5, 0.5, 0.5;
  CHECK(count_significant(obs, perm, 0.9).j_star == 3);

  obs << 0.5, 0.1, 0.5;
  const PermutationSummary s = count_significant(obs, perm, 0.9);
  CHECK(s.j_star == 1);
  CHECK(s.cutoffs(1) == doctest::Approx(0.182));

  obs << 0.05, 0.9, 0.9;
  CHECK(count_significant(obs, perm, 0.9).j_star == 0);

  // Equality does not count as significant.
  obs << 0.091, 0.9, 0.9;
  CHECK(count_significant(obs, perm, 0.9).j_star == 0);

  CHECK_THROWS_AS(count_significant(Eigen::VectorXd::Zero(2), perm, 0.9), InvalidInput);
}

TEST_CASE("null observed ranks are roughly uniform") {
  // Under the null the observed pair-1 statistic is exchangeable with the
  // permuted ones, so its rank among n_perm + 1 values is uniform.
  constexpr int kSims = 200;
  constexpr int kPerm = 19;
  std::vector<int> rank_counts(kPerm + 1, 0);
  FitOptions opts;
  opts.mode = EstimatorMode::Spearman;
  for (int s = 0; s < kSims; ++s) {
    const DataPair data = null_data(60, 20, 30, 1000 + static_cast<std::uint64_t>(s));
    const CvPlan plan = make_plan(data.n(), 5, static_cast<std::uint64_t>(s), {0.0, 0.25, 0.5});
    const FitResult fit = fit_pairs(data, 1, plan, opts);
    const Eigen::MatrixXd dist = permutation_distribution(data, 1, plan, opts, kPerm,
                                                          static_cast<std::uint64_t>(s) * 7919);
    const double obs = fit.pairs[0].cc_test_mean;
    int below = 0;
    for (int r = 0; r < kPerm; ++r) below += dist(r, 0) < obs ? 1 : 0;
    ++rank_counts[static_cast<std::size_t>(below)];
  }
  // Bottom half versus top half of the rank range.
  int low = 0;
  for (int r = 0; r < 10; ++r) low += rank_counts[static_cast<std::size_t>(r)];
  CHECK(low >= 70);
  CHECK(low <= 130);
  // Top decile (rank 19 or 18): the nominal rate is 2/20.
  const int top = rank_counts[18] + rank_counts[19];
  CHECK(top <= 40);
}
