#include "oracles.hpp"

#include "rmscca/error.hpp"
#include "rmscca/mscca.hpp"
#include "rmscca/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

using namespace rmscca;

namespace {

DataPair simulated(Eigen::Index n, Eigen::Index p, Eigen::Index q, std::vector<GroupSize> groups,
                   std::uint64_t seed) {
  SimulationSpec spec;
  spec.n = n;
  spec.p = p;
  spec.q = q;
  spec.groups = std::move(groups);
  spec.seed = seed;
  return generate(spec).data;
}

Eigen::MatrixXd take(const Eigen::MatrixXd& m, const std::vector<int>& folds, int f, bool test) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if ((folds[i] == f) == test) rows.push_back(static_cast<Eigen::Index>(i));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

}  // namespace

TEST_CASE("deflate annihilates a rank-1 matrix") {
  Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(4, 1, 4).normalized();
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(3, -1, 2).normalized();
  const Eigen::MatrixXd k = 2.7 * u * v.transpose();
  CHECK(deflate(k, u, v).norm() <= 1e-12);
}

TEST_CASE("deflating by the top pair exposes the second singular value") {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd a = oracle::gaussian(6, 2, rng);
  const Eigen::MatrixXd b = oracle::gaussian(5, 2, rng);
  const Eigen::MatrixXd k = a * b.transpose();
  const oracle::TopPair svd = oracle::dense_svd(k);
  const Eigen::MatrixXd rest = deflate(k, svd.u, svd.v);
  CHECK(std::abs(svd.u.dot(rest * svd.v)) <= 1e-12);
  CHECK(oracle::dense_svd(rest).singular_values(0) == doctest::Approx(svd.singular_values(1)).epsilon(1e-10));
}

TEST_CASE("deflating with a zero coefficient leaves K unchanged") {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(4, 4);
  k(0, 0) = 1.0;
  k(1, 1) = 2.0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
  u(2) = 1.0;
  v(3) = 1.0;
  CHECK(deflate(k, u, v) == k);
  CHECK_THROWS_AS(deflate(k, Eigen::VectorXd::Zero(3), v), InvalidInput);
}

TEST_CASE("make_folds") {
  auto sizes = [](const std::vector<int>& folds, int n_cv) {
    std::vector<int> s(static_cast<std::size_t>(n_cv), 0);
    for (int f : folds) ++s[static_cast<std::size_t>(f)];
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
  };
  CHECK(sizes(make_folds(10, 5, 1), 5) == std::vector<int>{2, 2, 2, 2, 2});
  CHECK(sizes(make_folds(7, 3, 1), 3) == std::vector<int>{3, 2, 2});
  CHECK(make_folds(50, 5, 42) == make_folds(50, 5, 42));
  CHECK(make_folds(50, 5, 42) != make_folds(50, 5, 43));
  CHECK_THROWS_AS(make_folds(3, 4, 0), InvalidInput);
  CHECK_THROWS_AS(make_folds(3, 1, 0), InvalidInput);
}

TEST_CASE("CvPlan validation") {
  CvPlan plan = make_plan(10, 2, 0);
  plan.lambda_grid = {0.0, 0.2, 0.2};
  CHECK_THROWS_AS(plan.validate(10), InvalidInput);
  plan.lambda_grid = {0.0, 2.5};
  CHECK_THROWS_AS(plan.validate(10), InvalidInput);
  plan.lambda_grid = {0.0};
  CHECK_THROWS_AS(plan.validate(11), InvalidInput);
  plan.folds.assign(10, 0);
  CHECK_THROWS_AS(plan.validate(10), InvalidInput);
}

TEST_CASE("tie rule prefers the sparser cell, then larger lambda_u") {
  GridCell dense{0.1, 0.1, 0.5, 0};
  GridCell sparse{0.3, 0.2, 0.5, 0};
  GridCell swapped{0.2, 0.3, 0.5, 0};
  GridCell better{0.0, 0.0, 0.6, 0};
  CHECK(cell_preferred(sparse, dense));
  CHECK_FALSE(cell_preferred(dense, sparse));
  CHECK(cell_preferred(sparse, swapped));
  CHECK(cell_preferred(better, sparse));
}

TEST_CASE("singleton grid selects (0, 0)") {
  const DataPair data = simulated(60, 12, 15, {{3, 4}}, 5);
  const CvPlan plan = make_plan(data.n(), 5, 3, {0.0});
  const CvSelection sel = cv_select(data, {}, plan, FitOptions{});
  CHECK(sel.lambda_u_star == 0.0);
  CHECK(sel.lambda_v_star == 0.0);
  REQUIRE(sel.cells.size() == 1);
  CHECK(sel.cells[0].cc_test_mean == sel.cc_test_mean);
}

TEST_CASE("cv_select picks the best cell of an exhaustive re-evaluation") {
  const DataPair data = simulated(200, 30, 40, {{5, 10}, {5, 5}}, 17);
  const CvPlan plan = make_plan(data.n(), 5, 9);
  FitOptions opts;
  opts.mode = EstimatorMode::Spearman;

  // Prior pair: full-data top pair so the oracle also exercises per-fold
  // deflation.
  const KMatrix full = build_k(data, opts.mode);
  const CanonicalPair first = sparse_singular_pair(full, SparsePairConfig{0.2, 0.2, 1e-6, 1000});
  const std::vector<PriorPair> prior{{first.u, first.v}};

  for (std::size_t depth = 0; depth <= 1; ++depth) {
    const std::span<const PriorPair> used(prior.data(), depth);
    const CvSelection sel = cv_select(data, used, plan, opts);

    std::map<std::pair<double, double>, double> oracle_means;
    for (double lu : plan.lambda_grid) {
      for (double lv : plan.lambda_grid) {
        double sum = 0.0;
        for (int f = 0; f < plan.n_cv; ++f) {
          const Eigen::MatrixXd xtr = take(data.x, plan.folds, f, false);
          const Eigen::MatrixXd ytr = take(data.y, plan.folds, f, false);
          const Eigen::MatrixXd rx = oracle::midranks(xtr);
          const Eigen::MatrixXd ry = oracle::midranks(ytr);
          Eigen::MatrixXd k = oracle::k_matrix(rx, ry);
          for (const auto& pp : used) k -= pp.u.dot(k * pp.v) * pp.u * pp.v.transpose();
          Eigen::VectorXd sx(rx.cols());
          Eigen::VectorXd sy(ry.cols());
          for (Eigen::Index i = 0; i < rx.cols(); ++i) sx(i) = 1.0 / std::sqrt(oracle::cov(rx, i, rx, i));
          for (Eigen::Index j = 0; j < ry.cols(); ++j) sy(j) = 1.0 / std::sqrt(oracle::cov(ry, j, ry, j));
          const CanonicalPair pr = sparse_singular_pair(k, SparsePairConfig{lu, lv, 1e-6, 1000});
          const Eigen::VectorXd alpha = sx.cwiseProduct(pr.u);
          const Eigen::VectorXd beta = sy.cwiseProduct(pr.v);
          const Eigen::MatrixXd xte = take(data.x, plan.folds, f, true);
          const Eigen::MatrixXd yte = take(data.y, plan.folds, f, true);
          sum += oracle::spearman(xte * alpha, yte * beta);
        }
        oracle_means[{lu, lv}] = sum / plan.n_cv;
      }
    }
    double best = -2.0;
    for (const auto& [cell, mean] : oracle_means) best = std::max(best, mean);
    for (const auto& c : sel.cells) {
      CHECK(c.cc_test_mean == doctest::Approx(oracle_means[{c.lambda_u, c.lambda_v}]).epsilon(1e-8));
    }
    CHECK(sel.cc_test_mean == doctest::Approx(best).epsilon(1e-8));
  }
}

TEST_CASE("all-degenerate grid raises NoViableLambda") {
  const DataPair data = simulated(40, 6, 6, {{2, 2}}, 1);
  const CvPlan plan = make_plan(data.n(), 4, 0, {2.0});
  try {
    cv_select(data, {}, plan, FitOptions{}, 3);
    FAIL("expected NoViableLambda");
  } catch (const NoViableLambda& e) {
    CHECK(e.pair_index() == 3);
  }
  CHECK_THROWS_AS(fit_pairs(data, 1, plan, FitOptions{}), NoViableLambda);
}

TEST_CASE("fit_pairs on a single planted group") {
  const DataPair data = simulated(150, 20, 25, {{6, 8}}, 23);
  const CvPlan plan = make_plan(data.n(), 5, 1);
  FitOptions opts;
  opts.mode = EstimatorMode::Pearson;
  const FitResult fit = fit_pairs(data, 2, plan, opts);
  REQUIRE(fit.pairs.size() == 2);
  CHECK(fit.pairs[0].cc > 2.0 * fit.pairs[1].cc);
  CHECK(fit.pairs[0].cc_test_mean > fit.pairs[1].cc_test_mean);
  for (const auto& pr : fit.pairs) {
    CHECK((pr.alpha.array() != 0.0).any());
    CHECK((pr.beta.array() != 0.0).any());
    CHECK(std::isfinite(pr.cc));
    CHECK(pr.cc_full <= 1.0);
  }

  SUBCASE("deflation leaves each fitted pair orthogonal to the next K") {
    Eigen::MatrixXd k = build_k(data, opts.mode).k;
    for (const auto& pr : fit.pairs) {
      k = deflate(k, pr.u, pr.v);
      CHECK(std::abs(pr.u.dot(k * pr.v)) <= 1e-10);
    }
  }
  SUBCASE("deterministic and thread-count independent") {
    FitOptions threaded = opts;
    threaded.threads = 4;
    const FitResult again = fit_pairs(data, 2, plan, threaded);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(again.pairs[i].u == fit.pairs[i].u);
      CHECK(again.pairs[i].alpha == fit.pairs[i].alpha);
      CHECK(again.pairs[i].cc_test_mean == fit.pairs[i].cc_test_mean);
      CHECK(again.pairs[i].cc == fit.pairs[i].cc);
    }
  }
}

TEST_CASE("fit_pairs with pq_star = 0 is empty") {
  const DataPair data = simulated(30, 5, 5, {}, 2);
  const FitResult fit = fit_pairs(data, 0, make_plan(30, 3, 0), FitOptions{});
  CHECK(fit.pairs.empty());
  CHECK(fit.pq_star == 0);
  CHECK_THROWS_AS(fit_pairs(data, 6, make_plan(30, 3, 0), FitOptions{}), InvalidInput);
}

TEST_CASE("unpenalized sequential pairs reproduce the singular values") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index p = 3 + trial % 8;
    const Eigen::Index q = 2 + (trial * 3) % 9;
    Eigen::MatrixXd x = oracle::gaussian(40, p, rng);
    Eigen::MatrixXd y = oracle::gaussian(40, q, rng);
    y.col(0) += x.col(0);
    const DataPair data{x, y, {}, {}};
    FitOptions opts;
    opts.tol = 1e-13;
    opts.max_iter = 200000;
    const int pq = static_cast<int>(std::min<Eigen::Index>(std::min(p, q), 3));
    const FitResult fit = fit_pairs(data, pq, make_plan(40, 4, 0, {0.0}), opts);
    const Eigen::VectorXd sv = oracle::dense_svd(oracle::k_matrix(x, y)).singular_values;
    for (int i = 0; i < pq; ++i) {
      CHECK(fit.pairs[i].cc == doctest::Approx(sv(i)).epsilon(1e-6));
      if (i > 0) CHECK(fit.pairs[i].cc <= fit.pairs[i - 1].cc + 1e-12);
    }
  }
}
