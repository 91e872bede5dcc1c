#include "oracles.hpp"

#include "rmscca/error.hpp"
#include "rmscca/scca.hpp"

#include <doctest.h>

#include <random>

using namespace rmscca;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

// K of random correlated data, as the library would see it in practice.
Eigen::MatrixXd random_k(std::mt19937_64& rng, Eigen::Index p, Eigen::Index q) {
  const Eigen::Index n = 40;
  Eigen::MatrixXd x = oracle::gaussian(n, p, rng);
  Eigen::MatrixXd y = oracle::gaussian(n, q, rng);
  y.col(0) += x.col(0);
  return oracle::k_matrix(x, y);
}

}  // namespace

TEST_CASE("soft_threshold examples") {
  const Eigen::VectorXd out = soft_threshold(vec({0.5, -0.3, 0.1}), 0.4);
  CHECK(out(0) == doctest::Approx(0.3));
  CHECK(out(1) == doctest::Approx(-0.1));
  CHECK(out(2) == 0.0);

  const Eigen::VectorXd w = vec({1.5, -0.2, 0.0, 3.0});
  CHECK(soft_threshold(w, 0.0) == w);
  CHECK(soft_threshold(vec({0.1, -0.05}), 0.4) == Eigen::VectorXd::Zero(2));
}

TEST_CASE("soft_threshold zero set grows with lambda") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd w(12);
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = unif(rng);
    Eigen::VectorXd prev = soft_threshold(w, 0.0);
    for (double lambda = 0.05; lambda <= 2.0; lambda += 0.05) {
      const Eigen::VectorXd cur = soft_threshold(w, lambda);
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (prev(j) == 0.0) CHECK(cur(j) == 0.0);
      }
      prev = cur;
    }
  }
}

TEST_CASE("dominant pair of a diagonal matrix") {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2, 2);
  k(0, 0) = 2;
  k(1, 1) = 1;
  const CanonicalPair pair = sparse_singular_pair(k, SparsePairConfig{});
  CHECK(pair.converged);
  CHECK(pair.cc == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(pair.u(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(pair.u(1)) < 1e-5);
  CHECK(pair.v(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rank-1 matrix recovers its factors") {
  const Eigen::VectorXd a = vec({0.6, 0.8, 0.0});
  const Eigen::VectorXd b = vec({0.5, 0.5, 0.5, 0.5});
  const Eigen::MatrixXd k = 3.0 * a * b.transpose();
  const CanonicalPair pair = sparse_singular_pair(k, SparsePairConfig{});
  CHECK(pair.cc == doctest::Approx(3.0));
  CHECK(oracle::sign_free_distance(pair.u, pair.v, a, b) < 1e-10);
}

TEST_CASE("unpenalized iteration matches a dense SVD") {
  std::mt19937_64 rng(77);
  const Eigen::MatrixXd k = random_k(rng, 8, 5);
  SparsePairConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 100000;
  const CanonicalPair pair = sparse_singular_pair(k, cfg);
  const oracle::TopPair svd = oracle::dense_svd(k);
  CHECK(std::abs(pair.cc - svd.singular_values(0)) < 1e-6);
  CHECK(oracle::sign_free_distance(pair.u, pair.v, svd.u, svd.v) < 1e-6);
}

TEST_CASE("sparse pair properties on random K") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::MatrixXd k = random_k(rng, 3 + trial % 9, 2 + trial % 13);
    SparsePairConfig cfg;
    cfg.lambda_u = 0.05 * (trial % 5);
    cfg.lambda_v = 0.05 * (trial % 3);
    CanonicalPair pair;
    try {
      pair = sparse_singular_pair(k, cfg);
    } catch (const DegeneratePair&) {
      continue;
    }
    CHECK(std::abs(pair.u.norm() - 1.0) < 1e-12);
    CHECK(std::abs(pair.v.norm() - 1.0) < 1e-12);
    CHECK(std::abs(pair.cc - pair.u.dot(k * pair.v)) < 1e-12);
    Eigen::Index lead = 0;
    pair.u.cwiseAbs().maxCoeff(&lead);
    CHECK(pair.u(lead) > 0.0);
    if (pair.converged) {
      // Restarting from the fixed point moves nothing beyond tol.
      const CanonicalPair again = sparse_singular_pair(k, cfg, InitialVectors{pair.u, pair.v});
      CHECK((again.u - pair.u).lpNorm<Eigen::Infinity>() < 10 * cfg.tol);
      CHECK((again.v - pair.v).lpNorm<Eigen::Infinity>() < 10 * cfg.tol);
    }
  }
}

TEST_CASE("thresholding everything away is a DegeneratePair") {
  const Eigen::MatrixXd k = Eigen::MatrixXd::Ones(3, 3);
  SparsePairConfig cfg;
  cfg.lambda_u = 1.5;
  cfg.lambda_v = 0.2;
  try {
    sparse_singular_pair(k, cfg);
    FAIL("expected DegeneratePair");
  } catch (const DegeneratePair& e) {
    CHECK(e.lambda_u() == 1.5);
    CHECK(e.lambda_v() == 0.2);
  }
}

TEST_CASE("zero initial vector is rejected") {
  Eigen::MatrixXd k(2, 2);
  k << 1, -1, -1, 1;  // zero row and column means
  CHECK_THROWS_AS(sparse_singular_pair(k, SparsePairConfig{}), InvalidInput);
  CHECK_NOTHROW(sparse_singular_pair(k, SparsePairConfig{}, InitialVectors{vec({1, 0}), vec({1, 0})}));
}

TEST_CASE("max_iter cap reports non-convergence") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd k = random_k(rng, 10, 10);
  SparsePairConfig cfg;
  cfg.max_iter = 1;
  cfg.tol = 1e-15;
  const CanonicalPair pair = sparse_singular_pair(k, cfg);
  CHECK_FALSE(pair.converged);
  CHECK(pair.iterations == 1);
}

TEST_CASE("config validation") {
  SparsePairConfig cfg;
  cfg.lambda_u = 2.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.lambda_u = 0.1;
  cfg.tol = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("canonical_vectors scales by the diagonal") {
  CanonicalPair pair;
  pair.u = Eigen::VectorXd::Zero(9);
  pair.u(2) = 0.6;
  pair.u(7) = -0.8;
  pair.v = vec({1.0, 0.0});

  SUBCASE("identity scaling") {
    const CanonicalPair out = canonical_vectors(pair, Eigen::VectorXd::Ones(9), Eigen::VectorXd::Ones(2));
    CHECK(out.alpha == out.u);
    CHECK(out.beta == out.v);
  }
  SUBCASE("support preserved and entrywise product") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> pos(0.1, 5.0);
    Eigen::VectorXd dx(9);
    for (Eigen::Index j = 0; j < 9; ++j) dx(j) = pos(rng);
    const Eigen::VectorXd dy = vec({2.0, 3.0});
    const CanonicalPair out = canonical_vectors(pair, dx, dy);
    for (Eigen::Index j = 0; j < 9; ++j) {
      CHECK((out.alpha(j) != 0.0) == (j == 2 || j == 7));
      CHECK(out.alpha(j) == dx(j) * pair.u(j));
    }
    CHECK(out.beta(0) == 2.0);
    CHECK(out.beta(1) == 0.0);
  }
  CHECK_THROWS_AS(canonical_vectors(pair, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2)),
                  InvalidInput);
}

TEST_CASE("projected_correlation") {
  Eigen::MatrixXd x(5, 1);
  x << 1, 4, 2, 8, 5;
  const auto perfect = projected_correlation(x, x, vec({1}), vec({1}), EstimatorMode::Pearson);
  CHECK(perfect.value == doctest::Approx(1.0));
  CHECK_FALSE(perfect.degenerate);

  const auto zero = projected_correlation(x, x, vec({1}), vec({0}), EstimatorMode::Spearman);
  CHECK(zero.value == 0.0);
  CHECK(zero.degenerate);

  std::mt19937_64 rng(13);
  const Eigen::MatrixXd xx = oracle::gaussian(50, 4, rng);
  Eigen::MatrixXd yy = oracle::gaussian(50, 3, rng);
  yy.col(1) += 0.5 * xx.col(0);
  const Eigen::VectorXd alpha = vec({0.4, 0.0, -1.1, 0.2});
  const Eigen::VectorXd beta = vec({0.0, 1.0, 0.3});
  const Eigen::VectorXd sx = xx * alpha;
  const Eigen::VectorXd sy = yy * beta;
  CHECK(projected_correlation(xx, yy, alpha, beta, EstimatorMode::Pearson).value ==
        doctest::Approx(oracle::pearson(sx, sy)).epsilon(1e-12));
  CHECK(projected_correlation(xx, yy, alpha, beta, EstimatorMode::Spearman).value ==
        doctest::Approx(oracle::spearman(sx, sy)).epsilon(1e-12));
}
