#include "rmscca/mscca.hpp"

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

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

// Training K (deflated by the prior pairs) and held-out rows for one fold.
struct FoldData {
  std::optional<KMatrix> k;  // empty when the training rows are degenerate
  Eigen::MatrixXd x_test;
  Eigen::MatrixXd y_test;
};

FoldData prepare_fold(const DataPair& data, std::span<const PriorPair> prior, const CvPlan& plan,
                      int fold, EstimatorMode mode) {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    (plan.folds[i] == fold ? test : train).push_back(static_cast<Eigen::Index>(i));
  }
  FoldData fd;
  fd.x_test = take_rows(data.x, test);
  fd.y_test = take_rows(data.y, test);

  DataPair training{take_rows(data.x, train), take_rows(data.y, train), {}, {}};
  try {
    KMatrix k = build_k(training, mode);
    for (const auto& pp : prior) k.k = deflate(k.k, pp.u, pp.v);
    fd.k = std::move(k);
  } catch (const DegenerateColumn&) {
    fd.k.reset();
  }
  return fd;
}

}  // namespace

std::vector<double> default_lambda_grid() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}; }

void CvPlan::validate(Eigen::Index n) const {
  if (n_cv < 2) throw InvalidInput("n_cv must be at least 2");
  if (static_cast<Eigen::Index>(folds.size()) != n) {
    throw InvalidInput("fold assignment length does not match the number of observations");
  }
  std::vector<int> sizes(static_cast<std::size_t>(n_cv), 0);
  for (int f : folds) {
    if (f < 0 || f >= n_cv) throw InvalidInput("fold id out of range");
    ++sizes[static_cast<std::size_t>(f)];
  }
  for (int s : sizes) {
    if (s == 0) throw InvalidInput("every fold must be nonempty");
    if (s == n) throw InvalidInput("a fold may not contain every observation");
  }
  if (lambda_grid.empty()) throw InvalidInput("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0 && lambda_grid[i] <= 2.0)) {
      throw InvalidInput("lambda grid values must lie in [0, 2]");
    }
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw InvalidInput("lambda grid must be strictly ascending");
    }
  }
}

std::vector<int> make_folds(Eigen::Index n, int n_cv, std::uint64_t seed) {
  if (n_cv < 2) throw InvalidInput("n_cv must be at least 2");
  if (n_cv > n) throw InvalidInput("n_cv exceeds the number of observations");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> folds(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) {
    folds[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(n_cv));
  }
  return folds;
}

CvPlan make_plan(Eigen::Index n, int n_cv, std::uint64_t seed, std::vector<double> lambda_grid) {
  CvPlan plan;
  plan.n_cv = n_cv;
  plan.folds = make_folds(n, n_cv, seed);
  plan.lambda_grid = std::move(lambda_grid);
  plan.seed = seed;
  plan.validate(n);
  return plan;
}

bool GridCell::viable() const noexcept { return cc_test_mean > kNegInf; }

Eigen::MatrixXd deflate(const Eigen::MatrixXd& k, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& v) {
  if (u.size() != k.rows() || v.size() != k.cols()) {
    throw InvalidInput("deflate: vector lengths do not match K");
  }
  const double d = u.dot(k * v);
  Eigen::MatrixXd out = k;
  out.noalias() -= d * (u * v.transpose());
  return out;
}

bool cell_preferred(const GridCell& a, const GridCell& b) noexcept {
  if (a.cc_test_mean != b.cc_test_mean) return a.cc_test_mean > b.cc_test_mean;
  const double sa = a.lambda_u + a.lambda_v;
  const double sb = b.lambda_u + b.lambda_v;
  if (sa != sb) return sa > sb;
  return a.lambda_u > b.lambda_u;
}

CvSelection cv_select(const DataPair& data, std::span<const PriorPair> prior, const CvPlan& plan,
                      const FitOptions& options, int pair_index) {
  plan.validate(data.n());
  const auto n_cv = static_cast<std::size_t>(plan.n_cv);
  const std::size_t grid = plan.lambda_grid.size();
  const std::size_t n_cells = grid * grid;

  std::vector<FoldData> folds(n_cv);
  parallel_for(n_cv, options.threads, [&](std::size_t f) {
    folds[f] = prepare_fold(data, prior, plan, static_cast<int>(f), options.mode);
  });

  std::vector<double> scores(n_cells * n_cv, kNegInf);
  std::vector<char> converged(n_cells * n_cv, 1);
  parallel_for(n_cells * n_cv, options.threads, [&](std::size_t task) {
    const std::size_t cell = task / n_cv;
    const FoldData& fd = folds[task % n_cv];
    if (!fd.k) return;
    SparsePairConfig cfg;
    cfg.lambda_u = plan.lambda_grid[cell / grid];
    cfg.lambda_v = plan.lambda_grid[cell % grid];
    cfg.tol = options.tol;
    cfg.max_iter = options.max_iter;
    try {
      CanonicalPair pair = canonical_vectors(sparse_singular_pair(fd.k->k, cfg), *fd.k);
      converged[task] = pair.converged ? 1 : 0;
      scores[task] =
          projected_correlation(fd.x_test, fd.y_test, pair.alpha, pair.beta, options.test_mode())
              .value;
    } catch (const DegeneratePair&) {
      scores[task] = kNegInf;
    } catch (const InvalidInput&) {
      // Zero starting vector on a deflated training K.
      scores[task] = kNegInf;
    }
  });

  CvSelection sel;
  sel.cells.reserve(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    GridCell gc;
    gc.lambda_u = plan.lambda_grid[cell / grid];
    gc.lambda_v = plan.lambda_grid[cell % grid];
    double sum = 0.0;
    for (std::size_t f = 0; f < n_cv; ++f) {
      sum += scores[cell * n_cv + f];
      if (!converged[cell * n_cv + f]) ++gc.nonconverged_folds;
    }
    gc.cc_test_mean = std::isfinite(sum) ? sum / static_cast<double>(n_cv) : kNegInf;
    sel.cells.push_back(gc);
  }

  const GridCell* best = nullptr;
  for (const auto& c : sel.cells) {
    if (c.viable() && (best == nullptr || cell_preferred(c, *best))) best = &c;
  }
  if (best == nullptr) throw NoViableLambda(pair_index);
  sel.lambda_u_star = best->lambda_u;
  sel.lambda_v_star = best->lambda_v;
  sel.cc_test_mean = best->cc_test_mean;
  return sel;
}

FitResult fit_pairs(const DataPair& data, int pq_star, const CvPlan& plan,
                    const FitOptions& options) {
  data.validate();
  plan.validate(data.n());
  if (pq_star < 0 || pq_star > std::min(data.p(), data.q())) {
    throw InvalidInput("pq_star must lie in [0, min(p, q)]");
  }

  FitResult result;
  result.mode = options.mode;
  result.plan = plan;
  result.pq_star = pq_star;
  if (pq_star == 0) return result;

  const KMatrix full = build_k(data, options.mode);
  Eigen::MatrixXd k_current = full.k;
  std::vector<PriorPair> prior;

  for (int i = 0; i < pq_star; ++i) {
    CvSelection sel = cv_select(data, prior, plan, options, i);

    // Refit on the full data. The CV winner can still threshold to nothing on
    // the full K; fall back through the remaining viable cells in preference
    // order.
    std::vector<GridCell> ranked;
    for (const auto& c : sel.cells) {
      if (c.viable()) ranked.push_back(c);
    }
    std::sort(ranked.begin(), ranked.end(), cell_preferred);

    std::optional<CanonicalPair> fitted;
    for (const auto& cell : ranked) {
      SparsePairConfig cfg;
      cfg.lambda_u = cell.lambda_u;
      cfg.lambda_v = cell.lambda_v;
      cfg.tol = options.tol;
      cfg.max_iter = options.max_iter;
      try {
        fitted = sparse_singular_pair(k_current, cfg);
      } catch (const DegeneratePair&) {
        continue;
      } catch (const InvalidInput&) {
        continue;
      }
      sel.lambda_u_star = cell.lambda_u;
      sel.lambda_v_star = cell.lambda_v;
      sel.cc_test_mean = cell.cc_test_mean;
      break;
    }
    if (!fitted) throw NoViableLambda(i);

    CanonicalPair pair = canonical_vectors(std::move(*fitted), full);
    pair.cc_test_mean = sel.cc_test_mean;
    pair.cc_full = projected_correlation(data, pair.alpha, pair.beta, options.test_mode()).value;

    k_current = deflate(k_current, pair.u, pair.v);
    prior.push_back({pair.u, pair.v});
    result.pairs.push_back(std::move(pair));
    result.selections.push_back(std::move(sel));
  }
  return result;
}

}  // namespace rmscca
