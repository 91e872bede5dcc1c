#include "rmscca/cli.hpp"
#include "rmscca/covariance.hpp"
#include "rmscca/error.hpp"
#include "rmscca/evaluate.hpp"
#include "rmscca/mscca.hpp"
#include "rmscca/scca.hpp"
#include "rmscca/significance.hpp"
#include "rmscca/simulate.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace rmscca;

namespace {

DataPair make_pair(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) { return DataPair{x, y, {}, {}}; }

FitOptions make_options(EstimatorMode mode, std::optional<EstimatorMode> test_cor, double tol,
                        int max_iter, unsigned threads) {
  FitOptions o;
  o.mode = mode;
  o.test_cor = test_cor;
  o.tol = tol;
  o.max_iter = max_iter;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse canonical pairs with rank-based covariance";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DegenerateColumn>(m, "DegenerateColumn", PyExc_ValueError);
  py::register_exception<DegeneratePair>(m, "DegeneratePair", PyExc_ArithmeticError);
  py::register_exception<NoViableLambda>(m, "NoViableLambda", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<EstimatorMode>(m, "EstimatorMode")
      .value("Pearson", EstimatorMode::Pearson)
      .value("Spearman", EstimatorMode::Spearman);
  py::enum_<TailMode>(m, "TailMode").value("Clean", TailMode::Clean).value("TLike", TailMode::TLike);
  py::enum_<TailDivisor>(m, "TailDivisor")
      .value("Sqrt", TailDivisor::Sqrt)
      .value("Linear", TailDivisor::Linear);

  py::class_<KMatrix>(m, "KMatrix")
      .def_readonly("k", &KMatrix::k)
      .def_readonly("dxx_inv_sqrt", &KMatrix::dxx_inv_sqrt)
      .def_readonly("dyy_inv_sqrt", &KMatrix::dyy_inv_sqrt)
      .def_readonly("mode", &KMatrix::mode);

  py::class_<CanonicalPair>(m, "CanonicalPair")
      .def_readonly("u", &CanonicalPair::u)
      .def_readonly("v", &CanonicalPair::v)
      .def_readonly("alpha", &CanonicalPair::alpha)
      .def_readonly("beta", &CanonicalPair::beta)
      .def_readonly("cc", &CanonicalPair::cc)
      .def_readonly("cc_full", &CanonicalPair::cc_full)
      .def_readonly("cc_test_mean", &CanonicalPair::cc_test_mean)
      .def_readonly("lambda_u", &CanonicalPair::lambda_u_star)
      .def_readonly("lambda_v", &CanonicalPair::lambda_v_star)
      .def_readonly("converged", &CanonicalPair::converged)
      .def_readonly("iterations", &CanonicalPair::iterations);

  py::class_<CvPlan>(m, "CvPlan")
      .def_readonly("n_cv", &CvPlan::n_cv)
      .def_readonly("folds", &CvPlan::folds)
      .def_readonly("lambda_grid", &CvPlan::lambda_grid)
      .def_readonly("seed", &CvPlan::seed);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("pairs", &FitResult::pairs)
      .def_readonly("mode", &FitResult::mode)
      .def_readonly("plan", &FitResult::plan)
      .def_readonly("pq_star", &FitResult::pq_star);

  py::class_<PermutationSummary>(m, "PermutationSummary")
      .def_readonly("n_perm", &PermutationSummary::n_perm)
      .def_readonly("q_level", &PermutationSummary::q_level)
      .def_readonly("perm_cc", &PermutationSummary::perm_cc)
      .def_readonly("observed", &PermutationSummary::observed)
      .def_readonly("cutoffs", &PermutationSummary::cutoffs)
      .def_readonly("j_star", &PermutationSummary::j_star);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("b", &GroundTruth::b)
      .def_readonly("sigma_yy_diag", &GroundTruth::sigma_yy_diag)
      .def_property_readonly("groups", [](const GroundTruth& t) {
        std::vector<std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> out;
        for (const auto& g : t.groups) out.emplace_back(g.x, g.y);
        return out;
      });

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("nc_pair", &MetricsReport::nc_pair)
      .def_readonly("tpr", &MetricsReport::tpr)
      .def_readonly("tp_of_cg", &MetricsReport::tp_of_cg)
      .def_readonly("fn_rate", &MetricsReport::fn_rate)
      .def_readonly("per_pair_flags", &MetricsReport::per_pair_flags);

  m.def("rank_transform", &rank_transform, py::arg("m"));
  m.def(
      "covariance", [](const Eigen::MatrixXd& x, EstimatorMode mode) { return covariance(x, mode).matrix; },
      py::arg("m"), py::arg("mode") = EstimatorMode::Pearson);
  m.def(
      "build_k",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, EstimatorMode mode) {
        return build_k(make_pair(x, y), mode);
      },
      py::arg("x"), py::arg("y"), py::arg("mode") = EstimatorMode::Pearson);
  m.def("soft_threshold", &soft_threshold, py::arg("w"), py::arg("lam"));
  m.def(
      "sparse_singular_pair",
      [](const Eigen::MatrixXd& k, double lambda_u, double lambda_v, double tol, int max_iter) {
        SparsePairConfig cfg{lambda_u, lambda_v, tol, max_iter};
        return sparse_singular_pair(k, cfg);
      },
      py::arg("k"), py::arg("lambda_u") = 0.0, py::arg("lambda_v") = 0.0, py::arg("tol") = 1e-6,
      py::arg("max_iter") = 1000);
  m.def("deflate", &deflate, py::arg("k"), py::arg("u"), py::arg("v"));
  m.def("make_folds", &make_folds, py::arg("n"), py::arg("n_cv"), py::arg("seed"));
  m.def(
      "fit_pairs",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int pq_star, EstimatorMode mode,
         int n_cv, std::vector<double> grid, std::uint64_t seed, std::optional<EstimatorMode> test_cor,
         double tol, int max_iter, unsigned threads) {
        const DataPair data = make_pair(x, y);
        const CvPlan plan = make_plan(data.n(), n_cv, seed, std::move(grid));
        py::gil_scoped_release release;
        return fit_pairs(data, pq_star, plan, make_options(mode, test_cor, tol, max_iter, threads));
      },
      py::arg("x"), py::arg("y"), py::arg("pq_star") = 1, py::arg("mode") = EstimatorMode::Spearman,
      py::arg("n_cv") = kDefaultFolds, py::arg("grid") = default_lambda_grid(), py::arg("seed") = 1,
      py::arg("test_cor") = std::nullopt, py::arg("tol") = 1e-6, py::arg("max_iter") = 1000,
      py::arg("threads") = 1);
  m.def(
      "permutation_test",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int pq_star, EstimatorMode mode,
         int n_perm, double q_level, int n_cv, std::vector<double> grid, std::uint64_t seed,
         unsigned threads) {
        const DataPair data = make_pair(x, y);
        const CvPlan plan = make_plan(data.n(), n_cv, seed, std::move(grid));
        const FitOptions opts = make_options(mode, std::nullopt, 1e-6, 1000, threads);
        py::gil_scoped_release release;
        const FitResult fit = fit_pairs(data, pq_star, plan, opts);
        const Eigen::MatrixXd perm = permutation_distribution(data, pq_star, plan, opts, n_perm, seed);
        return std::make_pair(fit, count_significant(observed_cc_test(fit), perm, q_level));
      },
      py::arg("x"), py::arg("y"), py::arg("pq_star") = 1, py::arg("mode") = EstimatorMode::Spearman,
      py::arg("n_perm") = kDefaultPermutations, py::arg("q_level") = kDefaultQuantile,
      py::arg("n_cv") = kDefaultFolds, py::arg("grid") = default_lambda_grid(), py::arg("seed") = 1,
      py::arg("threads") = 1);
  m.def("count_significant", &count_significant, py::arg("observed"), py::arg("perm_cc"),
        py::arg("q_level") = kDefaultQuantile);
  m.def("sigma_yy_entry", &sigma_yy_entry, py::arg("x_block_size"), py::arg("rho"));
  m.def(
      "simulate",
      [](Eigen::Index n, Eigen::Index p, Eigen::Index q, std::vector<std::pair<Eigen::Index, Eigen::Index>> groups,
         double rho, TailMode tail, std::uint64_t seed) {
        SimulationSpec spec;
        spec.n = n;
        spec.p = p;
        spec.q = q;
        spec.rho = rho;
        spec.tail = tail;
        spec.seed = seed;
        spec.groups.clear();
        for (auto [gx, gy] : groups) spec.groups.push_back({gx, gy});
        SimulatedData sim = generate(spec);
        return py::make_tuple(sim.data.x, sim.data.y, sim.truth);
      },
      py::arg("n"), py::arg("p"), py::arg("q"), py::arg("groups"), py::arg("rho") = 0.2,
      py::arg("tail") = TailMode::Clean, py::arg("seed") = 0);
  m.def(
      "compute_metrics",
      [](const FitResult& fit, int j_star, const GroundTruth& truth) {
        return compute_metrics(fit.pairs, j_star, truth);
      },
      py::arg("fit"), py::arg("j_star"), py::arg("truth"));
  m.def(
      "cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Run the rmscca command line with the given arguments; returns the exit code.");
}
