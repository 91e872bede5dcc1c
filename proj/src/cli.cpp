#include "rmscca/cli.hpp"

#include "rmscca/error.hpp"
#include "rmscca/evaluate.hpp"
#include "rmscca/io.hpp"
#include "rmscca/significance.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

namespace rmscca::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<GroupSize> parse_groups(const std::string& text) {
  if (text == "default") return default_groups();
  if (text == "none" || text.empty()) return {};
  std::vector<GroupSize> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("group '" + item + "' is not of the form X:Y");
    try {
      out.push_back({std::stol(item.substr(0, colon)), std::stol(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ConfigError("group '" + item + "' is not of the form X:Y");
    }
  }
  return out;
}

DataPair load_data(const RunConfig& cfg) {
  if (cfg.x_path.empty() || cfg.y_path.empty()) throw ConfigError("--x and --y are required");
  io::NamedMatrix x = io::read_matrix_csv(cfg.x_path);
  io::NamedMatrix y = io::read_matrix_csv(cfg.y_path);
  if (x.values.rows() != y.values.rows()) {
    throw InvalidInput("x has " + std::to_string(x.values.rows()) + " rows but y has " +
                       std::to_string(y.values.rows()));
  }
  DataPair data{std::move(x.values), std::move(y.values), std::move(x.names), std::move(y.names)};
  data.validate();
  if (cfg.standardize) {
    standardize_columns(data.x);
    standardize_columns(data.y);
  }
  return data;
}

// Everything needed to reproduce an output; deliberately excludes the
// thread count and file locations.
json provenance(const RunConfig& cfg, const DataPair& data) {
  return {{"tool", "rmscca"},
          {"version", kVersion},
          {"mode", std::string(to_string(cfg.mode))},
          {"test_cor", std::string(to_string(cfg.test_cor.value_or(cfg.mode)))},
          {"standardize", cfg.standardize},
          {"n_cv", cfg.n_cv},
          {"lambda_grid", cfg.lambda_grid},
          {"pq_star", cfg.pq_star},
          {"seed", cfg.seed},
          {"tol", cfg.tol},
          {"max_iter", cfg.max_iter},
          {"n", data.n()},
          {"p", data.p()},
          {"q", data.q()},
          {"x_names", data.x_names},
          {"y_names", data.y_names}};
}

CvPlan plan_for(const RunConfig& cfg, const DataPair& data) {
  if (cfg.n_cv > data.n()) throw ConfigError("--ncv exceeds the number of observations");
  if (cfg.pq_star > std::min(data.p(), data.q())) {
    throw ConfigError("--pq exceeds min(p, q) = " + std::to_string(std::min(data.p(), data.q())));
  }
  return make_plan(data.n(), cfg.n_cv, cfg.seed, cfg.lambda_grid);
}

}  // namespace

void RunConfig::validate() const {
  if (n_cv < 2) throw ConfigError("--ncv must be at least 2");
  if (lambda_grid.empty()) throw ConfigError("--grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0 && lambda_grid[i] <= 2.0)) throw ConfigError("--grid values must lie in [0, 2]");
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw ConfigError("--grid must be strictly ascending without duplicates");
    }
  }
  if (pq_star < 0) throw ConfigError("--pq must be nonnegative");
  if (n_perm < 1) throw ConfigError("--nperm must be at least 1");
  if (!(q_level > 0.0 && q_level < 1.0)) throw ConfigError("--q must lie in (0, 1)");
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("--tol must lie in (0, 1)");
  if (max_iter < 1) throw ConfigError("--max-iter must be positive");
  try {
    simulation.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.mode = mode;
  o.test_cor = test_cor;
  o.tol = tol;
  o.max_iter = max_iter;
  o.threads = threads;
  return o;
}

json config_to_json(const RunConfig& cfg) {
  return {{"mode", std::string(to_string(cfg.mode))},
          {"test_cor", cfg.test_cor ? json(std::string(to_string(*cfg.test_cor))) : json(nullptr)},
          {"n_cv", cfg.n_cv},
          {"lambda_grid", cfg.lambda_grid},
          {"pq_star", cfg.pq_star},
          {"n_perm", cfg.n_perm},
          {"q_level", cfg.q_level},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"standardize", cfg.standardize},
          {"tol", cfg.tol},
          {"max_iter", cfg.max_iter},
          {"simulation", io::simulation_spec_to_json(cfg.simulation)},
          {"x_path", cfg.x_path},
          {"y_path", cfg.y_path},
          {"out_dir", cfg.out_dir},
          {"label", cfg.label},
          {"runs", cfg.runs}};
}

RunConfig config_from_json(const json& j) {
  try {
    RunConfig cfg;
    cfg.mode = parse_estimator_mode(j.at("mode").get<std::string>());
    if (!j.at("test_cor").is_null()) cfg.test_cor = parse_estimator_mode(j.at("test_cor").get<std::string>());
    cfg.n_cv = j.at("n_cv").get<int>();
    cfg.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    cfg.pq_star = j.at("pq_star").get<int>();
    cfg.n_perm = j.at("n_perm").get<int>();
    cfg.q_level = j.at("q_level").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.threads = j.at("threads").get<unsigned>();
    cfg.standardize = j.at("standardize").get<bool>();
    cfg.tol = j.at("tol").get<double>();
    cfg.max_iter = j.at("max_iter").get<int>();
    cfg.simulation = io::simulation_spec_from_json(j.at("simulation"));
    cfg.x_path = j.at("x_path").get<std::string>();
    cfg.y_path = j.at("y_path").get<std::string>();
    cfg.out_dir = j.at("out_dir").get<std::string>();
    cfg.label = j.at("label").get<std::string>();
    cfg.runs = j.at("runs").get<std::vector<std::string>>();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  SimulationSpec spec = cfg.simulation;
  spec.seed = cfg.seed;
  const SimulatedData sim = generate(spec);
  const fs::path out = cfg.out_dir;
  io::write_matrix_csv(out / "x.csv", sim.data.x, sim.data.x_names);
  io::write_matrix_csv(out / "y.csv", sim.data.y, sim.data.y_names);
  io::write_file_atomic(out / "truth.json", io::dump_json(io::truth_to_json(spec, sim.truth)));
}

void cmd_fit(const RunConfig& cfg) {
  cfg.validate();
  const DataPair data = load_data(cfg);
  const CvPlan plan = plan_for(cfg, data);
  const FitResult fit = fit_pairs(data, cfg.pq_star, plan, cfg.fit_options());
  io::write_file_atomic(fs::path(cfg.out_dir) / "fit.json",
                        io::dump_json(io::fit_to_json(fit, provenance(cfg, data))));
}

void cmd_permtest(const RunConfig& cfg) {
  cfg.validate();
  const DataPair data = load_data(cfg);
  const CvPlan plan = plan_for(cfg, data);
  const FitOptions options = cfg.fit_options();
  const FitResult fit = fit_pairs(data, cfg.pq_star, plan, options);
  const Eigen::MatrixXd perm =
      permutation_distribution(data, cfg.pq_star, plan, options, cfg.n_perm, cfg.seed);
  const PermutationSummary summary = count_significant(observed_cc_test(fit), perm, cfg.q_level);

  json prov = provenance(cfg, data);
  const fs::path out = cfg.out_dir;
  io::write_file_atomic(out / "fit.json", io::dump_json(io::fit_to_json(fit, prov)));
  prov["n_perm"] = cfg.n_perm;
  prov["q_level"] = cfg.q_level;
  io::write_file_atomic(out / "permtest.json", io::dump_json(io::permtest_to_json(summary, prov)));
  io::write_file_atomic(out / "fan.tsv", io::fan_table_tsv(summary));
}

void cmd_evaluate(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.runs.empty()) throw ConfigError("evaluate needs at least one --run directory");
  std::vector<MetricsReport> reports;
  std::string table = io::metrics_header_tsv();
  for (const auto& run_dir : cfg.runs) {
    const fs::path dir = run_dir;
    for (const char* name : {"fit.json", "permtest.json", "truth.json"}) {
      if (!fs::exists(dir / name)) throw ParseError("missing " + (dir / name).string());
    }
    const io::LoadedFit fit = io::fit_from_json(io::read_json(dir / "fit.json"));
    const PermutationSummary summary = io::permtest_from_json(io::read_json(dir / "permtest.json"));
    const GroundTruth truth = io::truth_from_json(io::read_json(dir / "truth.json"));
    if (summary.j_star > static_cast<int>(fit.pairs.size())) {
      throw ParseError("permtest j_star exceeds the pairs in " + (dir / "fit.json").string());
    }
    reports.push_back(compute_metrics(fit.pairs, summary.j_star, truth));
    table += io::metrics_row_tsv(run_dir, reports.back());
  }
  const BatchSummary batch = batch_summary(reports, cfg.label);
  const fs::path out = cfg.out_dir;
  io::write_file_atomic(out / "metrics.tsv", table);
  io::write_file_atomic(out / "summary.tsv", io::batch_summary_tsv(std::span(&batch, 1)));
}

namespace {

// Options are parsed into a scratch config; only flags the user actually
// passed override the base (defaults or --config file).
class Overrides {
 public:
  template <class T, class Apply>
  CLI::Option* add(CLI::App* app, const std::string& name, T& storage, const std::string& help,
                   Apply apply) {
    CLI::Option* opt = app->add_option(name, storage, help);
    items_.emplace_back(opt, [&storage, apply](RunConfig& c) { apply(c, storage); });
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& name, bool& storage, const std::string& help,
                    std::function<void(RunConfig&, bool)> apply) {
    CLI::Option* opt = app->add_flag(name, storage, help);
    items_.emplace_back(opt, [&storage, apply](RunConfig& c) { apply(c, storage); });
    return opt;
  }

  void apply(RunConfig& cfg) const {
    for (const auto& [opt, fn] : items_) {
      if (opt->count() > 0) fn(cfg);
    }
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items_;
};

struct RawOptions {
  std::string mode;
  std::string test_cor;
  int n_cv = 0;
  std::vector<double> grid;
  int pq = 0;
  int n_perm = 0;
  double q = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool standardize = true;
  double tol = 0.0;
  int max_iter = 0;
  long n = 0;
  long p = 0;
  long q_dim = 0;
  double rho = 0.0;
  std::string groups;
  std::string tail;
  std::string tail_divisor;
  bool contaminate = false;
  double df = 0.0;
  double b_value = 0.0;
  std::string x_path;
  std::string y_path;
  std::string out_dir;
  std::string label;
  std::vector<std::string> runs;
  std::string config_path;
  std::string dump_config;
};

void add_common(CLI::App* sub, Overrides& ov, RawOptions& raw) {
  sub->add_option("--config", raw.config_path, "JSON run configuration to start from");
  sub->add_option("--dump-config", raw.dump_config, "Write the effective configuration as JSON");
  ov.add(sub, "--seed", raw.seed, "Random seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  ov.add(sub, "--threads", raw.threads, "Worker threads (0 = all cores)",
         [](RunConfig& c, unsigned v) { c.threads = v; });
  ov.add(sub, "--out-dir", raw.out_dir, "Output directory",
         [](RunConfig& c, const std::string& v) { c.out_dir = v; });
}

void add_fit_options(CLI::App* sub, Overrides& ov, RawOptions& raw) {
  ov.add(sub, "--x", raw.x_path, "CSV of the x matrix", [](RunConfig& c, const std::string& v) { c.x_path = v; });
  ov.add(sub, "--y", raw.y_path, "CSV of the y matrix", [](RunConfig& c, const std::string& v) { c.y_path = v; });
  ov.add(sub, "--mode", raw.mode, "Covariance estimator: pearson or spearman",
         [](RunConfig& c, const std::string& v) { c.mode = parse_estimator_mode(v); })
      ->check(CLI::IsMember({"pearson", "spearman"}));
  ov.add(sub, "--test-cor", raw.test_cor, "Correlation scoring held-out folds (default: --mode)",
         [](RunConfig& c, const std::string& v) { c.test_cor = parse_estimator_mode(v); })
      ->check(CLI::IsMember({"pearson", "spearman"}));
  ov.add(sub, "--ncv", raw.n_cv, "Number of cross-validation folds", [](RunConfig& c, int v) { c.n_cv = v; });
  ov.add(sub, "--grid", raw.grid, "Comma-separated penalty grid in [0, 2]",
         [](RunConfig& c, const std::vector<double>& v) { c.lambda_grid = v; })
      ->delimiter(',');
  ov.add(sub, "--pq", raw.pq, "Number of canonical pairs", [](RunConfig& c, int v) { c.pq_star = v; });
  ov.add(sub, "--tol", raw.tol, "Power iteration tolerance", [](RunConfig& c, double v) { c.tol = v; });
  ov.add(sub, "--max-iter", raw.max_iter, "Power iteration cap", [](RunConfig& c, int v) { c.max_iter = v; });
  ov.flag(sub, "--standardize,!--no-standardize", raw.standardize,
          "Center and scale columns before fitting (default on)",
          [](RunConfig& c, bool v) { c.standardize = v; });
}

void add_simulation_options(CLI::App* sub, Overrides& ov, RawOptions& raw) {
  ov.add(sub, "--n", raw.n, "Samples", [](RunConfig& c, long v) { c.simulation.n = v; });
  ov.add(sub, "--p", raw.p, "x variables", [](RunConfig& c, long v) { c.simulation.p = v; });
  ov.add(sub, "--q", raw.q_dim, "y variables", [](RunConfig& c, long v) { c.simulation.q = v; });
  ov.add(sub, "--rho", raw.rho, "Within-group correlation", [](RunConfig& c, double v) { c.simulation.rho = v; });
  ov.add(sub, "--groups", raw.groups, "'default', 'none' or X:Y,X:Y,...",
         [](RunConfig& c, const std::string& v) { c.simulation.groups = parse_groups(v); });
  ov.add(sub, "--tail", raw.tail, "clean or tlike",
         [](RunConfig& c, const std::string& v) { c.simulation.tail = parse_tail_mode(v); })
      ->check(CLI::IsMember({"clean", "tlike"}));
  ov.add(sub, "--tail-divisor", raw.tail_divisor, "sqrt or linear",
         [](RunConfig& c, const std::string& v) { c.simulation.divisor = parse_tail_divisor(v); })
      ->check(CLI::IsMember({"sqrt", "linear"}));
  ov.flag(sub, "--contaminate-noise", raw.contaminate, "Apply the t-like divisor to the y noise too",
          [](RunConfig& c, bool v) { c.simulation.contaminate_noise = v; });
  ov.add(sub, "--df", raw.df, "Chi-square degrees of freedom", [](RunConfig& c, double v) { c.simulation.df = v; });
  ov.add(sub, "--b-value", raw.b_value, "Nonzero value of B", [](RunConfig& c, double v) { c.simulation.b_value = v; });
}

int exit_code_for(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError& e) {
    std::cerr << "rmscca: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DegenerateColumn& e) {
    std::cerr << "rmscca: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DegeneratePair& e) {
    std::cerr << "rmscca: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NoViableLambda& e) {
    std::cerr << "rmscca: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ParseError& e) {
    std::cerr << "rmscca: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvalidInput& e) {
    std::cerr << "rmscca: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "rmscca: malformed JSON input: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "rmscca: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Sparse canonical pairs with rank-based covariance"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RawOptions raw;
  Overrides ov;

  CLI::App* simulate = app.add_subcommand("simulate", "Generate x.csv, y.csv and truth.json");
  add_common(simulate, ov, raw);
  add_simulation_options(simulate, ov, raw);

  CLI::App* fit = app.add_subcommand("fit", "Fit sparse canonical pairs; writes fit.json");
  add_common(fit, ov, raw);
  add_fit_options(fit, ov, raw);

  CLI::App* permtest =
      app.add_subcommand("permtest", "Permutation significance; writes fit.json, permtest.json, fan.tsv");
  add_common(permtest, ov, raw);
  add_fit_options(permtest, ov, raw);
  ov.add(permtest, "--nperm", raw.n_perm, "Number of permutations", [](RunConfig& c, int v) { c.n_perm = v; });
  ov.add(permtest, "--q", raw.q, "Quantile level of the permutation cutoff",
         [](RunConfig& c, double v) { c.q_level = v; });

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score fitted runs against truth.json");
  add_common(evaluate, ov, raw);
  ov.add(evaluate, "--run", raw.runs, "Run directory holding fit.json, permtest.json, truth.json",
         [](RunConfig& c, const std::vector<std::string>& v) { c.runs = v; });
  ov.add(evaluate, "--label", raw.label, "Label of the batch summary row",
         [](RunConfig& c, const std::string& v) { c.label = v; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg;
    if (!raw.config_path.empty()) {
      cfg = config_from_json(io::read_json(raw.config_path));
    }
    ov.apply(cfg);
    if (!raw.dump_config.empty()) {
      io::write_file_atomic(raw.dump_config, io::dump_json(config_to_json(cfg)));
    }
    if (simulate->parsed()) {
      cmd_simulate(cfg);
    } else if (fit->parsed()) {
      cmd_fit(cfg);
    } else if (permtest->parsed()) {
      cmd_permtest(cfg);
    } else {
      cmd_evaluate(cfg);
    }
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("rmscca");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rmscca::cli
