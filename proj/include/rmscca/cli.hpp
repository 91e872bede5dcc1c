#pragma once

#include "rmscca/mscca.hpp"
#include "rmscca/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rmscca::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitNumerical = 3,
  kExitConfig = 4,
};

// Every tunable of the four subcommands. Round-trips through JSON.
struct RunConfig {
  EstimatorMode mode = EstimatorMode::Spearman;
  std::optional<EstimatorMode> test_cor;
  int n_cv = kDefaultFolds;
  std::vector<double> lambda_grid = default_lambda_grid();
  int pq_star = 3;
  int n_perm = 100;
  double q_level = 0.9;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool standardize = true;
  double tol = 1e-6;
  int max_iter = 1000;
  SimulationSpec simulation;

  std::string x_path;
  std::string y_path;
  std::string out_dir = ".";
  std::string label = "batch";
  std::vector<std::string> runs;

  // Throws ConfigError for out-of-range values.
  void validate() const;
  FitOptions fit_options() const;
};

nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

void cmd_simulate(const RunConfig& cfg);
void cmd_fit(const RunConfig& cfg);
void cmd_permtest(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);

// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace rmscca::cli
