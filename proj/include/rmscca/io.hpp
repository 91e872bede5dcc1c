#pragma once

#include "rmscca/evaluate.hpp"
#include "rmscca/mscca.hpp"
#include "rmscca/significance.hpp"
#include "rmscca/simulate.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace rmscca::io {

inline constexpr int kSchemaVersion = 1;

struct NamedMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
};

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Comma-separated, header row of column names, one sample per row.
NamedMatrix read_matrix_csv(const std::filesystem::path& path);
NamedMatrix parse_matrix_csv(const std::string& text);
std::string format_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& names);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
// Pretty JSON with a trailing newline.
std::string dump_json(const nlohmann::json& j);

// Non-finite doubles are stored as null and read back as -infinity.
nlohmann::json number_or_null(double value);
double number_or_neg_inf(const nlohmann::json& j);

// (index, value) pairs of the nonzero entries, 0-based.
nlohmann::json sparse_entries(const Eigen::VectorXd& v);
Eigen::VectorXd dense_from_entries(const nlohmann::json& entries, Eigen::Index size);

nlohmann::json plan_to_json(const CvPlan& plan);
CvPlan plan_from_json(const nlohmann::json& j);

// `provenance` is embedded verbatim under "provenance".
nlohmann::json fit_to_json(const FitResult& fit, const nlohmann::json& provenance);

struct LoadedFit {
  std::vector<CanonicalPair> pairs;
  nlohmann::json provenance;
};
LoadedFit fit_from_json(const nlohmann::json& j);

nlohmann::json permtest_to_json(const PermutationSummary& s, const nlohmann::json& provenance);
PermutationSummary permtest_from_json(const nlohmann::json& j);

// Plot table: pair_index, observed_cc_test, cutoff_q, deciles of the
// permutation distribution.
std::string fan_table_tsv(const PermutationSummary& s);

nlohmann::json simulation_spec_to_json(const SimulationSpec& spec);
SimulationSpec simulation_spec_from_json(const nlohmann::json& j);

nlohmann::json truth_to_json(const SimulationSpec& spec, const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);

std::string metrics_header_tsv();
std::string metrics_row_tsv(const std::string& run, const MetricsReport& r);
std::string batch_summary_tsv(std::span<const BatchSummary> summaries);

// Throws ParseError unless j carries the supported schema_version.
void check_schema(const nlohmann::json& j, const std::string& what);

}  // namespace rmscca::io
