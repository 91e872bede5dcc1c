#include "rmscca/io.hpp"

#include "rmscca/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace rmscca::io {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::optional<double> parse_double(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<Eigen::Index>(i)) = number_or_neg_inf(j[i]);
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (!std::isfinite(value)) {
    if (std::isnan(value)) return "nan";
    return value > 0 ? "inf" : "-inf";
  }
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

NamedMatrix parse_matrix_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    lines.push_back(rest.substr(0, nl));
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty CSV file");

  NamedMatrix out;
  std::string_view header = lines.front();
  if (header.size() >= 3 && header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
  for (auto cell : split_commas(header)) out.names.push_back(unquote(cell));
  const auto cols = static_cast<Eigen::Index>(out.names.size());
  if (lines.size() < 2) throw ParseError("CSV file has a header but no data rows", 1);

  out.values.resize(static_cast<Eigen::Index>(lines.size() - 1), cols);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const long row = static_cast<long>(li) + 1;
    const auto cells = split_commas(lines[li]);
    if (static_cast<Eigen::Index>(cells.size()) != cols) {
      throw ParseError("ragged row: expected " + std::to_string(cols) + " cells, found " +
                           std::to_string(cells.size()),
                       row);
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto value = parse_double(cells[c]);
      if (!value) {
        throw ParseError("non-numeric cell '" + std::string(cells[c]) + "'", row,
                         static_cast<long>(c) + 1);
      }
      out.values(static_cast<Eigen::Index>(li - 1), static_cast<Eigen::Index>(c)) = *value;
    }
  }
  return out;
}

NamedMatrix read_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(read_file(path));
}

std::string format_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
  std::string out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j > 0) out += ',';
    out += static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                      : "V" + std::to_string(j + 1);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& names) {
  write_file_atomic(path, format_matrix_csv(m, names));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json number_or_null(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

double number_or_neg_inf(const json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

json sparse_entries(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) out.push_back(json::array({i, v(i)}));
  }
  return out;
}

Eigen::VectorXd dense_from_entries(const json& entries, Eigen::Index size) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size);
  for (const auto& e : entries) {
    const auto idx = e.at(0).get<Eigen::Index>();
    if (idx < 0 || idx >= size) throw ParseError("coefficient index out of range");
    out(idx) = e.at(1).get<double>();
  }
  return out;
}

void check_schema(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw ParseError(what + ": missing schema_version");
  }
  if (j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ParseError(what + ": unsupported schema_version " + j.at("schema_version").dump() +
                     " (expected " + std::to_string(kSchemaVersion) + ")");
  }
}

json plan_to_json(const CvPlan& plan) {
  return {{"n_cv", plan.n_cv},
          {"seed", plan.seed},
          {"lambda_grid", plan.lambda_grid},
          {"folds", plan.folds}};
}

CvPlan plan_from_json(const json& j) {
  CvPlan plan;
  plan.n_cv = j.at("n_cv").get<int>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  plan.folds = j.at("folds").get<std::vector<int>>();
  return plan;
}

json fit_to_json(const FitResult& fit, const json& provenance) {
  json pairs = json::array();
  for (std::size_t i = 0; i < fit.pairs.size(); ++i) {
    const CanonicalPair& pr = fit.pairs[i];
    json grid = json::array();
    if (i < fit.selections.size()) {
      for (const auto& c : fit.selections[i].cells) {
        grid.push_back({c.lambda_u, c.lambda_v, number_or_null(c.cc_test_mean), c.nonconverged_folds});
      }
    }
    pairs.push_back({{"pair", i + 1},
                     {"lambda_u", pr.lambda_u_star},
                     {"lambda_v", pr.lambda_v_star},
                     {"cc", pr.cc},
                     {"cc_full", pr.cc_full},
                     {"cc_test_mean", number_or_null(pr.cc_test_mean)},
                     {"converged", pr.converged},
                     {"iterations", pr.iterations},
                     {"alpha", sparse_entries(pr.alpha)},
                     {"beta", sparse_entries(pr.beta)},
                     {"u", sparse_entries(pr.u)},
                     {"v", sparse_entries(pr.v)},
                     {"cv_grid", std::move(grid)}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "fit"},
          {"provenance", provenance},
          {"mode", std::string(to_string(fit.mode))},
          {"pq_star", fit.pq_star},
          {"plan", plan_to_json(fit.plan)},
          {"pairs", std::move(pairs)}};
}

LoadedFit fit_from_json(const json& j) {
  check_schema(j, "fit");
  LoadedFit out;
  out.provenance = j.at("provenance");
  const auto p = out.provenance.at("p").get<Eigen::Index>();
  const auto q = out.provenance.at("q").get<Eigen::Index>();
  for (const auto& e : j.at("pairs")) {
    CanonicalPair pr;
    pr.lambda_u_star = e.at("lambda_u").get<double>();
    pr.lambda_v_star = e.at("lambda_v").get<double>();
    pr.cc = e.at("cc").get<double>();
    pr.cc_full = e.at("cc_full").get<double>();
    pr.cc_test_mean = number_or_neg_inf(e.at("cc_test_mean"));
    pr.converged = e.at("converged").get<bool>();
    pr.iterations = e.at("iterations").get<int>();
    pr.alpha = dense_from_entries(e.at("alpha"), p);
    pr.beta = dense_from_entries(e.at("beta"), q);
    pr.u = dense_from_entries(e.at("u"), p);
    pr.v = dense_from_entries(e.at("v"), q);
    out.pairs.push_back(std::move(pr));
  }
  return out;
}

json permtest_to_json(const PermutationSummary& s, const json& provenance) {
  json perm = json::array();
  for (Eigen::Index r = 0; r < s.perm_cc.rows(); ++r) perm.push_back(vector_to_json(s.perm_cc.row(r).transpose()));
  return {{"schema_version", kSchemaVersion},
          {"kind", "permtest"},
          {"provenance", provenance},
          {"n_perm", s.n_perm},
          {"q_level", s.q_level},
          {"observed_cc_test", vector_to_json(s.observed)},
          {"cutoffs", vector_to_json(s.cutoffs)},
          {"j_star", s.j_star},
          {"perm_cc", std::move(perm)}};
}

PermutationSummary permtest_from_json(const json& j) {
  check_schema(j, "permtest");
  PermutationSummary s;
  s.n_perm = j.at("n_perm").get<int>();
  s.q_level = j.at("q_level").get<double>();
  s.observed = vector_from_json(j.at("observed_cc_test"));
  s.cutoffs = vector_from_json(j.at("cutoffs"));
  s.j_star = j.at("j_star").get<int>();
  const auto& rows = j.at("perm_cc");
  s.perm_cc.resize(static_cast<Eigen::Index>(rows.size()), s.observed.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    s.perm_cc.row(static_cast<Eigen::Index>(r)) = vector_from_json(rows[r]).transpose();
  }
  return s;
}

std::string fan_table_tsv(const PermutationSummary& s) {
  std::string out = "pair_index\tobserved_cc_test\tcutoff_q";
  for (int d = 1; d <= 9; ++d) out += "\tperm_quantile_0." + std::to_string(d);
  out += '\n';
  for (Eigen::Index j = 0; j < s.perm_cc.cols(); ++j) {
    std::vector<double> column(s.perm_cc.col(j).data(), s.perm_cc.col(j).data() + s.perm_cc.rows());
    out += std::to_string(j + 1) + '\t' + format_double(s.observed(j)) + '\t' + format_double(s.cutoffs(j));
    for (int d = 1; d <= 9; ++d) out += '\t' + format_double(empirical_quantile(column, d / 10.0));
    out += '\n';
  }
  return out;
}

json simulation_spec_to_json(const SimulationSpec& spec) {
  json groups = json::array();
  for (const auto& g : spec.groups) groups.push_back({g.x, g.y});
  return {{"n", spec.n},
          {"p", spec.p},
          {"q", spec.q},
          {"rho", spec.rho},
          {"groups", std::move(groups)},
          {"tail", std::string(to_string(spec.tail))},
          {"tail_divisor", std::string(to_string(spec.divisor))},
          {"contaminate_noise", spec.contaminate_noise},
          {"df", spec.df},
          {"b_value", spec.b_value},
          {"seed", spec.seed}};
}

SimulationSpec simulation_spec_from_json(const json& j) {
  SimulationSpec spec;
  spec.n = j.at("n").get<Eigen::Index>();
  spec.p = j.at("p").get<Eigen::Index>();
  spec.q = j.at("q").get<Eigen::Index>();
  spec.rho = j.at("rho").get<double>();
  spec.groups.clear();
  for (const auto& g : j.at("groups")) spec.groups.push_back({g.at(0).get<Eigen::Index>(), g.at(1).get<Eigen::Index>()});
  spec.tail = parse_tail_mode(j.at("tail").get<std::string>());
  spec.divisor = parse_tail_divisor(j.at("tail_divisor").get<std::string>());
  spec.contaminate_noise = j.at("contaminate_noise").get<bool>();
  spec.df = j.at("df").get<double>();
  spec.b_value = j.at("b_value").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

json truth_to_json(const SimulationSpec& spec, const GroundTruth& truth) {
  json groups = json::array();
  for (const auto& g : truth.groups) groups.push_back({g.x, g.y});
  return {{"schema_version", kSchemaVersion},
          {"kind", "truth"},
          {"groups", std::move(groups)},
          {"b_value", spec.b_value},
          {"rho", spec.rho},
          {"p", spec.p},
          {"q", spec.q},
          {"sigma_yy_diag", vector_to_json(truth.sigma_yy_diag)},
          {"spec", simulation_spec_to_json(spec)}};
}

GroundTruth truth_from_json(const json& j) {
  check_schema(j, "truth");
  GroundTruth t;
  const auto p = j.at("p").get<Eigen::Index>();
  const auto q = j.at("q").get<Eigen::Index>();
  const double b_value = j.at("b_value").get<double>();
  t.b = Eigen::MatrixXd::Zero(p, q);
  for (const auto& g : j.at("groups")) {
    IndexGroup ig;
    ig.x = g.at(0).get<std::vector<Eigen::Index>>();
    ig.y = g.at(1).get<std::vector<Eigen::Index>>();
    for (Eigen::Index r : ig.x) {
      for (Eigen::Index c : ig.y) {
        if (r < 0 || r >= p || c < 0 || c >= q) throw ParseError("truth: group index out of range");
        t.b(r, c) = b_value;
      }
    }
    t.groups.push_back(std::move(ig));
  }
  t.sigma_yy_diag = vector_from_json(j.at("sigma_yy_diag"));
  return t;
}

std::string metrics_header_tsv() { return "run\tnc_pair\ttpr\ttp_of_cg\tfn_rate\tcomplete_group_flags\n"; }

std::string metrics_row_tsv(const std::string& run, const MetricsReport& r) {
  std::string flags;
  for (bool f : r.per_pair_flags) flags += f ? '1' : '0';
  if (flags.empty()) flags = "-";
  return run + '\t' + std::to_string(r.nc_pair) + '\t' + format_double(r.tpr) + '\t' +
         format_double(r.tp_of_cg) + '\t' + format_double(r.fn_rate) + '\t' + flags + '\n';
}

std::string batch_summary_tsv(std::span<const BatchSummary> summaries) {
  std::string out = "label\truns\tany_significant_rate";
  for (const char* m : {"nc_pair", "tpr", "tp_of_cg", "fn_rate"}) {
    for (const char* s : {"q1", "median", "q3"}) out += std::string("\t") + m + "_" + s;
  }
  out += '\n';
  for (const auto& b : summaries) {
    out += b.label + '\t' + std::to_string(b.runs) + '\t' + format_double(b.any_significant_rate);
    for (const Quartiles* qs : {&b.nc_pair, &b.tpr, &b.tp_of_cg, &b.fn_rate}) {
      out += '\t' + format_double(qs->q1) + '\t' + format_double(qs->median) + '\t' + format_double(qs->q3);
    }
    out += '\n';
  }
  return out;
}

}  // namespace rmscca::io
