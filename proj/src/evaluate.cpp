#include "rmscca/evaluate.hpp"

#include "rmscca/error.hpp"

namespace rmscca {

namespace {

bool all_nonzero(const Eigen::VectorXd& coef, const std::vector<Eigen::Index>& idx) {
  for (Eigen::Index i : idx) {
    if (i < 0 || i >= coef.size() || coef(i) == 0.0) return false;
  }
  return true;
}

}  // namespace

std::optional<std::size_t> contains_complete_group(const Eigen::VectorXd& alpha,
                                                   const Eigen::VectorXd& beta,
                                                   const GroundTruth& truth) {
  for (std::size_t g = 0; g < truth.groups.size(); ++g) {
    const auto& grp = truth.groups[g];
    if (grp.x.empty() && grp.y.empty()) continue;
    if (all_nonzero(alpha, grp.x) && all_nonzero(beta, grp.y)) return g;
  }
  return std::nullopt;
}

std::optional<std::size_t> contains_complete_group(const CanonicalPair& pair,
                                                   const GroundTruth& truth) {
  return contains_complete_group(pair.alpha, pair.beta, truth);
}

std::vector<bool> true_x_positions(const GroundTruth& truth) {
  std::vector<bool> out(static_cast<std::size_t>(truth.b.rows()));
  for (Eigen::Index i = 0; i < truth.b.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = (truth.b.row(i).array() != 0.0).any();
  }
  return out;
}

std::vector<bool> true_y_positions(const GroundTruth& truth) {
  std::vector<bool> out(static_cast<std::size_t>(truth.b.cols()));
  for (Eigen::Index j = 0; j < truth.b.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = (truth.b.col(j).array() != 0.0).any();
  }
  return out;
}

MetricsReport compute_metrics(std::span<const CanonicalPair> pairs, int j_star,
                              const GroundTruth& truth) {
  if (j_star < 0 || static_cast<std::size_t>(j_star) > pairs.size()) {
    throw InvalidInput("j_star exceeds the number of fitted pairs");
  }
  const std::vector<bool> tx = true_x_positions(truth);
  const std::vector<bool> ty = true_y_positions(truth);
  std::vector<bool> hit_x(tx.size(), false);
  std::vector<bool> hit_y(ty.size(), false);

  MetricsReport r;
  r.nc_pair = j_star;
  long true_nonzero = 0;
  long false_nonzero = 0;
  int complete = 0;
  for (int i = 0; i < j_star; ++i) {
    const CanonicalPair& pair = pairs[static_cast<std::size_t>(i)];
    if (pair.alpha.size() != static_cast<Eigen::Index>(tx.size()) ||
        pair.beta.size() != static_cast<Eigen::Index>(ty.size())) {
      throw InvalidInput("canonical vector length does not match the ground truth");
    }
    for (Eigen::Index j = 0; j < pair.alpha.size(); ++j) {
      if (pair.alpha(j) == 0.0) continue;
      const auto s = static_cast<std::size_t>(j);
      if (tx[s]) {
        ++true_nonzero;
        hit_x[s] = true;
      } else {
        ++false_nonzero;
      }
    }
    for (Eigen::Index j = 0; j < pair.beta.size(); ++j) {
      if (pair.beta(j) == 0.0) continue;
      const auto s = static_cast<std::size_t>(j);
      if (ty[s]) {
        ++true_nonzero;
        hit_y[s] = true;
      } else {
        ++false_nonzero;
      }
    }
    const bool flag = contains_complete_group(pair, truth).has_value();
    r.per_pair_flags.push_back(flag);
    if (flag) ++complete;
  }

  const long nonzero = true_nonzero + false_nonzero;
  r.tpr = nonzero > 0 ? static_cast<double>(true_nonzero) / static_cast<double>(nonzero) : 0.0;
  r.tp_of_cg = j_star > 0 ? static_cast<double>(complete) / static_cast<double>(j_star) : 0.0;

  long total_true = 0;
  long missed = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    if (!tx[i]) continue;
    ++total_true;
    if (!hit_x[i]) ++missed;
  }
  for (std::size_t j = 0; j < ty.size(); ++j) {
    if (!ty[j]) continue;
    ++total_true;
    if (!hit_y[j]) ++missed;
  }
  r.fn_rate = total_true > 0 ? static_cast<double>(missed) / static_cast<double>(total_true) : 0.0;
  return r;
}

MetricsReport compute_metrics(const FitResult& fit, const PermutationSummary& summary,
                              const GroundTruth& truth) {
  return compute_metrics(fit.pairs, summary.j_star, truth);
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("quartiles: no values");
  return {empirical_quantile(values, 0.25), empirical_quantile(values, 0.5),
          empirical_quantile(values, 0.75)};
}

BatchSummary batch_summary(std::span<const MetricsReport> reports, std::string label) {
  if (reports.empty()) throw InvalidInput("batch_summary: no reports");
  BatchSummary s;
  s.label = std::move(label);
  s.runs = static_cast<int>(reports.size());
  std::vector<double> nc;
  std::vector<double> tpr;
  std::vector<double> cg;
  std::vector<double> fn;
  int any = 0;
  for (const auto& r : reports) {
    if (r.nc_pair >= 1) ++any;
    nc.push_back(r.nc_pair);
    tpr.push_back(r.tpr);
    cg.push_back(r.tp_of_cg);
    fn.push_back(r.fn_rate);
  }
  s.any_significant_rate = static_cast<double>(any) / static_cast<double>(reports.size());
  s.nc_pair = quartiles(std::move(nc));
  s.tpr = quartiles(std::move(tpr));
  s.tp_of_cg = quartiles(std::move(cg));
  s.fn_rate = quartiles(std::move(fn));
  return s;
}

}  // namespace rmscca
