#pragma once

#include "rmscca/mscca.hpp"
#include "rmscca/significance.hpp"
#include "rmscca/simulate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rmscca {

struct MetricsReport {
  int nc_pair = 0;
  double tpr = 0.0;
  double tp_of_cg = 0.0;
  double fn_rate = 0.0;
  std::vector<bool> per_pair_flags;
};

// Index of the first group whose x and y index sets both lie inside the
// supports of alpha and beta.
std::optional<std::size_t> contains_complete_group(const Eigen::VectorXd& alpha,
                                                   const Eigen::VectorXd& beta,
                                                   const GroundTruth& truth);
std::optional<std::size_t> contains_complete_group(const CanonicalPair& pair,
                                                   const GroundTruth& truth);

// Variables with a nonzero row (x) or column (y) of B.
std::vector<bool> true_x_positions(const GroundTruth& truth);
std::vector<bool> true_y_positions(const GroundTruth& truth);

// Metrics over the significant pairs 1..j_star.
MetricsReport compute_metrics(std::span<const CanonicalPair> pairs, int j_star,
                              const GroundTruth& truth);
MetricsReport compute_metrics(const FitResult& fit, const PermutationSummary& summary,
                              const GroundTruth& truth);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

struct BatchSummary {
  std::string label;
  int runs = 0;
  // Fraction of runs with at least one significant pair: the type I error
  // rate on null batches, power on batches with planted signal.
  double any_significant_rate = 0.0;
  Quartiles nc_pair;
  Quartiles tpr;
  Quartiles tp_of_cg;
  Quartiles fn_rate;
};

Quartiles quartiles(std::vector<double> values);

BatchSummary batch_summary(std::span<const MetricsReport> reports, std::string label);

}  // namespace rmscca
