#pragma once

#include "rmscca/covariance.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

namespace rmscca {

enum class TailMode { Clean, TLike };
// How the chi-square draw divides a t-like row: by sqrt(w / df) or by w / df.
enum class TailDivisor { Sqrt, Linear };

std::string_view to_string(TailMode mode) noexcept;
std::string_view to_string(TailDivisor divisor) noexcept;
TailMode parse_tail_mode(std::string_view text);
TailDivisor parse_tail_divisor(std::string_view text);

// Numbers of x and y variables in one planted group. Groups occupy
// consecutive columns of x and y in list order.
struct GroupSize {
  Eigen::Index x = 0;
  Eigen::Index y = 0;
};

// The five planted groups of the reference design (needs p, q >= 100).
std::vector<GroupSize> default_groups();

struct SimulationSpec {
  Eigen::Index n = 100;
  Eigen::Index p = 100;
  Eigen::Index q = 100;
  double rho = 0.2;
  std::vector<GroupSize> groups = default_groups();
  TailMode tail = TailMode::Clean;
  TailDivisor divisor = TailDivisor::Sqrt;
  bool contaminate_noise = false;
  double df = 2.0;
  double b_value = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IndexGroup {
  std::vector<Eigen::Index> x;
  std::vector<Eigen::Index> y;
};

struct GroundTruth {
  Eigen::MatrixXd b;
  std::vector<IndexGroup> groups;
  Eigen::VectorXd sigma_yy_diag;
};

// p x q block layout: b_value on each group's x-block x y-block, zero
// elsewhere.
Eigen::MatrixXd build_b(const SimulationSpec& spec);

// Noise variance giving correlation rho between two y variables that share a
// group with `x_block_size` x variables (unit coefficients).
double sigma_yy_entry(Eigen::Index x_block_size, double rho);

GroundTruth ground_truth(const SimulationSpec& spec);

struct SimulatedData {
  DataPair data;
  GroundTruth truth;
};

SimulatedData generate(const SimulationSpec& spec);

}  // namespace rmscca
