#include "rmscca/simulate.hpp"

#include "rmscca/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace rmscca {

std::string_view to_string(TailMode mode) noexcept {
  return mode == TailMode::Clean ? "clean" : "tlike";
}

std::string_view to_string(TailDivisor divisor) noexcept {
  return divisor == TailDivisor::Sqrt ? "sqrt" : "linear";
}

TailMode parse_tail_mode(std::string_view text) {
  if (text == "clean") return TailMode::Clean;
  if (text == "tlike") return TailMode::TLike;
  throw InvalidInput("unknown tail mode '" + std::string(text) + "'");
}

TailDivisor parse_tail_divisor(std::string_view text) {
  if (text == "sqrt") return TailDivisor::Sqrt;
  if (text == "linear") return TailDivisor::Linear;
  throw InvalidInput("unknown tail divisor '" + std::string(text) + "'");
}

std::vector<GroupSize> default_groups() { return {{10, 20}, {5, 5}, {20, 10}, {50, 50}, {15, 15}}; }

void SimulationSpec::validate() const {
  if (n < 3) throw InvalidInput("simulation needs n >= 3");
  if (p < 1 || q < 1) throw InvalidInput("simulation needs p, q >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidInput("rho must lie in (0, 1)");
  if (!(df > 0.0)) throw InvalidInput("df must be positive");
  if (!std::isfinite(b_value)) throw InvalidInput("b_value must be finite");
  Eigen::Index sx = 0;
  Eigen::Index sy = 0;
  for (const auto& g : groups) {
    if (g.x < 1 || g.y < 1) throw InvalidInput("group blocks must be nonempty");
    sx += g.x;
    sy += g.y;
  }
  if (sx > p || sy > q) {
    throw InvalidInput("group blocks need " + std::to_string(sx) + " x and " + std::to_string(sy) +
                       " y variables but p=" + std::to_string(p) + ", q=" + std::to_string(q));
  }
}

Eigen::MatrixXd build_b(const SimulationSpec& spec) {
  spec.validate();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(spec.p, spec.q);
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  for (const auto& g : spec.groups) {
    b.block(row, col, g.x, g.y).setConstant(spec.b_value);
    row += g.x;
    col += g.y;
  }
  return b;
}

double sigma_yy_entry(Eigen::Index x_block_size, double rho) {
  if (x_block_size < 1) throw InvalidInput("x block size must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidInput("rho must lie in (0, 1)");
  const auto p1 = static_cast<double>(x_block_size);
  return (1.0 / rho - 1.0) * (p1 + (p1 * p1 - p1) * rho);
}

GroundTruth ground_truth(const SimulationSpec& spec) {
  GroundTruth truth;
  truth.b = build_b(spec);
  truth.sigma_yy_diag = Eigen::VectorXd::Ones(spec.q);
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  const double b2 = spec.b_value * spec.b_value;
  for (const auto& g : spec.groups) {
    IndexGroup ig;
    for (Eigen::Index i = 0; i < g.x; ++i) ig.x.push_back(row + i);
    for (Eigen::Index j = 0; j < g.y; ++j) ig.y.push_back(col + j);
    // Scaling the mean by b scales the shared variance by b^2.
    const double noise = b2 > 0.0 ? b2 * sigma_yy_entry(g.x, spec.rho) : 1.0;
    truth.sigma_yy_diag.segment(col, g.y).setConstant(noise);
    truth.groups.push_back(std::move(ig));
    row += g.x;
    col += g.y;
  }
  return truth;
}

SimulatedData generate(const SimulationSpec& spec) {
  spec.validate();
  SimulatedData out;
  out.truth = ground_truth(spec);

  // Cholesky factor of each within-group block of Sigma_XX (unit diagonal,
  // rho off the diagonal); ungrouped x columns are independent.
  std::vector<Eigen::MatrixXd> factors;
  for (const auto& g : spec.groups) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Constant(g.x, g.x, spec.rho);
    block.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success) throw InvalidInput("Sigma_XX block is not positive definite");
    factors.push_back(llt.matrixL());
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(spec.df);

  Eigen::MatrixXd x(spec.n, spec.p);
  Eigen::MatrixXd noise(spec.n, spec.q);
  const Eigen::VectorXd noise_sd = out.truth.sigma_yy_diag.cwiseSqrt();
  Eigen::VectorXd z(spec.p);
  for (Eigen::Index l = 0; l < spec.n; ++l) {
    for (Eigen::Index j = 0; j < spec.p; ++j) z(j) = normal(rng);
    Eigen::Index offset = 0;
    for (std::size_t g = 0; g < factors.size(); ++g) {
      const Eigen::Index m = factors[g].rows();
      x.row(l).segment(offset, m) = (factors[g] * z.segment(offset, m)).transpose();
      offset += m;
    }
    x.row(l).segment(offset, spec.p - offset) = z.segment(offset, spec.p - offset).transpose();

    double divisor = 1.0;
    if (spec.tail == TailMode::TLike) {
      const double scaled = chi2(rng) / spec.df;
      divisor = spec.divisor == TailDivisor::Sqrt ? std::sqrt(scaled) : scaled;
      x.row(l) /= divisor;
    }
    for (Eigen::Index j = 0; j < spec.q; ++j) noise(l, j) = noise_sd(j) * normal(rng);
    if (spec.contaminate_noise) noise.row(l) /= divisor;
  }

  out.data.y = x * out.truth.b + noise;
  out.data.x = std::move(x);
  for (Eigen::Index j = 0; j < spec.p; ++j) out.data.x_names.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < spec.q; ++j) out.data.y_names.push_back("y" + std::to_string(j + 1));
  return out;
}

}  // namespace rmscca
