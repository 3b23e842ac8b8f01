#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vw4c/latent.hpp"
#include "vw4c/tensor.hpp"

namespace vw4c::loss {

// The four scored variables, in target channel order. Target tensors lay
// out channels lead-time-major: channel = t*4 + v for t in [0, 32).
enum class TargetVariable : int {
  temperature = 0,
  crr_intensity = 1,
  asii_turb_trop_prob = 2,
  cma = 3,
};

constexpr int kNumVariables = 4;

const char* variable_name(TargetVariable v);

// Per-variable weighting of the squared-error term.
struct VariableWeights {
  double temperature = 31.610;
  double crr_intensity = 4139.4;
  double cma = 5.2191;
  double asii_turb_trop_prob = 142.17;

  double weight(TargetVariable v) const;
};

enum class KlFormula {
  paper,     // 0.5 * sum(mu^2 + sigma^2 - log(sigma) - 1); can go negative
  standard,  // 0.5 * sum(mu^2 + sigma^2 - 2*log(sigma) - 1); always >= 0
};

struct LossConfig {
  double kl_weight = 80.0;
  VariableWeights weights{};
  KlFormula kl_formula = KlFormula::paper;
};

struct LossBreakdown {
  double l2_total = 0.0;
  std::array<double, kNumVariables> l2_per_variable{};
  double kl = 0.0;
  double total = 0.0;
  // Valid-pixel counts per (lead time, variable), lead-time-major, summed
  // over the batch.
  std::vector<int64_t> pixel_counts;
};

// Masked per-variable weighted mean squared error, averaged over batch
// samples. (t, v) cells with zero valid pixels contribute zero. When
// grad_pred is given it receives d loss / d pred (zero at masked pixels).
double masked_l2(const Grid4D& pred, const Grid4D& target, const Mask4D& mask,
                 const VariableWeights& weights, LossBreakdown* breakdown = nullptr,
                 Grid4D* grad_pred = nullptr);

// KL divergence of N(mu, sigma^2) from N(0, 1), averaged over batch samples.
// Optional gradients w.r.t. mu and sigma (batch*dim, same averaging).
double kl_divergence(const LatentDistribution& latent, KlFormula formula,
                     std::vector<double>* grad_mu = nullptr,
                     std::vector<double>* grad_sigma = nullptr);

inline double total_loss(double l2, double kl, const LossConfig& cfg) {
  return l2 + cfg.kl_weight * kl;
}

// Full breakdown for one batch: masked L2 + weighted KL.
LossBreakdown compute_loss(const Grid4D& pred, const Grid4D& target, const Mask4D& mask,
                           const LatentDistribution& latent, const LossConfig& cfg,
                           Grid4D* grad_pred = nullptr, std::vector<double>* grad_mu = nullptr,
                           std::vector<double>* grad_sigma = nullptr);

}  // namespace vw4c::loss
