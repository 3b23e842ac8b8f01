#include "vw4c/losses.hpp"

#include <cmath>

#include "vw4c/errors.hpp"

namespace vw4c::loss {

const char* variable_name(TargetVariable v) {
  switch (v) {
    case TargetVariable::temperature: return "temperature";
    case TargetVariable::crr_intensity: return "crr_intensity";
    case TargetVariable::asii_turb_trop_prob: return "asii_turb_trop_prob";
    case TargetVariable::cma: return "cma";
  }
  return "?";
}

double VariableWeights::weight(TargetVariable v) const {
  switch (v) {
    case TargetVariable::temperature: return temperature;
    case TargetVariable::crr_intensity: return crr_intensity;
    case TargetVariable::asii_turb_trop_prob: return asii_turb_trop_prob;
    case TargetVariable::cma: return cma;
  }
  return 0.0;
}

double masked_l2(const Grid4D& pred, const Grid4D& target, const Mask4D& mask,
                 const VariableWeights& weights, LossBreakdown* breakdown,
                 Grid4D* grad_pred) {
  const Shape4& s = pred.shape();
  if (!(target.shape() == s) || !(mask.shape() == s)) {
    throw ConfigError("masked_l2: pred " + s.str() + ", target " + target.shape().str() +
                      ", mask " + mask.shape().str() + " must all match");
  }
  if (s.c % kNumVariables != 0) {
    throw ConfigError("masked_l2: channel count " + std::to_string(s.c) +
                      " is not a multiple of " + std::to_string(kNumVariables));
  }
  const int leads = s.c / kNumVariables;
  const int64_t plane = int64_t(s.h) * s.w;
  const double norm = 1.0 / (double(leads) * kNumVariables);

  if (grad_pred) *grad_pred = Grid4D(s.b, s.c, s.h, s.w);
  std::vector<int64_t> counts(size_t(s.c), 0);
  std::array<double, kNumVariables> per_variable{};
  double total = 0.0;

  for (int n = 0; n < s.b; ++n) {
    for (int t = 0; t < leads; ++t) {
      for (int v = 0; v < kNumVariables; ++v) {
        const int c = t * kNumVariables + v;
        const size_t off = (size_t(n) * s.c + c) * plane;
        const double* pd = pred.data() + off;
        const double* td = target.data() + off;
        const uint8_t* md = mask.data() + off;

        int64_t valid = 0;
        double sq = 0.0;
        for (int64_t i = 0; i < plane; ++i) {
          if (!md[i]) continue;
          ++valid;
          const double d = pd[i] - td[i];
          sq += d * d;
        }
        counts[size_t(c)] += valid;
        if (valid == 0) continue;

        const double w = weights.weight(TargetVariable(v));
        const double term = norm * w / double(valid) * sq;
        per_variable[size_t(v)] += term / double(s.b);
        total += term / double(s.b);

        if (grad_pred) {
          double* gd = grad_pred->data() + off;
          const double scale = 2.0 * norm * w / (double(valid) * double(s.b));
          for (int64_t i = 0; i < plane; ++i) {
            if (md[i]) gd[i] = scale * (pd[i] - td[i]);
          }
        }
      }
    }
  }

  if (breakdown) {
    breakdown->l2_total = total;
    breakdown->l2_per_variable = per_variable;
    breakdown->pixel_counts = std::move(counts);
  }
  return total;
}

double kl_divergence(const LatentDistribution& latent, KlFormula formula,
                     std::vector<double>* grad_mu, std::vector<double>* grad_sigma) {
  const size_t n = size_t(latent.batch) * latent.dim;
  if (latent.mu.size() != n || latent.sigma.size() != n) {
    throw ConfigError("kl_divergence: latent buffers do not match batch*dim");
  }
  const double log_scale = (formula == KlFormula::paper) ? 1.0 : 2.0;
  const double inv_b = latent.batch > 0 ? 1.0 / double(latent.batch) : 0.0;

  if (grad_mu) grad_mu->assign(n, 0.0);
  if (grad_sigma) grad_sigma->assign(n, 0.0);

  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double mu = latent.mu[i];
    const double sg = latent.sigma[i];
    if (!(sg > 0.0)) {
      throw NumericError("kl_divergence: sigma must be positive, got " + std::to_string(sg));
    }
    total += 0.5 * (mu * mu + sg * sg - log_scale * std::log(sg) - 1.0);
    if (grad_mu) (*grad_mu)[i] = mu * inv_b;
    if (grad_sigma) (*grad_sigma)[i] = (sg - 0.5 * log_scale / sg) * inv_b;
  }
  return total * inv_b;
}

LossBreakdown compute_loss(const Grid4D& pred, const Grid4D& target, const Mask4D& mask,
                           const LatentDistribution& latent, const LossConfig& cfg,
                           Grid4D* grad_pred, std::vector<double>* grad_mu,
                           std::vector<double>* grad_sigma) {
  LossBreakdown bd;
  masked_l2(pred, target, mask, cfg.weights, &bd, grad_pred);
  bd.kl = kl_divergence(latent, cfg.kl_formula, grad_mu, grad_sigma);
  if (grad_mu && cfg.kl_weight != 1.0) {
    for (double& g : *grad_mu) g *= cfg.kl_weight;
  }
  if (grad_sigma && cfg.kl_weight != 1.0) {
    for (double& g : *grad_sigma) g *= cfg.kl_weight;
  }
  bd.total = total_loss(bd.l2_total, bd.kl, cfg);
  return bd;
}

}  // namespace vw4c::loss
