#pragma once

#include <functional>
#include <optional>

#include "ztsnr/diffusion.hpp"
#include "ztsnr/timesteps.hpp"

namespace ztsnr {

// Sentinel for "below the first timestep": a transition targeting the
// clean data (alpha_bar := 1).
inline constexpr int kStepToData = 0;

struct GuidanceConfig {
  double w = 7.5;    // guidance weight, >= 0
  double phi = 0.7;  // rescale strength, in [0, 1]
};

enum class SamplerMethod { DDIM, DDPM };

std::string sampler_method_name(SamplerMethod m);
SamplerMethod parse_sampler_method(std::string_view name);

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::DDIM;
  TimestepPlan plan;
  std::optional<GuidanceConfig> guidance;
};

// x_neg + w * (x_pos - x_neg)
Tensor apply_cfg(const Tensor& x_pos, const Tensor& x_neg, double w);

// Restores the per-sample standard deviation of the guided output
// toward the positive branch's, blended by phi:
//   x_rescaled = x_cfg * std(x_pos)/std(x_cfg)   (per-sample scalars)
//   result     = phi * x_rescaled + (1 - phi) * x_cfg
// Standard deviations are population statistics over all non-batch
// elements with the mean subtracted. Throws DegenerateInputError when
// any sample of x_cfg has zero standard deviation.
Tensor rescale_cfg(const Tensor& x_cfg, const Tensor& x_pos, double phi);

// Deterministic DDIM transition t -> t_prev (eta = 0):
//   x_prev = sqrt(alpha_bar_prev) x0_pred + sqrt(1 - alpha_bar_prev) eps_pred
// With t_prev = kStepToData this returns x0_pred exactly.
Tensor ddim_step(const Tensor& x_t, const Tensor& model_out, int t, int t_prev,
                 const NoiseSchedule& schedule, Parameterization param);

// Ancestral transition t -> t-1 using the posterior mean plus
// sqrt(variance) fresh noise; the final step (t = 1) adds none.
Tensor ddpm_step(const Tensor& x_t, const Tensor& model_out, int t,
                 const NoiseSchedule& schedule, Parameterization param, Rng& rng);

// Model evaluated at (x_t, t, cond); cond = kNullClass selects the
// unconditional branch.
using ModelFn = std::function<Tensor(const Tensor& x_t, int t, int cond)>;

// Runs the full reverse process: starts from standard normal noise of
// shape [n, data_dim] at the plan's largest timestep, walks the plan
// descending and finishes with a transition to kStepToData. Guidance,
// when configured, combines the cond and null branches in model-output
// space before any conversion; the rescale is applied at every guided
// step. DDPM on a sparse plan substitutes alpha_bar_{t_prev} for
// alpha_bar_{t-1} in the posterior, an approximation.
Tensor sample(const ModelFn& model, Parameterization param, std::size_t data_dim,
              const NoiseSchedule& schedule, const SamplerConfig& config,
              int cond, std::size_t n, Rng& rng);

class DenoiserModel;
Tensor sample(const DenoiserModel& model, const NoiseSchedule& schedule,
              const SamplerConfig& config, int cond, std::size_t n, Rng& rng);

}  // namespace ztsnr
