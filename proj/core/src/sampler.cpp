#include "ztsnr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ztsnr/denoiser.hpp"
#include "ztsnr/errors.hpp"

namespace ztsnr {

std::string sampler_method_name(SamplerMethod m) {
  return m == SamplerMethod::DDIM ? "ddim" : "ddpm";
}

SamplerMethod parse_sampler_method(std::string_view name) {
  if (name == "ddim") return SamplerMethod::DDIM;
  if (name == "ddpm") return SamplerMethod::DDPM;
  throw std::invalid_argument("unknown sampler method: " + std::string(name));
}

Tensor apply_cfg(const Tensor& x_pos, const Tensor& x_neg, double w) {
  require_same_shape(x_pos, x_neg, "apply_cfg");
  if (w < 0.0) throw std::invalid_argument("apply_cfg: w must be >= 0");
  return lincomb(1.0 - w, x_neg, w, x_pos);  // x_neg + w (x_pos - x_neg)
}

Tensor rescale_cfg(const Tensor& x_cfg, const Tensor& x_pos, double phi) {
  require_same_shape(x_cfg, x_pos, "rescale_cfg");
  if (phi < 0.0 || phi > 1.0) {
    throw std::invalid_argument("rescale_cfg: phi must lie in [0, 1]");
  }
  Tensor out(x_cfg.shape);
  const std::size_t batch = x_cfg.batch();
  const std::size_t n = x_cfg.sample_size();
  for (std::size_t b = 0; b < batch; ++b) {
    const double sigma_cfg = sample_std(x_cfg, b);
    if (sigma_cfg == 0.0) {
      throw DegenerateInputError("rescale_cfg: guided output has zero std in sample " +
                                 std::to_string(b));
    }
    const double ratio = sample_std(x_pos, b) / sigma_cfg;
    const double* src = x_cfg.sample(b);
    double* dst = out.sample(b);
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = phi * (src[i] * ratio) + (1.0 - phi) * src[i];
    }
  }
  return out;
}

Tensor ddim_step(const Tensor& x_t, const Tensor& model_out, int t, int t_prev,
                 const NoiseSchedule& schedule, Parameterization param) {
  if (t_prev != kStepToData && t_prev >= t) {
    throw std::invalid_argument("ddim_step: t_prev must be < t or kStepToData");
  }
  const X0Eps pred = to_x0_eps(model_out, x_t, t, schedule, param);
  return lincomb(schedule.sqrt_alpha_bar(t_prev), pred.x0_pred,
                 schedule.sqrt_one_minus_alpha_bar(t_prev), pred.eps_pred);
}

Tensor ddpm_step(const Tensor& x_t, const Tensor& model_out, int t,
                 const NoiseSchedule& schedule, Parameterization param, Rng& rng) {
  const X0Eps pred = to_x0_eps(model_out, x_t, t, schedule, param);
  PosteriorStats post = posterior(pred.x0_pred, x_t, t, schedule);
  if (post.variance == 0.0) return post.mean;
  const double sigma = std::sqrt(post.variance);
  for (double& v : post.mean.data) v += sigma * rng.normal();
  return post.mean;
}

Tensor sample(const ModelFn& model, Parameterization param, std::size_t data_dim,
              const NoiseSchedule& schedule, const SamplerConfig& config,
              int cond, std::size_t n, Rng& rng) {
  if (config.plan.steps.empty()) {
    throw std::invalid_argument("sample: empty timestep plan");
  }
  if (n == 0 || data_dim == 0) {
    throw std::invalid_argument("sample: n and data_dim must be positive");
  }
  if (config.guidance) {
    if (config.guidance->w < 0.0) throw std::invalid_argument("sample: guidance w must be >= 0");
    if (config.guidance->phi < 0.0 || config.guidance->phi > 1.0) {
      throw std::invalid_argument("sample: guidance phi must lie in [0, 1]");
    }
  }

  Tensor x({n, data_dim});
  for (double& v : x.data) v = rng.normal();

  std::vector<int> descending = config.plan.steps;
  std::sort(descending.begin(), descending.end(), std::greater<int>());

  for (std::size_t i = 0; i < descending.size(); ++i) {
    const int t = descending[i];
    const int t_prev = i + 1 < descending.size() ? descending[i + 1] : kStepToData;

    Tensor out = model(x, t, cond);
    if (config.guidance) {
      const Tensor out_neg = model(x, t, kNullClass);
      Tensor guided = apply_cfg(out, out_neg, config.guidance->w);
      if (config.guidance->phi > 0.0) {
        guided = rescale_cfg(guided, out, config.guidance->phi);
      }
      out = std::move(guided);
    }

    if (config.method == SamplerMethod::DDIM) {
      x = ddim_step(x, out, t, t_prev, schedule, param);
    } else {
      const X0Eps pred = to_x0_eps(out, x, t, schedule, param);
      PosteriorStats post = posterior_between(pred.x0_pred, x, t, t_prev, schedule);
      if (post.variance > 0.0) {
        const double sigma = std::sqrt(post.variance);
        for (double& v : post.mean.data) v += sigma * rng.normal();
      }
      x = std::move(post.mean);
    }
  }
  return x;
}

Tensor sample(const DenoiserModel& model, const NoiseSchedule& schedule,
              const SamplerConfig& config, int cond, std::size_t n, Rng& rng) {
  const ModelFn fn = [&model](const Tensor& x_t, int t, int c) {
    return model.forward(x_t, t, c);
  };
  return sample(fn, model.config().param, model.config().data_dim, schedule,
                config, cond, n, rng);
}

}  // namespace ztsnr
