#include "ztsnr/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "ztsnr/errors.hpp"

namespace ztsnr {

std::string parameterization_name(Parameterization p) {
  return p == Parameterization::Epsilon ? "epsilon" : "v";
}

Parameterization parse_parameterization(std::string_view name) {
  if (name == "epsilon" || name == "eps") return Parameterization::Epsilon;
  if (name == "v") return Parameterization::V;
  throw std::invalid_argument("unknown parameterization: " + std::string(name));
}

Tensor forward_diffuse(const Tensor& x0, const Tensor& eps, int t,
                       const NoiseSchedule& schedule) {
  require_same_shape(x0, eps, "forward_diffuse");
  return lincomb(schedule.sqrt_alpha_bar(t), x0,
                 schedule.sqrt_one_minus_alpha_bar(t), eps);
}

Tensor v_target(const Tensor& x0, const Tensor& eps, int t,
                const NoiseSchedule& schedule) {
  require_same_shape(x0, eps, "v_target");
  return lincomb(schedule.sqrt_alpha_bar(t), eps,
                 -schedule.sqrt_one_minus_alpha_bar(t), x0);
}

X0Eps to_x0_eps(const Tensor& model_out, const Tensor& x_t, int t,
                const NoiseSchedule& schedule, Parameterization param) {
  require_same_shape(model_out, x_t, "to_x0_eps");
  const double sa = schedule.sqrt_alpha_bar(t);
  const double s1 = schedule.sqrt_one_minus_alpha_bar(t);
  X0Eps out;
  if (param == Parameterization::V) {
    out.x0_pred = lincomb(sa, x_t, -s1, model_out);
    out.eps_pred = lincomb(s1, x_t, sa, model_out);
  } else {
    if (schedule.alpha_bar(t) == 0.0) {
      throw SingularParameterizationError(
          "epsilon parameterization is singular at alpha_bar = 0 (t = " +
          std::to_string(t) + ")");
    }
    out.x0_pred = lincomb(1.0 / sa, x_t, -s1 / sa, model_out);
    out.eps_pred = model_out;
  }
  return out;
}

double training_loss(const Tensor& model_out, const Tensor& x0, const Tensor& eps,
                     int t, const NoiseSchedule& schedule, Parameterization param,
                     const LossConfig& loss_cfg) {
  const double lambda = loss_cfg.lambda_t(t);
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("training_loss: lambda_t must be positive");
  }
  const Tensor target = param == Parameterization::V
                            ? v_target(x0, eps, t, schedule)
                            : eps;
  return lambda * mean_squared_error(model_out, target);
}

PosteriorStats posterior_between(const Tensor& x0_pred, const Tensor& x_t, int t,
                                 int t_prev, const NoiseSchedule& schedule) {
  require_same_shape(x0_pred, x_t, "posterior");
  if (t < 1 || t > schedule.T) {
    throw std::invalid_argument("posterior: timestep out of range");
  }
  if (t_prev < 0 || t_prev >= t) {
    throw std::invalid_argument("posterior: t_prev must satisfy 0 <= t_prev < t");
  }
  const double ab_t = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);
  // Effective one-step quantities for the jump t_prev -> t.
  const double alpha_eff = ab_t / ab_prev;
  const double beta_eff = 1.0 - alpha_eff;
  const double one_minus_ab_t = 1.0 - ab_t;

  const double coef_x0 = std::sqrt(ab_prev) * beta_eff / one_minus_ab_t;
  const double coef_xt = std::sqrt(alpha_eff) * (1.0 - ab_prev) / one_minus_ab_t;

  PosteriorStats st;
  st.mean = lincomb(coef_x0, x0_pred, coef_xt, x_t);
  st.variance = (1.0 - ab_prev) / one_minus_ab_t * beta_eff;
  return st;
}

PosteriorStats posterior(const Tensor& x0_pred, const Tensor& x_t, int t,
                         const NoiseSchedule& schedule) {
  return posterior_between(x0_pred, x_t, t, t - 1, schedule);
}

Tensor sample_noise(const std::vector<std::size_t>& shape, const NoiseMode& mode,
                    Rng& rng) {
  Tensor noise{shape};
  for (double& v : noise.data) v = rng.normal();
  if (mode.tag == NoiseMode::Tag::IID) return noise;

  if (mode.strength < 0.0) {
    throw std::invalid_argument("sample_noise: offset strength must be >= 0");
  }
  if (shape.size() < 2) {
    throw std::invalid_argument("sample_noise: offset noise needs a channel axis (rank >= 2)");
  }
  const std::size_t batch = shape[0];
  const std::size_t channels = shape.size() >= 3 ? shape[1] : 1;
  const std::size_t spatial = noise.size() / (batch * channels);
  std::size_t idx = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double delta = mode.strength * rng.normal();
      for (std::size_t s = 0; s < spatial; ++s) noise.data[idx++] += delta;
    }
  }
  return noise;
}

}  // namespace ztsnr
