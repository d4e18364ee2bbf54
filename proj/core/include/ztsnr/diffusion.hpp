#pragma once

#include <functional>

#include "ztsnr/rng.hpp"
#include "ztsnr/schedule.hpp"
#include "ztsnr/tensor.hpp"

namespace ztsnr {

enum class Parameterization { Epsilon, V };

// Unconditional / negative-branch class label.
inline constexpr int kNullClass = -1;

std::string parameterization_name(Parameterization p);
Parameterization parse_parameterization(std::string_view name);

// Per-timestep loss weight; defaults to the constant 1.
struct LossConfig {
  std::function<double(int)> lambda_t = [](int) { return 1.0; };
};

// Training-noise distribution. Offset noise adds a single N(0,1) draw,
// scaled by `strength`, to every element of a (sample, channel) slab;
// rank-2 tensors are treated as single-channel.
struct NoiseMode {
  enum class Tag { IID, Offset };
  Tag tag = Tag::IID;
  double strength = 0.1;  // Offset only

  static NoiseMode iid() { return {Tag::IID, 0.0}; }
  static NoiseMode offset(double strength = 0.1) { return {Tag::Offset, strength}; }
};

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps
Tensor forward_diffuse(const Tensor& x0, const Tensor& eps, int t,
                       const NoiseSchedule& schedule);

// v_t = sqrt(alpha_bar_t) eps - sqrt(1 - alpha_bar_t) x0
Tensor v_target(const Tensor& x0, const Tensor& eps, int t,
                const NoiseSchedule& schedule);

struct X0Eps {
  Tensor x0_pred;
  Tensor eps_pred;
};

// Inverts the model output back to (x0, eps) predictions. For the
// epsilon parameterization this divides by sqrt(alpha_bar_t) and throws
// SingularParameterizationError when alpha_bar_t = 0.
X0Eps to_x0_eps(const Tensor& model_out, const Tensor& x_t, int t,
                const NoiseSchedule& schedule, Parameterization param);

// lambda_t(t) times the mean squared error between the model output and
// the parameterization's target (v for V, eps for Epsilon). The
// reduction is the mean over all elements.
double training_loss(const Tensor& model_out, const Tensor& x0, const Tensor& eps,
                     int t, const NoiseSchedule& schedule, Parameterization param,
                     const LossConfig& loss_cfg);

struct PosteriorStats {
  Tensor mean;
  double variance = 0.0;
};

// Gaussian reverse-step posterior q(x_{t-1} | x_t, x0), written in the
// x0-parameterized form which stays finite at alpha_t = 0. t = 1 uses
// the alpha_bar_0 := 1 convention and returns {x0_pred, 0}.
PosteriorStats posterior(const Tensor& x0_pred, const Tensor& x_t, int t,
                         const NoiseSchedule& schedule);

// Posterior for a non-adjacent jump t -> t_prev (t_prev = 0 targets the
// data). Exact for t_prev = t-1; for sparser plans it substitutes
// alpha_bar_{t_prev} for alpha_bar_{t-1}, an approximation.
PosteriorStats posterior_between(const Tensor& x0_pred, const Tensor& x_t, int t,
                                 int t_prev, const NoiseSchedule& schedule);

// Draws training noise of the given shape. Offset mode requires a
// batched tensor (rank >= 2); the channel axis is axis 1 for rank >= 3
// and the whole sample for rank 2.
Tensor sample_noise(const std::vector<std::size_t>& shape, const NoiseMode& mode,
                    Rng& rng);

}  // namespace ztsnr
