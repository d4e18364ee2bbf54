#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ztsnr/diffusion.hpp"
#include "ztsnr/rng.hpp"
#include "ztsnr/tensor.hpp"

namespace ztsnr {

struct DenoiserConfig {
  std::size_t data_dim = 64;
  std::size_t hidden_dim = 256;
  std::size_t t_embed_dim = 32;      // even, >= 2
  std::size_t class_embed_dim = 16;
  int n_classes = 2;                 // plus one reserved null class
  int T = 1000;
  Parameterization param = Parameterization::V;
};

// Two-hidden-layer SiLU MLP over [x_t, sinusoidal t-embedding, class
// embedding], predicting eps or v in the data dimension. The output
// layer is zero-initialized so the initial prediction is 0. Gradients
// are analytic.
class DenoiserModel {
 public:
  struct Params {
    std::vector<double> w1, b1;          // [hidden, input], [hidden]
    std::vector<double> w2, b2;          // [hidden, hidden], [hidden]
    std::vector<double> w3, b3;          // [data, hidden], [data]
    std::vector<double> class_embed;     // [n_classes + 1, class_embed_dim]

    std::array<std::vector<double>*, 7> blocks();
    std::array<const std::vector<double>*, 7> blocks() const;
    static std::array<const char*, 7> block_names();
  };

  DenoiserModel(const DenoiserConfig& config, Rng& init_rng);

  const DenoiserConfig& config() const { return config_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  std::size_t input_dim() const;
  std::size_t n_parameters() const;

  // Batched prediction: x_t is [batch, data_dim] (or rank-1 [data_dim]),
  // with one timestep and conditioning label per row. cond = kNullClass
  // selects the unconditional branch.
  Tensor forward(const Tensor& x_t, std::span<const int> ts,
                 std::span<const int> conds) const;
  Tensor forward(const Tensor& x_t, int t, int cond) const;

  // Gradients of sum(forward .* grad_out) with respect to every
  // parameter block.
  Params backward(const Tensor& x_t, std::span<const int> ts,
                  std::span<const int> conds, const Tensor& grad_out) const;
  Params backward(const Tensor& x_t, int t, int cond, const Tensor& grad_out) const;

  // Zero-valued gradient/optimizer-state buffers shaped like params().
  Params zero_params_like() const;

  static DenoiserModel with_zero_params(const DenoiserConfig& config);

 private:
  struct Activations {
    std::size_t batch = 0;
    std::vector<double> input;   // [batch, input_dim]
    std::vector<double> z1, a1;  // [batch, hidden]
    std::vector<double> z2, a2;  // [batch, hidden]
    std::vector<int> conds;
  };

  Activations forward_cached(const Tensor& x_t, std::span<const int> ts,
                             std::span<const int> conds, Tensor& out) const;
  Params backward_from(const Activations& acts, const Tensor& grad_out) const;
  std::size_t class_row(int cond) const;

  DenoiserConfig config_;
  Params params_;
  std::vector<double> t_embed_freqs_;

  friend double train_step(DenoiserModel&, class AdamOptimizer&, const Tensor&,
                           std::span<const int>, const NoiseSchedule&,
                           const struct TrainConfig&, Rng&);
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First-order adaptive-moment optimizer with bias correction.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const DenoiserModel& model, AdamConfig config = {});

  void update(DenoiserModel& model, const DenoiserModel::Params& grads);

  const AdamConfig& config() const { return config_; }
  long step_count() const { return step_; }

 private:
  AdamConfig config_;
  long step_ = 0;
  DenoiserModel::Params m_, v_;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t iterations = 3000;
  std::uint64_t seed = 1;
  NoiseMode noise = NoiseMode::iid();
  LossConfig loss;
  double uncond_prob = 0.1;  // label-dropout probability for the null branch
};

// One assembled training minibatch: noised inputs, per-row timesteps
// and (possibly dropped-out) labels, regression targets, loss weights.
struct TrainBatch {
  Tensor x_t;
  std::vector<int> ts;
  std::vector<int> conds;
  Tensor targets;
  std::vector<double> weights;
};

// Samples timesteps, labels and noise for one step. Exposed so tests
// can evaluate the loss of a substitute model.
TrainBatch make_train_batch(const Tensor& x0_batch, std::span<const int> labels,
                            const NoiseSchedule& schedule, const TrainConfig& config,
                            Parameterization param, Rng& rng);

// Mean over rows of weight_b * mse(out_b, target_b).
double weighted_batch_loss(const Tensor& model_out, const TrainBatch& batch);

// Runs one optimizer step on a minibatch; returns the loss. Throws
// TrainingDivergedError if the loss is not finite.
double train_step(DenoiserModel& model, AdamOptimizer& optimizer,
                  const Tensor& x0_batch, std::span<const int> labels,
                  const NoiseSchedule& schedule, const TrainConfig& config,
                  Rng& rng);

// Checkpoint file: magic, version, parameterization tag, schedule hash
// and shape header followed by little-endian float64 parameter blocks.
void save_checkpoint(const DenoiserModel& model, std::uint64_t schedule_hash,
                     const std::string& path);

struct Checkpoint {
  DenoiserModel model;
  std::uint64_t schedule_hash = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace ztsnr
