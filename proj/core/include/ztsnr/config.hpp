#pragma once

#include <cstdint>
#include <string>

#include "ztsnr/dataset.hpp"
#include "ztsnr/denoiser.hpp"
#include "ztsnr/sampler.hpp"
#include "ztsnr/schedule.hpp"

namespace ztsnr {

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::scaled_linear();
  int T = 1000;
  bool rescaled = false;
};

// Builds the (possibly rescaled) schedule.
NoiseSchedule build_schedule(const ScheduleConfig& config);

struct ModelDims {
  std::size_t hidden_dim = 256;
  std::size_t t_embed_dim = 32;
  std::size_t class_embed_dim = 16;
};

// Everything one training run needs. The denoiser's data_dim and class
// count come from the dataset spec, T from the schedule.
struct TrainRunConfig {
  ScheduleConfig schedule;
  Parameterization param = Parameterization::V;
  DatasetSpec dataset;
  std::size_t dataset_size = 4096;
  ModelDims model;
  TrainConfig train;
  double lambda = 1.0;  // constant per-timestep loss weight
};

// Throws std::invalid_argument on malformed JSON, unknown enum values,
// or an epsilon parameterization paired with a rescaled schedule (the
// conversion is singular at t = T).
TrainRunConfig parse_train_run_config(const std::string& json_text);
std::string train_run_config_to_json(const TrainRunConfig& config);

DenoiserConfig denoiser_config(const TrainRunConfig& config);

struct BiasExperimentConfig {
  ScheduleConfig schedule;  // rescaled flag ignored; fixed per pipeline config
  DatasetSpec dataset;
  std::size_t dataset_size = 4096;
  ModelDims model;
  TrainConfig train;
  double lambda = 1.0;
  SamplerMethod method = SamplerMethod::DDIM;
  int sample_steps = 5;
  std::size_t n_samples = 512;
  std::uint64_t sample_seed = 1000;
};

BiasExperimentConfig parse_bias_experiment_config(const std::string& json_text);
std::string bias_experiment_config_to_json(const BiasExperimentConfig& config);

}  // namespace ztsnr
