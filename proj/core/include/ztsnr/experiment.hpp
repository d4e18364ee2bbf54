#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ztsnr/config.hpp"
#include "ztsnr/dataset.hpp"
#include "ztsnr/denoiser.hpp"
#include "ztsnr/sampler.hpp"

namespace ztsnr {

struct TrainResult {
  DenoiserModel model;
  NoiseSchedule schedule;
  std::vector<double> loss_curve;
  BrightnessStats data_stats;
};

using ProgressFn = std::function<void(std::size_t iteration, double loss)>;

// Generates the dataset, trains a fresh model, returns it with the
// schedule it was trained against.
TrainResult run_training(const TrainRunConfig& config, const ProgressFn& progress = {});

struct BrightnessSummary {
  double mean = 0.0;
  double std = 0.0;
  double frac_above = 0.0;  // fraction of per-sample means > +0.4
  double frac_below = 0.0;  // fraction of per-sample means < -0.4
  std::vector<std::size_t> histogram;  // 41 bins over [-1, 1]
};

BrightnessSummary summarize_brightness(const BrightnessStats& stats);

// One of the four named pipeline configurations of the bias experiment.
struct PipelineRunReport {
  std::string name;         // "A".."D"
  std::string description;
  bool rescaled = false;
  Parameterization param = Parameterization::Epsilon;
  TimestepStrategy strategy = TimestepStrategy::Leading;
  double final_loss = 0.0;
  BrightnessSummary brightness;
};

struct BiasExperimentReport {
  BiasExperimentConfig config;
  BrightnessSummary training_data;
  std::vector<PipelineRunReport> pipelines;  // A, B, C, D
  double wall_clock_sec = 0.0;
};

// Trains the legacy (original schedule, epsilon) and fixed (rescaled,
// v) models once each on the same dataset and seed, then samples the
// four pipeline configurations:
//   A  original + epsilon + leading   (flawed)
//   B  rescaled + v + leading         (schedule fix only)
//   C  original + epsilon + trailing  (steps fix only)
//   D  rescaled + v + trailing        (all fixes)
// A/C share the legacy checkpoint and B/D the fixed one, since the
// pairs train identically. A non-empty dump_dir receives PGM dumps of
// the first few samples per pipeline.
BiasExperimentReport run_bias_experiment(const BiasExperimentConfig& config,
                                         const ProgressFn& progress = {},
                                         const std::string& dump_dir = {});

// Serialized report; wall clock lives in a separate "timing" object so
// the data payload is byte-stable across reruns.
std::string bias_report_to_json(const BiasExperimentReport& report);

struct AblationCell {
  TimestepStrategy strategy = TimestepStrategy::Trailing;
  int S = 0;
  double w = 0.0;
  double phi = 0.0;
  bool guided = false;
  BrightnessSummary brightness;
  double mean_sample_std = 0.0;  // mean over samples of within-sample std
};

// Grid over strategy x S on a trained model; unguided unless `guidance`
// is set.
std::vector<AblationCell> ablate_steps(const DenoiserModel& model,
                                       const NoiseSchedule& schedule,
                                       const std::vector<TimestepStrategy>& strategies,
                                       const std::vector<int>& step_counts,
                                       std::size_t n, std::uint64_t seed, int cond,
                                       const std::optional<GuidanceConfig>& guidance,
                                       const std::string& dump_dir = {});

// Grid over the guidance rescale factor at fixed w.
std::vector<AblationCell> ablate_phi(const DenoiserModel& model,
                                     const NoiseSchedule& schedule,
                                     TimestepStrategy strategy, int S, double w,
                                     const std::vector<double>& phi_values,
                                     std::size_t n, std::uint64_t seed, int cond,
                                     const std::string& dump_dir = {});

// PGM dumps of the first `count` rows; dim is rendered square when it
// is a perfect square, as a single row otherwise.
void dump_samples_pgm(const Tensor& samples, const std::string& directory,
                      const std::string& prefix, std::size_t count);

std::string ablation_to_json(const std::vector<AblationCell>& cells,
                             double wall_clock_sec);

// Full schedule table as CSV: kind,T,t,beta,alpha_bar,sqrt_alpha_bar,snr.
std::string schedule_csv(const NoiseSchedule& schedule, const std::string& kind_name);

// Terminal statistics plus identity as JSON.
std::string inspect_json(const ScheduleConfig& config);

std::string loss_curve_csv(const std::vector<double>& losses);

}  // namespace ztsnr
