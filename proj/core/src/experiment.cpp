#include "ztsnr/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace ztsnr {

namespace {

using json = nlohmann::ordered_json;

json summary_to_json(const BrightnessSummary& s) {
  return json{{"mean", s.mean},
              {"std", s.std},
              {"frac_above_0.4", s.frac_above},
              {"frac_below_-0.4", s.frac_below},
              {"histogram", s.histogram}};
}

Tensor gather_batch(const Dataset& data, std::vector<int>& labels_out,
                    std::size_t batch_size, Rng& rng) {
  const std::size_t dim = data.samples.sample_size();
  Tensor batch({batch_size, dim});
  labels_out.resize(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const auto idx = rng.uniform_int(data.samples.batch());
    std::copy(data.samples.sample(idx), data.samples.sample(idx) + dim,
              batch.sample(b));
    labels_out[b] = data.labels[idx];
  }
  return batch;
}

BrightnessSummary sample_and_summarize(const DenoiserModel& model,
                                       const NoiseSchedule& schedule,
                                       const SamplerConfig& config, int cond,
                                       std::size_t n, Rng& rng,
                                       double* mean_sample_std = nullptr,
                                       const std::string& dump_dir = {},
                                       const std::string& dump_prefix = {}) {
  const Tensor out = sample(model, schedule, config, cond, n, rng);
  if (mean_sample_std) {
    double acc = 0.0;
    for (std::size_t b = 0; b < out.batch(); ++b) acc += sample_std(out, b);
    *mean_sample_std = acc / static_cast<double>(out.batch());
  }
  if (!dump_dir.empty()) dump_samples_pgm(out, dump_dir, dump_prefix, 8);
  return summarize_brightness(brightness_stats(out));
}

}  // namespace

void dump_samples_pgm(const Tensor& samples, const std::string& directory,
                      const std::string& prefix, std::size_t count) {
  std::filesystem::create_directories(directory);
  const std::size_t dim = samples.sample_size();
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(dim))));
  const std::size_t width = side * side == dim ? side : dim;
  const std::size_t height = side * side == dim ? side : 1;
  const std::size_t limit = std::min(count, samples.batch());
  char name[64];
  for (std::size_t i = 0; i < limit; ++i) {
    std::snprintf(name, sizeof(name), "%s%03zu.pgm", prefix.c_str(), i);
    write_pgm((std::filesystem::path(directory) / name).string(), samples.sample(i),
              width, height);
  }
}

BrightnessSummary summarize_brightness(const BrightnessStats& stats) {
  BrightnessSummary s;
  s.mean = stats.mean;
  s.std = stats.std;
  s.histogram.assign(stats.histogram.begin(), stats.histogram.end());
  std::size_t above = 0, below = 0;
  for (double m : stats.per_sample_means) {
    if (m > 0.4) ++above;
    if (m < -0.4) ++below;
  }
  const double n = static_cast<double>(stats.per_sample_means.size());
  s.frac_above = above / n;
  s.frac_below = below / n;
  return s;
}

TrainResult run_training(const TrainRunConfig& config, const ProgressFn& progress) {
  NoiseSchedule schedule = build_schedule(config.schedule);

  Rng data_rng(config.dataset.seed);
  const Dataset data = generate(config.dataset, config.dataset_size, data_rng);

  Rng init_rng = Rng(config.train.seed).fork(0x1717);
  DenoiserModel model(denoiser_config(config), init_rng);
  AdamOptimizer optimizer(model, config.train.adam);

  Rng train_rng = Rng(config.train.seed).fork(0x7A17);
  std::vector<double> losses;
  losses.reserve(config.train.iterations);
  std::vector<int> labels;
  for (std::size_t it = 1; it <= config.train.iterations; ++it) {
    const Tensor batch = gather_batch(data, labels, config.train.batch_size, train_rng);
    const double loss =
        train_step(model, optimizer, batch, labels, schedule, config.train, train_rng);
    losses.push_back(loss);
    if (progress) progress(it, loss);
  }

  TrainResult result{std::move(model), std::move(schedule), std::move(losses),
                     brightness_stats(data.samples)};
  return result;
}

BiasExperimentReport run_bias_experiment(const BiasExperimentConfig& config,
                                         const ProgressFn& progress,
                                         const std::string& dump_dir) {
  const auto t0 = std::chrono::steady_clock::now();

  TrainRunConfig legacy;
  legacy.schedule = config.schedule;
  legacy.schedule.rescaled = false;
  legacy.param = Parameterization::Epsilon;
  legacy.dataset = config.dataset;
  legacy.dataset_size = config.dataset_size;
  legacy.model = config.model;
  legacy.train = config.train;
  legacy.lambda = config.lambda;
  legacy.train.loss.lambda_t = [v = config.lambda](int) { return v; };

  TrainRunConfig fixed = legacy;
  fixed.schedule.rescaled = true;
  fixed.param = Parameterization::V;

  const TrainResult legacy_run = run_training(legacy, progress);
  const TrainResult fixed_run = run_training(fixed, progress);

  BiasExperimentReport report;
  report.config = config;
  report.training_data = summarize_brightness(legacy_run.data_stats);

  struct PipelineDef {
    const char* name;
    const char* description;
    const TrainResult* run;
    bool rescaled;
    Parameterization param;
    TimestepStrategy strategy;
  };
  const PipelineDef defs[] = {
      {"A", "original schedule + epsilon + leading (flawed)", &legacy_run, false,
       Parameterization::Epsilon, TimestepStrategy::Leading},
      {"B", "rescaled schedule + v + leading (schedule fix only)", &fixed_run, true,
       Parameterization::V, TimestepStrategy::Leading},
      {"C", "original schedule + epsilon + trailing (steps fix only)", &legacy_run,
       false, Parameterization::Epsilon, TimestepStrategy::Trailing},
      {"D", "rescaled schedule + v + trailing (all fixes)", &fixed_run, true,
       Parameterization::V, TimestepStrategy::Trailing},
  };

  for (std::size_t i = 0; i < 4; ++i) {
    const PipelineDef& def = defs[i];
    SamplerConfig sampler;
    sampler.method = config.method;
    sampler.plan = select_timesteps(def.strategy, config.schedule.T, config.sample_steps);

    Rng rng = Rng(config.sample_seed).fork(i);
    PipelineRunReport run;
    run.name = def.name;
    run.description = def.description;
    run.rescaled = def.rescaled;
    run.param = def.param;
    run.strategy = def.strategy;
    run.final_loss = def.run->loss_curve.empty() ? 0.0 : def.run->loss_curve.back();
    run.brightness = sample_and_summarize(def.run->model, def.run->schedule, sampler,
                                          kNullClass, config.n_samples, rng, nullptr,
                                          dump_dir, std::string(def.name) + "_");
    report.pipelines.push_back(std::move(run));
  }

  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string bias_report_to_json(const BiasExperimentReport& report) {
  json runs = json::array();
  for (const PipelineRunReport& run : report.pipelines) {
    runs.push_back(json{{"name", run.name},
                        {"description", run.description},
                        {"rescaled", run.rescaled},
                        {"parameterization", parameterization_name(run.param)},
                        {"strategy", strategy_name(run.strategy)},
                        {"final_loss", run.final_loss},
                        {"brightness", summary_to_json(run.brightness)}});
  }
  const json j{
      {"report", "bias-experiment"},
      {"version", 1},
      {"config", json::parse(bias_experiment_config_to_json(report.config))},
      {"training_data", summary_to_json(report.training_data)},
      {"pipelines", runs},
      {"timing", json{{"wall_clock_sec", report.wall_clock_sec}}},
  };
  return j.dump(2);
}

std::vector<AblationCell> ablate_steps(const DenoiserModel& model,
                                       const NoiseSchedule& schedule,
                                       const std::vector<TimestepStrategy>& strategies,
                                       const std::vector<int>& step_counts,
                                       std::size_t n, std::uint64_t seed, int cond,
                                       const std::optional<GuidanceConfig>& guidance,
                                       const std::string& dump_dir) {
  if (strategies.empty() || step_counts.empty()) {
    throw std::invalid_argument("ablate_steps: empty strategy or step list");
  }
  std::vector<AblationCell> cells;
  std::uint64_t stream = 0;
  char prefix[64];
  for (const TimestepStrategy strategy : strategies) {
    for (const int S : step_counts) {
      SamplerConfig config;
      config.plan = select_timesteps(strategy, schedule.T, S);
      config.guidance = guidance;
      AblationCell cell;
      cell.strategy = strategy;
      cell.S = S;
      cell.guided = guidance.has_value();
      cell.w = guidance ? guidance->w : 0.0;
      cell.phi = guidance ? guidance->phi : 0.0;
      Rng rng = Rng(seed).fork(stream++);
      std::snprintf(prefix, sizeof(prefix), "%s_S%d_", strategy_name(strategy).c_str(), S);
      cell.brightness = sample_and_summarize(model, schedule, config, cond, n, rng,
                                             &cell.mean_sample_std, dump_dir, prefix);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::vector<AblationCell> ablate_phi(const DenoiserModel& model,
                                     const NoiseSchedule& schedule,
                                     TimestepStrategy strategy, int S, double w,
                                     const std::vector<double>& phi_values,
                                     std::size_t n, std::uint64_t seed, int cond,
                                     const std::string& dump_dir) {
  if (phi_values.empty()) {
    throw std::invalid_argument("ablate_phi: empty phi list");
  }
  std::vector<AblationCell> cells;
  std::uint64_t stream = 0;
  char prefix[64];
  for (const double phi : phi_values) {
    SamplerConfig config;
    config.plan = select_timesteps(strategy, schedule.T, S);
    config.guidance = GuidanceConfig{w, phi};
    AblationCell cell;
    cell.strategy = strategy;
    cell.S = S;
    cell.guided = true;
    cell.w = w;
    cell.phi = phi;
    Rng rng = Rng(seed).fork(stream++);
    std::snprintf(prefix, sizeof(prefix), "phi%.2f_", phi);
    cell.brightness = sample_and_summarize(model, schedule, config, cond, n, rng,
                                           &cell.mean_sample_std, dump_dir, prefix);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::string ablation_to_json(const std::vector<AblationCell>& cells,
                             double wall_clock_sec) {
  json arr = json::array();
  for (const AblationCell& cell : cells) {
    arr.push_back(json{{"strategy", strategy_name(cell.strategy)},
                       {"S", cell.S},
                       {"guided", cell.guided},
                       {"w", cell.w},
                       {"phi", cell.phi},
                       {"brightness", summary_to_json(cell.brightness)},
                       {"mean_sample_std", cell.mean_sample_std}});
  }
  const json j{{"report", "ablation"},
               {"version", 1},
               {"cells", arr},
               {"timing", json{{"wall_clock_sec", wall_clock_sec}}}};
  return j.dump(2);
}

std::string schedule_csv(const NoiseSchedule& schedule, const std::string& kind_name) {
  std::string out = "kind,T,t,beta,alpha_bar,sqrt_alpha_bar,snr\n";
  char line[256];
  for (int t = 1; t <= schedule.T; ++t) {
    std::snprintf(line, sizeof(line), "%s,%d,%d,%.17g,%.17g,%.17g,%.17g\n",
                  kind_name.c_str(), schedule.T, t, schedule.beta(t),
                  schedule.alpha_bar(t), schedule.sqrt_alpha_bar(t),
                  snr(schedule, t));
    out += line;
  }
  return out;
}

std::string inspect_json(const ScheduleConfig& config) {
  const NoiseSchedule base = make_schedule(config.kind, config.T);
  const NoiseSchedule* active = &base;
  NoiseSchedule rescaled;
  if (config.rescaled) {
    rescaled = rescale_zero_terminal_snr(base);
    active = &rescaled;
  }

  auto terminal_json = [](const NoiseSchedule& s) {
    const TerminalStats st = terminal_stats(s);
    return json{{"snr", st.snr_T},
                {"sqrt_alpha_bar", st.sqrt_alpha_bar_T},
                {"sqrt_one_minus_alpha_bar", st.sqrt_one_minus_alpha_bar_T}};
  };

  json j{{"kind", config.kind.name()},
         {"T", config.T},
         {"rescaled", config.rescaled},
         {"terminal", terminal_json(*active)}};
  if (config.rescaled) j["original_terminal"] = terminal_json(base);
  j["schedule_hash"] = schedule_hash(*active);
  return j.dump(2);
}

std::string loss_curve_csv(const std::vector<double>& losses) {
  std::string out = "step,loss\n";
  char line[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g\n", i + 1, losses[i]);
    out += line;
  }
  return out;
}

}  // namespace ztsnr
