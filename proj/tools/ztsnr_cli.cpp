// Command-line frontend: schedule inspection, sample-step plans, toy
// training, sampling, the brightness-bias experiment and the two
// ablation grids. All data outputs are deterministic for a fixed seed;
// errors leave a machine-readable JSON object on stderr.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ztsnr/errors.hpp"
#include "ztsnr/experiment.hpp"

namespace fs = std::filesystem;
using namespace ztsnr;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open file for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct SampleArgs {
  std::string checkpoint;
  std::string kind = "scaled-linear";
  int T = 1000;
  bool rescaled = false;
  std::string strategy = "trailing";
  int steps = 5;
  std::string method = "ddim";
  std::size_t n = 64;
  std::uint64_t seed = 1;
  int cond = kNullClass;
  double w = -1.0;  // < 0: guidance disabled
  double phi = 0.7;
  std::string out_dir = "out_sample";
  std::size_t dump = 8;
};

Checkpoint load_and_check(const std::string& path, const NoiseSchedule& schedule) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.schedule_hash != schedule_hash(schedule)) {
    std::cerr << "warning: checkpoint was trained against a different schedule "
                 "(hash mismatch); results may be meaningless\n";
  }
  if (ckpt.model.config().T != schedule.T) {
    throw std::invalid_argument("checkpoint T does not match the requested schedule");
  }
  return ckpt;
}

int cmd_inspect(const std::string& kind, int T, bool rescaled,
                const std::string& csv_path) {
  ScheduleConfig config{ScheduleKind::parse(kind), T, rescaled};
  if (!csv_path.empty()) {
    const NoiseSchedule schedule = build_schedule(config);
    const std::string label = rescaled ? config.kind.name() + "-rescaled"
                                       : config.kind.name();
    write_file(csv_path, schedule_csv(schedule, label));
  }
  std::cout << inspect_json(config) << "\n";
  return 0;
}

int cmd_timesteps(const std::string& strategy, int T, int S) {
  const TimestepPlan plan = select_timesteps(parse_strategy(strategy), T, S);
  nlohmann::json j = plan.steps;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              bool quiet) {
  const TrainRunConfig config = parse_train_run_config(read_file(config_path));
  const auto t0 = std::chrono::steady_clock::now();

  ProgressFn progress;
  if (!quiet) {
    progress = [&config](std::size_t it, double loss) {
      if (it % 200 == 0 || it == config.train.iterations) {
        std::cerr << "iter " << it << "/" << config.train.iterations
                  << " loss " << loss << "\n";
      }
    };
  }
  const TrainResult result = run_training(config, progress);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out_dir);
  const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
  save_checkpoint(result.model, schedule_hash(result.schedule), ckpt_path);
  write_file((fs::path(out_dir) / "loss_curve.csv").string(),
             loss_curve_csv(result.loss_curve));

  nlohmann::ordered_json report{
      {"report", "train"},
      {"version", 1},
      {"config", nlohmann::ordered_json::parse(train_run_config_to_json(config))},
      {"checkpoint", "model.ckpt"},
      {"schedule_hash", schedule_hash(result.schedule)},
      {"final_loss", result.loss_curve.back()},
      {"training_data",
       {{"mean", result.data_stats.mean}, {"std", result.data_stats.std}}},
      {"timing", {{"wall_clock_sec", wall}}},
  };
  write_file((fs::path(out_dir) / "report.json").string(), report.dump(2));
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_sample(const SampleArgs& args) {
  ScheduleConfig sched_cfg{ScheduleKind::parse(args.kind), args.T, args.rescaled};
  const NoiseSchedule schedule = build_schedule(sched_cfg);
  const Checkpoint ckpt = load_and_check(args.checkpoint, schedule);

  SamplerConfig sampler;
  sampler.method = parse_sampler_method(args.method);
  sampler.plan = select_timesteps(parse_strategy(args.strategy), args.T, args.steps);
  if (args.w >= 0.0) sampler.guidance = GuidanceConfig{args.w, args.phi};

  Rng rng(args.seed);
  const Tensor out = sample(ckpt.model, schedule, sampler, args.cond, args.n, rng);
  const BrightnessStats stats = brightness_stats(out);

  fs::create_directories(args.out_dir);
  if (args.dump > 0) {
    dump_samples_pgm(out, (fs::path(args.out_dir) / "samples").string(), "", args.dump);
  }

  const BrightnessSummary summary = summarize_brightness(stats);
  nlohmann::ordered_json j{
      {"report", "sample"},
      {"version", 1},
      {"checkpoint", args.checkpoint},
      {"schedule", {{"kind", sched_cfg.kind.name()}, {"T", args.T},
                    {"rescaled", args.rescaled}}},
      {"strategy", args.strategy},
      {"S", args.steps},
      {"method", args.method},
      {"n", args.n},
      {"seed", args.seed},
      {"cond", args.cond},
      {"guided", args.w >= 0.0},
      {"w", args.w >= 0.0 ? args.w : 0.0},
      {"phi", args.w >= 0.0 ? args.phi : 0.0},
      {"brightness",
       {{"mean", summary.mean},
        {"std", summary.std},
        {"frac_above_0.4", summary.frac_above},
        {"frac_below_-0.4", summary.frac_below},
        {"histogram", summary.histogram}}},
  };
  write_file((fs::path(args.out_dir) / "stats.json").string(), j.dump(2));
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_bias_experiment(const std::string& config_path, const std::string& out_dir,
                        bool quiet, bool dump) {
  const BiasExperimentConfig config =
      parse_bias_experiment_config(read_file(config_path));

  ProgressFn progress;
  std::size_t run_counter = 0;
  if (!quiet) {
    progress = [&](std::size_t it, double loss) {
      if (it == 1) ++run_counter;
      if (it % 500 == 0 || it == config.train.iterations) {
        std::cerr << "model " << run_counter << "/2 iter " << it << "/"
                  << config.train.iterations << " loss " << loss << "\n";
      }
    };
  }

  fs::create_directories(out_dir);
  const std::string dump_dir =
      dump ? (fs::path(out_dir) / "samples").string() : std::string();
  const BiasExperimentReport report =
      run_bias_experiment(config, progress, dump_dir);
  const std::string text = bias_report_to_json(report);
  write_file((fs::path(out_dir) / "report.json").string(), text);
  std::cout << text << "\n";
  return 0;
}

int cmd_ablate_steps(const SampleArgs& args, const std::string& strategies_csv,
                     const std::string& steps_csv, const std::string& out_dir,
                     bool dump) {
  ScheduleConfig sched_cfg{ScheduleKind::parse(args.kind), args.T, args.rescaled};
  const NoiseSchedule schedule = build_schedule(sched_cfg);
  const Checkpoint ckpt = load_and_check(args.checkpoint, schedule);

  std::vector<TimestepStrategy> strategies;
  for (const std::string& name : split_list(strategies_csv)) {
    strategies.push_back(parse_strategy(name));
  }
  std::vector<int> step_counts;
  for (const std::string& s : split_list(steps_csv)) step_counts.push_back(std::stoi(s));

  std::optional<GuidanceConfig> guidance;
  if (args.w >= 0.0) guidance = GuidanceConfig{args.w, args.phi};

  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  const std::string dump_dir =
      dump ? (fs::path(out_dir) / "samples").string() : std::string();
  const auto cells = ablate_steps(ckpt.model, schedule, strategies, step_counts,
                                  args.n, args.seed, args.cond, guidance, dump_dir);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string text = ablation_to_json(cells, wall);
  write_file((fs::path(out_dir) / "report.json").string(), text);
  std::cout << text << "\n";
  return 0;
}

int cmd_ablate_phi(const SampleArgs& args, const std::string& phis_csv,
                   const std::string& out_dir, bool dump) {
  ScheduleConfig sched_cfg{ScheduleKind::parse(args.kind), args.T, args.rescaled};
  const NoiseSchedule schedule = build_schedule(sched_cfg);
  const Checkpoint ckpt = load_and_check(args.checkpoint, schedule);

  std::vector<double> phis;
  for (const std::string& s : split_list(phis_csv)) phis.push_back(std::stod(s));

  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  const std::string dump_dir =
      dump ? (fs::path(out_dir) / "samples").string() : std::string();
  const auto cells =
      ablate_phi(ckpt.model, schedule, parse_strategy(args.strategy), args.steps,
                 args.w, phis, args.n, args.seed, args.cond, dump_dir);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string text = ablation_to_json(cells, wall);
  write_file((fs::path(out_dir) / "report.json").string(), text);
  std::cout << text << "\n";
  return 0;
}

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const SingularParameterizationError*>(&e)) {
    return "singular-parameterization";
  }
  if (dynamic_cast<const DegenerateInputError*>(&e)) return "degenerate-input";
  if (dynamic_cast<const TrainingDivergedError*>(&e)) return "training-diverged";
  if (dynamic_cast<const CheckpointFormatError*>(&e)) return "checkpoint-format";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid-argument";
  return "runtime";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion schedule diagnostics and the zero-terminal-SNR fixes"};
  app.require_subcommand(1);

  // inspect
  std::string kind = "scaled-linear";
  int T = 1000;
  bool rescaled = false;
  std::string csv_path;
  auto* inspect = app.add_subcommand("inspect", "schedule table and terminal stats");
  inspect->add_option("kind", kind, "linear | scaled-linear | cosine | cosine-noclip");
  inspect->add_option("T", T, "train timesteps");
  inspect->add_flag("--rescaled", rescaled, "apply the zero terminal SNR rescale");
  inspect->add_option("--csv", csv_path, "also write the full table as CSV");

  // timesteps
  std::string strategy = "trailing";
  int S = 10;
  auto* timesteps = app.add_subcommand("timesteps", "sample-step plan as JSON");
  timesteps->add_option("strategy", strategy, "leading | linspace | trailing");
  timesteps->add_option("T", T, "train timesteps");
  timesteps->add_option("S", S, "sample steps");

  // train
  std::string config_path;
  std::string out_dir = "out_train";
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train a toy denoiser from a JSON config");
  train->add_option("config", config_path, "JSON config file")->required();
  train->add_option("--out", out_dir, "output directory");
  train->add_flag("--quiet", quiet, "suppress progress logging");

  // sample
  SampleArgs sargs;
  auto* sampler = app.add_subcommand("sample", "sample from a trained checkpoint");
  sampler->add_option("--checkpoint", sargs.checkpoint)->required();
  sampler->add_option("--kind", sargs.kind);
  sampler->add_option("--T", sargs.T);
  sampler->add_flag("--rescaled", sargs.rescaled);
  sampler->add_option("--strategy", sargs.strategy);
  sampler->add_option("--steps", sargs.steps);
  sampler->add_option("--method", sargs.method, "ddim | ddpm");
  sampler->add_option("--n", sargs.n);
  sampler->add_option("--seed", sargs.seed);
  sampler->add_option("--cond", sargs.cond, "class label; -1 = unconditional");
  sampler->add_option("--w", sargs.w, "guidance weight; omit to disable guidance");
  sampler->add_option("--phi", sargs.phi, "guidance rescale factor");
  sampler->add_option("--out", sargs.out_dir);
  sampler->add_option("--dump", sargs.dump, "PGM dumps to write");

  // bias-experiment
  std::string bias_config;
  std::string bias_out = "out_bias";
  bool bias_quiet = false;
  bool bias_dump = false;
  auto* bias = app.add_subcommand(
      "bias-experiment", "train the four pipeline configurations and compare");
  bias->add_option("config", bias_config, "JSON config file")->required();
  bias->add_option("--out", bias_out, "output directory");
  bias->add_flag("--quiet", bias_quiet);
  bias->add_flag("--dump", bias_dump, "write PGM dumps per pipeline");

  // ablate-steps
  SampleArgs aargs;
  std::string strategies_csv = "leading,linspace,trailing";
  std::string steps_csv = "5,10,25,50";
  std::string ablate_out = "out_ablate_steps";
  bool ablate_dump = false;
  auto* asteps = app.add_subcommand("ablate-steps",
                                    "strategy x S grid on a trained checkpoint");
  asteps->add_option("--checkpoint", aargs.checkpoint)->required();
  asteps->add_option("--kind", aargs.kind);
  asteps->add_option("--T", aargs.T);
  asteps->add_flag("--rescaled", aargs.rescaled);
  asteps->add_option("--strategies", strategies_csv, "comma-separated");
  asteps->add_option("--steps", steps_csv, "comma-separated S values");
  asteps->add_option("--n", aargs.n);
  asteps->add_option("--seed", aargs.seed);
  asteps->add_option("--cond", aargs.cond);
  asteps->add_option("--w", aargs.w, "guidance weight; omit to disable");
  asteps->add_option("--phi", aargs.phi);
  asteps->add_option("--out", ablate_out);
  asteps->add_flag("--dump", ablate_dump);

  // ablate-phi
  SampleArgs pargs;
  pargs.w = 7.5;
  std::string phis_csv = "0,0.25,0.5,0.7,0.75,1";
  std::string phi_out = "out_ablate_phi";
  bool phi_dump = false;
  auto* aphi = app.add_subcommand("ablate-phi",
                                  "guidance rescale grid on a trained checkpoint");
  aphi->add_option("--checkpoint", pargs.checkpoint)->required();
  aphi->add_option("--kind", pargs.kind);
  aphi->add_option("--T", pargs.T);
  aphi->add_flag("--rescaled", pargs.rescaled);
  aphi->add_option("--strategy", pargs.strategy);
  aphi->add_option("--steps", pargs.steps);
  aphi->add_option("--w", pargs.w, "guidance weight");
  aphi->add_option("--phis", phis_csv, "comma-separated rescale factors");
  aphi->add_option("--n", pargs.n);
  aphi->add_option("--seed", pargs.seed);
  aphi->add_option("--cond", pargs.cond);
  aphi->add_option("--out", phi_out);
  aphi->add_flag("--dump", phi_dump);

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect->parsed()) return cmd_inspect(kind, T, rescaled, csv_path);
    if (timesteps->parsed()) return cmd_timesteps(strategy, T, S);
    if (train->parsed()) return cmd_train(config_path, out_dir, quiet);
    if (sampler->parsed()) return cmd_sample(sargs);
    if (bias->parsed()) {
      return cmd_bias_experiment(bias_config, bias_out, bias_quiet, bias_dump);
    }
    if (asteps->parsed()) {
      return cmd_ablate_steps(aargs, strategies_csv, steps_csv, ablate_out,
                              ablate_dump);
    }
    if (aphi->parsed()) return cmd_ablate_phi(pargs, phis_csv, phi_out, phi_dump);
  } catch (const std::exception& e) {
    const nlohmann::json err{{"error", {{"type", error_type(e)}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
