#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include <json.hpp>

#include "ztsnr/experiment.hpp"

using namespace ztsnr;

namespace {

const char* kTinyTrainConfig = R"json({
  "schedule": {"kind": "scaled-linear", "T": 100, "rescaled": true},
  "parameterization": "v",
  "dataset": {"dim": 8, "brightness": {"type": "bimodal", "b1": -0.8, "b2": 0.8},
              "texture_std": 0.1, "n_classes": 2, "seed": 5},
  "dataset_size": 64,
  "model": {"hidden_dim": 16, "t_embed_dim": 8, "class_embed_dim": 4},
  "train": {"lr": 0.003, "batch_size": 8, "iterations": 40, "seed": 9,
            "uncond_prob": 0.2}
})json";

}  // namespace

TEST_CASE("train config parsing applies defaults and validation") {
  const TrainRunConfig cfg = parse_train_run_config(kTinyTrainConfig);
  CHECK(cfg.schedule.kind.tag == ScheduleKind::Tag::ScaledLinear);
  CHECK(cfg.schedule.rescaled);
  CHECK(cfg.param == Parameterization::V);
  CHECK(cfg.dataset.dim == 8);
  CHECK(cfg.train.iterations == 40);
  CHECK(cfg.train.adam.beta1 == 0.9);  // default spelled out
  CHECK(cfg.train.loss.lambda_t(17) == 1.0);

  // Round trip through JSON preserves the resolved configuration.
  const TrainRunConfig again = parse_train_run_config(train_run_config_to_json(cfg));
  CHECK(train_run_config_to_json(again) == train_run_config_to_json(cfg));

  CHECK_THROWS_AS(parse_train_run_config("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_train_run_config(R"({"schedule": {"kind": "banana"}})"),
                  std::invalid_argument);

  // The flawed legacy pipeline stays runnable; epsilon with a rescaled
  // schedule is refused.
  CHECK_NOTHROW(parse_train_run_config(
      R"({"schedule": {"kind": "scaled-linear", "rescaled": false},
          "parameterization": "epsilon"})"));
  CHECK_THROWS_AS(parse_train_run_config(
                      R"({"schedule": {"kind": "scaled-linear", "rescaled": true},
                          "parameterization": "epsilon"})"),
                  std::invalid_argument);
}

TEST_CASE("tiny training run learns and is deterministic") {
  const TrainRunConfig cfg = parse_train_run_config(kTinyTrainConfig);
  const TrainResult a = run_training(cfg);
  const TrainResult b = run_training(cfg);
  REQUIRE(a.loss_curve.size() == 40);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(std::isfinite(a.loss_curve.back()));
  CHECK(a.schedule.alpha_bar(100) == 0.0);  // rescaled
  CHECK(a.data_stats.std == doctest::Approx(0.8).epsilon(0.1));
}

TEST_CASE("inspect json carries terminal stats") {
  ScheduleConfig cfg;
  cfg.kind = ScheduleKind::scaled_linear();
  cfg.T = 1000;
  cfg.rescaled = false;
  const auto j = nlohmann::json::parse(inspect_json(cfg));
  CHECK(j.at("kind") == "scaled-linear");
  CHECK(std::abs(j.at("terminal").at("snr").get<double>() - 0.004682) <= 5e-7);
  CHECK(std::abs(j.at("terminal").at("sqrt_alpha_bar").get<double>() - 0.068265) <= 5e-7);

  cfg.rescaled = true;
  const auto r = nlohmann::json::parse(inspect_json(cfg));
  CHECK(r.at("terminal").at("snr").get<double>() == 0.0);
  CHECK(r.at("terminal").at("sqrt_one_minus_alpha_bar").get<double>() == 1.0);
  CHECK(r.contains("original_terminal"));
}

TEST_CASE("schedule csv has the documented columns") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear(), 10);
  const std::string csv = schedule_csv(s, "linear");
  CHECK(csv.rfind("kind,T,t,beta,alpha_bar,sqrt_alpha_bar,snr\n", 0) == 0);
  // Header plus one row per timestep.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  CHECK(csv.find("linear,10,1,") != std::string::npos);
}

TEST_CASE("bias experiment report schema on a tiny budget") {
  BiasExperimentConfig cfg;
  cfg.schedule.kind = ScheduleKind::scaled_linear();
  cfg.schedule.T = 50;
  cfg.dataset.dim = 8;
  cfg.dataset.brightness = BrightnessDist::bimodal(-0.8, 0.8);
  cfg.dataset.texture_std = 0.1;
  cfg.dataset.n_classes = 2;
  cfg.dataset.seed = 3;
  cfg.dataset_size = 32;
  cfg.model.hidden_dim = 16;
  cfg.model.t_embed_dim = 8;
  cfg.model.class_embed_dim = 4;
  cfg.train.batch_size = 8;
  cfg.train.iterations = 10;
  cfg.sample_steps = 3;
  cfg.n_samples = 16;

  const BiasExperimentReport report = run_bias_experiment(cfg);
  REQUIRE(report.pipelines.size() == 4);
  CHECK(report.pipelines[0].name == "A");
  CHECK(report.pipelines[3].name == "D");
  CHECK_FALSE(report.pipelines[0].rescaled);
  CHECK(report.pipelines[3].rescaled);
  CHECK(report.pipelines[3].param == Parameterization::V);

  const auto j = nlohmann::json::parse(bias_report_to_json(report));
  CHECK(j.at("report") == "bias-experiment");
  CHECK(j.at("pipelines").size() == 4);
  for (const auto& p : j.at("pipelines")) {
    CHECK(p.contains("brightness"));
    CHECK(p.at("brightness").contains("histogram"));
    CHECK(p.at("brightness").at("histogram").size() == 41);
  }
  CHECK(j.at("config").at("n_samples") == 16);
  CHECK(j.contains("timing"));

  // The report body is deterministic: a rerun serializes identically
  // once the timing object is dropped.
  const BiasExperimentReport again = run_bias_experiment(cfg);
  auto ja = nlohmann::json::parse(bias_report_to_json(report));
  auto jb = nlohmann::json::parse(bias_report_to_json(again));
  ja.erase("timing");
  jb.erase("timing");
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("ablation grids") {
  // Quick untrained-model grid; exercises plans, guidance and reporting.
  TrainRunConfig cfg = parse_train_run_config(kTinyTrainConfig);
  cfg.train.iterations = 5;
  const TrainResult run = run_training(cfg);

  const auto cells = ablate_steps(run.model, run.schedule,
                                  {TimestepStrategy::Leading, TimestepStrategy::Trailing},
                                  {2, 4}, 8, 11, kNullClass, std::nullopt);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].strategy == TimestepStrategy::Leading);
  CHECK(cells[3].S == 4);

  const auto phis = ablate_phi(run.model, run.schedule, TimestepStrategy::Trailing, 2,
                               7.5, {0.0, 0.7}, 8, 11, 0);
  REQUIRE(phis.size() == 2);
  CHECK(phis[0].phi == 0.0);
  CHECK(phis[1].guided);

  CHECK_THROWS_AS(ablate_phi(run.model, run.schedule, TimestepStrategy::Trailing, 2,
                             7.5, {}, 8, 11, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(ablate_steps(run.model, run.schedule, {}, {2}, 8, 11, kNullClass,
                               std::nullopt),
                  std::invalid_argument);

  const auto j = nlohmann::json::parse(ablation_to_json(phis, 0.5));
  CHECK(j.at("cells").size() == 2);
}
