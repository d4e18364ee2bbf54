#include "ztsnr/config.hpp"

#include <stdexcept>

#include <json.hpp>

namespace ztsnr {

namespace {

using json = nlohmann::ordered_json;

json parse_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw std::invalid_argument(std::string(what) + ": malformed JSON");
  }
  return j;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

ScheduleConfig schedule_from_json(const json& j) {
  ScheduleConfig c;
  if (j.contains("kind")) c.kind = ScheduleKind::parse(j.at("kind").get<std::string>());
  c.T = get_or(j, "T", c.T);
  c.rescaled = get_or(j, "rescaled", c.rescaled);
  return c;
}

json schedule_to_json(const ScheduleConfig& c) {
  return json{{"kind", c.kind.name()}, {"T", c.T}, {"rescaled", c.rescaled}};
}

BrightnessDist brightness_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "uniform") {
    return BrightnessDist::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  }
  if (type == "bimodal") {
    return BrightnessDist::bimodal(j.at("b1").get<double>(), j.at("b2").get<double>(),
                                   get_or(j, "p", 0.5));
  }
  if (type == "constant") {
    return BrightnessDist::constant(j.at("b").get<double>());
  }
  throw std::invalid_argument("config: unknown brightness type: " + type);
}

json brightness_to_json(const BrightnessDist& d) {
  switch (d.tag) {
    case BrightnessDist::Tag::Uniform:
      return json{{"type", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    case BrightnessDist::Tag::Bimodal:
      return json{{"type", "bimodal"}, {"b1", d.b1}, {"b2", d.b2}, {"p", d.p}};
    case BrightnessDist::Tag::Constant:
      return json{{"type", "constant"}, {"b", d.b}};
  }
  return json{};
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec s;
  s.dim = get_or<std::size_t>(j, "dim", s.dim);
  if (j.contains("brightness")) s.brightness = brightness_from_json(j.at("brightness"));
  s.texture_std = get_or(j, "texture_std", s.texture_std);
  s.n_classes = get_or(j, "n_classes", s.n_classes);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  return s;
}

json dataset_to_json(const DatasetSpec& s) {
  return json{{"dim", s.dim},
              {"brightness", brightness_to_json(s.brightness)},
              {"texture_std", s.texture_std},
              {"n_classes", s.n_classes},
              {"seed", s.seed}};
}

ModelDims model_from_json(const json& j) {
  ModelDims m;
  m.hidden_dim = get_or<std::size_t>(j, "hidden_dim", m.hidden_dim);
  m.t_embed_dim = get_or<std::size_t>(j, "t_embed_dim", m.t_embed_dim);
  m.class_embed_dim = get_or<std::size_t>(j, "class_embed_dim", m.class_embed_dim);
  return m;
}

json model_to_json(const ModelDims& m) {
  return json{{"hidden_dim", m.hidden_dim},
              {"t_embed_dim", m.t_embed_dim},
              {"class_embed_dim", m.class_embed_dim}};
}

NoiseMode noise_from_json(const json& j) {
  const std::string mode = get_or<std::string>(j, "mode", "iid");
  if (mode == "iid") return NoiseMode::iid();
  if (mode == "offset") return NoiseMode::offset(get_or(j, "strength", 0.1));
  throw std::invalid_argument("config: unknown noise mode: " + mode);
}

json noise_to_json(const NoiseMode& n) {
  if (n.tag == NoiseMode::Tag::IID) return json{{"mode", "iid"}};
  return json{{"mode", "offset"}, {"strength", n.strength}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.adam.lr = get_or(j, "lr", t.adam.lr);
  t.adam.beta1 = get_or(j, "beta1", t.adam.beta1);
  t.adam.beta2 = get_or(j, "beta2", t.adam.beta2);
  t.adam.epsilon = get_or(j, "epsilon", t.adam.epsilon);
  t.batch_size = get_or<std::size_t>(j, "batch_size", t.batch_size);
  t.iterations = get_or<std::size_t>(j, "iterations", t.iterations);
  t.seed = get_or<std::uint64_t>(j, "seed", t.seed);
  if (j.contains("noise")) t.noise = noise_from_json(j.at("noise"));
  t.uncond_prob = get_or(j, "uncond_prob", t.uncond_prob);

  if (!(t.adam.lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
  if (t.adam.beta1 <= 0.0 || t.adam.beta1 >= 1.0 || t.adam.beta2 <= 0.0 ||
      t.adam.beta2 >= 1.0) {
    throw std::invalid_argument("config: moment decays must lie in (0, 1)");
  }
  if (t.batch_size < 1 || t.iterations < 1) {
    throw std::invalid_argument("config: batch_size and iterations must be >= 1");
  }
  if (t.uncond_prob < 0.0 || t.uncond_prob > 1.0) {
    throw std::invalid_argument("config: uncond_prob must lie in [0, 1]");
  }
  return t;
}

json train_to_json(const TrainConfig& t) {
  return json{{"lr", t.adam.lr},
              {"beta1", t.adam.beta1},
              {"beta2", t.adam.beta2},
              {"epsilon", t.adam.epsilon},
              {"batch_size", t.batch_size},
              {"iterations", t.iterations},
              {"seed", t.seed},
              {"noise", noise_to_json(t.noise)},
              {"uncond_prob", t.uncond_prob}};
}

void apply_lambda(TrainRunConfig& c) {
  if (!(c.lambda > 0.0)) {
    throw std::invalid_argument("config: lambda must be positive");
  }
  const double value = c.lambda;
  c.train.loss.lambda_t = [value](int) { return value; };
}

void validate_param_schedule(const ScheduleConfig& schedule, Parameterization param) {
  if (schedule.rescaled && param == Parameterization::Epsilon) {
    throw std::invalid_argument(
        "config: epsilon parameterization with a rescaled (zero terminal SNR) "
        "schedule is singular at t = T; use v");
  }
}

}  // namespace

NoiseSchedule build_schedule(const ScheduleConfig& config) {
  NoiseSchedule s = make_schedule(config.kind, config.T);
  if (config.rescaled) s = rescale_zero_terminal_snr(s);
  return s;
}

TrainRunConfig parse_train_run_config(const std::string& json_text) {
  const json j = parse_text(json_text, "train config");
  TrainRunConfig c;
  if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
  if (j.contains("parameterization")) {
    c.param = parse_parameterization(j.at("parameterization").get<std::string>());
  }
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  c.dataset_size = get_or<std::size_t>(j, "dataset_size", c.dataset_size);
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("train")) c.train = train_from_json(j.at("train"));
  c.lambda = j.contains("train") ? get_or(j.at("train"), "lambda", c.lambda) : c.lambda;
  apply_lambda(c);
  validate_param_schedule(c.schedule, c.param);
  if (c.dataset_size < c.train.batch_size) {
    throw std::invalid_argument("config: dataset_size must be >= batch_size");
  }
  return c;
}

std::string train_run_config_to_json(const TrainRunConfig& config) {
  json t = train_to_json(config.train);
  t["lambda"] = config.lambda;
  const json j{{"schedule", schedule_to_json(config.schedule)},
               {"parameterization", parameterization_name(config.param)},
               {"dataset", dataset_to_json(config.dataset)},
               {"dataset_size", config.dataset_size},
               {"model", model_to_json(config.model)},
               {"train", t}};
  return j.dump(2);
}

DenoiserConfig denoiser_config(const TrainRunConfig& config) {
  DenoiserConfig d;
  d.data_dim = config.dataset.dim;
  d.hidden_dim = config.model.hidden_dim;
  d.t_embed_dim = config.model.t_embed_dim;
  d.class_embed_dim = config.model.class_embed_dim;
  d.n_classes = config.dataset.n_classes;
  d.T = config.schedule.T;
  d.param = config.param;
  return d;
}

BiasExperimentConfig parse_bias_experiment_config(const std::string& json_text) {
  const json j = parse_text(json_text, "bias experiment config");
  BiasExperimentConfig c;
  if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
  c.schedule.rescaled = false;  // fixed per pipeline config
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  c.dataset_size = get_or<std::size_t>(j, "dataset_size", c.dataset_size);
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("train")) c.train = train_from_json(j.at("train"));
  if (j.contains("train")) c.lambda = get_or(j.at("train"), "lambda", c.lambda);
  if (j.contains("method")) {
    c.method = parse_sampler_method(j.at("method").get<std::string>());
  }
  c.sample_steps = get_or(j, "sample_steps", c.sample_steps);
  c.n_samples = get_or<std::size_t>(j, "n_samples", c.n_samples);
  c.sample_seed = get_or<std::uint64_t>(j, "sample_seed", c.sample_seed);
  if (c.sample_steps < 1) {
    throw std::invalid_argument("config: sample_steps must be >= 1");
  }
  if (c.n_samples < 1) throw std::invalid_argument("config: n_samples must be >= 1");
  return c;
}

std::string bias_experiment_config_to_json(const BiasExperimentConfig& config) {
  json t = train_to_json(config.train);
  t["lambda"] = config.lambda;
  const json j{{"schedule", json{{"kind", config.schedule.kind.name()}, {"T", config.schedule.T}}},
               {"dataset", dataset_to_json(config.dataset)},
               {"dataset_size", config.dataset_size},
               {"model", model_to_json(config.model)},
               {"train", t},
               {"method", sampler_method_name(config.method)},
               {"sample_steps", config.sample_steps},
               {"n_samples", config.n_samples},
               {"sample_seed", config.sample_seed}};
  return j.dump(2);
}

}  // namespace ztsnr
