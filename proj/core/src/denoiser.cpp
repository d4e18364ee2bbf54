#include "ztsnr/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ztsnr/errors.hpp"

namespace ztsnr {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) { return x * sigmoid(x); }

double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// out[b, r] = bias[r] + sum_c in[b, c] * w[r, c]
void affine(const double* in, std::size_t batch, std::size_t cols,
            const double* w, const double* bias, std::size_t rows, double* out) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = in + b * cols;
    double* o = out + b * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* wr = w + r * cols;
      double acc = bias[r];
      for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
      o[r] = acc;
    }
  }
}

// gw[r, c] += sum_b gout[b, r] * in[b, c];  gb[r] += sum_b gout[b, r]
void accumulate_affine_grads(const double* gout, const double* in, std::size_t batch,
                             std::size_t rows, std::size_t cols, double* gw,
                             double* gb) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = gout + b * rows;
    const double* x = in + b * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      double* wr = gw + r * cols;
      for (std::size_t c = 0; c < cols; ++c) wr[c] += gr * x[c];
      gb[r] += gr;
    }
  }
}

// gin[b, c] = sum_r gout[b, r] * w[r, c]
void backprop_input(const double* gout, const double* w, std::size_t batch,
                    std::size_t rows, std::size_t cols, double* gin) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = gout + b * rows;
    double* gi = gin + b * cols;
    std::memset(gi, 0, cols * sizeof(double));
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      const double* wr = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) gi[c] += gr * wr[c];
    }
  }
}

void validate_config(const DenoiserConfig& c) {
  if (c.data_dim == 0 || c.hidden_dim == 0) {
    throw std::invalid_argument("denoiser: data_dim and hidden_dim must be positive");
  }
  if (c.t_embed_dim < 2 || c.t_embed_dim % 2 != 0) {
    throw std::invalid_argument("denoiser: t_embed_dim must be even and >= 2");
  }
  if (c.class_embed_dim == 0) {
    throw std::invalid_argument("denoiser: class_embed_dim must be positive");
  }
  if (c.n_classes < 1) throw std::invalid_argument("denoiser: n_classes must be >= 1");
  if (c.T < 2) throw std::invalid_argument("denoiser: T must be >= 2");
}

}  // namespace

std::array<std::vector<double>*, 7> DenoiserModel::Params::blocks() {
  return {&w1, &b1, &w2, &b2, &w3, &b3, &class_embed};
}

std::array<const std::vector<double>*, 7> DenoiserModel::Params::blocks() const {
  return {&w1, &b1, &w2, &b2, &w3, &b3, &class_embed};
}

std::array<const char*, 7> DenoiserModel::Params::block_names() {
  return {"w1", "b1", "w2", "b2", "w3", "b3", "class_embed"};
}

DenoiserModel::DenoiserModel(const DenoiserConfig& config, Rng& init_rng)
    : config_(config) {
  validate_config(config_);
  const std::size_t in = input_dim();
  const std::size_t h = config_.hidden_dim;
  const std::size_t d = config_.data_dim;

  params_.w1.resize(h * in);
  params_.b1.assign(h, 0.0);
  params_.w2.resize(h * h);
  params_.b2.assign(h, 0.0);
  params_.w3.assign(d * h, 0.0);  // zero-initialized output layer
  params_.b3.assign(d, 0.0);
  params_.class_embed.resize(static_cast<std::size_t>(config_.n_classes + 1) *
                             config_.class_embed_dim);

  const double bound1 = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : params_.w1) w = (2.0 * init_rng.uniform() - 1.0) * bound1;
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (double& w : params_.w2) w = (2.0 * init_rng.uniform() - 1.0) * bound2;
  for (double& w : params_.class_embed) w = (2.0 * init_rng.uniform() - 1.0) * 0.1;

  const std::size_t half = config_.t_embed_dim / 2;
  t_embed_freqs_.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    t_embed_freqs_[k] =
        half > 1 ? std::pow(10000.0, static_cast<double>(k) / static_cast<double>(half - 1))
                 : 1.0;
  }
}

DenoiserModel DenoiserModel::with_zero_params(const DenoiserConfig& config) {
  Rng rng(0);
  DenoiserModel model(config, rng);
  for (auto* block : model.params_.blocks()) {
    std::fill(block->begin(), block->end(), 0.0);
  }
  return model;
}

std::size_t DenoiserModel::input_dim() const {
  return config_.data_dim + config_.t_embed_dim + config_.class_embed_dim;
}

std::size_t DenoiserModel::n_parameters() const {
  std::size_t n = 0;
  for (const auto* block : params_.blocks()) n += block->size();
  return n;
}

DenoiserModel::Params DenoiserModel::zero_params_like() const {
  Params zeros;
  auto dst = zeros.blocks();
  auto src = params_.blocks();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->assign(src[i]->size(), 0.0);
  return zeros;
}

std::size_t DenoiserModel::class_row(int cond) const {
  if (cond == kNullClass) return static_cast<std::size_t>(config_.n_classes);
  if (cond < 0 || cond >= config_.n_classes) {
    throw std::invalid_argument("denoiser: class label out of range: " +
                                std::to_string(cond));
  }
  return static_cast<std::size_t>(cond);
}

DenoiserModel::Activations DenoiserModel::forward_cached(
    const Tensor& x_t, std::span<const int> ts, std::span<const int> conds,
    Tensor& out) const {
  const std::size_t d = config_.data_dim;
  if (x_t.sample_size() != d) {
    throw std::invalid_argument("denoiser: input dimension mismatch");
  }
  const std::size_t batch = x_t.batch();
  if (ts.size() != batch || conds.size() != batch) {
    throw std::invalid_argument("denoiser: one timestep and label per batch row required");
  }

  const std::size_t in = input_dim();
  const std::size_t h = config_.hidden_dim;
  const std::size_t half = config_.t_embed_dim / 2;

  Activations acts;
  acts.batch = batch;
  acts.conds.assign(conds.begin(), conds.end());
  acts.input.resize(batch * in);
  for (std::size_t b = 0; b < batch; ++b) {
    const int t = ts[b];
    if (t < 1 || t > config_.T) {
      throw std::invalid_argument("denoiser: timestep out of range [1..T]");
    }
    double* row = acts.input.data() + b * in;
    std::memcpy(row, x_t.sample(b), d * sizeof(double));
    const double tau = static_cast<double>(t) / static_cast<double>(config_.T);
    for (std::size_t k = 0; k < half; ++k) {
      const double arg = tau * t_embed_freqs_[k];
      row[d + k] = std::sin(arg);
      row[d + half + k] = std::cos(arg);
    }
    const double* ce =
        params_.class_embed.data() + class_row(conds[b]) * config_.class_embed_dim;
    std::memcpy(row + d + config_.t_embed_dim, ce,
                config_.class_embed_dim * sizeof(double));
  }

  acts.z1.resize(batch * h);
  acts.a1.resize(batch * h);
  acts.z2.resize(batch * h);
  acts.a2.resize(batch * h);
  affine(acts.input.data(), batch, in, params_.w1.data(), params_.b1.data(), h,
         acts.z1.data());
  for (std::size_t i = 0; i < acts.z1.size(); ++i) acts.a1[i] = silu(acts.z1[i]);
  affine(acts.a1.data(), batch, h, params_.w2.data(), params_.b2.data(), h,
         acts.z2.data());
  for (std::size_t i = 0; i < acts.z2.size(); ++i) acts.a2[i] = silu(acts.z2[i]);

  out = Tensor(x_t.shape);
  affine(acts.a2.data(), batch, h, params_.w3.data(), params_.b3.data(), d,
         out.data.data());
  return acts;
}

Tensor DenoiserModel::forward(const Tensor& x_t, std::span<const int> ts,
                              std::span<const int> conds) const {
  Tensor out;
  forward_cached(x_t, ts, conds, out);
  return out;
}

Tensor DenoiserModel::forward(const Tensor& x_t, int t, int cond) const {
  const std::vector<int> ts(x_t.batch(), t);
  const std::vector<int> conds(x_t.batch(), cond);
  return forward(x_t, ts, conds);
}

DenoiserModel::Params DenoiserModel::backward_from(const Activations& acts,
                                                   const Tensor& grad_out) const {
  const std::size_t batch = acts.batch;
  const std::size_t d = config_.data_dim;
  const std::size_t h = config_.hidden_dim;
  const std::size_t in = input_dim();
  if (grad_out.batch() != batch || grad_out.sample_size() != d) {
    throw std::invalid_argument("denoiser: grad_out shape mismatch");
  }

  Params grads = zero_params_like();

  accumulate_affine_grads(grad_out.data.data(), acts.a2.data(), batch, d, h,
                          grads.w3.data(), grads.b3.data());

  std::vector<double> gz2(batch * h);
  backprop_input(grad_out.data.data(), params_.w3.data(), batch, d, h, gz2.data());
  for (std::size_t i = 0; i < gz2.size(); ++i) gz2[i] *= silu_grad(acts.z2[i]);

  accumulate_affine_grads(gz2.data(), acts.a1.data(), batch, h, h, grads.w2.data(),
                          grads.b2.data());

  std::vector<double> gz1(batch * h);
  backprop_input(gz2.data(), params_.w2.data(), batch, h, h, gz1.data());
  for (std::size_t i = 0; i < gz1.size(); ++i) gz1[i] *= silu_grad(acts.z1[i]);

  accumulate_affine_grads(gz1.data(), acts.input.data(), batch, h, in,
                          grads.w1.data(), grads.b1.data());

  // Class-embedding gradients: the embedding slice of the input gradient,
  // accumulated into the row each batch entry used.
  std::vector<double> gin(batch * in);
  backprop_input(gz1.data(), params_.w1.data(), batch, h, in, gin.data());
  const std::size_t ce_off = d + config_.t_embed_dim;
  for (std::size_t b = 0; b < batch; ++b) {
    double* row =
        grads.class_embed.data() + class_row(acts.conds[b]) * config_.class_embed_dim;
    const double* g = gin.data() + b * in + ce_off;
    for (std::size_t k = 0; k < config_.class_embed_dim; ++k) row[k] += g[k];
  }
  return grads;
}

DenoiserModel::Params DenoiserModel::backward(const Tensor& x_t,
                                              std::span<const int> ts,
                                              std::span<const int> conds,
                                              const Tensor& grad_out) const {
  Tensor out;
  const Activations acts = forward_cached(x_t, ts, conds, out);
  return backward_from(acts, grad_out);
}

DenoiserModel::Params DenoiserModel::backward(const Tensor& x_t, int t, int cond,
                                              const Tensor& grad_out) const {
  const std::vector<int> ts(x_t.batch(), t);
  const std::vector<int> conds(x_t.batch(), cond);
  return backward(x_t, ts, conds, grad_out);
}

AdamOptimizer::AdamOptimizer(const DenoiserModel& model, AdamConfig config)
    : config_(config),
      m_(model.zero_params_like()),
      v_(model.zero_params_like()) {
  if (!(config_.lr >= 0.0)) throw std::invalid_argument("adam: lr must be >= 0");
  if (config_.beta1 <= 0.0 || config_.beta1 >= 1.0 || config_.beta2 <= 0.0 ||
      config_.beta2 >= 1.0) {
    throw std::invalid_argument("adam: moment decays must lie in (0, 1)");
  }
}

void AdamOptimizer::update(DenoiserModel& model, const DenoiserModel::Params& grads) {
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  auto ps = model.params().blocks();
  auto gs = grads.blocks();
  auto ms = m_.blocks();
  auto vs = v_.blocks();
  for (std::size_t blk = 0; blk < ps.size(); ++blk) {
    std::vector<double>& p = *ps[blk];
    const std::vector<double>& g = *gs[blk];
    std::vector<double>& m = *ms[blk];
    std::vector<double>& v = *vs[blk];
    if (g.size() != p.size()) throw std::invalid_argument("adam: gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

TrainBatch make_train_batch(const Tensor& x0_batch, std::span<const int> labels,
                            const NoiseSchedule& schedule, const TrainConfig& config,
                            Parameterization param, Rng& rng) {
  const std::size_t batch = x0_batch.batch();
  if (labels.size() != batch) {
    throw std::invalid_argument("make_train_batch: one label per batch row required");
  }
  if (config.uncond_prob < 0.0 || config.uncond_prob > 1.0) {
    throw std::invalid_argument("make_train_batch: uncond_prob must lie in [0, 1]");
  }

  TrainBatch out;
  out.ts.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    out.ts[b] = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(schedule.T)));
  }
  out.conds.assign(labels.begin(), labels.end());
  for (std::size_t b = 0; b < batch; ++b) {
    if (rng.uniform() < config.uncond_prob) out.conds[b] = kNullClass;
  }

  const Tensor eps = sample_noise(x0_batch.shape, config.noise, rng);

  out.x_t = Tensor(x0_batch.shape);
  out.targets = Tensor(x0_batch.shape);
  out.weights.resize(batch);
  const std::size_t n = x0_batch.sample_size();
  for (std::size_t b = 0; b < batch; ++b) {
    const int t = out.ts[b];
    const double sa = schedule.sqrt_alpha_bar(t);
    const double s1 = schedule.sqrt_one_minus_alpha_bar(t);
    const double* x0 = x0_batch.sample(b);
    const double* e = eps.sample(b);
    double* xt = out.x_t.sample(b);
    double* tgt = out.targets.sample(b);
    for (std::size_t i = 0; i < n; ++i) {
      xt[i] = sa * x0[i] + s1 * e[i];
      tgt[i] = param == Parameterization::V ? sa * e[i] - s1 * x0[i] : e[i];
    }
    out.weights[b] = config.loss.lambda_t(t);
    if (!(out.weights[b] > 0.0)) {
      throw std::invalid_argument("make_train_batch: lambda_t must be positive");
    }
  }
  return out;
}

double weighted_batch_loss(const Tensor& model_out, const TrainBatch& batch) {
  require_same_shape(model_out, batch.targets, "weighted_batch_loss");
  const std::size_t b = model_out.batch();
  const std::size_t n = model_out.sample_size();
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* o = model_out.sample(i);
    const double* t = batch.targets.sample(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = o[j] - t[j];
      acc += d * d;
    }
    loss += batch.weights[i] * acc / static_cast<double>(n);
  }
  return loss / static_cast<double>(b);
}

double train_step(DenoiserModel& model, AdamOptimizer& optimizer,
                  const Tensor& x0_batch, std::span<const int> labels,
                  const NoiseSchedule& schedule, const TrainConfig& config,
                  Rng& rng) {
  if (model.config().T != schedule.T) {
    throw std::invalid_argument("train_step: model and schedule disagree on T");
  }
  const TrainBatch batch = make_train_batch(x0_batch, labels, schedule, config,
                                            model.config().param, rng);
  Tensor out;
  const DenoiserModel::Activations acts =
      model.forward_cached(batch.x_t, batch.ts, batch.conds, out);

  const double loss = weighted_batch_loss(out, batch);
  if (!std::isfinite(loss)) {
    throw TrainingDivergedError("train_step: non-finite loss at optimizer step " +
                                std::to_string(optimizer.step_count() + 1));
  }

  // d(loss)/d(out) for the weighted mean-over-elements reduction.
  Tensor grad_out(out.shape);
  const std::size_t b = out.batch();
  const std::size_t n = out.sample_size();
  for (std::size_t i = 0; i < b; ++i) {
    const double scale =
        2.0 * batch.weights[i] / (static_cast<double>(n) * static_cast<double>(b));
    const double* o = out.sample(i);
    const double* t = batch.targets.sample(i);
    double* g = grad_out.sample(i);
    for (std::size_t j = 0; j < n; ++j) g[j] = scale * (o[j] - t[j]);
  }

  const DenoiserModel::Params grads = model.backward_from(acts, grad_out);
  optimizer.update(model, grads);
  return loss;
}

namespace {

constexpr char kMagic[8] = {'Z', 'T', 'S', 'N', 'R', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw CheckpointFormatError("checkpoint: truncated file");
  return value;
}

}  // namespace

void save_checkpoint(const DenoiserModel& model, std::uint64_t schedule_hash,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::invalid_argument("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  const std::uint8_t tag = model.config().param == Parameterization::V ? 1 : 0;
  write_pod(os, tag);
  write_pod(os, schedule_hash);
  const DenoiserConfig& c = model.config();
  write_pod(os, static_cast<std::uint32_t>(c.T));
  write_pod(os, static_cast<std::uint32_t>(c.data_dim));
  write_pod(os, static_cast<std::uint32_t>(c.hidden_dim));
  write_pod(os, static_cast<std::uint32_t>(c.t_embed_dim));
  write_pod(os, static_cast<std::uint32_t>(c.class_embed_dim));
  write_pod(os, static_cast<std::int32_t>(c.n_classes));
  for (const auto* block : model.params().blocks()) {
    write_pod(os, static_cast<std::uint64_t>(block->size()));
    os.write(reinterpret_cast<const char*>(block->data()),
             static_cast<std::streamsize>(block->size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointFormatError("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointFormatError("checkpoint: bad magic: " + path);
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) {
    throw CheckpointFormatError("checkpoint: unsupported version " +
                                std::to_string(version));
  }
  const auto tag = read_pod<std::uint8_t>(is);
  if (tag > 1) throw CheckpointFormatError("checkpoint: bad parameterization tag");
  const auto schedule_hash = read_pod<std::uint64_t>(is);

  DenoiserConfig config;
  config.param = tag == 1 ? Parameterization::V : Parameterization::Epsilon;
  config.T = static_cast<int>(read_pod<std::uint32_t>(is));
  config.data_dim = read_pod<std::uint32_t>(is);
  config.hidden_dim = read_pod<std::uint32_t>(is);
  config.t_embed_dim = read_pod<std::uint32_t>(is);
  config.class_embed_dim = read_pod<std::uint32_t>(is);
  config.n_classes = read_pod<std::int32_t>(is);

  constexpr std::size_t kMaxExtent = 1u << 24;
  if (config.data_dim > kMaxExtent || config.hidden_dim > kMaxExtent ||
      config.t_embed_dim > kMaxExtent || config.class_embed_dim > kMaxExtent ||
      config.n_classes > static_cast<int>(kMaxExtent)) {
    throw CheckpointFormatError("checkpoint: implausible model dimensions");
  }

  Checkpoint ckpt = [&] {
    try {
      return Checkpoint{DenoiserModel::with_zero_params(config), schedule_hash};
    } catch (const std::invalid_argument& e) {
      throw CheckpointFormatError(std::string("checkpoint: bad header: ") + e.what());
    }
  }();
  for (auto* block : ckpt.model.params().blocks()) {
    const auto count = read_pod<std::uint64_t>(is);
    if (count != block->size()) {
      throw CheckpointFormatError("checkpoint: parameter block size mismatch");
    }
    is.read(reinterpret_cast<char*>(block->data()),
            static_cast<std::streamsize>(block->size() * sizeof(double)));
    if (!is) throw CheckpointFormatError("checkpoint: truncated parameter block");
  }
  return ckpt;
}

}  // namespace ztsnr
