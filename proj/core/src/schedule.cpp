#include "ztsnr/schedule.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ztsnr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kCosineOffset = 0.008;
constexpr double kCosineBetaClip = 0.999;

double cosine_alpha_bar(double u) {
  const double c = std::cos((u + kCosineOffset) / (1.0 + kCosineOffset) * kPi / 2.0);
  return c * c;
}

std::vector<double> raw_betas(ScheduleKind kind, int T) {
  std::vector<double> betas(static_cast<std::size_t>(T));
  switch (kind.tag) {
    case ScheduleKind::Tag::Linear:
      for (int t = 1; t <= T; ++t) {
        const double i = static_cast<double>(t - 1) / static_cast<double>(T - 1);
        betas[t - 1] = 0.0001 * (1.0 - i) + 0.02 * i;
      }
      break;
    case ScheduleKind::Tag::ScaledLinear:
      for (int t = 1; t <= T; ++t) {
        const double i = static_cast<double>(t - 1) / static_cast<double>(T - 1);
        const double s = std::sqrt(0.00085) * (1.0 - i) + std::sqrt(0.012) * i;
        betas[t - 1] = s * s;
      }
      break;
    case ScheduleKind::Tag::Cosine:
      for (int t = 1; t <= T; ++t) {
        const double u1 = static_cast<double>(t - 1) / static_cast<double>(T);
        const double u2 = static_cast<double>(t) / static_cast<double>(T);
        double b = 1.0 - cosine_alpha_bar(u2) / cosine_alpha_bar(u1);
        if (kind.cosine_clip_beta && b > kCosineBetaClip) b = kCosineBetaClip;
        betas[t - 1] = b;
      }
      break;
  }
  return betas;
}

void derive_from_alphas_bar(NoiseSchedule& s) {
  const std::size_t n = s.alphas_bar.size();
  s.sqrt_alphas_bar.resize(n);
  s.sqrt_one_minus_alphas_bar.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.sqrt_alphas_bar[i] = std::sqrt(s.alphas_bar[i]);
    s.sqrt_one_minus_alphas_bar[i] = std::sqrt(1.0 - s.alphas_bar[i]);
  }
}

}  // namespace

std::string ScheduleKind::name() const {
  switch (tag) {
    case Tag::Linear: return "linear";
    case Tag::ScaledLinear: return "scaled-linear";
    case Tag::Cosine: return cosine_clip_beta ? "cosine" : "cosine-noclip";
  }
  return "unknown";
}

ScheduleKind ScheduleKind::parse(std::string_view name) {
  if (name == "linear") return linear();
  if (name == "scaled-linear" || name == "scaled_linear") return scaled_linear();
  if (name == "cosine") return cosine(true);
  if (name == "cosine-noclip" || name == "cosine_noclip") return cosine(false);
  throw std::invalid_argument("unknown schedule kind: " + std::string(name));
}

int NoiseSchedule::check(int t) const {
  if (t < 1 || t > T) {
    throw std::invalid_argument("timestep out of range [1..T]: " + std::to_string(t));
  }
  return t;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  return alphas_bar[check(t) - 1];
}

double NoiseSchedule::sqrt_alpha_bar(int t) const {
  if (t == 0) return 1.0;
  return sqrt_alphas_bar[check(t) - 1];
}

double NoiseSchedule::sqrt_one_minus_alpha_bar(int t) const {
  if (t == 0) return 0.0;
  return sqrt_one_minus_alphas_bar[check(t) - 1];
}

NoiseSchedule schedule_from_betas(std::vector<double> betas) {
  if (betas.size() < 2) {
    throw std::invalid_argument("schedule needs at least 2 timesteps");
  }
  for (double b : betas) {
    if (!(b > 0.0) || b > 1.0) {
      throw std::invalid_argument("betas must lie in (0, 1]");
    }
  }
  NoiseSchedule s;
  s.T = static_cast<int>(betas.size());
  s.betas = std::move(betas);
  s.alphas.resize(s.betas.size());
  s.alphas_bar.resize(s.betas.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < s.betas.size(); ++i) {
    s.alphas[i] = 1.0 - s.betas[i];
    prod *= s.alphas[i];
    s.alphas_bar[i] = prod;
  }
  derive_from_alphas_bar(s);
  return s;
}

NoiseSchedule make_schedule(ScheduleKind kind, int T) {
  if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
  std::vector<double> betas = raw_betas(kind, T);
  for (double& b : betas) b = static_cast<double>(static_cast<float>(b));
  return schedule_from_betas(std::move(betas));
}

double snr(const NoiseSchedule& schedule, int t) {
  if (t < 1 || t > schedule.T) {
    throw std::invalid_argument("snr: timestep out of range [1..T]: " + std::to_string(t));
  }
  const double ab = schedule.alpha_bar(t);
  if (ab == 0.0) return 0.0;
  return ab / (1.0 - ab);
}

NoiseSchedule rescale_zero_terminal_snr(const NoiseSchedule& schedule) {
  const std::size_t n = schedule.sqrt_alphas_bar.size();
  const double s1 = schedule.sqrt_alphas_bar.front();
  const double sT = schedule.sqrt_alphas_bar.back();
  if (s1 == sT) {
    throw std::invalid_argument("rescale_zero_terminal_snr: degenerate schedule (sqrt_alpha_bar_1 == sqrt_alpha_bar_T)");
  }
  const double scale = s1 / (s1 - sT);

  NoiseSchedule out;
  out.T = schedule.T;
  out.sqrt_alphas_bar.resize(n);
  out.alphas_bar.resize(n);
  out.alphas.resize(n);
  out.betas.resize(n);
  out.sqrt_one_minus_alphas_bar.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = (schedule.sqrt_alphas_bar[i] - sT) * scale;  // exactly 0 at i = n-1
    out.sqrt_alphas_bar[i] = s;
    out.alphas_bar[i] = s * s;
    out.sqrt_one_minus_alphas_bar[i] = std::sqrt(1.0 - out.alphas_bar[i]);
  }
  // Rebuild the beta table from the rescaled products.
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i == 0 ? out.alphas_bar[0] : out.alphas_bar[i] / out.alphas_bar[i - 1];
    out.betas[i] = 1.0 - a;
    out.alphas[i] = 1.0 - out.betas[i];
  }
  return out;
}

TerminalStats terminal_stats(const NoiseSchedule& schedule) {
  TerminalStats st;
  st.snr_T = snr(schedule, schedule.T);
  st.sqrt_alpha_bar_T = schedule.sqrt_alpha_bar(schedule.T);
  st.sqrt_one_minus_alpha_bar_T = schedule.sqrt_one_minus_alpha_bar(schedule.T);
  return st;
}

std::uint64_t schedule_hash(const NoiseSchedule& schedule) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&schedule.T, sizeof(schedule.T));
  for (double b : schedule.betas) {
    std::uint64_t bits;
    std::memcpy(&bits, &b, sizeof(bits));
    mix(&bits, sizeof(bits));
  }
  return h;
}

}  // namespace ztsnr
