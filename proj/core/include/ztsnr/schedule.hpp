#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ztsnr {

// The three common schedule families. The cosine schedule clips beta at
// 0.999 by default; with the clip removed it reaches zero terminal SNR
// on its own.
struct ScheduleKind {
  enum class Tag { Linear, ScaledLinear, Cosine };

  Tag tag = Tag::Linear;
  bool cosine_clip_beta = true;  // Cosine only; clip threshold fixed at 0.999

  static ScheduleKind linear() { return {Tag::Linear, true}; }
  static ScheduleKind scaled_linear() { return {Tag::ScaledLinear, true}; }
  static ScheduleKind cosine(bool clip_beta = true) { return {Tag::Cosine, clip_beta}; }

  std::string name() const;
  // Accepts "linear", "scaled-linear", "cosine", "cosine-noclip".
  static ScheduleKind parse(std::string_view name);
};

// Discrete variance-preserving noise schedule over train timesteps
// t = 1..T (stored 0-based; accessors below take the 1-based t).
// Immutable after construction; safe to share across threads.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alphas_bar;
  std::vector<double> sqrt_alphas_bar;
  std::vector<double> sqrt_one_minus_alphas_bar;

  double beta(int t) const { return betas[check(t) - 1]; }
  double alpha(int t) const { return alphas[check(t) - 1]; }
  // alpha_bar(0) == 1 by convention (used by the t=1 posterior).
  double alpha_bar(int t) const;
  double sqrt_alpha_bar(int t) const;
  double sqrt_one_minus_alpha_bar(int t) const;

 private:
  int check(int t) const;
};

// Builds the schedule for `kind` with T >= 2 train timesteps. Betas
// follow the published closed forms, evaluated on i = (t-1)/(T-1) in
// double precision and then rounded to float32: the reference
// implementations store their beta tables in float32, and the published
// terminal statistics are properties of those tables. Everything
// derived from the betas is computed in double precision.
NoiseSchedule make_schedule(ScheduleKind kind, int T);

// Builds a schedule from an explicit beta table (cumulative products in
// double precision, no quantization).
NoiseSchedule schedule_from_betas(std::vector<double> betas);

// SNR(t) = alpha_bar_t / (1 - alpha_bar_t); exactly 0 when alpha_bar_t = 0.
double snr(const NoiseSchedule& schedule, int t);

// Shift-and-scale in sqrt(alpha_bar) space so that the terminal SNR is
// exactly zero while sqrt(alpha_bar_1) is preserved, then rebuild the
// beta table from the rescaled products. The result has
// alpha_bar_T = 0 and beta_T = 1 exactly.
NoiseSchedule rescale_zero_terminal_snr(const NoiseSchedule& schedule);

struct TerminalStats {
  double snr_T = 0.0;
  double sqrt_alpha_bar_T = 0.0;
  double sqrt_one_minus_alpha_bar_T = 0.0;
};

TerminalStats terminal_stats(const NoiseSchedule& schedule);

// FNV-1a over T and the beta table bits; identifies the schedule a
// checkpoint was trained against.
std::uint64_t schedule_hash(const NoiseSchedule& schedule);

}  // namespace ztsnr
