#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "homsim/correlators.hpp"
#include "homsim/emitter.hpp"
#include "homsim/errors.hpp"
#include "homsim/reference.hpp"
#include "homsim/tag_stream.hpp"

namespace homsim {

enum class McMode { hbt, hom_parallel, hom_orthogonal };

inline std::string to_string(McMode m) {
  switch (m) {
    case McMode::hbt: return "HBT";
    case McMode::hom_parallel: return "HOM_parallel";
    case McMode::hom_orthogonal: return "HOM_orthogonal";
  }
  return "?";
}

/// Synthetic-experiment configuration: pulsed emitter into an HBT splitter
/// or a one-period-delayed Mach-Zehnder interferometer.
struct McConfig {
  EmitterParams emitter{1.0, 0.0};
  double rep_period_ns = 12.5;
  std::int64_t n_pulses = 0;
  double p_background = 0.0;       // probability of one uncorrelated photon per pulse
  double detector_jitter_sigma_ns = 0.0; // Gaussian; 0 disables
  McMode mode = McMode::hbt;
  double loss = 1.0;               // per-photon survival probability
  std::uint64_t seed = 0;

  void validate() const {
    if (!(rep_period_ns > 0.0)) throw ParameterError("rep_period must be > 0");
    const double ps = rep_period_ns * 1000.0;
    if (std::abs(ps - std::round(ps)) > 1e-6)
      throw ParameterError("rep_period must be an integer number of ps");
    if (n_pulses < 0) throw ParameterError("n_pulses must be >= 0");
    if (p_background < 0.0 || p_background > 1.0)
      throw ParameterError("p_background must lie in [0,1]");
    if (detector_jitter_sigma_ns < 0.0)
      throw ParameterError("jitter sigma must be >= 0");
    if (!(loss > 0.0) || loss > 1.0)
      throw ParameterError("loss (survival probability) must lie in (0,1]");
  }

  /// The pulse period should comfortably exceed the emission tail.
  bool rep_period_is_short() const {
    return rep_period_ns <= 10.0 * emitter.t1();
  }

  std::int64_t sync_period_ps() const {
    return static_cast<std::int64_t>(std::llround(rep_period_ns * 1000.0));
  }
};

namespace detail {

/// splitmix64: the counter-based generator used for all Monte Carlo draws.
/// Every pulse (and every interferometer slot) gets its own stream derived
/// from (seed, salt, index), so generation is reproducible and could be
/// parallelized by block without changing the output.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t s) : state(s) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1]; never 0, safe under log().
  double uniform() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Box-Muller, one draw per call (second half discarded to keep the
  /// per-photon draw layout fixed).
  double gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }
};

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt,
                                   std::uint64_t index) {
  SplitMix64 mixer(seed ^ (salt * 0x9e3779b97f4a7c15ull));
  mixer.state += index * 0xda942042e4dd58b5ull;
  return mixer.next();
}

constexpr std::uint64_t kPulseSalt = 0x70756c7365u; // "pulse"
constexpr std::uint64_t kSlotSalt = 0x736c6f74u;    // "slot"

struct McPhoton {
  double emit_delay_ns; // within the origin pulse
  double jitter_ns;
  std::int64_t slot;
  bool is_background;
  bool long_arm;
  bool survives;
  bool channel_draw; // used when the photon routes independently
};

} // namespace detail

/// Generates the time-tagged detector events for the configured topology.
///
/// Per pulse k (at time k * rep_period): one signal photon with delay
/// ~ Exponential(gamma_sp); with probability p_background one additional
/// photon uniform over the period. HBT: every photon lands on channel 0/1
/// with probability 1/2. HOM: the input splitter routes each photon to the
/// short arm (same slot) or the long arm (next slot, the delay equals one
/// period); when exactly two photons reach the output splitter in the same
/// slot from opposite arms they coalesce: both exit one random port with
/// probability (1 + c)/2, opposite ports with probability (1 - c)/2, where
/// c = exp(-2 gamma_star |delta|) for two signal photons in parallel
/// polarization (delta = difference of the emission delays) and c = 0
/// otherwise. Unpaired photons route independently. Detection applies the
/// survival probability and Gaussian jitter; timestamps land on a 1 ps
/// integer grid. Bit-identical output for identical seeds.
inline TagStream generate_stream(const McConfig& cfg) {
  cfg.validate();
  const double gamma_sp = cfg.emitter.gamma_sp();
  const double gamma_star = cfg.emitter.gamma_star();
  const bool hom = cfg.mode != McMode::hbt;
  const std::int64_t period_ps = cfg.sync_period_ps();

  TagStream stream;
  stream.sync_period_ps = period_ps;
  {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "homsim photon-mc rng=splitmix64 gamma_sp_per_ns=%.12g "
                  "gamma_star_per_ns=%.12g rep_period_ns=%.12g n_pulses=%lld "
                  "p_background=%.12g jitter_sigma_ns=%.12g loss=%.12g",
                  gamma_sp, gamma_star, cfg.rep_period_ns,
                  static_cast<long long>(cfg.n_pulses), cfg.p_background,
                  cfg.detector_jitter_sigma_ns, cfg.loss);
    stream.source = buf;
  }
  stream.mode = to_string(cfg.mode);
  stream.seed = cfg.seed;
  stream.records.reserve(static_cast<std::size_t>(
      static_cast<double>(cfg.n_pulses) * (1.0 + cfg.p_background) * cfg.loss +
      64.0));

  std::vector<detail::McPhoton> slot_buf;   // photons arriving in slot k
  std::vector<detail::McPhoton> next_slot;  // photons arriving in slot k+1

  auto detect = [&](const detail::McPhoton& ph, bool channel) {
    if (!ph.survives) return;
    const double t_ns =
        static_cast<double>(ph.slot) * cfg.rep_period_ns + ph.emit_delay_ns +
        ph.jitter_ns;
    const std::int64_t ts = std::max<std::int64_t>(0, std::llround(t_ns * 1000.0));
    // pulse_index is the period the timestamp falls in (emission tails can
    // run past the origin slot), matching what parse_tags reconstructs
    stream.records.push_back(
        TagRecord{ts, ts / period_ps, static_cast<std::uint8_t>(channel)});
  };

  auto finalize_slot = [&](std::int64_t slot_index,
                           std::vector<detail::McPhoton>& photons) {
    const bool pairable = hom && photons.size() == 2 &&
                          photons[0].long_arm != photons[1].long_arm;
    if (pairable) {
      const auto& a = photons[0];
      const auto& b = photons[1];
      double c = 0.0;
      if (cfg.mode == McMode::hom_parallel && !a.is_background &&
          !b.is_background)
        c = std::exp(-2.0 * gamma_star *
                     std::abs(a.emit_delay_ns - b.emit_delay_ns));
      detail::SplitMix64 rng(detail::derive_stream(
          cfg.seed, detail::kSlotSalt, static_cast<std::uint64_t>(slot_index)));
      const bool same_port = rng.uniform() <= 0.5 * (1.0 + c);
      const bool port_a = rng.uniform() <= 0.5;
      if (same_port) {
        detect(a, port_a);
        detect(b, port_a);
      } else {
        detect(a, port_a);
        detect(b, !port_a);
      }
    } else {
      for (const auto& ph : photons) detect(ph, ph.channel_draw);
    }
    photons.clear();
  };

  for (std::int64_t k = 0; k < cfg.n_pulses; ++k) {
    detail::SplitMix64 rng(detail::derive_stream(
        cfg.seed, detail::kPulseSalt, static_cast<std::uint64_t>(k)));
    // fixed draw layout per pulse, independent of the outcomes
    const double sig_delay = rng.exponential(gamma_sp);
    const bool bg_present = rng.uniform() <= cfg.p_background;
    const double bg_delay = rng.uniform() * cfg.rep_period_ns;
    const bool sig_long = rng.uniform() <= 0.5;
    const bool bg_long = rng.uniform() <= 0.5;
    const bool sig_chan = rng.uniform() <= 0.5;
    const bool bg_chan = rng.uniform() <= 0.5;
    const bool sig_survives = rng.uniform() <= cfg.loss;
    const bool bg_survives = rng.uniform() <= cfg.loss;
    const double sig_jitter = rng.gaussian() * cfg.detector_jitter_sigma_ns;
    const double bg_jitter = rng.gaussian() * cfg.detector_jitter_sigma_ns;

    auto place = [&](double delay, bool is_bg, bool long_arm, bool chan,
                     bool survives, double jitter) {
      detail::McPhoton ph{delay, jitter, k, is_bg, long_arm, survives, chan};
      if (hom && long_arm) {
        ph.slot = k + 1;
        next_slot.push_back(ph);
      } else {
        slot_buf.push_back(ph);
      }
    };
    place(sig_delay, false, sig_long, sig_chan, sig_survives, sig_jitter);
    if (bg_present)
      place(bg_delay, true, bg_long, bg_chan, bg_survives, bg_jitter);

    finalize_slot(k, slot_buf);
    std::swap(slot_buf, next_slot);
  }
  finalize_slot(cfg.n_pulses, slot_buf);

  stream.canonicalize();
  return stream;
}

/// Expected normalized coincidence area per repetition-period peak.
struct PeakExpectation {
  int index;
  double area; // relative to the far-peak level
};

/// Expected peak pattern for the configured topology, by exhaustive
/// enumeration of the photon routing paths (no sampling). Far peaks
/// (|n| >= 2 for HOM, |n| >= 1 for HBT) normalize to 1. Background photons
/// are handled exactly for HBT and to first order in p_background for HOM.
/// With a post-selection window, retention enters as
/// q_s = P(signal delay in window), q_b = width/period, and the coalescence
/// average becomes the window-conditioned overlap ratio.
inline std::vector<PeakExpectation> expected_peak_pattern(
    McMode mode, const McConfig& cfg, int max_index,
    const std::optional<PostSelectionWindow>& window = std::nullopt) {
  cfg.validate();
  if (max_index < 1) throw ParameterError("max_index must be >= 1");
  const double gamma_sp = cfg.emitter.gamma_sp();
  const double p = cfg.p_background;

  double q_s = 1.0, q_b = 1.0;
  if (window) {
    if (window->end_ns() > cfg.rep_period_ns + 1e-9)
      throw ParameterError("window exceeds the repetition period");
    q_s = std::exp(-gamma_sp * window->start_ns) -
          std::exp(-gamma_sp * window->end_ns());
    q_b = window->width_ns / cfg.rep_period_ns;
  }
  const double beta = p * q_b;
  const double pair_norm = 0.25 * (q_s + beta) * (q_s + beta);

  double center = 0.0;
  double adjacent = 1.0;
  if (mode == McMode::hbt) {
    center = 0.5 * q_s * beta / pair_norm;
  } else {
    double cbar = 0.0;
    if (mode == McMode::hom_parallel) {
      if (window)
        cbar = g2_hom_postselected(cfg.emitter, *window).overlap_ratio;
      else
        cbar = asymptotic_visibility(cfg.emitter);
    }
    const double meeting =
        0.125 * q_s * q_s * ((1.0 - p) * (1.0 - cbar) + p);
    const double background_center = 0.5 * q_s * beta;
    center = (meeting + background_center) / pair_norm;
    adjacent = 0.75 + 0.125 * q_s * beta / pair_norm;
  }

  std::vector<PeakExpectation> out;
  for (int n = -max_index; n <= max_index; ++n) {
    double area = 1.0;
    if (n == 0)
      area = center;
    else if (std::abs(n) == 1 && mode != McMode::hbt)
      area = adjacent;
    out.push_back(PeakExpectation{n, area});
  }
  return out;
}

} // namespace homsim
