#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "homsim/correlators.hpp"
#include "homsim/errors.hpp"
#include "homsim/inference.hpp"
#include "homsim/tag_stream.hpp"

namespace homsim {

/// Keeps records whose time within the repetition period falls inside the
/// window: (timestamp mod sync_period) in [start, start + width). The
/// window must fit inside one period. Idempotent.
inline TagStream postselect(const TagStream& stream,
                            const PostSelectionWindow& window) {
  if (stream.sync_period_ps <= 0)
    throw DataError("stream has no sync period");
  const std::int64_t start_ps = std::llround(window.start_ns * 1000.0);
  const std::int64_t width_ps = std::llround(window.width_ns * 1000.0);
  if (start_ps + width_ps > stream.sync_period_ps)
    throw ParameterError("post-selection window exceeds the period");
  TagStream out;
  out.sync_period_ps = stream.sync_period_ps;
  out.source = stream.source;
  out.mode = stream.mode;
  out.seed = stream.seed;
  for (const auto& r : stream.records) {
    const std::int64_t phase = r.timestamp_ps % stream.sync_period_ps;
    if (phase >= start_ps && phase < start_ps + width_ps)
      out.records.push_back(r);
  }
  return out;
}

/// Arrival times folded modulo the repetition period.
struct ArrivalHistogram {
  std::int64_t bin_width_ps;
  std::int64_t sync_period_ps;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_periods_folded;

  double bin_left_ns(std::size_t i) const {
    return static_cast<double>(bin_width_ps) * static_cast<double>(i) / 1000.0;
  }
};

inline ArrivalHistogram arrival_histogram(const TagStream& stream,
                                          std::int64_t bin_width_ps) {
  if (stream.sync_period_ps <= 0) throw DataError("stream has no sync period");
  if (bin_width_ps <= 0 || stream.sync_period_ps % bin_width_ps != 0)
    throw ParameterError("bin width must divide the sync period");
  ArrivalHistogram hist;
  hist.bin_width_ps = bin_width_ps;
  hist.sync_period_ps = stream.sync_period_ps;
  hist.counts.assign(
      static_cast<std::size_t>(stream.sync_period_ps / bin_width_ps), 0);
  std::int64_t last = -1;
  for (const auto& r : stream.records) {
    const std::int64_t phase = r.timestamp_ps % stream.sync_period_ps;
    ++hist.counts[static_cast<std::size_t>(phase / bin_width_ps)];
    last = std::max(last, r.timestamp_ps);
  }
  hist.n_periods_folded =
      last < 0 ? 0 : static_cast<std::uint64_t>(last / stream.sync_period_ps) + 1;
  return hist;
}

/// Spontaneous-emission lifetime from the folded histogram: weighted
/// log-linear least squares over the nonzero bins whose left edge lies in
/// [t_lo, t_hi). For exponentially distributed integrated bins the log of
/// the counts is exactly linear in the bin left edge. Weights are the
/// counts themselves (Poisson: var ln N = 1/N). The fit range should
/// exclude the excitation/IRF region. Raises FitError when fewer than 5
/// nonzero bins remain or when the slope is indistinguishable from 0 at
/// 2 sigma.
struct LifetimeFit {
  double t1_ns;
  double sigma_ns;
};

inline LifetimeFit fit_lifetime(const ArrivalHistogram& hist, double t_lo_ns,
                                double t_hi_ns) {
  if (!(t_hi_ns > t_lo_ns)) throw ParameterError("empty lifetime fit range");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  std::size_t n_used = 0;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double x = hist.bin_left_ns(i);
    if (x < t_lo_ns || x >= t_hi_ns || hist.counts[i] == 0) continue;
    const double w = static_cast<double>(hist.counts[i]);
    const double y = std::log(w);
    sw += w;
    swx += w * x;
    swy += w * y;
    swxx += w * x * x;
    swxy += w * x * y;
    ++n_used;
  }
  if (n_used < 5)
    throw FitError("lifetime fit needs at least 5 nonzero bins in range");
  const double denom = swxx - swx * swx / sw;
  if (!(denom > 0.0)) throw FitError("degenerate abscissa in lifetime fit");
  const double slope = (swxy - swx * swy / sw) / denom;
  const double sigma_slope = std::sqrt(1.0 / denom);
  if (!(slope < 0.0) || std::abs(slope) < 2.0 * sigma_slope)
    throw FitError("decay slope indistinguishable from zero at 2 sigma");
  const double t1 = -1.0 / slope;
  return LifetimeFit{t1, sigma_slope * t1 * t1};
}

/// Cross-channel delay histogram. Bin i has center (i - n_side) * bin_width
/// relative to zero delay; peaks at integer multiples of the period sit on
/// bin centers when the bin width divides the period.
struct CoincidenceHistogram {
  std::int64_t bin_width_ps;
  std::int64_t sync_period_ps;
  std::int64_t n_side; // bins on each side of tau = 0
  std::vector<std::uint64_t> counts;

  std::int64_t bin_center_ps(std::size_t i) const {
    return (static_cast<std::int64_t>(i) - n_side) * bin_width_ps;
  }
};

/// Histograms all cross-channel pairs (t_channel1 - t_channel0) within
/// +-max_delay_periods periods: start-multi-stop, every pair within range.
inline CoincidenceHistogram coincidence_histogram(const TagStream& stream,
                                                  int max_delay_periods,
                                                  std::int64_t bin_width_ps) {
  if (stream.sync_period_ps <= 0) throw DataError("stream has no sync period");
  if (bin_width_ps <= 0) throw ParameterError("bin width must be positive");
  if (max_delay_periods < 1)
    throw ParameterError("max_delay_periods must be >= 1");

  std::vector<std::int64_t> t0, t1;
  for (const auto& r : stream.records)
    (r.channel == 0 ? t0 : t1).push_back(r.timestamp_ps);
  if (t0.empty() || t1.empty())
    throw DataError("coincidence analysis needs events on both channels");

  CoincidenceHistogram hist;
  hist.bin_width_ps = bin_width_ps;
  hist.sync_period_ps = stream.sync_period_ps;
  const std::int64_t reach =
      max_delay_periods * stream.sync_period_ps + stream.sync_period_ps / 2;
  hist.n_side = reach / bin_width_ps;
  hist.counts.assign(static_cast<std::size_t>(2 * hist.n_side + 1), 0);
  // accept only delays landing in complete bins
  const std::int64_t lo_edge = -hist.n_side * bin_width_ps - bin_width_ps / 2;
  const std::int64_t hi_edge = lo_edge + static_cast<std::int64_t>(hist.counts.size()) * bin_width_ps;

  std::size_t lo = 0;
  for (const std::int64_t a : t0) {
    while (lo < t1.size() && t1[lo] - a < lo_edge) ++lo;
    for (std::size_t j = lo; j < t1.size(); ++j) {
      const std::int64_t tau = t1[j] - a;
      if (tau >= hi_edge) break;
      ++hist.counts[static_cast<std::size_t>((tau - lo_edge) / bin_width_ps)];
    }
  }
  return hist;
}

/// Integrated coincidence counts around each repetition-period peak, with
/// the Poisson error sqrt(area); zero-count areas get the unit-count
/// regularization sigma = 1 (flagged).
struct PeakAreas {
  struct Entry {
    int index;
    double area;
    double sigma;
    bool zero_regularized;
  };
  std::vector<Entry> entries;

  const Entry& at(int index) const {
    for (const auto& e : entries)
      if (e.index == index) return e;
    throw ParameterError("peak index not present");
  }
};

/// Sums bins whose center lies within +-halfwidth of n * period, for every
/// peak index fully covered by the histogram.
inline PeakAreas peak_areas(const CoincidenceHistogram& hist,
                            std::int64_t integration_halfwidth_ps) {
  if (integration_halfwidth_ps <= 0)
    throw ParameterError("integration halfwidth must be positive");
  if (2 * integration_halfwidth_ps >= hist.sync_period_ps)
    throw ParameterError("peak integration windows overlap");
  const std::int64_t reach = hist.n_side * hist.bin_width_ps;
  const int max_peak = static_cast<int>(
      (reach - integration_halfwidth_ps) / hist.sync_period_ps);
  if (max_peak < 0) throw ParameterError("histogram narrower than one peak window");

  PeakAreas areas;
  for (int n = -max_peak; n <= max_peak; ++n) {
    const std::int64_t center = static_cast<std::int64_t>(n) * hist.sync_period_ps;
    std::uint64_t sum = 0;
    // bin centers are (i - n_side) * bw
    const std::int64_t first =
        (center - integration_halfwidth_ps + reach + hist.bin_width_ps - 1) /
        hist.bin_width_ps;
    const std::int64_t last =
        (center + integration_halfwidth_ps + reach) / hist.bin_width_ps;
    for (std::int64_t i = std::max<std::int64_t>(0, first);
         i <= std::min<std::int64_t>(last, static_cast<std::int64_t>(hist.counts.size()) - 1);
         ++i)
      sum += hist.counts[static_cast<std::size_t>(i)];
    const bool zero = sum == 0;
    areas.entries.push_back(PeakAreas::Entry{
        n, static_cast<double>(sum),
        zero ? 1.0 : std::sqrt(static_cast<double>(sum)), zero});
  }
  return areas;
}

/// g2(0) = center area / mean far-peak area, Poisson errors propagated.
/// The normalization set must exclude the center peak.
inline ValueWithError g2_from_peaks(const PeakAreas& areas,
                                    const std::vector<int>& normalization_set) {
  if (normalization_set.empty())
    throw ParameterError("empty peak normalization set");
  double sum = 0.0, sum_var = 0.0;
  for (const int n : normalization_set) {
    if (n == 0)
      throw ParameterError("normalization set must exclude the center peak");
    const auto& e = areas.at(n);
    sum += e.area;
    sum_var += e.sigma * e.sigma;
  }
  const double k = static_cast<double>(normalization_set.size());
  const double mean = sum / k;
  if (!(mean > 0.0)) throw ParameterError("zero peak normalization");
  const double mean_sigma = std::sqrt(sum_var) / k;
  const auto& center = areas.at(0);
  const double g2 = center.area / mean;
  const double s = std::hypot(center.sigma / mean,
                              center.area * mean_sigma / (mean * mean));
  return ValueWithError{g2, s};
}

/// Knobs of the coincidence analysis chain.
struct AnalysisSettings {
  std::int64_t bin_width_ps = 50;
  int max_delay_periods = 6;
  std::optional<std::int64_t> halfwidth_ps; // default derived below
  std::vector<int> normalization_peaks = {-5, -4, -3, -2, 2, 3, 4, 5};
  std::optional<ValueWithError> g2_hbt; // companion HBT purity, if measured
};

namespace detail {

/// Default peak-integration halfwidth. Without a post-selection window the
/// spread of pair delays is set by the emission tail (3 T1); with a window
/// of width w the delays fill +-w around each peak and clipping below w
/// would bias the center/far ratio, so the halfwidth must cover it.
inline std::int64_t default_halfwidth(const TagStream& stream,
                                      const AnalysisSettings& s,
                                      std::optional<double> window_width_ns) {
  const std::int64_t cap = stream.sync_period_ps / 2 - s.bin_width_ps;
  double t1_ns = 0.0;
  try {
    const auto hist = arrival_histogram(stream, s.bin_width_ps);
    const double period_ns = static_cast<double>(stream.sync_period_ps) / 1000.0;
    t1_ns = fit_lifetime(hist, 2.0 * static_cast<double>(s.bin_width_ps) / 1000.0,
                         0.6 * period_ns)
                .t1_ns;
  } catch (const FitError&) {
    return cap; // no resolvable decay: integrate as wide as possible
  }
  double span_ns = 3.0 * t1_ns;
  if (window_width_ns)
    span_ns = std::max(span_ns, *window_width_ns +
                                    2.0 * static_cast<double>(s.bin_width_ps) / 1000.0);
  return std::min<std::int64_t>(cap, std::llround(span_ns * 1000.0));
}

} // namespace detail

/// Single-stream (HBT-style) analysis: optional post-selection, coincidence
/// histogram, peak integration and g2(0).
struct HbtReport {
  CoincidenceHistogram histogram;
  PeakAreas areas;
  ValueWithError g2;
  std::int64_t halfwidth_ps;
};

inline HbtReport analyze_g2(const TagStream& stream,
                            const std::optional<PostSelectionWindow>& window,
                            const AnalysisSettings& settings = {}) {
  stream.validate();
  const TagStream* work = &stream;
  TagStream selected;
  if (window) {
    selected = postselect(stream, *window);
    work = &selected;
  }
  const std::int64_t hw =
      settings.halfwidth_ps
          ? *settings.halfwidth_ps
          : detail::default_halfwidth(
                *work, settings,
                window ? std::optional<double>(window->width_ns) : std::nullopt);
  HbtReport report{coincidence_histogram(*work, settings.max_delay_periods,
                                         settings.bin_width_ps),
                   {}, {}, hw};
  report.areas = peak_areas(report.histogram, hw);
  report.g2 = g2_from_peaks(report.areas, settings.normalization_peaks);
  return report;
}

/// Full HOM analysis of a parallel/orthogonal stream pair measured under
/// the same post-selection window: per-stream g2(0), raw visibility
/// V = 1 - g_par/g_orth and purity-corrected visibility, with counting
/// errors propagated throughout.
struct HomReport {
  HbtReport parallel;
  HbtReport orthogonal;
  ValueWithError g2_hbt;
  ValueWithError v_raw;
  ValueWithError v_corrected;
};

inline HomReport hom_analysis(const TagStream& parallel,
                              const TagStream& orthogonal,
                              const PostSelectionWindow& window,
                              const AnalysisSettings& settings = {}) {
  HomReport report{analyze_g2(parallel, window, settings),
                   analyze_g2(orthogonal, window, settings),
                   settings.g2_hbt.value_or(ValueWithError{0.0, 0.0}),
                   {},
                   {}};
  const CorrelationInputs inputs{report.g2_hbt, report.parallel.g2,
                                 report.orthogonal.g2};
  report.v_raw = raw_visibility(inputs);
  report.v_corrected = corrected_visibility(report.v_raw, report.g2_hbt);
  return report;
}

} // namespace homsim
