#include <catch2/catch_amalgamated.hpp>

#include "homsim/photon_mc.hpp"
#include "homsim/reference.hpp"
#include "homsim/tag_analysis.hpp"
#include "support.hpp"

using namespace homsim;
using Catch::Approx;

namespace {

McConfig base_config(McMode mode, std::int64_t n_pulses, std::uint64_t seed) {
  McConfig cfg;
  cfg.emitter = EmitterParams::from_lifetimes(1.9, 2.4);
  cfg.rep_period_ns = 12.5;
  cfg.n_pulses = n_pulses;
  cfg.mode = mode;
  cfg.seed = seed;
  return cfg;
}

/// Peak area after post-selection. The window clips pair delays to +-width
/// around each peak, so peaks do not bleed into each other and the
/// enumeration oracle applies exactly.
double peak_area(const TagStream& stream, const PostSelectionWindow& window,
                 int index) {
  const AnalysisSettings settings;
  const auto selected = postselect(stream, window);
  const auto hist = coincidence_histogram(selected, settings.max_delay_periods,
                                          settings.bin_width_ps);
  const auto areas =
      peak_areas(hist, stream.sync_period_ps / 2 - settings.bin_width_ps);
  return areas.at(index).area;
}

} // namespace

TEST_CASE("config validation", "[photon-mc]") {
  McConfig cfg = base_config(McMode::hbt, 10, 1);
  CHECK_NOTHROW(cfg.validate());
  cfg.loss = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.loss = 1.0;
  cfg.p_background = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.p_background = 0.0;
  cfg.rep_period_ns = 12.0001234; // not an integer ps count
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.rep_period_ns = 12.5;
  // the reference combination (12.5 ns period, T1 = 1.9 ns) sits just
  // inside the warning region: emission tails spill at the e^-6.6 level
  CHECK(base_config(McMode::hbt, 10, 1).rep_period_is_short() == true);
  McConfig fast = base_config(McMode::hbt, 10, 1);
  fast.emitter = EmitterParams::from_lifetimes(1.0, 2.4);
  CHECK(fast.rep_period_is_short() == false); // 12.5 > 10 * 1.0
}

TEST_CASE("determinism and counting", "[photon-mc]") {
  SECTION("identical seeds give bit-identical streams") {
    auto cfg = base_config(McMode::hom_parallel, 20000, 99);
    cfg.p_background = 0.1;
    cfg.loss = 0.8;
    cfg.detector_jitter_sigma_ns = 0.05;
    const TagStream a = generate_stream(cfg);
    const TagStream b = generate_stream(cfg);
    REQUIRE(a.records.size() == b.records.size());
    CHECK(a.records == b.records);
    cfg.seed = 100;
    const TagStream c = generate_stream(cfg);
    CHECK(a.records != c.records);
  }
  SECTION("total detected counts follow n_pulses (1 + p) loss") {
    auto cfg = base_config(McMode::hbt, 200000, 7);
    cfg.p_background = 0.15;
    cfg.loss = 0.7;
    const TagStream s = generate_stream(cfg);
    const double expect =
        static_cast<double>(cfg.n_pulses) * (1.0 + cfg.p_background) * cfg.loss;
    CHECK(std::abs(static_cast<double>(s.records.size()) - expect) <=
          4.0 * std::sqrt(expect));
  }
  SECTION("timestamps are sorted and slots non-negative") {
    const TagStream s = generate_stream(base_config(McMode::hom_parallel, 5000, 3));
    CHECK_NOTHROW(s.validate());
  }
}

TEST_CASE("emission delay distribution", "[photon-mc]") {
  auto cfg = base_config(McMode::hbt, 1000000, 17);
  const TagStream s = generate_stream(cfg);
  const auto hist = arrival_histogram(s, 50);
  const auto fit = fit_lifetime(hist, 0.1, 7.5);
  CHECK(fit.t1_ns == Approx(1.9).epsilon(0.02));
}

TEST_CASE("coalescence kernel identity behind the MC model",
          "[photon-mc][correlators]") {
  // |G1(t,t')|^2 / (rho_ee(t) rho_ee(t')) = exp(-2 gamma* |t-t'|): the MC
  // pairwise coherence factor reproduces the master-equation overlap after
  // averaging.
  auto gen = testsup::rng(83);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = testsup::random_params(gen);
    const auto grid = g1_grid(p, PostSelectionWindow::from_width(3.0), 16);
    const std::size_t i = 3, j = 14;
    const double ratio =
        std::norm(grid.at(i, j)) /
        (excited_population(p, grid.times[i]) *
         excited_population(p, grid.times[j]));
    CHECK(ratio == Approx(std::exp(-2.0 * p.gamma_star() *
                                   std::abs(grid.times[i] - grid.times[j])))
                       .epsilon(1e-9));
  }
}

TEST_CASE("expected peak patterns by path enumeration", "[photon-mc]") {
  SECTION("HBT with ideal photons: zero center, unit side peaks") {
    const auto pattern =
        expected_peak_pattern(McMode::hbt, base_config(McMode::hbt, 1, 1), 3);
    for (const auto& e : pattern)
      CHECK(e.area == Approx(e.index == 0 ? 0.0 : 1.0));
  }
  SECTION("HBT center peak equals 2 q_s beta / (q_s + beta)^2") {
    auto cfg = base_config(McMode::hbt, 1, 1);
    cfg.p_background = 0.2;
    const auto pattern = expected_peak_pattern(McMode::hbt, cfg, 2);
    const double expect = 2.0 * 0.2 / (1.2 * 1.2);
    CHECK(pattern[2].index == 0);
    CHECK(pattern[2].area == Approx(expect).epsilon(1e-12));
  }
  SECTION("HOM orthogonal ideal: center 1/2, adjacent 3/4") {
    const auto pattern = expected_peak_pattern(
        McMode::hom_orthogonal, base_config(McMode::hom_orthogonal, 1, 1), 3);
    for (const auto& e : pattern) {
      if (e.index == 0)
        CHECK(e.area == Approx(0.5));
      else if (std::abs(e.index) == 1)
        CHECK(e.area == Approx(0.75));
      else
        CHECK(e.area == Approx(1.0));
    }
  }
  SECTION("HOM parallel without dephasing: full coalescence") {
    auto cfg = base_config(McMode::hom_parallel, 1, 1);
    cfg.emitter = EmitterParams(1.0 / 1.9, 0.0);
    const auto pattern = expected_peak_pattern(McMode::hom_parallel, cfg, 2);
    CHECK(pattern[2].area == Approx(0.0).margin(1e-12));
  }
  SECTION("HOM parallel center approaches (1 - V)/2 for wide windows") {
    auto cfg = base_config(McMode::hom_parallel, 1, 1);
    const auto pattern = expected_peak_pattern(McMode::hom_parallel, cfg, 2);
    const double vbar = asymptotic_visibility(cfg.emitter);
    CHECK(pattern[2].area == Approx(0.5 * (1.0 - vbar)).epsilon(1e-9));
  }
}

TEST_CASE("Monte Carlo histograms match the enumeration oracle", "[photon-mc]") {
  const PostSelectionWindow window(0.0, 3.0);
  SECTION("perfect indistinguishability: post-selected center peak empty") {
    // period stretched so emission tails cannot masquerade as coincidences
    auto cfg = base_config(McMode::hom_parallel, 300000, 21);
    cfg.rep_period_ns = 25.0;
    cfg.emitter = EmitterParams(1.0 / 1.9, 0.0);
    const TagStream s = generate_stream(cfg);
    CHECK(peak_area(s, window, 0) <= 2.0);
  }
  SECTION("orthogonal: center/far = 1/2 and adjacent/far = 3/4 within 3 sigma") {
    const TagStream s =
        generate_stream(base_config(McMode::hom_orthogonal, 400000, 23));
    const double far =
        0.25 * (peak_area(s, window, 2) + peak_area(s, window, -2) +
                peak_area(s, window, 3) + peak_area(s, window, -3));
    const double center = peak_area(s, window, 0);
    const double adjacent =
        0.5 * (peak_area(s, window, 1) + peak_area(s, window, -1));
    CHECK(std::abs(center - 0.5 * far) <= 3.0 * std::sqrt(center + 0.25 * far));
    CHECK(std::abs(adjacent - 0.75 * far) <=
          3.0 * std::sqrt(adjacent + 0.5625 * far));
  }
  SECTION("strong dephasing makes parallel and orthogonal identical") {
    auto cfg = base_config(McMode::hom_parallel, 400000, 29);
    cfg.emitter = EmitterParams(1.0 / 1.9, 50.0);
    const double par = peak_area(generate_stream(cfg), window, 0);
    cfg.mode = McMode::hom_orthogonal;
    cfg.seed = 31;
    const double orth = peak_area(generate_stream(cfg), window, 0);
    CHECK(std::abs(par - orth) <= 3.0 * std::sqrt(par + orth));
  }
}

TEST_CASE("background tuned to a target purity", "[photon-mc]") {
  // With post-selection [0, 3 ns], choose p so that the windowed pattern
  // gives g2(0) = 0.14: 2r/(1+r)^2 = 0.14 with r = p q_b / q_s. The period
  // is stretched to 25 ns to keep emission tails out of neighboring slots.
  auto cfg = base_config(McMode::hbt, 2000000, 37);
  cfg.rep_period_ns = 25.0;
  const double q_s = 1.0 - std::exp(-3.0 / 1.9);
  const double q_b = 3.0 / cfg.rep_period_ns;
  const double r = 0.0819418755; // smaller root of 0.14(1+r)^2 = 2r
  cfg.p_background = r * q_s / q_b;
  REQUIRE(cfg.p_background < 1.0);

  const PostSelectionWindow window(0.0, 3.0);
  const auto pattern = expected_peak_pattern(McMode::hbt, cfg, 2, window);
  CHECK(pattern[2].area == Approx(0.14).margin(2e-4));

  const auto report = analyze_g2(generate_stream(cfg), window);
  CHECK(std::abs(report.g2.value - 0.14) <= 3.0 * report.g2.sigma);
}

TEST_CASE("jitter leaves the coalescence statistics invariant", "[photon-mc]") {
  auto cfg = base_config(McMode::hom_parallel, 400000, 41);
  const double t1 = cfg.emitter.t1();
  const PostSelectionWindow tight(0.0, 3.0);
  const TagStream clean = generate_stream(cfg);
  cfg.detector_jitter_sigma_ns = 0.1 * t1;
  cfg.seed = 43;
  const TagStream jittered = generate_stream(cfg);
  // widen the window by ~4 sigma so jitter does not clip detections
  const PostSelectionWindow widened(0.0, 3.0 + 0.8 * t1);

  // windows differ, so compare center fractions against their far peaks
  const auto center_fraction = [](const TagStream& s,
                                  const PostSelectionWindow& w, double& c,
                                  double& f) {
    c = peak_area(s, w, 0);
    f = 0.25 * (peak_area(s, w, 2) + peak_area(s, w, -2) +
                peak_area(s, w, 3) + peak_area(s, w, -3));
  };
  double a, fa, b, fb;
  center_fraction(clean, tight, a, fa);
  center_fraction(jittered, widened, b, fb);
  const double ra = a / fa, rb = b / fb;
  const double sigma =
      std::sqrt(a / (fa * fa) + b / (fb * fb) + ra * ra / fa + rb * rb / fb);
  // the widened window admits slightly more dephased pairs; allow the
  // theory shift plus 3 sigma statistics
  const double va = reference_visibility(cfg.emitter, tight);
  const double vb = reference_visibility(cfg.emitter, widened);
  const double theory_shift = 0.5 * std::abs(va - vb);
  CHECK(std::abs(ra - rb) <= theory_shift + 3.0 * sigma);
}

TEST_CASE("end-to-end pipeline against the master equation", "[photon-mc]") {
  auto cfg = base_config(McMode::hom_parallel, 2000000, 47);
  cfg.emitter = EmitterParams::from_lifetimes(1.9, 2.4);
  const TagStream par = generate_stream(cfg);
  cfg.mode = McMode::hom_orthogonal;
  cfg.seed = 53;
  const TagStream orth = generate_stream(cfg);

  const PostSelectionWindow window(0.0, 3.0);
  const HomReport report = hom_analysis(par, orth, window);
  const double v_theory =
      1.0 - 2.0 * g2_hom_postselected(cfg.emitter, window).g2_hom;
  CHECK(std::abs(report.v_raw.value - v_theory) <= 3.0 * report.v_raw.sigma);
}

TEST_CASE("loss cancels in the normalized visibility", "[photon-mc]") {
  // coalescence is decided at the beamsplitter, detection afterwards, so
  // per-photon loss scales all peaks alike and the extracted visibility is
  // unchanged
  auto cfg = base_config(McMode::hom_parallel, 1500000, 59);
  cfg.emitter = EmitterParams::from_lifetimes(1.9, 2.4);
  cfg.loss = 0.6;
  const TagStream par = generate_stream(cfg);
  cfg.mode = McMode::hom_orthogonal;
  cfg.seed = 61;
  const TagStream orth = generate_stream(cfg);

  const PostSelectionWindow window(0.0, 3.0);
  const HomReport report = hom_analysis(par, orth, window);
  const double v_theory =
      1.0 - 2.0 * g2_hom_postselected(cfg.emitter, window).g2_hom;
  CHECK(std::abs(report.v_raw.value - v_theory) <= 3.0 * report.v_raw.sigma);
}
