#include <catch2/catch_amalgamated.hpp>

#include "homsim/inference.hpp"
#include "support.hpp"

using namespace homsim;
using Catch::Approx;

namespace {

VisibilityCurve model_curve(double v_inf, double tau,
                            const std::vector<double>& dts) {
  std::vector<double> vs(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i)
    vs[i] = v_inf + (1.0 - v_inf) * std::exp(-dts[i] / tau);
  return VisibilityCurve(dts, vs);
}

} // namespace

TEST_CASE("exponential fit recovers its generating model", "[inference]") {
  SECTION("worked pair (0.3, 2.0) at 15 points") {
    std::vector<double> dts;
    for (int i = 1; i <= 15; ++i) dts.push_back(0.5 * i);
    const auto fit = fit_visibility_decay(model_curve(0.3, 2.0, dts));
    CHECK(fit.tau_v == Approx(2.0).epsilon(1e-6));
    CHECK(fit.v_inf == Approx(0.3).margin(1e-6));
    CHECK(fit.residual_norm < 1e-7);
  }
  SECTION("120 randomized noiseless pairs to 1e-6") {
    auto gen = testsup::rng(71);
    for (int rep = 0; rep < 120; ++rep) {
      const double v_inf = testsup::uniform(gen, 0.0, 0.95);
      const double tau = testsup::uniform(gen, 0.2, 8.0);
      std::vector<double> dts;
      for (int i = 1; i <= 20; ++i) dts.push_back(0.4 * i);
      const auto fit = fit_visibility_decay(model_curve(v_inf, tau, dts));
      CHECK(fit.tau_v == Approx(tau).epsilon(1e-6));
      CHECK(fit.v_inf == Approx(v_inf).margin(1e-6));
    }
  }
  SECTION("weighted fit uses the provided errors") {
    std::vector<double> dts{0.5, 1.0, 2.0, 3.0, 5.0, 8.0};
    auto curve = model_curve(0.4, 1.5, dts);
    std::vector<double> vs = curve.v;
    vs[5] += 0.2; // an outlier with a huge error bar should barely matter
    std::vector<double> errs(dts.size(), 0.001);
    errs[5] = 10.0;
    const auto fit =
        fit_visibility_decay(VisibilityCurve(dts, vs, errs));
    CHECK(fit.tau_v == Approx(1.5).epsilon(1e-3));
  }
  SECTION("degenerate and invalid inputs") {
    const std::vector<double> dts{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(
        fit_visibility_decay(VisibilityCurve(dts, {1.0, 1.0, 1.0})),
        FitError);
    CHECK_THROWS_AS(
        fit_visibility_decay(VisibilityCurve({1.0, 2.0}, {0.9, 0.8})),
        ParameterError);
    // curve validation: lengths, ordering, value range
    CHECK_THROWS_AS(VisibilityCurve(dts, {0.9, 0.8}), ParameterError);
    CHECK_THROWS_AS(VisibilityCurve({2.0, 1.0}, {0.9, 0.8}), ParameterError);
    CHECK_THROWS_AS(VisibilityCurve(dts, {0.9, 1.2, 0.8}), ParameterError);
    CHECK_THROWS_AS(VisibilityCurve(dts, {0.9, -0.2, 0.8}), ParameterError);
  }
  SECTION("non-monotone noisy data still fits") {
    const std::vector<double> dts{0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
    const std::vector<double> vs{0.93, 0.86, 0.88, 0.77, 0.74, 0.70};
    CHECK_NOTHROW(fit_visibility_decay(VisibilityCurve(dts, vs)));
  }
}

TEST_CASE("simulated decay time at the reference parameters", "[inference]") {
  // T1 = 1.9 ns, T2* = 2.4 ns on the default map dt grid (x T1); regression
  // value frozen from the independent prototype oracle chain. It sits just
  // above the upper reference decay time of 2.0 ns.
  const EmitterParams p = EmitterParams::from_lifetimes(1.9, 2.4);
  std::vector<double> dts = default_map_dt_grid();
  for (double& d : dts) d *= p.t1();
  const auto curve = visibility_curve(p, dts);
  const auto fit = fit_visibility_decay(curve);
  CHECK(fit.tau_v == Approx(2.125).margin(0.015));
}

TEST_CASE("dephasing map construction", "[inference]") {
  SECTION("strictly decreasing over the default grid") {
    const auto map = build_dephasing_map(default_map_gamma_star_grid(),
                                         default_map_dt_grid(), 128);
    for (std::size_t i = 1; i < map.tau_v.size(); ++i)
      CHECK(map.tau_v[i] < map.tau_v[i - 1]);
  }
  SECTION("single-point grid yields a one-entry map") {
    const std::vector<double> gs{1.0};
    const auto map = build_dephasing_map(gs, default_map_dt_grid(), 128);
    CHECK(map.gamma_star.size() == 1);
    CHECK(map.tau_v.size() == 1);
  }
  SECTION("ends ratio: tau_v(0.1)/tau_v(10) > 5 (frozen regression ~9.3)") {
    const std::vector<double> gs{0.1, 10.0};
    const auto map = build_dephasing_map(gs, default_map_dt_grid(), 256);
    const double ratio = map.tau_v[0] / map.tau_v[1];
    CHECK(ratio > 5.0);
    CHECK(ratio == Approx(9.28).epsilon(0.02));
  }
  SECTION("invalid grids") {
    CHECK_THROWS_AS(build_dephasing_map(std::vector<double>{},
                                        default_map_dt_grid()),
                    ParameterError);
    CHECK_THROWS_AS(build_dephasing_map(std::vector<double>{-0.5, 1.0},
                                        default_map_dt_grid()),
                    ParameterError);
  }
}

TEST_CASE("dephasing map monotone on randomized grids", "[inference][property]") {
  auto gen = testsup::rng(73);
  std::vector<double> gs;
  for (int i = 0; i < 100; ++i) gs.push_back(testsup::uniform(gen, 0.05, 5.0));
  std::sort(gs.begin(), gs.end());
  gs.erase(std::unique(gs.begin(), gs.end()), gs.end());
  const auto map = build_dephasing_map(gs, default_map_dt_grid(), 96);
  for (std::size_t i = 1; i < map.tau_v.size(); ++i)
    CHECK(map.tau_v[i] < map.tau_v[i - 1]);
}

TEST_CASE("dephasing inversion", "[inference]") {
  const auto map = build_dephasing_map(default_map_gamma_star_grid(),
                                       default_map_dt_grid(), 128);
  SECTION("round trip at gamma* = 0.5 gamma_sp within 1 %") {
    const EmitterParams p(1.0, 0.5);
    std::vector<double> dts = default_map_dt_grid();
    const auto curve = visibility_curve(p, dts, 128);
    const double tau = fit_visibility_decay(curve).tau_v;
    const auto est = invert_dephasing(map, tau, 1.0);
    CHECK(est.gamma_star_per_ns == Approx(0.5).epsilon(0.01));
  }
  SECTION("round trip across the map interior within 1 %") {
    for (std::size_t i = 2; i + 2 < map.gamma_star.size(); i += 5) {
      const auto est = invert_dephasing(map, map.tau_v[i], 1.0);
      CHECK(est.gamma_star_per_ns ==
            Approx(map.gamma_star[i]).epsilon(0.01));
    }
  }
  SECTION("reference anchor: tau_V = 2.0 ns at T1 = 1.9 ns") {
    const auto est = invert_dephasing(map, 2.0, 1.0 / 1.9);
    CHECK(est.t2_star_ns > 1.7);
    CHECK(est.t2_star_ns < 3.1);
    CHECK(est.t2_ns == Approx(1.36).margin(0.04)); // frozen regression
    CHECK(est.t2_ns == Approx(1.0 / (0.5 / 1.9 + est.gamma_star_per_ns))
                           .epsilon(1e-12));
  }
  SECTION("out-of-range queries raise, no silent extrapolation") {
    CHECK_THROWS_AS(invert_dephasing(map, map.tau_v.back() * 0.5, 1.0),
                    RangeError);
    CHECK_THROWS_AS(invert_dephasing(map, map.tau_v.front() * 2.0, 1.0),
                    RangeError);
  }
}

TEST_CASE("raw visibility from correlation inputs", "[inference]") {
  SECTION("reference numbers") {
    const CorrelationInputs in{{0.14, 0.03}, {0.32, 0.05}, {0.58, 0.07}};
    const auto v = raw_visibility(in);
    CHECK(v.value == Approx(0.4482758621).epsilon(1e-9));
    CHECK(v.sigma == Approx(0.1089289232).margin(1e-7));
    // matches the rounded reference value 0.44 +- 0.11
    CHECK(v.value == Approx(0.44).margin(0.02));
    CHECK(v.sigma == Approx(0.11).margin(0.01));
  }
  SECTION("equal correlations mean no interference") {
    const auto v = raw_visibility({{0.0, 0.0}, {0.5, 0.02}, {0.5, 0.02}});
    CHECK(v.value == Approx(0.0).margin(1e-12));
  }
  SECTION("zero parallel peak: V = 1 and only the parallel error term") {
    const auto v = raw_visibility({{0.0, 0.0}, {0.0, 0.01}, {0.5, 0.07}});
    CHECK(v.value == Approx(1.0));
    CHECK(v.sigma == Approx(0.01 / 0.5).epsilon(1e-12));
  }
  SECTION("invalid orthogonal") {
    CHECK_THROWS_AS(raw_visibility({{0.0, 0.0}, {0.3, 0.05}, {0.0, 0.05}}),
                    ParameterError);
  }
}

TEST_CASE("purity-corrected visibility", "[inference]") {
  SECTION("reference numbers") {
    const auto v = corrected_visibility({0.4482758621, 0.1089305}, {0.14, 0.03});
    CHECK(v.value == Approx(0.5737931034).epsilon(1e-9));
    CHECK(v.value == Approx(0.56).margin(0.02));
    // full first-order propagation including the purity term
    CHECK(v.sigma == Approx(0.1420015).margin(1e-6));
  }
  SECTION("ideal purity is the identity") {
    const auto v = corrected_visibility({0.37, 0.05}, {0.0, 0.0});
    CHECK(v.value == Approx(0.37));
    CHECK(v.sigma == Approx(0.05));
  }
  SECTION("zero visibility stays zero") {
    const auto v = corrected_visibility({0.0, 0.04}, {0.2, 0.05});
    CHECK(v.value == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("Purcell analysis", "[inference]") {
  SECTION("reference factors 7 and 15") {
    CHECK(purcell_visibility(1.9, 2.4, 7.0).visibility ==
          Approx(0.8155339806).epsilon(1e-9));
    CHECK(purcell_visibility(1.9, 2.4, 15.0).visibility ==
          Approx(0.9045226130).epsilon(1e-9));
    CHECK(purcell_visibility(1.9, 2.4, 7.0).t1_eff_ns == Approx(1.9 / 7.0));
  }
  SECTION("no enhancement reproduces T2/(2 T1)") {
    const auto r = purcell_visibility(1.9, 2.4, 1.0);
    CHECK(r.visibility == Approx(0.3870967742).epsilon(1e-9));
    // consistent with the printed T2 = 1.5 ns over 2 T1 = 3.8 ns
    CHECK(r.visibility == Approx(1.5 / 3.8).margin(0.01));
  }
  SECTION("strictly increasing in F_p with limit 1") {
    double prev = 0.0;
    for (const double f : {1.0, 2.0, 5.0, 20.0, 200.0, 2e4}) {
      const double v = purcell_visibility(1.9, 2.4, f).visibility;
      CHECK(v > prev);
      prev = v;
    }
    CHECK(prev > 0.9999);
  }
  SECTION("inhibition requires the explicit flag") {
    CHECK_THROWS_AS(purcell_visibility(1.9, 2.4, 0.5), ParameterError);
    CHECK(purcell_visibility(1.9, 2.4, 0.5, true).visibility <
          purcell_visibility(1.9, 2.4, 1.0).visibility);
  }
  SECTION("required factor is the exact inverse") {
    // the formula value; the rounded reference claim is F_p = 7 for 80 %
    // corresponds to V(7) = 0.816 above
    CHECK(required_purcell(1.9, 2.4, 0.80) == Approx(6.3333333333).epsilon(1e-9));
    CHECK(required_purcell(1.9, 2.4, 0.90) == Approx(14.25).epsilon(1e-9));
    const double v3 = purcell_visibility(1.9, 2.4, 3.0).visibility;
    CHECK(required_purcell(1.9, 2.4, v3) == Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(required_purcell(1.9, 2.4, 1.0), ParameterError);
    CHECK_THROWS_AS(required_purcell(1.9, 2.4, -0.1), ParameterError);
  }
}
