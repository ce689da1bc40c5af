// Shared test support: independent oracles and random-input helpers.
// Everything here deliberately avoids the library's closed-form propagator
// and Simpson machinery so that the checks stay two-route.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "homsim/emitter.hpp"

namespace testsup {

using homsim::Cx;
using homsim::EmitterParams;
using homsim::Mat2;

// ---------------------------------------------------------------- RK4 oracle

/// Lindblad right-hand side assembled directly from the operator algebra,
/// independent of the library's vectorized generator.
inline Mat2 lindblad_rhs(const EmitterParams& p, const Mat2& rho) {
  const Mat2 sm = homsim::TwoLevelOperators::sigma_minus();
  const Mat2 sp = homsim::TwoLevelOperators::sigma_plus();
  const Mat2 sz = homsim::TwoLevelOperators::sigma_z();
  Mat2 out;
  {
    const Mat2 jump = sm * rho * sp;
    const Mat2 anti = sp * sm * rho + rho * (sp * sm);
    out = out + p.gamma_sp() * (jump - 0.5 * Cx(1.0) * anti);
  }
  if (p.gamma_star() > 0.0) {
    const Mat2 jump = sz * rho * sz; // sz is self-adjoint
    const Mat2 anti = sz * sz * rho + rho * (sz * sz);
    out = out + 0.5 * p.gamma_star() * (jump - 0.5 * Cx(1.0) * anti);
  }
  return out;
}

/// Fine-step RK4 reference integration of an arbitrary 2x2 operator under
/// the master equation (the quantum-regression propagation uses the same
/// linear map on non-Hermitian seeds).
inline Mat2 rk4_reference(const EmitterParams& p, Mat2 m, double t,
                          int steps_per_unit = 2000) {
  if (t <= 0.0) return m;
  const double scale = std::min(p.t1(), p.t2());
  const int n = std::max(64, static_cast<int>(std::ceil(t / scale *
                                                         steps_per_unit)));
  const double h = t / n;
  for (int s = 0; s < n; ++s) {
    const Mat2 k1 = lindblad_rhs(p, m);
    const Mat2 k2 = lindblad_rhs(p, m + 0.5 * h * k1);
    const Mat2 k3 = lindblad_rhs(p, m + 0.5 * h * k2);
    const Mat2 k4 = lindblad_rhs(p, m + h * k3);
    m = m + (h / 6.0) * (k1 + 2.0 * Cx(1.0) * k2 + 2.0 * Cx(1.0) * k3 + k4);
  }
  return m;
}

/// Quantum-regression brute force: evolve the state to t_min, apply the
/// ladder operator, evolve the resulting operator over |t - t'| and take
/// the expectation. Independent of the library's closed-form grid path.
inline double g1_bruteforce(const EmitterParams& p, double t, double tp) {
  const double tmin = std::min(t, tp);
  const double gap = std::abs(tp - t);
  const Mat2 rho0 = homsim::DensityMatrix::excited().matrix();
  const Mat2 rho_t = rk4_reference(p, rho0, tmin);
  const Mat2 seed = rho_t * homsim::TwoLevelOperators::sigma_plus();
  const Mat2 moved = rk4_reference(p, seed, gap);
  const Cx val = (homsim::TwoLevelOperators::sigma_minus() * moved).trace();
  return val.real(); // G1 is real for this model
}

// ------------------------------------------------------- closed-form oracle

/// (1 - exp(-x))/x with a series fallback; written here independently of
/// homsim/reference.hpp.
inline double one_minus_exp_over(double x) {
  if (std::abs(x) < 1e-9) return 1.0 - 0.5 * x;
  return (1.0 - std::exp(-x)) / x;
}

/// Analytic N = int_s^{s+w} exp(-gamma t) dt.
inline double norm_oracle(double gamma_sp, double start, double width) {
  return std::exp(-gamma_sp * start) * width *
         one_minus_exp_over(gamma_sp * width);
}

/// Analytic double integral of |G1|^2 over [s, s+w]^2 from the
/// antiderivatives of exp(-2 Gamma min) exp(-(Gamma + 2 gamma*) |t - t'|).
inline double overlap_oracle(double gamma_sp, double gamma_star, double start,
                             double width) {
  const double b = gamma_sp + 2.0 * gamma_star;
  const double term1 = width * one_minus_exp_over(2.0 * gamma_sp * width);
  const double term2 = std::exp(-b * width) * width *
                       one_minus_exp_over((2.0 * gamma_sp - b) * width);
  return std::exp(-2.0 * gamma_sp * start) * (2.0 / b) * (term1 - term2);
}

inline double visibility_oracle(double gamma_sp, double gamma_star,
                                double width) {
  const double n = norm_oracle(gamma_sp, 0.0, width);
  return overlap_oracle(gamma_sp, gamma_star, 0.0, width) / (n * n);
}

inline double g2_hom_oracle(double gamma_sp, double gamma_star, double width) {
  return 0.5 * (1.0 - visibility_oracle(gamma_sp, gamma_star, width));
}

// ----------------------------------------------------------------- randoms

inline std::mt19937_64 rng(std::uint64_t seed = 0xC0FFEEull) {
  return std::mt19937_64(seed);
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

/// A random valid density matrix: random Bloch vector inside the unit ball.
inline homsim::DensityMatrix random_state(std::mt19937_64& g) {
  const double r = std::cbrt(uniform(g, 0.0, 1.0));
  const double ct = uniform(g, -1.0, 1.0);
  const double st = std::sqrt(1.0 - ct * ct);
  const double phi = uniform(g, 0.0, 2.0 * 3.14159265358979323846);
  const double x = r * st * std::cos(phi);
  const double y = r * st * std::sin(phi);
  const double z = r * ct;
  Mat2 m;
  m(0, 0) = 0.5 * (1.0 - z); // |g> population
  m(1, 1) = 0.5 * (1.0 + z);
  m(0, 1) = Cx(0.5 * x, -0.5 * y);
  m(1, 0) = Cx(0.5 * x, 0.5 * y);
  return homsim::DensityMatrix(m);
}

inline EmitterParams random_params(std::mt19937_64& g, bool allow_zero_star = true) {
  const double gsp = uniform(g, 0.2, 2.5);
  double gst = uniform(g, 0.0, 3.0);
  if (!allow_zero_star && gst < 0.02) gst = 0.02;
  return EmitterParams(gsp, gst);
}

} // namespace testsup
