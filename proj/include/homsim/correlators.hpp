#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "homsim/emitter.hpp"
#include "homsim/errors.hpp"

namespace homsim {

/// Detection gate after each excitation pulse, in ns. The simulation takes
/// the pulse as instantaneous at t = 0, so start defaults to 0; a nonzero
/// start is supported for sensitivity studies.
struct PostSelectionWindow {
  double start_ns = 0.0;
  double width_ns;

  PostSelectionWindow(double start, double width)
      : start_ns(start), width_ns(width) {
    if (!(width_ns > 0.0)) throw ParameterError("window width must be > 0");
    if (!(start_ns >= 0.0)) throw ParameterError("window start must be >= 0");
  }
  static PostSelectionWindow from_width(double width) {
    return PostSelectionWindow(0.0, width);
  }
  double end_ns() const { return start_ns + width_ns; }
};

/// Two-time field coherence G1(t, t') = <sigma_plus(t) sigma_minus(t')>
/// sampled on a uniform n x n grid over the window.
struct CoherenceGrid {
  std::vector<double> times;
  std::vector<Cx> values; // row-major n x n

  std::size_t size() const { return times.size(); }
  Cx at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
};

/// Post-selected HOM correlation at zero delay for an ideal source.
struct HomCorrelation {
  double g2_hom;        // (1 - overlap_ratio)/2
  double overlap_ratio; // (1/N^2) int int |G1|^2
  double norm_n;        // photon number within the window
};

/// Visibility as a function of the post-selection window width.
/// Also the container for experimental curves fed to the fitter, hence the
/// generous value range.
struct VisibilityCurve {
  std::vector<double> dt_ns;
  std::vector<double> v;
  std::vector<double> v_err; // optional, empty or same length

  VisibilityCurve(std::vector<double> dts, std::vector<double> vs,
                  std::vector<double> errs = {})
      : dt_ns(std::move(dts)), v(std::move(vs)), v_err(std::move(errs)) {
    if (dt_ns.size() != v.size() || (!v_err.empty() && v_err.size() != v.size()))
      throw ParameterError("visibility curve arrays must have equal lengths");
    for (std::size_t i = 0; i < dt_ns.size(); ++i) {
      if (!(dt_ns[i] > 0.0) || (i > 0 && !(dt_ns[i] > dt_ns[i - 1])))
        throw ParameterError("dt values must be positive and strictly increasing");
      if (v[i] < -0.05 || v[i] > 1.05)
        throw ParameterError("visibility outside [-0.05, 1.05]");
    }
  }
};

namespace detail {

/// Integral of uniformly sampled values with spacing h. Composite Simpson,
/// falling back to Simpson 3/8 on the trailing three intervals when the
/// interval count is odd (trapezoid for a single interval).
inline double integrate_uniform(const double* y, std::size_t n, double h) {
  if (n < 2) return 0.0;
  const std::size_t intervals = n - 1;
  if (intervals == 1) return 0.5 * h * (y[0] + y[1]);
  if (intervals == 2) return h / 3.0 * (y[0] + 4.0 * y[1] + y[2]);
  if (intervals == 3)
    return 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]);

  double total = 0.0;
  std::size_t simpson_intervals = intervals;
  if (intervals % 2 != 0) {
    simpson_intervals = intervals - 3;
    const double* t = y + simpson_intervals;
    total += 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]);
  }
  double s = y[0] + y[simpson_intervals];
  for (std::size_t k = 1; k < simpson_intervals; ++k)
    s += (k % 2 ? 4.0 : 2.0) * y[k];
  total += h / 3.0 * s;
  return total;
}

/// Grid size large enough for ~1e-6 relative error of the HOM double
/// integral: the integrand varies on the faster of the population and
/// coherence-squared timescales.
inline std::size_t auto_grid_size(const EmitterParams& p,
                                  const PostSelectionWindow& w,
                                  std::size_t n_requested) {
  const double scale = std::min(0.5 * p.t1(),
                                1.0 / (p.gamma_sp() + 2.0 * p.gamma_star()));
  const double needed = 24.0 * w.width_ns / scale;
  const std::size_t n =
      std::max<std::size_t>(n_requested, static_cast<std::size_t>(needed) + 1);
  return std::min<std::size_t>(n, 16384);
}

} // namespace detail

/// G1(t_i, t_j) by the quantum regression theorem: propagate the emitter
/// state to min(t, t'), multiply by sigma_plus, propagate the resulting
/// operator over |t - t'| and trace against sigma_minus. The propagation
/// uses the closed-form operator path.
inline CoherenceGrid g1_grid(const EmitterParams& p,
                             const PostSelectionWindow& window,
                             std::size_t n) {
  if (n < 16) throw ParameterError("coherence grid needs at least 16 points");
  CoherenceGrid grid;
  grid.times.resize(n);
  grid.values.resize(n * n);
  const double h = window.width_ns / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    grid.times[i] = window.start_ns + h * static_cast<double>(i);

  const Mat2 sminus = TwoLevelOperators::sigma_minus();
  const Mat2 splus = TwoLevelOperators::sigma_plus();
  const Mat2 rho0 = DensityMatrix::excited().matrix();
  for (std::size_t i = 0; i < n; ++i) {
    const Mat2 rho_t = propagate_operator(p, rho0, grid.times[i]);
    const Mat2 seed = rho_t * splus;
    for (std::size_t j = i; j < n; ++j) {
      const Mat2 m = propagate_operator(p, seed, grid.times[j] - grid.times[i]);
      const Cx g = (sminus * m).trace();
      grid.values[i * n + j] = g;
      grid.values[j * n + i] = std::conj(g);
    }
  }
  return grid;
}

/// Photon number N = integral over the window of the excited population,
/// by composite quadrature.
inline double norm_photon_number(const EmitterParams& p,
                                 const PostSelectionWindow& window) {
  const double per_t1 = 128.0 * window.width_ns / p.t1();
  std::size_t n = std::max<std::size_t>(257, static_cast<std::size_t>(per_t1) + 1);
  n = std::min<std::size_t>(n, 1 << 21);
  std::vector<double> y(n);
  const double h = window.width_ns / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = excited_population(p, window.start_ns + h * static_cast<double>(i));
  return detail::integrate_uniform(y.data(), n, h);
}

namespace detail {

/// |G1|^2 integrated over the window square on an n-point grid. The
/// integrand has a kink on the diagonal, so integrate the upper triangle
/// t' >= t (smooth there) row by row and double it, using the Hermitian
/// symmetry |G1(t,t')| = |G1(t',t)|. Within a row the kernel falls off
/// geometrically, |G1(t_i, t_j)|^2 = rho_ee(t_i)^2 q^(j-i) with
/// q = exp(-2 (gamma_sp/2 + gamma_star) h), so rows are built by
/// recurrence; memory stays O(n).
inline double hom_overlap_integral(const EmitterParams& p,
                                   const PostSelectionWindow& window,
                                   std::size_t n) {
  const double h = window.width_ns / static_cast<double>(n - 1);
  const double q = std::exp(-2.0 * p.total_dephasing() * h);
  std::vector<double> row(n), outer(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = window.start_ns + h * static_cast<double>(i);
    const double pop = excited_population(p, ti); // = G1(t_i, t_i)
    double v = pop * pop;
    for (std::size_t j = i; j < n; ++j) {
      row[j - i] = v;
      v *= q;
    }
    outer[i] = integrate_uniform(row.data(), n - i, h);
  }
  return 2.0 * integrate_uniform(outer.data(), n, h);
}

} // namespace detail

/// Post-selected g2_HOM(0) = (1 - I/N^2)/2 with I the double integral of
/// |G1|^2 over the window square. The ideal-source value: a finite HBT
/// correlation enters only through the downstream correction formula.
/// A half-resolution evaluation backs a convergence check.
inline HomCorrelation g2_hom_postselected(const EmitterParams& p,
                                          const PostSelectionWindow& window,
                                          std::size_t n = 256) {
  if (n < 64) throw ParameterError("g2_hom grid needs at least 64 points");
  const std::size_t n_eff = detail::auto_grid_size(p, window, n);
  const double norm = norm_photon_number(p, window);
  const double integral = detail::hom_overlap_integral(p, window, n_eff);

  // halving the grid scales the composite-Simpson error by ~16, so the
  // difference estimates 15x the fine-grid error
  const std::size_t n_half = std::max<std::size_t>(64, n_eff / 2 + 1);
  const double integral_half = detail::hom_overlap_integral(p, window, n_half);
  if (std::abs(integral - integral_half) / 15.0 > 1e-6 * integral)
    throw AccuracyError("HOM quadrature did not converge under refinement");

  // Cauchy-Schwarz bounds the overlap by N^2; clip quadrature noise
  const double ratio = std::min(1.0, integral / (norm * norm));
  const double g2 = 0.5 * (1.0 - ratio);
  return HomCorrelation{g2, ratio, norm};
}

/// V_HOM(dt) = 1 - 2 g2_HOM(dt) over an increasing list of window widths,
/// window start fixed at 0.
inline VisibilityCurve visibility_curve(const EmitterParams& p,
                                        std::span<const double> dt_values,
                                        std::size_t n = 256) {
  if (dt_values.empty()) throw ParameterError("empty dt grid");
  std::vector<double> dts(dt_values.begin(), dt_values.end());
  for (std::size_t i = 0; i < dts.size(); ++i)
    if (!(dts[i] > 0.0) || (i > 0 && !(dts[i] > dts[i - 1])))
      throw ParameterError("dt values must be positive and strictly increasing");
  std::vector<double> vs(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const auto hom =
        g2_hom_postselected(p, PostSelectionWindow::from_width(dts[i]), n);
    vs[i] = 1.0 - 2.0 * hom.g2_hom;
  }
  return VisibilityCurve(std::move(dts), std::move(vs));
}

} // namespace homsim
