#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "homsim/correlators.hpp"
#include "homsim/errors.hpp"

namespace homsim {

/// A scalar with a 1-sigma uncertainty.
struct ValueWithError {
  double value;
  double sigma;
};

/// Result of the intercept-1 exponential fit
/// V(dt) = v_inf + (1 - v_inf) exp(-dt/tau_v).
struct ExponentialFit {
  double tau_v;         // ns
  double v_inf;         // asymptotic visibility
  double residual_norm; // sqrt of the (weighted) SSE
};

namespace detail {

/// Weighted SSE of the intercept-1 exponential model at a given tau, with
/// the linear amplitude parameter v_inf solved in closed form (clamped to
/// [0, 1]).
inline double fit_sse_at_tau(std::span<const double> dts,
                             std::span<const double> vs,
                             std::span<const double> ws, double tau,
                             double* v_inf_out = nullptr) {
  double swa2 = 0.0, swra = 0.0;
  const std::size_t n = dts.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(-dts[i] / tau);
    const double a = 1.0 - x[i];
    swa2 += ws[i] * a * a;
    swra += ws[i] * (vs[i] - x[i]) * a;
  }
  double v_inf = swa2 > 0.0 ? swra / swa2 : 0.0;
  v_inf = std::clamp(v_inf, 0.0, 1.0);
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = vs[i] - x[i] - v_inf * (1.0 - x[i]);
    sse += ws[i] * r * r;
  }
  if (v_inf_out) *v_inf_out = v_inf;
  return sse;
}

} // namespace detail

/// Least-squares fit of V(dt) = v_inf + (1 - v_inf) exp(-dt/tau), the
/// unique single exponential with intercept fixed at 1 and free asymptote.
/// Global 1-D search over tau (log-grid scan plus golden-section
/// refinement); v_inf is linear given tau and solved in closed form.
/// Weighted by 1/sigma^2 when the curve carries errors.
inline ExponentialFit fit_visibility_decay(const VisibilityCurve& curve) {
  const std::size_t n = curve.dt_ns.size();
  if (n < 3) throw ParameterError("visibility fit needs at least 3 points");
  const auto [vmin_it, vmax_it] = std::minmax_element(curve.v.begin(), curve.v.end());
  if (*vmax_it - *vmin_it < 1e-12)
    throw FitError("degenerate visibility curve: all values equal");

  std::vector<double> ws(n, 1.0);
  if (!curve.v_err.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(curve.v_err[i] > 0.0))
        throw ParameterError("visibility errors must be positive");
      ws[i] = 1.0 / (curve.v_err[i] * curve.v_err[i]);
    }
  }

  const double lo = std::log(curve.dt_ns.front() / 50.0);
  const double hi = std::log(curve.dt_ns.back() * 50.0);
  const int n_scan = 256;
  double best_sse = std::numeric_limits<double>::infinity();
  double best_log_tau = lo;
  for (int k = 0; k < n_scan; ++k) {
    const double lt = lo + (hi - lo) * k / (n_scan - 1);
    const double sse =
        detail::fit_sse_at_tau(curve.dt_ns, curve.v, ws, std::exp(lt));
    if (sse < best_sse) {
      best_sse = sse;
      best_log_tau = lt;
    }
  }

  // golden-section refinement around the scan minimum
  const double step = (hi - lo) / (n_scan - 1);
  double a = best_log_tau - step, b = best_log_tau + step;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = detail::fit_sse_at_tau(curve.dt_ns, curve.v, ws, std::exp(c));
  double fd = detail::fit_sse_at_tau(curve.dt_ns, curve.v, ws, std::exp(d));
  for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = detail::fit_sse_at_tau(curve.dt_ns, curve.v, ws, std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = detail::fit_sse_at_tau(curve.dt_ns, curve.v, ws, std::exp(d));
    }
  }
  const double tau = std::exp(0.5 * (a + b));
  double v_inf = 0.0;
  const double sse = detail::fit_sse_at_tau(curve.dt_ns, curve.v, ws, tau, &v_inf);
  return ExponentialFit{tau, v_inf, std::sqrt(sse)};
}

/// Tabulated relation between the dephasing rate and the visibility decay
/// time, both dimensionless: gamma_star in units of gamma_sp, tau_v in
/// units of 1/gamma_sp. Strictly decreasing, hence invertible.
struct DephasingMap {
  std::vector<double> gamma_star; // units of gamma_sp
  std::vector<double> tau_v;      // units of 1/gamma_sp
};

/// Default grids for map construction (dimensionless, gamma_sp = 1):
/// log-spaced dephasing rates and a linear window-width grid covering the
/// decay of V(dt).
inline std::vector<double> default_map_gamma_star_grid() {
  std::vector<double> g(41);
  const double lo = std::log(0.05), hi = std::log(5.0);
  const double steps = static_cast<double>(g.size() - 1);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / steps);
  return g;
}
inline std::vector<double> default_map_dt_grid() {
  std::vector<double> d(32);
  const double steps = static_cast<double>(d.size() - 1);
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = 0.25 + (8.0 - 0.25) * static_cast<double>(i) / steps;
  return d;
}

/// For each dephasing rate, simulate the visibility curve and fit its decay
/// time. Enforces strict monotonicity of tau_v(gamma_star); a violation
/// signals an inadequate dt grid or grid size.
inline DephasingMap build_dephasing_map(std::span<const double> gamma_star_grid,
                                        std::span<const double> dt_grid,
                                        std::size_t n = 256) {
  if (gamma_star_grid.empty() || dt_grid.empty())
    throw ParameterError("dephasing map grids must be non-empty");
  DephasingMap map;
  map.gamma_star.assign(gamma_star_grid.begin(), gamma_star_grid.end());
  for (std::size_t i = 0; i < map.gamma_star.size(); ++i) {
    if (!(map.gamma_star[i] > 0.0))
      throw ParameterError("gamma_star grid values must be > 0");
    if (i > 0 && !(map.gamma_star[i] > map.gamma_star[i - 1]))
      throw ParameterError("gamma_star grid must be strictly increasing");
  }
  map.tau_v.resize(map.gamma_star.size());
  for (std::size_t i = 0; i < map.gamma_star.size(); ++i) {
    const EmitterParams p(1.0, map.gamma_star[i]);
    const VisibilityCurve curve = visibility_curve(p, dt_grid, n);
    map.tau_v[i] = fit_visibility_decay(curve).tau_v;
  }
  for (std::size_t i = 1; i < map.tau_v.size(); ++i)
    if (!(map.tau_v[i] < map.tau_v[i - 1]))
      throw AccuracyError(
          "tau_v(gamma_star) is not strictly decreasing; refine the dt grid");
  return map;
}

namespace detail {

/// Shape-preserving piecewise-cubic interpolant (Fritsch-Carlson slopes).
/// Monotone data yields a monotone interpolant.
class PchipInterpolant {
public:
  PchipInterpolant(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)), m_(x_.size(), 0.0) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw ParameterError("interpolant needs at least 2 matched points");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw ParameterError("interpolation abscissae must strictly increase");
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
        const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
  }

  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }

  double operator()(double x) const {
    if (x < x_.front() || x > x_.back())
      throw RangeError("interpolation query outside the tabulated range");
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i =
        std::min<std::size_t>(x_.size() - 2,
                              it == x_.begin() ? 0 : (it - x_.begin()) - 1);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
  }

private:
  std::vector<double> x_, y_, m_;
};

} // namespace detail

/// Dephasing inferred from a measured visibility decay time.
struct DephasingEstimate {
  double gamma_star_per_ns;
  double t2_star_ns;
  double t2_ns;
};

/// Inverts the map at a measured tau_v (ns). The map is dimensionless, so
/// the query is rescaled by gamma_sp; the inverse relation tau_v ->
/// gamma_star is interpolated with a monotone piecewise cubic. Queries
/// outside the tabulated tau_v range raise RangeError.
inline DephasingEstimate invert_dephasing(const DephasingMap& map,
                                          double tau_v_ns,
                                          double gamma_sp_per_ns) {
  if (!(gamma_sp_per_ns > 0.0)) throw ParameterError("gamma_sp must be > 0");
  if (!(tau_v_ns > 0.0)) throw ParameterError("tau_v must be > 0");
  if (map.gamma_star.size() < 2)
    throw ParameterError("dephasing map needs at least 2 entries");
  // reverse to ascending tau_v
  std::vector<double> taus(map.tau_v.rbegin(), map.tau_v.rend());
  std::vector<double> gss(map.gamma_star.rbegin(), map.gamma_star.rend());
  const detail::PchipInterpolant inv(std::move(taus), std::move(gss));
  const double tau_u = tau_v_ns * gamma_sp_per_ns;
  if (tau_u < inv.min_x() || tau_u > inv.max_x())
    throw RangeError("measured tau_v outside the tabulated map range");
  const double gs = inv(tau_u) * gamma_sp_per_ns;
  return DephasingEstimate{gs, 1.0 / gs, 1.0 / (0.5 * gamma_sp_per_ns + gs)};
}

/// Measured correlation inputs of the HOM analysis.
struct CorrelationInputs {
  ValueWithError g2_hbt;
  ValueWithError g2_parallel;
  ValueWithError g2_orthogonal;
};

/// Raw interference visibility V = 1 - g_par/g_orth with first-order error
/// propagation assuming independent inputs. Written in the expanded form
/// sqrt((s_par/g_orth)^2 + (g_par s_orth/g_orth^2)^2), well defined at
/// g_par = 0.
inline ValueWithError raw_visibility(const CorrelationInputs& in) {
  const double gp = in.g2_parallel.value, go = in.g2_orthogonal.value;
  if (!(go > 0.0)) throw ParameterError("g2_orthogonal must be > 0");
  if (gp < 0.0 || in.g2_hbt.value < 0.0)
    throw ParameterError("correlation values must be >= 0");
  if (in.g2_parallel.sigma < 0.0 || in.g2_orthogonal.sigma < 0.0 ||
      in.g2_hbt.sigma < 0.0)
    throw ParameterError("correlation errors must be >= 0");
  const double v = 1.0 - gp / go;
  const double s1 = in.g2_parallel.sigma / go;
  const double s2 = gp * in.g2_orthogonal.sigma / (go * go);
  return ValueWithError{v, std::hypot(s1, s2)};
}

/// Purity-corrected visibility V_corr = (1 + 2 g2_HBT) V, first-order error
/// propagation with independent inputs.
inline ValueWithError corrected_visibility(const ValueWithError& v_raw,
                                           const ValueWithError& g2_hbt) {
  if (g2_hbt.value < 0.0) throw ParameterError("g2_hbt must be >= 0");
  const double f = 1.0 + 2.0 * g2_hbt.value;
  const double v = f * v_raw.value;
  const double s = std::hypot(f * v_raw.sigma, 2.0 * v_raw.value * g2_hbt.sigma);
  return ValueWithError{v, s};
}

/// Emitter in a cavity: Purcell-enhanced lifetime and the resulting
/// indistinguishability.
struct PurcellResult {
  double f_p;
  double t1_eff_ns; // T1 / F_p
  double visibility;
};

/// V = F_p gamma_sp / (F_p gamma_sp + 2 gamma_star), i.e. T2'/(2 T1') with
/// T1' = T1/F_p. Factors below 1 model emission inhibition and must be
/// enabled explicitly.
inline PurcellResult purcell_visibility(double t1_ns, double t2_star_ns,
                                        double f_p,
                                        bool allow_inhibition = false) {
  if (!(t1_ns > 0.0) || !(t2_star_ns > 0.0))
    throw ParameterError("lifetimes must be positive");
  if (!(f_p > 0.0)) throw ParameterError("Purcell factor must be > 0");
  if (f_p < 1.0 && !allow_inhibition)
    throw ParameterError("Purcell factor < 1 requires the inhibition flag");
  const double gamma_sp = 1.0 / t1_ns;
  const double gamma_star = 1.0 / t2_star_ns;
  const double enhanced = f_p * gamma_sp;
  return PurcellResult{f_p, t1_ns / f_p, enhanced / (enhanced + 2.0 * gamma_star)};
}

/// Purcell factor required for a target visibility:
/// F_p = 2 gamma_star v / (gamma_sp (1 - v)). Exact inverse of
/// purcell_visibility.
inline double required_purcell(double t1_ns, double t2_star_ns,
                               double v_target) {
  if (!(t1_ns > 0.0) || !(t2_star_ns > 0.0))
    throw ParameterError("lifetimes must be positive");
  if (!(v_target > 0.0) || v_target >= 1.0)
    throw ParameterError("target visibility must lie in (0, 1)");
  const double gamma_sp = 1.0 / t1_ns;
  const double gamma_star = 1.0 / t2_star_ns;
  return 2.0 * gamma_star * v_target / (gamma_sp * (1.0 - v_target));
}

} // namespace homsim
