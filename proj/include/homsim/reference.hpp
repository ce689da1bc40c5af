#pragma once

#include <cmath>

#include "homsim/correlators.hpp"
#include "homsim/emitter.hpp"

namespace homsim {

namespace detail {

/// (1 - exp(-x))/x, stable for small |x|.
inline double em1_over(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x + x * x / 6.0;
  return -std::expm1(-x) / x;
}

} // namespace detail

/// Closed-form photon number over the window:
/// N = int e^{-gamma_sp t} dt = (e^{-gamma_sp s} - e^{-gamma_sp (s+w)})/gamma_sp.
inline double reference_norm(const EmitterParams& p,
                             const PostSelectionWindow& w) {
  const double g = p.gamma_sp();
  return std::exp(-g * w.start_ns) * w.width_ns *
         detail::em1_over(g * w.width_ns);
}

/// Closed-form double integral of |G1|^2 over the window square. With
/// b = gamma_sp + 2 gamma_star and window width w starting at s:
/// I = e^{-2 gamma_sp s} (2/b) [ (1 - e^{-2 gamma_sp w})/(2 gamma_sp)
///     - e^{-b w} (1 - e^{-(2 gamma_sp - b) w})/(2 gamma_sp - b) ],
/// via stable (1 - e^{-x})/x building blocks. Exact for this model; the
/// second route of the dual-path check against the grid quadrature.
inline double reference_overlap_integral(const EmitterParams& p,
                                         const PostSelectionWindow& w) {
  const double g = p.gamma_sp();
  const double b = g + 2.0 * p.gamma_star();
  const double width = w.width_ns;
  const double term1 = width * detail::em1_over(2.0 * g * width); // (1-e^{-2gw})/(2g)
  const double x = 2.0 * g - b;
  const double term2 =
      std::exp(-b * width) * width * detail::em1_over(x * width);
  return std::exp(-2.0 * g * w.start_ns) * (2.0 / b) * (term1 - term2);
}

/// Closed-form post-selected visibility I/N^2 (ideal source).
inline double reference_visibility(const EmitterParams& p,
                                   const PostSelectionWindow& w) {
  const double n = reference_norm(p, w);
  return reference_overlap_integral(p, w) / (n * n);
}

/// Closed-form post-selected g2_HOM(0) for an ideal source.
inline double reference_g2_hom(const EmitterParams& p,
                               const PostSelectionWindow& w) {
  return 0.5 * (1.0 - reference_visibility(p, w));
}

/// Non-post-selected indistinguishability gamma_sp/(gamma_sp + 2 gamma_star),
/// the long-window asymptote of the visibility.
inline double asymptotic_visibility(const EmitterParams& p) {
  return p.gamma_sp() / (p.gamma_sp() + 2.0 * p.gamma_star());
}

} // namespace homsim
