#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "homsim/errors.hpp"
#include "homsim/mat2.hpp"

namespace homsim {

/// Physical rates of the dissipative two-level emitter. Times are in ns,
/// rates in 1/ns throughout the library; conversions from lifetimes happen
/// here at the boundary.
class EmitterParams {
public:
  EmitterParams(double gamma_sp_per_ns, double gamma_star_per_ns)
      : gamma_sp_(gamma_sp_per_ns), gamma_star_(gamma_star_per_ns) {
    if (!(gamma_sp_ > 0.0) || !std::isfinite(gamma_sp_))
      throw ParameterError("gamma_sp must be positive and finite");
    if (!(gamma_star_ >= 0.0) || !std::isfinite(gamma_star_))
      throw ParameterError("gamma_star must be non-negative and finite");
  }

  static EmitterParams from_rates(double gamma_sp, double gamma_star) {
    return EmitterParams(gamma_sp, gamma_star);
  }

  /// t2_star_ns = infinity selects zero pure dephasing.
  static EmitterParams from_lifetimes(double t1_ns, double t2_star_ns) {
    if (!(t1_ns > 0.0)) throw ParameterError("T1 must be positive");
    if (!(t2_star_ns > 0.0)) throw ParameterError("T2* must be positive");
    const double gs = std::isinf(t2_star_ns) ? 0.0 : 1.0 / t2_star_ns;
    return EmitterParams(1.0 / t1_ns, gs);
  }

  double gamma_sp() const { return gamma_sp_; }
  double gamma_star() const { return gamma_star_; }

  double t1() const { return 1.0 / gamma_sp_; }
  double t2_star() const {
    return gamma_star_ > 0.0 ? 1.0 / gamma_star_
                             : std::numeric_limits<double>::infinity();
  }
  /// Total dephasing rate gamma = gamma_sp/2 + gamma_star.
  double total_dephasing() const { return 0.5 * gamma_sp_ + gamma_star_; }
  double t2() const { return 1.0 / total_dephasing(); }

private:
  double gamma_sp_;
  double gamma_star_;
};

/// Ladder and dephasing operators of the two-level system.
struct TwoLevelOperators {
  static Mat2 sigma_minus() {
    Mat2 m;
    m(0, 1) = 1.0; // |g><e|
    return m;
  }
  static Mat2 sigma_plus() { return sigma_minus().adjoint(); }
  static Mat2 sigma_z() {
    Mat2 m;
    m(0, 0) = -1.0;
    m(1, 1) = 1.0; // |e><e| - |g><g|
    return m;
  }
  static Mat2 excited_projector() {
    Mat2 m;
    m(1, 1) = 1.0;
    return m;
  }
};

/// Validated 2x2 density matrix. Construction enforces Hermiticity,
/// unit trace and positivity within fixed tolerances.
class DensityMatrix {
public:
  static constexpr double kHermTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigTol = 1e-10;

  explicit DensityMatrix(const Mat2& m) : m_(m) {
    if (m_.hermiticity_residual() > kHermTol)
      throw ParameterError("density matrix is not Hermitian");
    if (std::abs(m_.trace() - Cx(1.0)) > kTraceTol)
      throw ParameterError("density matrix trace is not 1");
    const auto ev = hermitian_eigenvalues(m_);
    if (ev[0] < -kEigTol)
      throw ParameterError("density matrix has a negative eigenvalue");
    const double bound =
        std::sqrt(std::max(0.0, gg() * ee())) + kEigTol;
    if (std::abs(coherence()) > bound)
      throw ParameterError("off-diagonal coherence violates positivity");
  }

  static DensityMatrix ground() {
    Mat2 m;
    m(0, 0) = 1.0;
    return DensityMatrix(m);
  }
  static DensityMatrix excited() {
    Mat2 m;
    m(1, 1) = 1.0;
    return DensityMatrix(m);
  }

  const Mat2& matrix() const { return m_; }
  double gg() const { return m_(0, 0).real(); }
  double ee() const { return m_(1, 1).real(); }
  Cx coherence() const { return m_(0, 1); } // rho_ge

private:
  Mat2 m_;
};

/// State right after the excitation pulse: the pulse is treated as
/// instantaneous and fully inverting, so the emitter starts in |e><e|.
inline DensityMatrix initial_state_after_pulse() {
  return DensityMatrix::excited();
}

/// Vectorized generator of the dissipative evolution, acting on
/// column-stacked density matrices: d vec(rho)/dt = L vec(rho).
struct Superoperator {
  Mat4 matrix;

  Vec4 apply(const Vec4& x) const { return matrix.apply(x); }
  Mat2 apply(const Mat2& m) const {
    return matrix.apply(Vec4::stack(m)).unstack();
  }
};

namespace detail {

/// Adds the dissipator of collapse operator c to the vectorized generator:
/// D[c] rho = c rho c^dag - (c^dag c rho + rho c^dag c)/2.
inline void add_dissipator(Mat4& gen, const Mat2& c) {
  const Mat2 cd = c.adjoint();
  const Mat2 cdc = cd * c;
  const Mat2 id = Mat2::identity();
  gen = gen + kron(transpose(cd), c);
  gen = gen - 0.5 * Cx(1.0) * kron(transpose(cdc), id);
  gen = gen - 0.5 * Cx(1.0) * kron(id, cdc);
}

} // namespace detail

/// Lindblad generator with collapse operators sqrt(gamma_sp) sigma_minus
/// (spontaneous emission) and sqrt(gamma_star/2) sigma_z (pure dephasing).
/// There is no Hamiltonian: in the rotating frame without coherent drive
/// the evolution is purely dissipative.
inline Superoperator build_generator(const EmitterParams& p) {
  Superoperator gen{};
  detail::add_dissipator(gen.matrix,
                         std::sqrt(p.gamma_sp()) * TwoLevelOperators::sigma_minus());
  if (p.gamma_star() > 0.0)
    detail::add_dissipator(gen.matrix, std::sqrt(0.5 * p.gamma_star()) *
                                           TwoLevelOperators::sigma_z());
  return gen;
}

/// Closed-form propagator applied to an arbitrary (not necessarily
/// Hermitian) 2x2 operator. The generator is diagonal in the element basis:
/// populations relax at gamma_sp towards |g>, both coherences decay at
/// gamma_sp/2 + gamma_star. Exact for this model; used as the default
/// evolution path and inside quantum-regression correlators.
inline Mat2 propagate_operator(const EmitterParams& p, const Mat2& m,
                               double t_ns) {
  if (t_ns < 0.0) throw ParameterError("propagation time must be >= 0");
  const double pop = std::exp(-p.gamma_sp() * t_ns);
  const double coh = std::exp(-p.total_dephasing() * t_ns);
  Mat2 out;
  out(1, 1) = m(1, 1) * pop;
  out(0, 0) = m(0, 0) + m(1, 1) * (1.0 - pop);
  out(0, 1) = m(0, 1) * coh;
  out(1, 0) = m(1, 0) * coh;
  return out;
}

/// rho(t) by the closed-form propagator (default path).
inline DensityMatrix evolve(const EmitterParams& p, const DensityMatrix& rho0,
                            double t_ns) {
  return DensityMatrix(propagate_operator(p, rho0.matrix(), t_ns));
}

/// rho(t) by classical fixed-step RK4 on the vectorized generator,
/// h = min(T1, T2)/200. Retained as a cross-check of the closed form.
/// Throws AccuracyError if the integration drifts off trace by > 1e-8.
inline DensityMatrix evolve_rk4(const EmitterParams& p,
                                const DensityMatrix& rho0, double t_ns) {
  if (t_ns < 0.0) throw ParameterError("evolution time must be >= 0");
  const Superoperator gen = build_generator(p);
  const double h_target = std::min(p.t1(), p.t2()) / 200.0;
  const std::int64_t n_steps =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t_ns / h_target)));
  const double h = t_ns / static_cast<double>(n_steps);

  Vec4 y = Vec4::stack(rho0.matrix());
  if (t_ns > 0.0) {
    for (std::int64_t s = 0; s < n_steps; ++s) {
      const Vec4 k1 = gen.apply(y);
      const Vec4 k2 = gen.apply(y + Cx(0.5 * h) * k1);
      const Vec4 k3 = gen.apply(y + Cx(0.5 * h) * k2);
      const Vec4 k4 = gen.apply(y + Cx(h) * k3);
      y = y + Cx(h / 6.0) * (k1 + Cx(2.0) * k2 + Cx(2.0) * k3 + k4);
    }
  }
  const Mat2 out = y.unstack();
  if (std::abs(out.trace() - Cx(1.0)) > 1e-8)
    throw AccuracyError("RK4 evolution drifted off unit trace");
  return DensityMatrix(out);
}

/// Excited-state population at time t for the emitter prepared in |e>.
inline double excited_population(const EmitterParams& p, double t_ns) {
  return std::exp(-p.gamma_sp() * t_ns);
}

} // namespace homsim
