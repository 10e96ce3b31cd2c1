#pragma once

// Two-port beam splitters, their cascade into the q-coefficient map, and the
// transmittance that cancels the single-photon vacuum contribution.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "evcs/error.hpp"
#include "evcs/fock.hpp"

namespace evcs {

template <std::size_t N>
using SquareMatrix = std::array<std::array<Amplitude, N>, N>;

using Matrix2 = SquareMatrix<2>;
using Matrix3 = SquareMatrix<3>;

template <std::size_t N>
SquareMatrix<N> multiply(const SquareMatrix<N>& a, const SquareMatrix<N>& b) {
  SquareMatrix<N> c{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      Amplitude acc{};
      for (std::size_t k = 0; k < N; ++k) acc += a[i][k] * b[k][j];
      c[i][j] = acc;
    }
  return c;
}

/// max |(M·M†)_ij − δ_ij|
template <std::size_t N>
double unitarity_residual(const SquareMatrix<N>& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      Amplitude acc{};
      for (std::size_t k = 0; k < N; ++k) acc += m[i][k] * std::conj(m[j][k]);
      if (i == j) acc -= 1.0;
      worst = std::max(worst, std::abs(acc));
    }
  return worst;
}

/// Lossless splitter with amplitude transmittance t and reflectance √(1−t²).
struct BeamSplitterSpec {
  double t = 1.0;
  double phi_tau = 0.0;
  double phi_rho = 0.0;

  BeamSplitterSpec() = default;
  BeamSplitterSpec(double t_, double phi_tau_ = 0.0, double phi_rho_ = 0.0)
      : t(t_), phi_tau(phi_tau_), phi_rho(phi_rho_) {
    validate();
  }

  double r() const { return std::sqrt(std::max(0.0, 1.0 - t * t)); }

  void validate() const {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorKind::Validation, "beam splitter transmittance " + std::to_string(t) + " outside [0, 1]");
    }
    if (!std::isfinite(phi_tau) || !std::isfinite(phi_rho)) {
      throw Error(ErrorKind::Validation, "beam splitter phases must be finite");
    }
  }
};

/// Input creation operators in terms of output ones:
///   (x†, y†)ᵀ = M · (first_out†, second_out†)ᵀ,
///   M = [[t·e^{−iφτ}, r·e^{−iφρ}], [−r·e^{iφρ}, t·e^{iφτ}]].
inline Matrix2 bs_matrix(const BeamSplitterSpec& spec) {
  spec.validate();
  const double t = spec.t;
  const double r = spec.r();
  return {{{std::polar(t, -spec.phi_tau), std::polar(r, -spec.phi_rho)},
           {-std::polar(r, spec.phi_rho), std::polar(t, spec.phi_tau)}}};
}

/// Cascade coefficients: a† = q_a_u·u† + q_a_v·v† + q_a_w·w†, likewise b†, and
/// c† = q_c_u·u† + q_c_v·v† (c never reaches w).
struct QMap {
  Amplitude q_a_u, q_a_v, q_a_w;
  Amplitude q_b_u, q_b_v, q_b_w;
  Amplitude q_c_u, q_c_v;

  /// Rows (a, b, c), columns (u, v, w).
  Matrix3 matrix() const {
    return {{{q_a_u, q_a_v, q_a_w}, {q_b_u, q_b_v, q_b_w}, {q_c_u, q_c_v, Amplitude{}}}};
  }
};

/// Splitter 1 mixes (a, b) into (d, w); splitter 2 mixes (d, c) into (u, v).
inline QMap compose_q(const BeamSplitterSpec& bs1, const BeamSplitterSpec& bs2) {
  bs1.validate();
  bs2.validate();
  const double t1 = bs1.t, r1 = bs1.r();
  const double t2 = bs2.t, r2 = bs2.r();
  const auto e = [](double phase) { return std::polar(1.0, phase); };
  QMap q;
  q.q_a_u = e(-(bs1.phi_tau + bs2.phi_tau)) * t1 * t2;
  q.q_a_v = e(-(bs2.phi_rho + bs1.phi_tau)) * t1 * r2;
  q.q_a_w = e(-bs1.phi_rho) * r1;
  // b† picks up −r1·e^{iφρ1} on d†, which then splits with t2·e^{−iφτ2} into u†.
  q.q_b_u = -e(bs1.phi_rho) * r1 * e(-bs2.phi_tau) * t2;
  q.q_b_v = -e(bs1.phi_rho) * r1 * e(-bs2.phi_rho) * r2;
  q.q_b_w = e(bs1.phi_tau) * t1;
  q.q_c_u = -e(bs2.phi_rho) * r2;
  q.q_c_v = e(bs2.phi_tau) * t2;
  return q;
}

/// β·q_b_u + γ·q_c_u: the single-photon term that feeds the vacuum of w.
inline Amplitude zero_sum_residual(Amplitude beta, Amplitude gamma, const QMap& q) {
  return beta * q.q_b_u + gamma * q.q_c_u;
}

struct T2Solution {
  double t2 = 1.0;
  double residual = 0.0;  // |β·q_b_u + γ·q_c_u| at t2
  // Closed forms in terms of |β|, |γ|: as printed (with t1) and with t1².
  double closed_form_printed = std::nan("");
  double closed_form_squared = std::nan("");
};

inline constexpr double kZeroSumTolerance = 1e-12;

namespace detail {

inline double closed_form_t2(double beta, double gamma, double t1_term) {
  const double denom = beta * beta + gamma * gamma - beta * beta * t1_term;
  if (!(denom > 0.0)) return std::nan("");
  return gamma / std::sqrt(denom);
}

}  // namespace detail

/// Transmittance of splitter 2 that zeroes β·q_b_u + γ·q_c_u for the given splitter 1.
///
/// The residual is A·t2 + B·√(1−t2²); a root needs A and −B collinear, so the
/// component along A is bracketed on [0, 1] and the full complex residual is
/// checked afterwards.
inline T2Solution solve_t2(Amplitude beta, Amplitude gamma, const BeamSplitterSpec& bs1, double phi_tau2 = 0.0,
                           double phi_rho2 = 0.0) {
  bs1.validate();
  if (std::norm(beta) + std::norm(gamma) <= 0.0) {
    throw Error(ErrorKind::Validation, "solve_t2 requires a nonzero coherent input");
  }
  if (std::abs(gamma) == 0.0) throw Error(ErrorKind::Validation, "solve_t2 requires gamma != 0");

  const auto residual_at = [&](double t2) {
    return zero_sum_residual(beta, gamma, compose_q(bs1, BeamSplitterSpec(t2, phi_tau2, phi_rho2)));
  };
  const auto e = [](double phase) { return std::polar(1.0, phase); };
  const Amplitude a = -beta * e(bs1.phi_rho) * bs1.r() * e(-phi_tau2);
  const Amplitude b = -gamma * e(phi_rho2);

  T2Solution sol;
  sol.closed_form_printed = detail::closed_form_t2(std::abs(beta), std::abs(gamma), bs1.t);
  sol.closed_form_squared = detail::closed_form_t2(std::abs(beta), std::abs(gamma), bs1.t * bs1.t);

  if (std::abs(a) == 0.0) {
    sol.t2 = 1.0;
  } else {
    const Amplitude unit = a / std::abs(a);
    const double b_along = std::real(std::conj(unit) * b);
    const auto g = [&](double t2) { return std::abs(a) * t2 + b_along * std::sqrt(std::max(0.0, 1.0 - t2 * t2)); };
    if (!(b_along < 0.0)) {
      throw Error(ErrorKind::Validation, "no t2 in (0, 1] satisfies the zero-sum condition for these phases");
    }
    std::uintmax_t max_iter = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(g, 0.0, 1.0, g(0.0), g(1.0),
                                                            boost::math::tools::eps_tolerance<double>(), max_iter);
    sol.t2 = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
  }
  sol.residual = std::abs(residual_at(sol.t2));
  if (!(sol.t2 > 0.0) || !(sol.residual < kZeroSumTolerance)) {
    throw Error(ErrorKind::Validation, "zero-sum condition cannot be met: residual " + std::to_string(sol.residual));
  }
  return sol;
}

}  // namespace evcs
