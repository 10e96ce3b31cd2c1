#pragma once

// Fit of the heralded axes to f·(|0⟩|α⟩⁰ − |−α⟩⁰|0⟩).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "evcs/error.hpp"
#include "evcs/fock.hpp"
#include "evcs/simulator.hpp"

namespace evcs {

struct FitOptions {
  int n_max = 9;
  CoherentNorm norm = CoherentNorm::Standard;
  double alpha_min = 0.01;  // coarse scan start
  double alpha_max = 4.0;
  double alpha_step = 0.01;
  double f_max = 1.0;
  double gradient_tolerance = 1e-10;
};

struct FitResult {
  double alpha = 0.0;
  double f = 0.0;
  double er = 0.0;
  int n_max_used = 9;
  CoherentNorm norm = CoherentNorm::Standard;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Axis amplitudes of a grid after removing the global phase: v[n] = C(1,n,0),
/// w[n] = C(1,0,n) for n = 1..n_max (index 0 unused).
struct FitAxes {
  std::vector<Amplitude> v, w;
  int n_max = 0;
};

/// The reference phase is that of the largest |C(1,0,n)|, n >= 1, where the
/// ansatz predicts f·co(α, n) > 0.
inline FitAxes extract_axes(const HeraldedGrid& grid, int n_max) {
  if (n_max < 1 || n_max > grid.n_max) throw Error(ErrorKind::Config, "fit n_max exceeds grid extent");
  FitAxes axes;
  axes.n_max = n_max;
  axes.v.assign(static_cast<std::size_t>(n_max) + 1, Amplitude{});
  axes.w.assign(static_cast<std::size_t>(n_max) + 1, Amplitude{});
  double v_mass = 0.0, w_mass = 0.0;
  int ref = 1;
  for (int n = 1; n <= n_max; ++n) {
    v_mass += std::norm(grid.amp(n, 0));
    w_mass += std::norm(grid.amp(0, n));
    if (std::abs(grid.amp(0, n)) > std::abs(grid.amp(0, ref))) ref = n;
  }
  if (v_mass < 1e-12 && w_mass < 1e-12) {
    throw Error(ErrorKind::Degenerate, "heralded grid carries no weight on either axis");
  }
  Amplitude phase{1.0, 0.0};
  if (std::abs(grid.amp(0, ref)) > 0.0) phase = std::conj(grid.amp(0, ref)) / std::abs(grid.amp(0, ref));
  for (int n = 1; n <= n_max; ++n) {
    axes.v[n] = grid.amp(n, 0) * phase;
    axes.w[n] = grid.amp(0, n) * phase;
  }
  return axes;
}

/// Er = Σ_{n=1..n_max} |C(1,n,0) + f·co(−α,n)|² + |C(1,0,n) − f·co(α,n)|². The vacuum terms are excluded.
inline double error_function(const FitAxes& axes, double alpha, double f, CoherentNorm norm) {
  double er = 0.0;
  for (int n = 1; n <= axes.n_max; ++n) {
    er += std::norm(axes.v[n] + f * co(-alpha, n, norm));
    er += std::norm(axes.w[n] - f * co(alpha, n, norm));
  }
  return er;
}

namespace detail {

// d/dα co(α, n) = e^{−kα²}·(n·α^{n−1} − 2k·α^{n+1})/√(n!)
inline double co_derivative(double alpha, int n, CoherentNorm norm) {
  const double k = gaussian_exponent(norm);
  const double lead = (n == 1) ? 1.0 : n * std::pow(alpha, n - 1);
  return std::exp(-k * alpha * alpha - 0.5 * log_factorial(n)) * (lead - 2.0 * k * std::pow(alpha, n + 1));
}

// Er-minimising f for fixed α, unconstrained.
inline double best_scale(const FitAxes& axes, double alpha, CoherentNorm norm) {
  double num = 0.0, den = 0.0;
  for (int n = 1; n <= axes.n_max; ++n) {
    const double cm = co(-alpha, n, norm);
    const double cp = co(alpha, n, norm);
    num += -std::real(axes.v[n]) * cm + std::real(axes.w[n]) * cp;
    den += cm * cm + cp * cp;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace detail

/// (∂Er/∂α, ∂Er/∂f)
inline std::pair<double, double> error_gradient(const FitAxes& axes, double alpha, double f, CoherentNorm norm) {
  double ga = 0.0, gf = 0.0;
  for (int n = 1; n <= axes.n_max; ++n) {
    const double cm = co(-alpha, n, norm);
    const double cp = co(alpha, n, norm);
    // d/dα co(−α, n) = −co'(−α, n)
    const double dcm = -detail::co_derivative(-alpha, n, norm);
    const double dcp = detail::co_derivative(alpha, n, norm);
    const double rv = std::real(axes.v[n]) + f * cm;
    const double rw = std::real(axes.w[n]) - f * cp;
    ga += 2.0 * (rv * f * dcm - rw * f * dcp);
    gf += 2.0 * (rv * cm - rw * cp);
  }
  return {ga, gf};
}

/// Forward model: C(1,n,0) = −f·co(−α,n), C(1,0,n) = f·co(α,n) for n >= 1, all else 0.
inline HeraldedGrid ansatz_grid(double alpha, double f, int n_max, CoherentNorm norm = CoherentNorm::Standard) {
  if (n_max < 1) throw Error(ErrorKind::Config, "ansatz_grid requires n_max >= 1");
  const int size = n_max + 1;
  std::vector<Amplitude> c(static_cast<std::size_t>(size) * size);
  for (int n = 1; n <= n_max; ++n) {
    c[static_cast<std::size_t>(n) * size] = -f * co(-alpha, n, norm);
    c[static_cast<std::size_t>(n)] = f * co(alpha, n, norm);
  }
  return make_heralded_grid(std::move(c), n_max);
}

/// Minimises Er over α ∈ (0, alpha_max], f ∈ (0, f_max].
///
/// Coarse scan over α with f set to its least-squares optimum (clamped), then
/// the stationarity condition ∂Er/∂α = 0 (with f re-optimised) is bracketed
/// around the best scan point and solved to machine precision. If no sign change
/// is found a Brent minimisation over the same bracket is used instead.
/// Everything is deterministic; scan ties keep the smaller α.
inline FitResult fit_entangled(const HeraldedGrid& grid, const FitOptions& options = {}) {
  const FitAxes axes = extract_axes(grid, options.n_max);
  const CoherentNorm norm = options.norm;
  const auto scale_at = [&](double alpha) {
    return std::clamp(detail::best_scale(axes, alpha, norm), std::numeric_limits<double>::min(), options.f_max);
  };
  const auto profile = [&](double alpha) { return error_function(axes, alpha, scale_at(alpha), norm); };

  const int steps = static_cast<int>(std::floor((options.alpha_max - options.alpha_min) / options.alpha_step + 1e-9));
  double best_alpha = options.alpha_min;
  double best_er = profile(best_alpha);
  for (int i = 1; i <= steps; ++i) {
    const double alpha = options.alpha_min + i * options.alpha_step;
    const double er = profile(alpha);
    if (er < best_er) {
      best_er = er;
      best_alpha = alpha;
    }
  }

  const double lo = std::max(best_alpha - options.alpha_step, options.alpha_min * 1e-3);
  const double hi = std::min(best_alpha + options.alpha_step, options.alpha_max);
  const auto stationarity = [&](double alpha) { return error_gradient(axes, alpha, scale_at(alpha), norm).first; };

  double alpha = best_alpha;
  const double g_lo = stationarity(lo);
  const double g_hi = stationarity(hi);
  if (g_lo < 0.0 && g_hi > 0.0) {
    std::uintmax_t max_iter = 200;
    const auto root = boost::math::tools::toms748_solve(stationarity, lo, hi, g_lo, g_hi,
                                                        boost::math::tools::eps_tolerance<double>(), max_iter);
    alpha = std::abs(stationarity(root.first)) <= std::abs(stationarity(root.second)) ? root.first : root.second;
  } else {
    alpha = boost::math::tools::brent_find_minima(profile, lo, hi, std::numeric_limits<double>::digits / 2).first;
  }
  // Keep the scan point if the refinement somehow lost ground.
  if (profile(alpha) > best_er) alpha = best_alpha;

  FitResult result;
  result.alpha = alpha;
  result.f = scale_at(alpha);
  result.er = error_function(axes, result.alpha, result.f, norm);
  result.n_max_used = options.n_max;
  result.norm = norm;
  const auto [ga, gf] = error_gradient(axes, result.alpha, result.f, norm);
  result.gradient_norm = std::hypot(ga, gf);
  result.converged = result.gradient_norm < options.gradient_tolerance;
  return result;
}

}  // namespace evcs
