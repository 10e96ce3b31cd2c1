#pragma once

// Number-basis coefficients of the input and target states.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "evcs/error.hpp"

namespace evcs {

using Amplitude = std::complex<double>;

/// Largest photon number accepted by any public coefficient function.
inline constexpr int kMaxPhotonNumber = 64;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Maps an angle into [0, 2π).
inline double normalize_phase(double phi) {
  double r = phi - kTwoPi * std::floor(phi / kTwoPi);
  if (r >= kTwoPi || r < 0.0) r = 0.0;
  return r;
}

namespace detail {

// Large enough for multinomials of three inputs at the maximum cap.
inline constexpr int kLogFactorialTableSize = 3 * kMaxPhotonNumber + 1;

inline const std::array<double, kLogFactorialTableSize>& log_factorial_table() {
  static const auto table = [] {
    std::array<double, kLogFactorialTableSize> t{};
    for (int n = 0; n < kLogFactorialTableSize; ++n) t[n] = std::lgamma(static_cast<double>(n) + 1.0);
    return t;
  }();
  return table;
}

inline void check_photon_number(int n) {
  if (n < 0 || n > kMaxPhotonNumber) {
    throw Error(ErrorKind::Config, "photon number " + std::to_string(n) + " outside [0, " +
                                       std::to_string(kMaxPhotonNumber) + "]");
  }
}

}  // namespace detail

/// ln(n!) for 0 <= n <= 3*kMaxPhotonNumber.
inline double log_factorial(int n) {
  if (n < 0 || n >= detail::kLogFactorialTableSize) {
    throw Error(ErrorKind::Config, "log_factorial argument out of range: " + std::to_string(n));
  }
  return detail::log_factorial_table()[n];
}

/// z^k by repeated multiplication; ipow(0, 0) == 1.
inline Amplitude ipow(Amplitude z, int k) {
  Amplitude out{1.0, 0.0};
  for (int i = 0; i < k; ++i) out *= z;
  return out;
}

/// Squeezing ξ = s·e^{iφ}.
struct SqueezeParam {
  double s = 0.0;
  double phi = 0.0;

  SqueezeParam() = default;
  SqueezeParam(double s_, double phi_) : s(s_), phi(normalize_phase(phi_)) {
    if (!std::isfinite(s_) || s_ < 0.0) throw Error(ErrorKind::Validation, "squeeze magnitude must be finite and >= 0");
    if (!std::isfinite(phi_)) throw Error(ErrorKind::Validation, "squeeze phase must be finite");
  }
};

/// Coherent amplitude magnitude·e^{i·phase}.
struct CoherentParam {
  double magnitude = 0.0;
  double phase = 0.0;

  CoherentParam() = default;
  CoherentParam(double magnitude_, double phase_ = 0.0) : magnitude(magnitude_), phase(phase_) {
    if (!std::isfinite(magnitude_) || magnitude_ < 0.0) {
      throw Error(ErrorKind::Validation, "coherent magnitude must be finite and >= 0");
    }
    if (!std::isfinite(phase_)) throw Error(ErrorKind::Validation, "coherent phase must be finite");
  }

  Amplitude value() const { return std::polar(magnitude, phase); }
};

/// Amplitudes indexed by photon number 0..n_max.
struct CoefficientVector {
  std::vector<Amplitude> entries;

  int n_max() const { return static_cast<int>(entries.size()) - 1; }
  const Amplitude& operator[](int n) const { return entries[static_cast<std::size_t>(n)]; }
  Amplitude& operator[](int n) { return entries[static_cast<std::size_t>(n)]; }
};

/// Number-basis coefficient of the squeezed vacuum S(ξ)|0⟩.
///
/// Zero for odd n; for even n
///   √(n!) / (√(cosh s)·(n/2)!) · (−½·e^{iφ}·tanh s)^{n/2}.
/// The magnitude is assembled in log space so the largest caps do not overflow.
inline Amplitude squeezed_coeff(const SqueezeParam& p, int n) {
  detail::check_photon_number(n);
  if (n % 2 != 0) return {0.0, 0.0};
  const int k = n / 2;
  const double log_prefactor = 0.5 * log_factorial(n) - 0.5 * std::log(std::cosh(p.s)) - log_factorial(k);
  if (k == 0) return {std::exp(log_prefactor), 0.0};
  const double ratio = 0.5 * std::tanh(p.s);
  if (ratio == 0.0) return {0.0, 0.0};
  const double magnitude = std::exp(log_prefactor + k * std::log(ratio));
  // arg(−e^{iφ}) = φ + π
  return std::polar(magnitude, k * (p.phi + std::numbers::pi));
}

/// Standard coherent-state coefficient e^{−|α|²/2}·αⁿ/√(n!).
inline Amplitude coherent_coeff(Amplitude alpha, int n) {
  detail::check_photon_number(n);
  const double r = std::abs(alpha);
  if (n == 0) return {std::exp(-0.5 * r * r), 0.0};
  if (r == 0.0) return {0.0, 0.0};
  const double magnitude = std::exp(-0.5 * r * r + n * std::log(r) - 0.5 * log_factorial(n));
  return std::polar(magnitude, n * std::arg(alpha));
}

/// Which Gaussian prefactor a real coherent coefficient uses.
enum class CoherentNorm {
  Standard,  // e^{−α²/2}: unit-norm coherent state
  Paper,     // e^{−α²}: the literal co(α, n) definition
};

inline const char* to_string(CoherentNorm norm) {
  return norm == CoherentNorm::Standard ? "standard" : "paper";
}

/// Exponent k in e^{−k·α²}.
inline constexpr double gaussian_exponent(CoherentNorm norm) {
  return norm == CoherentNorm::Standard ? 0.5 : 1.0;
}

/// Real coherent coefficient e^{−k·α²}·αⁿ/√(n!) under the chosen normalization.
inline double co(double alpha, int n, CoherentNorm norm) {
  detail::check_photon_number(n);
  const double gauss = gaussian_exponent(norm) * alpha * alpha;
  if (n == 0) return std::exp(-gauss);
  if (alpha == 0.0) return 0.0;
  const double magnitude = std::exp(-gauss + n * std::log(std::abs(alpha)) - 0.5 * log_factorial(n));
  return (alpha < 0.0 && n % 2 != 0) ? -magnitude : magnitude;
}

/// co(α, n) = e^{−|α|²}·αⁿ/√(n!), exactly as defined alongside the error function.
inline double paper_co(double alpha, int n) { return co(alpha, n, CoherentNorm::Paper); }

/// Coefficients of |α⟩⁰ = |α⟩ − e^{−|α|²}|0⟩: the vacuum entry vanishes, the rest are co(α, n).
inline CoefficientVector vacuum_evacuated_coeffs(double alpha, int n_max, CoherentNorm norm = CoherentNorm::Paper) {
  if (n_max < 1) throw Error(ErrorKind::Config, "vacuum_evacuated_coeffs requires n_max >= 1");
  detail::check_photon_number(n_max);
  CoefficientVector v;
  v.entries.assign(static_cast<std::size_t>(n_max) + 1, Amplitude{});
  for (int n = 1; n <= n_max; ++n) v[n] = co(alpha, n, norm);
  return v;
}

/// Probability of the truncated squeezed vacuum, Σ_{n<=cap} |C_n|².
inline double squeezed_captured_mass(const SqueezeParam& p, int cap) {
  double sum = 0.0;
  for (int n = 0; n <= cap; n += 2) sum += std::norm(squeezed_coeff(p, n));
  return sum;
}

/// Probability of the truncated coherent state, Σ_{n<=cap} |coherent_coeff|².
inline double coherent_captured_mass(Amplitude alpha, int cap) {
  double sum = 0.0;
  for (int n = 0; n <= cap; ++n) sum += std::norm(coherent_coeff(alpha, n));
  return sum;
}

}  // namespace evcs
