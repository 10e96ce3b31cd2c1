#pragma once

// Independent cross-check: build the three-mode input state vector in a
// truncated Fock space and propagate it through each splitter with the dense
// exponential of the two-mode generator, one fixed-photon-number block at a time.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "evcs/beam_splitter.hpp"
#include "evcs/error.hpp"
#include "evcs/fock.hpp"
#include "evcs/simulator.hpp"

namespace evcs::oracle {

inline constexpr double kMinInputMass = 0.999;
inline constexpr double kMaxLeakage = 1e-9;

/// Three-mode amplitudes with per-mode occupation in [0, dim).
struct TruncatedState {
  int dim = 0;
  std::vector<Amplitude> amplitudes;
  double leakage = 0.0;  // probability dropped at the working cap so far

  TruncatedState() = default;
  explicit TruncatedState(int dim_) : dim(dim_), amplitudes(static_cast<std::size_t>(dim_) * dim_ * dim_) {}

  std::size_t index(int n0, int n1, int n2) const { return (static_cast<std::size_t>(n0) * dim + n1) * dim + n2; }
  const Amplitude& at(int n0, int n1, int n2) const { return amplitudes[index(n0, n1, n2)]; }
  Amplitude& at(int n0, int n1, int n2) { return amplitudes[index(n0, n1, n2)]; }

  double norm() const {
    double sum = 0.0;
    for (const auto& a : amplitudes) sum += std::norm(a);
    return sum;
  }
};

/// Working cap per mode: the input cap plus padding. The default padding of two
/// input caps holds every photon of the truncated input in one mode, so
/// propagation never drops amplitude.
inline int working_dim(int input_cap, int padding) { return input_cap + padding + 1; }

/// Product of squeezed vacuum (a), coherent β (b) and coherent γ (c), each cut at cap photons.
inline TruncatedState build_input_state(const ScenarioSpec& spec, int cap, int padding = -1) {
  if (cap < 0 || cap > kMaxPhotonNumber) throw Error(ErrorKind::Config, "oracle cap out of range");
  if (padding < 0) padding = 2 * cap;
  TruncatedState state(working_dim(cap, padding));
  std::vector<Amplitude> a(cap + 1), b(cap + 1), c(cap + 1);
  for (int n = 0; n <= cap; ++n) {
    a[n] = squeezed_coeff(spec.squeeze, n);
    b[n] = coherent_coeff(spec.beta.value(), n);
    c[n] = coherent_coeff(spec.gamma.value(), n);
  }
  for (int i = 0; i <= cap; ++i)
    for (int j = 0; j <= cap; ++j)
      for (int k = 0; k <= cap; ++k) state.at(i, j, k) = a[i] * b[j] * c[k];
  const double mass = state.norm();
  if (mass < kMinInputMass) {
    throw Error(ErrorKind::Truncation, "oracle cap " + std::to_string(cap) + " captures only " + std::to_string(mass));
  }
  return state;
}

/// Generator angle and phase rotations realising bs_matrix(spec) as
///   U = R_out · exp(θ(e^{iφ}·x†y − e^{−iφ}·x y†)),   R_out = e^{−iφτ·n_x + iφτ·n_y},
/// with θ = arccos t and φ = φρ + φτ + π.
struct SplitterGenerator {
  double theta = 0.0;
  double phase = 0.0;
  double out_phase_first = 0.0;
  double out_phase_second = 0.0;

  static SplitterGenerator from(const BeamSplitterSpec& spec, bool transposed_convention = false) {
    spec.validate();
    SplitterGenerator g;
    g.theta = std::acos(std::clamp(spec.t, 0.0, 1.0));
    g.phase = spec.phi_rho + spec.phi_tau + std::numbers::pi;
    // Negative control: realises Mᵀ instead of M.
    if (transposed_convention) g.phase += std::numbers::pi;
    g.out_phase_first = -spec.phi_tau;
    g.out_phase_second = spec.phi_tau;
    return g;
  }

  /// Unitary on the block of total photon number N, basis |k, N−k⟩ for k = 0..N.
  Eigen::MatrixXcd block(int total) const {
    const int size = total + 1;
    Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(size, size);
    const Amplitude e = std::polar(1.0, phase);
    for (int k = 0; k <= total; ++k) {
      if (k < total) gen(k + 1, k) += theta * e * std::sqrt(static_cast<double>((k + 1) * (total - k)));
      if (k > 0) gen(k - 1, k) -= theta * std::conj(e) * std::sqrt(static_cast<double>(k * (total - k + 1)));
    }
    Eigen::MatrixXcd u = gen.exp();
    for (int k = 0; k <= total; ++k) {
      u.row(k) *= std::polar(1.0, out_phase_first * k + out_phase_second * (total - k));
    }
    return u;
  }
};

/// Applies a splitter to modes (first, second); the outputs occupy the same slots
/// in the order of bs_matrix's columns.
inline TruncatedState apply_bs(const TruncatedState& in, const BeamSplitterSpec& spec, int first, int second,
                               bool transposed_convention = false) {
  if (first == second || first < 0 || first > 2 || second < 0 || second > 2) {
    throw Error(ErrorKind::Config, "invalid mode pair");
  }
  const int spectator = 3 - first - second;
  const int d = in.dim;
  const auto gen = SplitterGenerator::from(spec, transposed_convention);
  TruncatedState out(d);
  out.leakage = in.leakage;

  const auto slot = [&](int x, int y, int z) {
    int idx[3];
    idx[first] = x;
    idx[second] = y;
    idx[spectator] = z;
    return in.index(idx[0], idx[1], idx[2]);
  };

  const int max_total = 2 * (d - 1);
  for (int total = 0; total <= max_total; ++total) {
    const Eigen::MatrixXcd u = gen.block(total);
    const int lo = std::max(0, total - (d - 1));
    const int hi = std::min(total, d - 1);
    for (int z = 0; z < d; ++z) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(total + 1);
      bool any = false;
      for (int k = lo; k <= hi; ++k) {
        v(k) = in.amplitudes[slot(k, total - k, z)];
        any = any || v(k) != Amplitude{};
      }
      if (!any) continue;
      const Eigen::VectorXcd w = u * v;
      for (int k = 0; k <= total; ++k) {
        if (k >= lo && k <= hi) {
          out.amplitudes[slot(k, total - k, z)] = w(k);
        } else {
          out.leakage += std::norm(w(k));
        }
      }
    }
  }
  if (out.leakage > kMaxLeakage) {
    throw Error(ErrorKind::OracleUnreliable,
                "oracle leakage " + std::to_string(out.leakage) + " exceeds " + std::to_string(kMaxLeakage));
  }
  return out;
}

struct OracleOptions {
  int padding = -1;                    // -1: twice the input cap
  bool transposed_convention = false;  // negative control for verify
};

struct OracleResult {
  JointAmplitudeTensor tensor;  // (N_u, N_v, N_w), each index <= cap
  double input_norm = 0.0;
  double output_norm = 0.0;
  double leakage = 0.0;
};

/// Input on slots (0, 1, 2) = (a, b, c). Splitter 1 maps (a, b) to (d, w) in
/// slots (0, 1); splitter 2 maps (d, c) to (u, v) in slots (0, 2).
inline OracleResult oracle_joint_amplitudes(const ScenarioSpec& spec, int cap, const OracleOptions& options = {}) {
  spec.validate();
  const TruncatedState input = build_input_state(spec, cap, options.padding);
  const TruncatedState mid = apply_bs(input, spec.bs1, 0, 1, options.transposed_convention);
  const TruncatedState out = apply_bs(mid, spec.bs2, 0, 2, options.transposed_convention);

  OracleResult result;
  result.input_norm = input.norm();
  result.output_norm = out.norm();
  result.leakage = out.leakage;
  result.tensor = JointAmplitudeTensor(cap + 1, cap);
  for (int nu = 0; nu <= cap; ++nu)
    for (int nv = 0; nv <= cap; ++nv)
      for (int nw = 0; nw <= cap; ++nw) result.tensor.at(nu, nv, nw) = out.at(nu, nw, nv);
  return result;
}

/// max |a − b| over all indices <= max_index.
inline double max_abs_deviation(const JointAmplitudeTensor& a, const JointAmplitudeTensor& b, int max_index) {
  const int limit = std::min({max_index, a.dim - 1, b.dim - 1});
  double worst = 0.0;
  for (int nu = 0; nu <= limit; ++nu)
    for (int nv = 0; nv <= limit; ++nv)
      for (int nw = 0; nw <= limit; ++nw) worst = std::max(worst, std::abs(a.at(nu, nv, nw) - b.at(nu, nv, nw)));
  return worst;
}

}  // namespace evcs::oracle
