#pragma once

// Exact truncated output amplitudes of the two-splitter cascade and the
// single-photon heralded state on modes (v, w).

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "evcs/beam_splitter.hpp"
#include "evcs/error.hpp"
#include "evcs/fock.hpp"
#include "evcs/parallel.hpp"

namespace evcs {

/// Full experiment: squeezed vacuum in a, coherent β in b, coherent γ in c.
struct ScenarioSpec {
  SqueezeParam squeeze{0.0, std::numbers::pi};
  CoherentParam beta{0.0, 0.0};
  CoherentParam gamma{0.0, std::numbers::pi};
  BeamSplitterSpec bs1{1.0};
  BeamSplitterSpec bs2{1.0};
  int trunc_in = 16;   // per-input photon cap
  int trunc_out = 9;   // reported photon cap on v and w

  void validate() const {
    bs1.validate();
    bs2.validate();
    if (trunc_in < 1 || trunc_in > kMaxPhotonNumber) {
      throw Error(ErrorKind::Config, "trunc_in must lie in [1, " + std::to_string(kMaxPhotonNumber) + "]");
    }
    if (trunc_out < 1 || trunc_out > trunc_in) {
      throw Error(ErrorKind::Config, "trunc_out must lie in [1, trunc_in]");
    }
  }
};

/// Probability retained by truncating every input at trunc_in photons. Because
/// the cascade is unitary this is also the total output probability.
inline double captured_mass(const ScenarioSpec& spec) {
  return squeezed_captured_mass(spec.squeeze, spec.trunc_in) * coherent_captured_mass(spec.beta.value(), spec.trunc_in) *
         coherent_captured_mass(spec.gamma.value(), spec.trunc_in);
}

inline constexpr double kMinCapturedMass = 0.99;
inline constexpr double kCapturedMassWarning = 0.9999;

inline void require_captured_mass(const ScenarioSpec& spec) {
  const double mass = captured_mass(spec);
  if (mass < kMinCapturedMass) {
    throw Error(ErrorKind::Truncation, "truncation at " + std::to_string(spec.trunc_in) +
                                           " photons captures only " + std::to_string(mass) + " of the input state");
  }
}

/// Dense (N_u, N_v, N_w) amplitudes, each index in [0, dim).
struct JointAmplitudeTensor {
  int dim = 0;
  int trunc_in = 0;
  std::vector<Amplitude> data;

  JointAmplitudeTensor() = default;
  explicit JointAmplitudeTensor(int dim_, int trunc_in_)
      : dim(dim_), trunc_in(trunc_in_), data(static_cast<std::size_t>(dim_) * dim_ * dim_) {}

  std::size_t index(int nu, int nv, int nw) const {
    return (static_cast<std::size_t>(nu) * dim + nv) * dim + nw;
  }
  const Amplitude& at(int nu, int nv, int nw) const { return data[index(nu, nv, nw)]; }
  Amplitude& at(int nu, int nv, int nw) { return data[index(nu, nv, nw)]; }

  double total_probability() const {
    double sum = 0.0;
    for (const auto& a : data) sum += std::norm(a);
    return sum;
  }
};

namespace detail {

/// Power tables for the multinomial expansion, built in log space.
struct ExpansionTables {
  int cap = 0;
  std::vector<Amplitude> squeezed;  // e^{−(|β|²+|γ|²)/2}·C_n(ξ)·√(n!)
  std::vector<Amplitude> beta_pow;  // βˡ
  std::vector<Amplitude> gamma_pow; // γᵐ
  // q^k / k! for each of the eight cascade coefficients
  std::vector<Amplitude> a_u, a_v, a_w, b_u, b_v, b_w, c_u, c_v;

  static std::vector<Amplitude> scaled_powers(Amplitude z, int cap, bool divide_by_factorial) {
    std::vector<Amplitude> out(static_cast<std::size_t>(cap) + 1);
    out[0] = 1.0;
    const double r = std::abs(z);
    const double log_r = std::log(r);
    const double phase = std::arg(z);
    for (int k = 1; k <= cap; ++k) {
      if (r == 0.0) {
        out[k] = 0.0;
        continue;
      }
      const double log_mag = k * log_r - (divide_by_factorial ? log_factorial(k) : 0.0);
      out[k] = std::polar(std::exp(log_mag), k * phase);
    }
    return out;
  }

  static ExpansionTables build(const ScenarioSpec& spec) {
    ExpansionTables t;
    const int cap = spec.trunc_in;
    t.cap = cap;
    const Amplitude beta = spec.beta.value();
    const Amplitude gamma = spec.gamma.value();
    const double log_pre = -0.5 * (std::norm(beta) + std::norm(gamma));
    const double log_cosh = std::log(std::cosh(spec.squeeze.s));
    const double ratio = 0.5 * std::tanh(spec.squeeze.s);
    t.squeezed.assign(static_cast<std::size_t>(cap) + 1, Amplitude{});
    for (int n = 0; n <= cap; n += 2) {
      const int k = n / 2;
      if (k > 0 && ratio == 0.0) continue;
      // C_n·√(n!) = n!/(√cosh s·(n/2)!)·(−½e^{iφ}tanh s)^{n/2}
      const double log_mag =
          log_pre + log_factorial(n) - 0.5 * log_cosh - log_factorial(k) + (k > 0 ? k * std::log(ratio) : 0.0);
      t.squeezed[n] = std::polar(std::exp(log_mag), k * (spec.squeeze.phi + std::numbers::pi));
    }
    t.beta_pow = scaled_powers(beta, cap, false);
    t.gamma_pow = scaled_powers(gamma, cap, false);
    const QMap q = compose_q(spec.bs1, spec.bs2);
    t.a_u = scaled_powers(q.q_a_u, cap, true);
    t.a_v = scaled_powers(q.q_a_v, cap, true);
    t.a_w = scaled_powers(q.q_a_w, cap, true);
    t.b_u = scaled_powers(q.q_b_u, cap, true);
    t.b_v = scaled_powers(q.q_b_v, cap, true);
    t.b_w = scaled_powers(q.q_b_w, cap, true);
    t.c_u = scaled_powers(q.q_c_u, cap, true);
    t.c_v = scaled_powers(q.q_c_v, cap, true);
    return t;
  }

  /// C(N_u, N_v, N_w). Terms are accumulated in ascending lexicographic order of
  /// (n_u, n_v, n_w, l_u, l_v, l_w, m_u, m_v); with the output fixed, l_w, m_u and
  /// m_v are determined, so the loop nest over (n_u, n_v, n_w, l_u, l_v) is that order.
  Amplitude cell(int nu_out, int nv_out, int nw_out) const {
    Amplitude sum{};
    for (int nu = 0; nu <= nu_out; ++nu) {
      for (int nv = 0; nv <= nv_out; ++nv) {
        for (int nw = 0; nw <= nw_out; ++nw) {
          const int n = nu + nv + nw;
          if (n > cap || n % 2 != 0) continue;
          const int lw = nw_out - nw;
          const Amplitude outer = squeezed[n] * a_u[nu] * a_v[nv] * a_w[nw] * b_w[lw];
          for (int lu = 0; lu <= nu_out - nu; ++lu) {
            const int mu = nu_out - nu - lu;
            const Amplitude middle = outer * b_u[lu] * c_u[mu];
            for (int lv = 0; lv <= nv_out - nv; ++lv) {
              const int mv = nv_out - nv - lv;
              const int l = lu + lv + lw;
              const int m = mu + mv;
              if (l > cap || m > cap) continue;
              sum += middle * b_v[lv] * c_v[mv] * beta_pow[l] * gamma_pow[m];
            }
          }
        }
      }
    }
    // (u†)^N_u (v†)^N_v (w†)^N_w |0⟩ = √(N_u! N_v! N_w!) |N_u, N_v, N_w⟩
    const double norm = std::exp(0.5 * (log_factorial(nu_out) + log_factorial(nv_out) + log_factorial(nw_out)));
    return sum * norm;
  }
};

}  // namespace detail

/// All output amplitudes with every index <= trunc_in. Cells are independent and
/// may run on several threads; each cell's sum order is fixed, so the result is
/// bitwise identical for any thread count.
inline JointAmplitudeTensor joint_amplitudes(const ScenarioSpec& spec, int threads = 0) {
  spec.validate();
  require_captured_mass(spec);
  const auto tables = detail::ExpansionTables::build(spec);
  const int dim = spec.trunc_in + 1;
  JointAmplitudeTensor out(dim, spec.trunc_in);
  const std::size_t cells = out.data.size();
  parallel_for(cells, threads, [&](std::size_t i) {
    const int nw = static_cast<int>(i % dim);
    const int nv = static_cast<int>((i / dim) % dim);
    const int nu = static_cast<int>(i / (static_cast<std::size_t>(dim) * dim));
    out.data[i] = tables.cell(nu, nv, nw);
  });
  return out;
}

/// Amplitudes C(1, n, m) on the heralded modes with P_nm = |C|² and the
/// heralding metrics.
struct HeraldedGrid {
  int n_max = 0;
  std::vector<Amplitude> c;  // row-major, (n_max+1)², index n·(n_max+1)+m
  std::vector<double> p;
  double pr = 0.0;  // Σ P_nm
  double pu = 0.0;  // (Σ_n P_n0 + Σ_m P_0m) / Pr

  int size() const { return n_max + 1; }
  std::size_t index(int n, int m) const { return static_cast<std::size_t>(n) * size() + m; }
  const Amplitude& amp(int n, int m) const { return c[index(n, m)]; }
  double prob(int n, int m) const { return p[index(n, m)]; }

  /// Σ_{n>=1, m>=1} P_nm / Pr
  double off_axis_fraction() const {
    double off = 0.0;
    for (int n = 1; n <= n_max; ++n)
      for (int m = 1; m <= n_max; ++m) off += prob(n, m);
    return pr > 0.0 ? off / pr : 0.0;
  }
};

inline constexpr double kDegenerateProbability = 1e-15;

/// Fills P_nm, Pr and Pu from amplitudes. Pu counts P_00 in both axis sums, as
/// the purity definition does; Pu is 0 when Pr is 0.
inline HeraldedGrid make_heralded_grid(std::vector<Amplitude> c, int n_max) {
  HeraldedGrid g;
  g.n_max = n_max;
  g.c = std::move(c);
  g.p.resize(g.c.size());
  for (std::size_t i = 0; i < g.c.size(); ++i) g.p[i] = std::norm(g.c[i]);
  double total = 0.0;
  for (double v : g.p) total += v;
  g.pr = total;
  double axes = 0.0;
  for (int n = 0; n <= n_max; ++n) axes += g.prob(n, 0);
  for (int m = 0; m <= n_max; ++m) axes += g.prob(0, m);
  g.pu = total > 0.0 ? axes / total : 0.0;
  return g;
}

inline void require_nondegenerate(const HeraldedGrid& g) {
  if (g.pr < kDegenerateProbability) {
    throw Error(ErrorKind::Degenerate, "heralding probability " + std::to_string(g.pr) + " is below " +
                                           std::to_string(kDegenerateProbability) + "; scenario is degenerate");
  }
}

/// N_u = 1 slice of a joint tensor, cut at n_max on v and w.
inline HeraldedGrid herald_single(const JointAmplitudeTensor& t, int n_max) {
  if (t.dim < 2) throw Error(ErrorKind::Config, "tensor does not cover N_u = 1");
  if (n_max < 0 || n_max >= t.dim) throw Error(ErrorKind::Config, "n_max exceeds tensor extent");
  std::vector<Amplitude> c(static_cast<std::size_t>(n_max + 1) * (n_max + 1));
  for (int n = 0; n <= n_max; ++n)
    for (int m = 0; m <= n_max; ++m) c[static_cast<std::size_t>(n) * (n_max + 1) + m] = t.at(1, n, m);
  auto g = make_heralded_grid(std::move(c), n_max);
  require_nondegenerate(g);
  return g;
}

/// Heralded grid computed directly, without the rest of the tensor. Cell values
/// are bitwise identical to herald_single(joint_amplitudes(spec), trunc_out).
inline HeraldedGrid heralded_grid(const ScenarioSpec& spec, int threads = 0) {
  spec.validate();
  require_captured_mass(spec);
  const auto tables = detail::ExpansionTables::build(spec);
  const int n_max = spec.trunc_out;
  const int size = n_max + 1;
  std::vector<Amplitude> c(static_cast<std::size_t>(size) * size);
  parallel_for(c.size(), threads, [&](std::size_t i) {
    c[i] = tables.cell(1, static_cast<int>(i / size), static_cast<int>(i % size));
  });
  auto g = make_heralded_grid(std::move(c), n_max);
  require_nondegenerate(g);
  return g;
}

inline Amplitude zero_sum_residual(const ScenarioSpec& spec) {
  return zero_sum_residual(spec.beta.value(), spec.gamma.value(), compose_q(spec.bs1, spec.bs2));
}

/// |(q_a_w / (β·q_b_w))² · (−½·e^{iφ}·tanh s)|: below 1 the k = 1 term dominates
/// the w-mode series.
inline double smallv_metric(const ScenarioSpec& spec) {
  const QMap q = compose_q(spec.bs1, spec.bs2);
  const Amplitude denom = spec.beta.value() * q.q_b_w;
  if (std::abs(denom) == 0.0) throw Error(ErrorKind::Degenerate, "smallv metric undefined: beta * q_b_w = 0");
  const Amplitude ratio = q.q_a_w / denom;
  const Amplitude x = -0.5 * std::polar(1.0, spec.squeeze.phi) * std::tanh(spec.squeeze.s);
  return std::abs(ratio * ratio * x);
}

/// w-mode amplitudes of the N_v = 0, N_u = 1 branch under the zero-sum condition.
struct PsiWApproximation {
  CoefficientVector full;      // every k in the series
  CoefficientVector k1;        // k = 1 only (photon-added coherent form)
  double zero_sum_residual = 0.0;
};

inline constexpr double kApproxZeroSumTolerance = 1e-8;

/// Series in k with 1 + n_w = 2k and l_w = N_w − 2k + 1:
///   C(1,0,N_w) = √(N_w!)·e^{−(|β|²+|γ|²)/2}·2q_a_u/√(cosh s)
///                · Σ_k (β q_b_w)^{l_w} q_a_w^{2k−1} (−½e^{iφ}tanh s)^k / (l_w!(k−1)!),
/// restricted to the same input caps (2k <= trunc_in, l_w <= trunc_in) as the engine.
inline PsiWApproximation approx_psi_w(const ScenarioSpec& spec, int n_max) {
  spec.validate();
  detail::check_photon_number(n_max);
  PsiWApproximation out;
  out.zero_sum_residual = std::abs(zero_sum_residual(spec));
  if (out.zero_sum_residual > kApproxZeroSumTolerance) {
    throw Error(ErrorKind::Validation, "zero-sum condition violated: residual " + std::to_string(out.zero_sum_residual));
  }
  const QMap q = compose_q(spec.bs1, spec.bs2);
  const Amplitude beta = spec.beta.value();
  const Amplitude gamma = spec.gamma.value();
  const Amplitude x = -0.5 * std::polar(1.0, spec.squeeze.phi) * std::tanh(spec.squeeze.s);
  const Amplitude prefactor = std::exp(-0.5 * (std::norm(beta) + std::norm(gamma))) * 2.0 * q.q_a_u /
                              std::sqrt(std::cosh(spec.squeeze.s));
  const Amplitude bq = beta * q.q_b_w;
  const int cap = spec.trunc_in;

  out.full.entries.assign(static_cast<std::size_t>(n_max) + 1, Amplitude{});
  out.k1.entries.assign(static_cast<std::size_t>(n_max) + 1, Amplitude{});
  for (int nw = 1; nw <= n_max; ++nw) {
    const double number_norm = std::exp(0.5 * log_factorial(nw));
    Amplitude sum{};
    for (int k = 1; 2 * k - 1 <= nw; ++k) {
      const int lw = nw - 2 * k + 1;
      if (2 * k > cap || lw > cap) continue;
      const Amplitude term = ipow(bq, lw) * ipow(q.q_a_w, 2 * k - 1) * ipow(x, k) *
                             std::exp(-log_factorial(lw) - log_factorial(k - 1));
      sum += term;
      if (k == 1) out.k1[nw] = prefactor * term * number_norm;
    }
    out.full[nw] = prefactor * sum * number_norm;
  }
  return out;
}

}  // namespace evcs
