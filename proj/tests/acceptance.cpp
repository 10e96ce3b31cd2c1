// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "evcs/cli.hpp"
#include "evcs/oracle.hpp"
#include "evcs/search.hpp"
#include "evcs/simulator.hpp"
#include "evcs/state_fit.hpp"

using namespace evcs;
namespace fs = std::filesystem;

namespace {

int failures = 0;
int total = 0;

void report(bool ok, const std::string& id, const std::string& detail) {
  ++total;
  if (!ok) ++failures;
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

ScenarioSpec weak_reflection(bool solve) {
  ScenarioSpec spec;
  spec.squeeze = SqueezeParam(0.5, std::numbers::pi);
  spec.beta = CoherentParam(0.5, 0.0);
  spec.gamma = CoherentParam(0.5, std::numbers::pi);
  spec.bs1 = BeamSplitterSpec(0.999);
  spec.bs2 = BeamSplitterSpec(solve ? solve_t2(spec.beta.value(), spec.gamma.value(), spec.bs1).t2 : 0.999);
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void table_one() {
  const TableOneTolerance tol;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& pub : kTableOne) {
    const ScenarioRow r = evaluate_scenario(table_one_scenario(pub), FitOptions{}, 0);
    const auto c = check_against_published(r, pub);
    const std::string id = std::string("AC1 ") + pub.label;
    report(c.pr, id + " Pr", fmt("%.4f vs %.3f, |dev| %.4f <= %.3f", r.pr, pub.pr, std::abs(r.pr - pub.pr), tol.pr));
    report(c.pu, id + " Pu", fmt("%.2f%% vs %.1f%%, |dev| %.2f <= %.1f pp", 100 * r.pu, pub.pu_percent,
                                 std::abs(100 * r.pu - pub.pu_percent), tol.pu_percent));
    report(c.alpha, id + " alpha",
           fmt("%.4f vs %.3f, |dev| %.4f <= %.2f", r.alpha, pub.alpha, std::abs(r.alpha - pub.alpha), tol.alpha));
    report(c.f, id + " f", fmt("%.4f vs %.3f, |dev| %.4f <= %.3f", r.f, pub.f, std::abs(r.f - pub.f), tol.f));
    const double er_pub = pub.er_e5 * 1e-5;
    report(c.er, id + " Er", fmt("%.3e vs %.3e, ratio %.2f within [1/%.0f, %.0f]", r.er, er_pub, r.er / er_pub,
                                 tol.er_factor, tol.er_factor));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(seconds < 60.0, "AC1 runtime", fmt("%.2f s for five rows (< 60 s)", seconds));
}

void weak_reflection_checks() {
  const ScenarioSpec printed = weak_reflection(false);
  const double v = smallv_metric(printed);
  report(std::abs(v - 1.85e-3) <= 0.02 * 1.85e-3, "AC2 smallv", fmt("%.4e vs 1.85e-3 (within 2%%: %.2f%%)", v,
                                                                      100 * std::abs(v - 1.85e-3) / 1.85e-3));

  const HeraldedGrid g = heralded_grid(printed, 0);
  const double off = g.off_axis_fraction();
  report(off <= 0.005, "AC2 off-axis mass", fmt("sum P_nm (n,m >= 1) / Pr = %.3f%% (<= 0.5%%), t2 = 0.999", 100 * off));

  // The k-series form needs the zero-sum condition, so t2 is taken from solve_t2 (0.999002).
  const ScenarioSpec solved = weak_reflection(true);
  const auto approx = approx_psi_w(solved, 5);
  for (int n = 1; n <= 5; ++n) {
    const double rel = std::abs(approx.k1[n] - approx.full[n]) / std::abs(approx.full[n]);
    report(rel < 0.01, fmt("AC2 k=1 approx N_w=%d", n), fmt("relative deviation %.3f%% (< 1%%)", 100 * rel));
  }
}

void oracle_equivalence() {
  constexpr int kDim = 12;
  constexpr int kMaxIndex = 8;
  constexpr double kTol = 1e-8;
  std::vector<std::pair<std::string, ScenarioSpec>> cases;
  for (const auto& pub : kTableOne) cases.emplace_back(pub.label, table_one_scenario(pub));
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 5; ++i) {
    ScenarioSpec s;
    s.squeeze = SqueezeParam(uniform(rng, 0.0, 0.75), uniform(rng, 0.0, 2 * std::numbers::pi));
    s.beta = CoherentParam(uniform(rng, 0.0, 1.5), uniform(rng, 0.0, 2 * std::numbers::pi));
    s.gamma = CoherentParam(uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 2 * std::numbers::pi));
    s.bs1 = BeamSplitterSpec(uniform(rng, 0.0, 1.0), uniform(rng, -std::numbers::pi, std::numbers::pi),
                             uniform(rng, -std::numbers::pi, std::numbers::pi));
    s.bs2 = BeamSplitterSpec(uniform(rng, 0.0, 1.0), uniform(rng, -std::numbers::pi, std::numbers::pi),
                             uniform(rng, -std::numbers::pi, std::numbers::pi));
    cases.emplace_back("random " + std::to_string(i + 1), s);
  }
  for (auto& [label, spec] : cases) {
    spec.trunc_in = kDim;
    spec.trunc_out = std::min(spec.trunc_out, kDim);
    const auto engine = joint_amplitudes(spec, 0);
    const auto ref = oracle::oracle_joint_amplitudes(spec, kDim);
    const double dev = oracle::max_abs_deviation(engine, ref.tensor, kMaxIndex);
    report(dev < kTol, "AC3 oracle " + label, fmt("max |dev| %.2e over indices <= %d at D = %d (< 1e-8)", dev, kMaxIndex, kDim));
  }
}

void analytic_limits() {
  std::mt19937_64 rng(77);

  bool odd_zero = true;
  for (double s : {0.1, 0.5, 0.75, 1.5})
    for (double phi : {0.0, 1.0, std::numbers::pi})
      for (int n = 1; n <= kMaxPhotonNumber; n += 2) odd_zero = odd_zero && squeezed_coeff(SqueezeParam(s, phi), n) == Amplitude{};
  report(odd_zero, "AC4a squeezed odd n", "all odd-n coefficients are exactly zero");

  double worst_unitarity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BeamSplitterSpec b1(uniform(rng, 0, 1), uniform(rng, -4, 4), uniform(rng, -4, 4));
    const BeamSplitterSpec b2(uniform(rng, 0, 1), uniform(rng, -4, 4), uniform(rng, -4, 4));
    worst_unitarity = std::max(worst_unitarity, unitarity_residual(compose_q(b1, b2).matrix()));
  }
  report(worst_unitarity < 1e-12, "AC4b QMap unitarity", fmt("max residual %.2e over 1000 cascades (< 1e-12)", worst_unitarity));

  double worst_residual = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double b = uniform(rng, 0.05, 2.0), g = uniform(rng, 0.05, 2.0), t1 = uniform(rng, 0.01, 0.999);
    const auto sol = solve_t2(b, std::polar(g, std::numbers::pi), BeamSplitterSpec(t1));
    worst_residual = std::max(worst_residual, sol.residual);
  }
  report(worst_residual < 1e-12, "AC4c solve_t2 residual", fmt("max residual %.2e over 100 triples (< 1e-12)", worst_residual));
  const double t2_at_unit = solve_t2(0.813, std::polar(0.5, std::numbers::pi), BeamSplitterSpec(1.0)).t2;
  report(t2_at_unit == 1.0, "AC4c t1 = 1 gives t2 = 1", fmt("t2 = %.17g", t2_at_unit));

  double worst_vacuum = 0.0;
  for (int i = 0; i < 20; ++i) {
    ScenarioSpec s;
    s.squeeze = SqueezeParam(uniform(rng, 0.1, 0.75), std::numbers::pi);
    s.beta = CoherentParam(uniform(rng, 0.3, 1.5));
    s.gamma = CoherentParam(uniform(rng, 0.2, 0.8), std::numbers::pi);
    s.bs1 = BeamSplitterSpec(uniform(rng, 0.6, 0.99));
    s.bs2 = BeamSplitterSpec(solve_t2(s.beta.value(), s.gamma.value(), s.bs1).t2);
    const auto g = heralded_grid(s, 0);
    worst_vacuum = std::max(worst_vacuum, g.prob(0, 0) / g.pr);
  }
  report(worst_vacuum < 1e-10, "AC4d vacuum suppression", fmt("max |C(1,0,0)|^2/Pr %.2e over 20 solved scenarios (< 1e-10)", worst_vacuum));

  double worst_fit = 0.0;
  for (double alpha : {0.5, 1.0, 1.35, 2.0})
    for (double f : {0.1, 0.174, 0.3}) {
      const auto r = fit_entangled(ansatz_grid(alpha, f, 9));
      worst_fit = std::max({worst_fit, std::abs(r.alpha - alpha), std::abs(r.f - f)});
    }
  report(worst_fit < 1e-6, "AC4e fit round trip", fmt("max |dev| %.2e over the 12-point grid (< 1e-6)", worst_fit));
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / "evcs_acceptance";
  fs::create_directories(dir);
  std::ostringstream sink;

  std::string table[2];
  for (int k = 0; k < 2; ++k) {
    cli::Options o;
    o.threads = k == 0 ? 1 : 4;
    o.out_path = dir / ("table1_" + std::to_string(o.threads) + ".json");
    const int code = cli::cmd_table1(o, sink, sink);
    table[k] = code == 0 ? slurp(*o.out_path) : std::string();
  }
  report(!table[0].empty() && table[0] == table[1], "AC5 table1 determinism",
         fmt("1 vs 4 threads: %zu bytes, %s", table[0].size(), table[0] == table[1] ? "identical" : "different"));

  SearchSpace space;
  space.beta0 = Range{0.76, 0.85, 0.01};
  space.t1 = Range{0.80, 0.845, 0.005};
  space.t2 = Range{0.70, 0.79, 0.01};
  space.top_k = 1000;
  std::string rows[2];
  for (int k = 0; k < 2; ++k) {
    cli::Options o;
    o.threads = k == 0 ? 1 : 4;
    o.out_path = dir / ("search_" + std::to_string(o.threads) + ".json");
    const int code = cli::cmd_search(space, o, sink, sink);
    rows[k] = code == 0 ? slurp(*o.out_path) : std::string();
  }
  report(!rows[0].empty() && rows[0] == rows[1], "AC5 search determinism",
         fmt("%zu-point search, 1 vs 4 threads: %zu bytes, %s", space.point_count(), rows[0].size(),
             rows[0] == rows[1] ? "identical" : "different"));
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const auto guard = [](const char* name, auto&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      report(false, name, std::string("raised: ") + e.what());
    }
  };
  guard("AC1", table_one);
  guard("AC2", weak_reflection_checks);
  guard("AC3", oracle_equivalence);
  guard("AC4", analytic_limits);
  guard("AC5", determinism);
  std::printf("%d of %d checks passed\n", total - failures, total);
  return failures == 0 ? 0 : 1;
}
