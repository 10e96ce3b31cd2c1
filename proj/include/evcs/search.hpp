#pragma once

// Scenario evaluation (simulate, herald, fit) and exhaustive grid search over
// the coherent amplitude β0 and the first transmittance t1.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "evcs/beam_splitter.hpp"
#include "evcs/error.hpp"
#include "evcs/parallel.hpp"
#include "evcs/simulator.hpp"
#include "evcs/state_fit.hpp"

namespace evcs {

/// One row of operating-point metrics, always recomputed from the scenario.
struct ScenarioRow {
  double s = 0.0;
  double beta0 = 0.0;
  double gamma0 = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double pr = 0.0;
  double pu = 0.0;
  double alpha = 0.0;
  double f = 0.0;
  double er = 0.0;
  bool converged = false;
  double zero_sum_residual = 0.0;
  double captured_mass = 0.0;
  double off_axis = 0.0;
};

inline ScenarioRow evaluate_scenario(const ScenarioSpec& spec, const FitOptions& fit = {}, int threads = 1) {
  try {
    const HeraldedGrid grid = heralded_grid(spec, threads);
    FitOptions options = fit;
    options.n_max = std::min(options.n_max, grid.n_max);
    const FitResult r = fit_entangled(grid, options);
    ScenarioRow row;
    row.s = spec.squeeze.s;
    row.beta0 = spec.beta.magnitude;
    row.gamma0 = spec.gamma.magnitude;
    row.t1 = spec.bs1.t;
    row.t2 = spec.bs2.t;
    row.pr = grid.pr;
    row.pu = grid.pu;
    row.alpha = r.alpha;
    row.f = r.f;
    row.er = r.er;
    row.converged = r.converged;
    row.zero_sum_residual = std::abs(zero_sum_residual(spec));
    row.captured_mass = captured_mass(spec);
    row.off_axis = grid.off_axis_fraction();
    return row;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " [scenario s=" + std::to_string(spec.squeeze.s) +
                              " beta0=" + std::to_string(spec.beta.magnitude) +
                              " gamma0=" + std::to_string(spec.gamma.magnitude) + " t1=" + std::to_string(spec.bs1.t) +
                              " t2=" + std::to_string(spec.bs2.t) + "]");
  }
}

/// Published operating points (φ = θ = π, splitter phases 0).
struct PublishedRow {
  const char* label;
  double s, beta0, gamma0, t1, t2;
  double pr, pu_percent, alpha, f, er_e5;
};

inline constexpr std::array<PublishedRow, 5> kTableOne{{
    {"Psi1", 0.5, 0.813, 0.5, 0.829, 0.740, 0.050, 99.8, 1.350, 0.174, 0.16},
    {"Psi2", 0.5, 1.040, 0.5, 0.780, 0.609, 0.041, 99.3, 1.591, 0.148, 0.33},
    {"Psi3", 0.5, 1.292, 0.5, 0.744, 0.502, 0.029, 97.1, 1.819, 0.122, 4.25},
    {"Psi4", 0.75, 1.302, 0.5, 0.729, 0.491, 0.059, 97.1, 1.990, 0.171, 24.8},
    {"Psi5", 0.75, 1.498, 0.5, 0.710, 0.428, 0.046, 96.2, 2.160, 0.150, 18.2},
}};

inline ScenarioSpec table_one_scenario(const PublishedRow& row, int trunc_in = 16, int trunc_out = 9) {
  ScenarioSpec spec;
  spec.squeeze = SqueezeParam(row.s, std::numbers::pi);
  spec.beta = CoherentParam(row.beta0, 0.0);
  spec.gamma = CoherentParam(row.gamma0, std::numbers::pi);
  spec.bs1 = BeamSplitterSpec(row.t1);
  spec.bs2 = BeamSplitterSpec(row.t2);
  spec.trunc_in = trunc_in;
  spec.trunc_out = trunc_out;
  return spec;
}

/// Tolerances a recomputed row must meet against its published counterpart.
struct TableOneTolerance {
  double pr = 0.003;
  double pu_percent = 0.5;
  double alpha = 0.02;
  double f = 0.005;
  double er_factor = 3.0;
};

struct TableOneCheck {
  bool pr = false, pu = false, alpha = false, f = false, er = false;
  bool all() const { return pr && pu && alpha && f && er; }
};

inline TableOneCheck check_against_published(const ScenarioRow& row, const PublishedRow& pub,
                                             const TableOneTolerance& tol = {}) {
  TableOneCheck c;
  c.pr = std::abs(row.pr - pub.pr) <= tol.pr;
  c.pu = std::abs(100.0 * row.pu - pub.pu_percent) <= tol.pu_percent;
  c.alpha = std::abs(row.alpha - pub.alpha) <= tol.alpha;
  c.f = std::abs(row.f - pub.f) <= tol.f;
  const double er_pub = pub.er_e5 * 1e-5;
  c.er = row.er <= tol.er_factor * er_pub && row.er >= er_pub / tol.er_factor;
  return c;
}

enum class Objective { MaxPurity, MaxProbability, MatchAlpha };

inline const char* to_string(Objective o) {
  switch (o) {
    case Objective::MaxPurity: return "max_pu";
    case Objective::MaxProbability: return "max_pr";
    case Objective::MatchAlpha: return "match_alpha";
  }
  return "?";
}

/// Inclusive arithmetic range min, min+step, ..., <= max.
struct Range {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::size_t count() const {
    if (!(step > 0.0) || max < min) return 0;
    return static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  }
  double at(std::size_t i) const { return min + static_cast<double>(i) * step; }
};

struct SearchSpace {
  Range beta0;
  Range t1;
  std::optional<Range> t2;  // set: scan t2 freely instead of solving the zero-sum condition
  double s = 0.5;
  double phi = std::numbers::pi;
  double gamma0 = 0.5;
  double theta = std::numbers::pi;
  Objective objective = Objective::MaxPurity;
  double pu_floor = 0.0;      // MaxProbability constraint
  double target_alpha = 0.0;  // MatchAlpha target
  double alpha_tolerance = 0.005;  // MatchAlpha admits |α − target| <= this
  std::size_t top_k = 10;
  int trunc_in = 16;
  int trunc_out = 9;
  FitOptions fit;

  std::size_t point_count() const { return beta0.count() * t1.count() * (t2 ? t2->count() : 1); }

  void validate() const {
    if (beta0.count() == 0 || t1.count() == 0 || (t2 && t2->count() == 0)) {
      throw Error(ErrorKind::Validation, "search grid is empty");
    }
    if (beta0.min < 0.0) throw Error(ErrorKind::Validation, "beta0 range must be >= 0");
    if (!(t1.min > 0.0) || !(t1.at(t1.count() - 1) < 1.0)) throw Error(ErrorKind::Validation, "t1 range must lie in (0, 1)");
    if (t2 && (t2->min < 0.0 || t2->at(t2->count() - 1) > 1.0)) throw Error(ErrorKind::Validation, "t2 range must lie in [0, 1]");
    if (gamma0 < 0.0 || s < 0.0) throw Error(ErrorKind::Validation, "amplitudes must be >= 0");
    if (top_k == 0) throw Error(ErrorKind::Validation, "top_k must be >= 1");
  }
};

namespace detail {

// Objective first (MatchAlpha ranks the admitted band by Pu), then higher Pu, lower Er, lower β0, lower t1, lower t2.
inline bool row_before(const ScenarioRow& a, const ScenarioRow& b, const SearchSpace& space) {
  const auto key = [&](const ScenarioRow& r) {
    switch (space.objective) {
      case Objective::MaxPurity: return -r.pu;
      case Objective::MaxProbability: return -r.pr;
      case Objective::MatchAlpha: return -r.pu;
    }
    return 0.0;
  };
  const double ka = key(a), kb = key(b);
  if (ka != kb) return ka < kb;
  if (a.pu != b.pu) return a.pu > b.pu;
  if (a.er != b.er) return a.er < b.er;
  if (a.beta0 != b.beta0) return a.beta0 < b.beta0;
  if (a.t1 != b.t1) return a.t1 < b.t1;
  return a.t2 < b.t2;
}

}  // namespace detail

/// Scenario for a grid point; t2 comes from the zero-sum condition unless scanned.
inline ScenarioSpec search_point(const SearchSpace& space, std::size_t index) {
  const std::size_t nt2 = space.t2 ? space.t2->count() : 1;
  const std::size_t nt1 = space.t1.count();
  const std::size_t i_t2 = index % nt2;
  const std::size_t i_t1 = (index / nt2) % nt1;
  const std::size_t i_b = index / (nt2 * nt1);
  ScenarioSpec spec;
  spec.squeeze = SqueezeParam(space.s, space.phi);
  spec.beta = CoherentParam(space.beta0.at(i_b), 0.0);
  spec.gamma = CoherentParam(space.gamma0, space.theta);
  spec.bs1 = BeamSplitterSpec(space.t1.at(i_t1));
  if (space.t2) {
    spec.bs2 = BeamSplitterSpec(space.t2->at(i_t2));
  } else {
    spec.bs2 = BeamSplitterSpec(solve_t2(spec.beta.value(), spec.gamma.value(), spec.bs1).t2);
  }
  spec.trunc_in = space.trunc_in;
  spec.trunc_out = space.trunc_out;
  return spec;
}

struct SearchOutcome {
  std::vector<ScenarioRow> rows;  // sorted, at most top_k
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // unsolvable, degenerate, or filtered out
};

/// Evaluates every grid point (in parallel), then sorts with a total order.
/// on_chunk, if given, receives each finished chunk of rows in grid order.
template <class ChunkCallback>
SearchOutcome search(const SearchSpace& space, int threads, ChunkCallback&& on_chunk) {
  space.validate();
  const std::size_t total = space.point_count();
  constexpr std::size_t kChunk = 256;
  std::vector<std::optional<ScenarioRow>> slots(total);
  for (std::size_t begin = 0; begin < total; begin += kChunk) {
    const std::size_t end = std::min(total, begin + kChunk);
    parallel_for(end - begin, threads, [&](std::size_t k) {
      const std::size_t i = begin + k;
      try {
        slots[i] = evaluate_scenario(search_point(space, i), space.fit, 1);
      } catch (const Error&) {
        slots[i].reset();
      }
    });
    std::vector<ScenarioRow> chunk;
    for (std::size_t i = begin; i < end; ++i)
      if (slots[i]) chunk.push_back(*slots[i]);
    on_chunk(chunk);
  }

  SearchOutcome out;
  out.evaluated = total;
  std::vector<ScenarioRow> rows;
  for (const auto& slot : slots) {
    if (!slot) continue;
    if (space.objective == Objective::MaxProbability && slot->pu < space.pu_floor) continue;
    if (space.objective == Objective::MatchAlpha && !(std::abs(slot->alpha - space.target_alpha) <= space.alpha_tolerance)) {
      continue;
    }
    rows.push_back(*slot);
  }
  out.skipped = total - rows.size();
  if (rows.empty()) throw Error(ErrorKind::EmptyResult, "no grid point satisfies the search constraints");
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const ScenarioRow& a, const ScenarioRow& b) { return detail::row_before(a, b, space); });
  if (rows.size() > space.top_k) rows.resize(space.top_k);
  out.rows = std::move(rows);
  return out;
}

inline SearchOutcome search(const SearchSpace& space, int threads = 0) {
  return search(space, threads, [](const std::vector<ScenarioRow>&) {});
}

}  // namespace evcs
