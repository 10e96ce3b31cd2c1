#pragma once

// Command implementations behind the evcs executable. Each command writes its
// primary artifact to `out` (or to --out), diagnostics to `err`, and returns
// an exit code.

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "evcs/error.hpp"
#include "evcs/io.hpp"
#include "evcs/oracle.hpp"
#include "evcs/search.hpp"
#include "evcs/simulator.hpp"
#include "evcs/state_fit.hpp"

namespace evcs::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitParse = 2,
  kExitValidation = 3,
  kExitDegenerate = 4,
  kExitOracle = 5,
  kExitTruncation = 6,
  kExitEmpty = 7,
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return kExitParse;
    case ErrorKind::Validation:
    case ErrorKind::Config: return kExitValidation;
    case ErrorKind::Degenerate: return kExitDegenerate;
    case ErrorKind::OracleUnreliable: return kExitOracle;
    case ErrorKind::Truncation: return kExitTruncation;
    case ErrorKind::EmptyResult: return kExitEmpty;
  }
  return 1;
}

/// Flags shared by the commands.
struct Options {
  std::optional<int> trunc_in;
  std::optional<int> trunc_out;
  std::optional<double> phi;
  std::optional<double> theta;
  bool standard_norm = false;  // add both-normalization diagnostic columns
  bool paper_norm = false;     // fit with the e^{−|α|²} coefficient instead of the standard one
  std::optional<std::filesystem::path> out_path;
  std::string format = "json";
  int threads = 0;

  CoherentNorm norm() const { return paper_norm ? CoherentNorm::Paper : CoherentNorm::Standard; }
  CoherentNorm other_norm() const { return paper_norm ? CoherentNorm::Standard : CoherentNorm::Paper; }

  FitOptions fit_options() const {
    FitOptions f;
    f.norm = norm();
    return f;
  }

  void require_format(std::initializer_list<const char*> allowed) const {
    for (const char* a : allowed)
      if (format == a) return;
    throw Error(ErrorKind::Parse, "unsupported --format '" + format + "'");
  }
};

inline void apply_overrides(ScenarioSpec& spec, const Options& o) {
  if (o.trunc_in) spec.trunc_in = *o.trunc_in;
  if (o.trunc_out) spec.trunc_out = *o.trunc_out;
  if (o.phi) spec.squeeze = SqueezeParam(spec.squeeze.s, *o.phi);
  if (o.theta) spec.gamma = CoherentParam(spec.gamma.magnitude, *o.theta);
}

inline void emit(const std::string& content, const Options& o, std::ostream& out) {
  if (o.out_path) {
    io::write_atomically(*o.out_path, content);
  } else {
    out << content;
  }
}

inline void warn_captured_mass(const ScenarioSpec& spec, const std::string& label, std::ostream& err) {
  const double mass = captured_mass(spec);
  if (mass < kCapturedMassWarning) {
    err << "warning: " << label << ": truncation at " << spec.trunc_in << " photons captures "
        << io::format_double(mass) << " of the input state\n";
  }
}

inline io::json tool_json() { return io::json{{"name", io::kToolName}, {"version", io::kToolVersion}}; }

/// Runs a command body, mapping library errors to exit codes.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  }
}

// ---- simulate ----------------------------------------------------------------

/// Self-contained result bundle for one scenario file.
inline io::json simulate_bundle(io::ScenarioFile file, const Options& o, std::ostream& err) {
  apply_overrides(file.spec, o);
  const ScenarioSpec spec = io::resolve(file);
  warn_captured_mass(spec, "scenario", err);

  const HeraldedGrid grid = heralded_grid(spec, o.threads);
  const ScenarioRow row = evaluate_scenario(spec, o.fit_options(), o.threads);
  FitOptions alt = o.fit_options();
  alt.norm = o.other_norm();
  alt.n_max = std::min(alt.n_max, grid.n_max);
  const FitResult primary_fit = [&] {
    FitOptions f = o.fit_options();
    f.n_max = std::min(f.n_max, grid.n_max);
    return fit_entangled(grid, f);
  }();
  const FitResult alternate_fit = fit_entangled(grid, alt);

  std::optional<double> smallv;
  try {
    smallv = smallv_metric(spec);
  } catch (const Error&) {
  }

  io::json diagnostics{
      {"captured_mass", captured_mass(spec)},
      {"captured_mass_warning", captured_mass(spec) < kCapturedMassWarning},
      {"zero_sum_residual", std::abs(zero_sum_residual(spec))},
      {"t2_solved", file.solve_t2},
      {"t2_closed_form_printed",
       io::nullable_nan(detail::closed_form_t2(spec.beta.magnitude, spec.gamma.magnitude, spec.bs1.t))},
      {"t2_closed_form_squared",
       io::nullable_nan(detail::closed_form_t2(spec.beta.magnitude, spec.gamma.magnitude, spec.bs1.t * spec.bs1.t))},
      {"smallv", io::nullable(smallv)},
      {"off_axis_fraction", grid.off_axis_fraction()},
      {"vacuum_fraction", grid.prob(0, 0) / grid.pr},
  };
  return io::json{
      {"tool", tool_json()},
      {"scenario", io::to_json(spec)},
      {"scenario_text", io::format_scenario(file)},
      {"diagnostics", diagnostics},
      {"heralded_grid", io::to_json(grid)},
      {"row", io::to_json(row)},
      {"fit", io::to_json(primary_fit)},
      {"fit_alternate_normalization", io::to_json(alternate_fit)},
  };
}

inline int cmd_simulate(const io::ScenarioFile& file, const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    o.require_format({"json", "csv"});
    if (o.format == "csv") {
      io::ScenarioFile f = file;
      apply_overrides(f.spec, o);
      const ScenarioSpec spec = io::resolve(f);
      warn_captured_mass(spec, "scenario", err);
      emit(io::grid_csv(heralded_grid(spec, o.threads)), o, out);
    } else {
      emit(simulate_bundle(file, o, err).dump(2) + "\n", o, out);
    }
    return int{kExitOk};
  });
}

inline int cmd_simulate(const std::filesystem::path& path, const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return cmd_simulate(io::load_scenario(path), o, out, err); });
}

// ---- table1 ------------------------------------------------------------------

struct TableOneEntry {
  const PublishedRow* published = nullptr;
  ScenarioSpec spec;
  ScenarioRow row;
  TableOneCheck check;
  std::optional<double> er_other;  // Er of the fit under the other normalization
};

inline std::vector<TableOneEntry> run_table_one(const Options& o, std::ostream& err) {
  std::vector<TableOneEntry> entries;
  for (const auto& pub : kTableOne) {
    TableOneEntry e;
    e.published = &pub;
    e.spec = table_one_scenario(pub);
    apply_overrides(e.spec, o);
    warn_captured_mass(e.spec, pub.label, err);
    e.row = evaluate_scenario(e.spec, o.fit_options(), o.threads);
    e.check = check_against_published(e.row, pub);
    if (o.standard_norm) {
      FitOptions alt = o.fit_options();
      alt.norm = o.other_norm();
      const HeraldedGrid grid = heralded_grid(e.spec, o.threads);
      alt.n_max = std::min(alt.n_max, grid.n_max);
      e.er_other = fit_entangled(grid, alt).er;
    }
    entries.push_back(e);
  }
  return entries;
}

inline std::string table_one_text(const std::vector<TableOneEntry>& entries, const Options& o) {
  std::ostringstream s;
  const auto flag = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  s << "fit normalization: " << to_string(o.norm()) << "\n";
  for (const auto& e : entries) {
    const auto& p = *e.published;
    const auto& r = e.row;
    s << p.label << "  s=" << p.s << " beta0=" << p.beta0 << " gamma0=" << p.gamma0 << " t1=" << p.t1
      << " t2=" << p.t2 << "  " << (e.check.all() ? "PASS" : "FAIL") << "\n";
    s << std::fixed;
    s << "  Pr     " << std::setprecision(4) << r.pr << "  published " << std::setprecision(3) << p.pr << "  dev "
      << std::setprecision(4) << std::abs(r.pr - p.pr) << "  " << flag(e.check.pr) << "\n";
    s << "  Pu(%)  " << std::setprecision(2) << 100.0 * r.pu << "  published " << std::setprecision(1)
      << p.pu_percent << "  dev " << std::setprecision(2) << std::abs(100.0 * r.pu - p.pu_percent) << "  "
      << flag(e.check.pu) << "\n";
    s << "  alpha  " << std::setprecision(4) << r.alpha << "  published " << std::setprecision(3) << p.alpha
      << "  dev " << std::setprecision(4) << std::abs(r.alpha - p.alpha) << "  " << flag(e.check.alpha) << "\n";
    s << "  f      " << std::setprecision(4) << r.f << "  published " << std::setprecision(3) << p.f << "  dev "
      << std::setprecision(4) << std::abs(r.f - p.f) << "  " << flag(e.check.f) << "\n";
    s << std::defaultfloat << std::setprecision(3);
    s << "  Er     " << r.er << "  published " << p.er_e5 * 1e-5 << "  ratio " << r.er / (p.er_e5 * 1e-5) << "  "
      << flag(e.check.er) << "\n";
    if (e.er_other) s << "  Er(" << to_string(o.other_norm()) << ") " << *e.er_other << "\n";
    s << std::setprecision(6);
  }
  return s.str();
}

inline io::json table_one_json(const std::vector<TableOneEntry>& entries, const Options& o) {
  io::json rows = io::json::array();
  bool all = true;
  for (const auto& e : entries) {
    const auto& p = *e.published;
    all = all && e.check.all();
    io::json j{
        {"label", p.label},
        {"scenario", io::to_json(e.spec)},
        {"recomputed", io::to_json(e.row)},
        {"published", {{"pr", p.pr}, {"pu", p.pu_percent / 100.0}, {"alpha", p.alpha}, {"f", p.f}, {"er", p.er_e5 * 1e-5}}},
        {"deviation",
         {{"pr", std::abs(e.row.pr - p.pr)},
          {"pu_percent", std::abs(100.0 * e.row.pu - p.pu_percent)},
          {"alpha", std::abs(e.row.alpha - p.alpha)},
          {"f", std::abs(e.row.f - p.f)},
          {"er_ratio", e.row.er / (p.er_e5 * 1e-5)}}},
        {"checks", {{"pr", e.check.pr}, {"pu", e.check.pu}, {"alpha", e.check.alpha}, {"f", e.check.f}, {"er", e.check.er}}},
        {"pass", e.check.all()},
    };
    if (e.er_other) j["er_" + std::string(to_string(o.other_norm()))] = *e.er_other;
    rows.push_back(std::move(j));
  }
  return io::json{{"tool", tool_json()}, {"normalization", to_string(o.norm())}, {"rows", rows}, {"all_pass", all}};
}

inline std::string table_one_csv(const std::vector<TableOneEntry>& entries, const Options& o) {
  std::ostringstream s;
  s << "label," << io::kRowCsvHeader << ",pr_published,pu_published,alpha_published,f_published,er_published,pass";
  if (o.standard_norm) s << ",er_" << to_string(o.other_norm());
  s << "\n";
  for (const auto& e : entries) {
    const auto& p = *e.published;
    s << p.label << ',' << io::row_csv(e.row) << ',' << io::format_double(p.pr) << ','
      << io::format_double(p.pu_percent / 100.0) << ',' << io::format_double(p.alpha) << ','
      << io::format_double(p.f) << ',' << io::format_double(p.er_e5 * 1e-5) << ',' << (e.check.all() ? 1 : 0);
    if (e.er_other) s << ',' << io::format_double(*e.er_other);
    s << "\n";
  }
  return s.str();
}

inline int cmd_table1(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    o.require_format({"text", "json", "csv"});
    const auto entries = run_table_one(o, err);
    if (o.format == "text") {
      emit(table_one_text(entries, o), o, out);
    } else if (o.format == "csv") {
      emit(table_one_csv(entries, o), o, out);
    } else {
      emit(table_one_json(entries, o).dump(2) + "\n", o, out);
    }
    return int{kExitOk};
  });
}

// ---- verify ------------------------------------------------------------------

struct VerifyOptions {
  int dim = 12;                 // oracle photon cap D per input mode
  int max_index = 8;            // compare indices <= this
  bool mismatch_conventions = false;
  double tolerance = 1e-8;
};

struct VerifyReport {
  double deviation = 0.0;
  double leakage = 0.0;
  double oracle_norm = 0.0;
  int compared_up_to = 0;
  bool pass = false;
};

inline VerifyReport verify_scenario(ScenarioSpec spec, const VerifyOptions& v, int threads) {
  if (v.dim < 1 || v.dim > 16) throw Error(ErrorKind::Config, "verify requires 1 <= D <= 16");
  if (v.max_index < 0) throw Error(ErrorKind::Config, "verify max index must be >= 0");
  spec.trunc_in = v.dim;
  spec.trunc_out = std::min(spec.trunc_out, v.dim);
  const JointAmplitudeTensor engine = joint_amplitudes(spec, threads);
  oracle::OracleOptions oo;
  oo.transposed_convention = v.mismatch_conventions;
  const oracle::OracleResult ref = oracle::oracle_joint_amplitudes(spec, v.dim, oo);
  VerifyReport r;
  r.compared_up_to = std::min(v.max_index, v.dim);
  r.deviation = oracle::max_abs_deviation(engine, ref.tensor, r.compared_up_to);
  r.leakage = ref.leakage;
  r.oracle_norm = ref.output_norm;
  r.pass = r.deviation < v.tolerance;
  return r;
}

inline int cmd_verify(const io::ScenarioFile& file, const VerifyOptions& v, const Options& o, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] {
    o.require_format({"text", "json"});
    io::ScenarioFile f = file;
    apply_overrides(f.spec, o);
    const ScenarioSpec spec = io::resolve(f);
    const VerifyReport r = verify_scenario(spec, v, o.threads);
    if (o.format == "json") {
      const io::json j{{"tool", tool_json()},
                       {"scenario", io::to_json(spec)},
                       {"dim", v.dim},
                       {"max_index", r.compared_up_to},
                       {"mismatched_conventions", v.mismatch_conventions},
                       {"max_abs_deviation", r.deviation},
                       {"tolerance", v.tolerance},
                       {"oracle_leakage", r.leakage},
                       {"oracle_norm", r.oracle_norm},
                       {"pass", r.pass}};
      emit(j.dump(2) + "\n", o, out);
    } else {
      std::ostringstream s;
      s << "D = " << v.dim << ", indices <= " << r.compared_up_to
        << (v.mismatch_conventions ? ", mismatched phase conventions" : "") << "\n"
        << "max abs deviation " << std::setprecision(3) << r.deviation << " (tolerance " << v.tolerance << ")\n"
        << "oracle leakage " << r.leakage << "\n"
        << (r.pass ? "PASS" : "FAIL") << "\n";
      emit(s.str(), o, out);
    }
    return r.pass ? int{kExitOk} : int{kExitOracle};
  });
}

inline int cmd_verify(const std::filesystem::path& path, const VerifyOptions& v, const Options& o, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] { return cmd_verify(io::load_scenario(path), v, o, out, err); });
}

// ---- search ------------------------------------------------------------------

inline io::json to_json(const SearchSpace& s) {
  const auto range = [](const Range& r) { return io::json{{"min", r.min}, {"max", r.max}, {"step", r.step}}; };
  io::json j{{"objective", to_string(s.objective)},
             {"beta0", range(s.beta0)},
             {"t1", range(s.t1)},
             {"t2", s.t2 ? range(*s.t2) : io::json("solve")},
             {"s", s.s},
             {"phi", s.phi},
             {"gamma0", s.gamma0},
             {"theta", s.theta},
             {"pu_floor", s.pu_floor},
             {"target_alpha", s.target_alpha},
             {"alpha_tolerance", s.alpha_tolerance},
             {"top_k", s.top_k},
             {"trunc_in", s.trunc_in},
             {"trunc_out", s.trunc_out},
             {"normalization", to_string(s.fit.norm)}};
  return j;
}

/// Rows are streamed (CSV lines) to `stream` as chunks finish; the sorted result goes to --out or `out`.
inline int cmd_search(SearchSpace space, const Options& o, std::ostream& out, std::ostream& err,
                      std::ostream* stream = nullptr) {
  return guarded(err, [&] {
    o.require_format({"json", "csv"});
    if (o.trunc_in) space.trunc_in = *o.trunc_in;
    if (o.trunc_out) space.trunc_out = *o.trunc_out;
    if (o.phi) space.phi = *o.phi;
    if (o.theta) space.theta = *o.theta;
    space.fit.norm = o.norm();
    if (stream) *stream << io::kRowCsvHeader << "\n";
    std::size_t done = 0;
    const std::size_t total = space.point_count();
    const SearchOutcome result = search(space, o.threads, [&](const std::vector<ScenarioRow>& chunk) {
      done += std::min<std::size_t>(256, total - done);
      if (stream) {
        for (const auto& r : chunk) *stream << io::row_csv(r) << "\n";
        stream->flush();
      } else {
        err << "searched " << done << " / " << total << "\n";
      }
    });
    if (o.format == "csv") {
      std::ostringstream s;
      s << io::kRowCsvHeader << "\n";
      for (const auto& r : result.rows) s << io::row_csv(r) << "\n";
      emit(s.str(), o, out);
    } else {
      io::json rows = io::json::array();
      for (const auto& r : result.rows) rows.push_back(io::to_json(r));
      const io::json j{{"tool", tool_json()},
                       {"space", to_json(space)},
                       {"evaluated", result.evaluated},
                       {"skipped", result.skipped},
                       {"rows", rows}};
      emit(j.dump(2) + "\n", o, out);
    }
    return int{kExitOk};
  });
}

inline int cmd_search(const std::filesystem::path& path, const Options& o, std::ostream& out, std::ostream& err,
                      std::ostream* stream = nullptr) {
  return guarded(err, [&] { return cmd_search(io::load_search_space(path), o, out, err, stream); });
}

// ---- fit ---------------------------------------------------------------------

inline int cmd_fit(const io::json& grid_doc, std::optional<int> n_max, const Options& o, std::ostream& out,
                   std::ostream& err) {
  return guarded(err, [&] {
    o.require_format({"json", "csv"});
    const HeraldedGrid grid = io::grid_from_json(grid_doc);
    require_nondegenerate(grid);
    FitOptions primary = o.fit_options();
    primary.n_max = n_max.value_or(std::min(primary.n_max, grid.n_max));
    FitOptions alt = primary;
    alt.norm = o.other_norm();
    const FitResult r = fit_entangled(grid, primary);
    const FitResult a = fit_entangled(grid, alt);
    if (o.format == "csv") {
      std::ostringstream s;
      s << "alpha,f,er,n_max,normalization,converged,gradient_norm,er_" << to_string(alt.norm) << "\n"
        << io::format_double(r.alpha) << ',' << io::format_double(r.f) << ',' << io::format_double(r.er) << ','
        << r.n_max_used << ',' << to_string(r.norm) << ',' << (r.converged ? 1 : 0) << ','
        << io::format_double(r.gradient_norm) << ',' << io::format_double(a.er) << "\n";
      emit(s.str(), o, out);
    } else {
      const io::json j{{"tool", tool_json()},
                       {"grid", {{"n_max", grid.n_max}, {"pr", grid.pr}, {"pu", grid.pu}}},
                       {"fit", io::to_json(r)},
                       {"fit_alternate_normalization", io::to_json(a)}};
      emit(j.dump(2) + "\n", o, out);
    }
    return int{kExitOk};
  });
}

inline int cmd_fit(const std::filesystem::path& path, std::optional<int> n_max, const Options& o, std::ostream& out,
                   std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open grid file " + path.string());
    io::json doc;
    try {
      doc = io::json::parse(in);
    } catch (const io::json::exception& e) {
      throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    return cmd_fit(doc, n_max, o, out, err);
  });
}

}  // namespace evcs::cli
