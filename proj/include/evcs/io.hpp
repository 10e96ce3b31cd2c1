#pragma once

// Scenario and search-space files, result bundles (JSON) and P_nm grids (CSV).
//
// Scenario files are INI-style: "[section]" headers, "key = value" lines, and
// full-line comments starting with '#' or ';'. Numbers are decimal. Unknown
// sections or keys are rejected; missing keys take the defaults below.
//
//   [squeeze]     s (0), phi (π)
//   [beams]       beta0 (0), gamma0 (0), theta (π)
//   [splitters]   t1 (1), t2 (1, or "solve" to derive it from the zero-sum condition)
//   [phases]      phi_tau1, phi_rho1, phi_tau2, phi_rho2 (all 0)
//   [truncation]  trunc_in (16), trunc_out (9)

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "evcs/error.hpp"
#include "evcs/search.hpp"
#include "evcs/simulator.hpp"
#include "evcs/state_fit.hpp"

namespace evcs::io {

using nlohmann::json;

inline constexpr const char* kToolName = "evcs";
inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v, std::chars_format::general);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse, what + ": expected a decimal number, got '" + std::string(text) + "'");
  }
  return v;
}

inline int parse_int(std::string_view text, const std::string& what) {
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw Error(ErrorKind::Parse, what + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

/// Scenario as read from a file; t2 may be left to the zero-sum solver.
struct ScenarioFile {
  ScenarioSpec spec;
  bool solve_t2 = false;
};

namespace detail {

using Schema = std::map<std::string, std::set<std::string>>;

inline boost::property_tree::ptree read_ini(std::istream& in, const Schema& schema, const std::string& source) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::Parse, source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end()) {
      if (body.empty()) throw Error(ErrorKind::Parse, source + ": key '" + section + "' outside any section");
      throw Error(ErrorKind::Parse, source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw Error(ErrorKind::Parse, source + ": unknown key '" + key + "' in [" + section + "]");
    }
  }
  return tree;
}

inline std::optional<std::string> get(const boost::property_tree::ptree& tree, const std::string& section,
                                      const std::string& key) {
  const auto sec = tree.get_child_optional(section);
  if (!sec) return std::nullopt;
  const auto value = sec->get_optional<std::string>(key);
  if (!value) return std::nullopt;
  return *value;
}

inline double get_double(const boost::property_tree::ptree& tree, const std::string& section, const std::string& key,
                         double fallback) {
  const auto v = get(tree, section, key);
  return v ? parse_double(*v, section + "." + key) : fallback;
}

inline int get_int(const boost::property_tree::ptree& tree, const std::string& section, const std::string& key,
                   int fallback) {
  const auto v = get(tree, section, key);
  return v ? parse_int(*v, section + "." + key) : fallback;
}

}  // namespace detail

/// Reads a scenario. Syntax problems raise Parse; out-of-range physics raises Validation.
inline ScenarioFile parse_scenario(std::istream& in, const std::string& source = "scenario") {
  static const detail::Schema schema{
      {"squeeze", {"s", "phi"}},
      {"beams", {"beta0", "gamma0", "theta"}},
      {"splitters", {"t1", "t2"}},
      {"phases", {"phi_tau1", "phi_rho1", "phi_tau2", "phi_rho2"}},
      {"truncation", {"trunc_in", "trunc_out"}},
  };
  const auto tree = detail::read_ini(in, schema, source);
  using detail::get_double;
  ScenarioFile file;
  const double s = get_double(tree, "squeeze", "s", 0.0);
  const double phi = get_double(tree, "squeeze", "phi", std::numbers::pi);
  const double beta0 = get_double(tree, "beams", "beta0", 0.0);
  const double gamma0 = get_double(tree, "beams", "gamma0", 0.0);
  const double theta = get_double(tree, "beams", "theta", std::numbers::pi);
  const double t1 = get_double(tree, "splitters", "t1", 1.0);
  double t2 = 1.0;
  if (const auto raw = detail::get(tree, "splitters", "t2")) {
    if (*raw == "solve") {
      file.solve_t2 = true;
    } else {
      t2 = parse_double(*raw, "splitters.t2");
    }
  }
  const double phi_tau1 = get_double(tree, "phases", "phi_tau1", 0.0);
  const double phi_rho1 = get_double(tree, "phases", "phi_rho1", 0.0);
  const double phi_tau2 = get_double(tree, "phases", "phi_tau2", 0.0);
  const double phi_rho2 = get_double(tree, "phases", "phi_rho2", 0.0);
  file.spec.trunc_in = detail::get_int(tree, "truncation", "trunc_in", 16);
  file.spec.trunc_out = detail::get_int(tree, "truncation", "trunc_out", 9);

  file.spec.squeeze = SqueezeParam(s, phi);
  file.spec.beta = CoherentParam(beta0, 0.0);
  file.spec.gamma = CoherentParam(gamma0, theta);
  file.spec.bs1 = BeamSplitterSpec(t1, phi_tau1, phi_rho1);
  if (file.solve_t2) {
    file.spec.bs2 = BeamSplitterSpec(1.0, phi_tau2, phi_rho2);
  } else {
    file.spec.bs2 = BeamSplitterSpec(t2, phi_tau2, phi_rho2);
  }
  return file;
}

inline ScenarioFile parse_scenario_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open scenario file " + path.string());
  return parse_scenario(in, path.string());
}

/// Fills in t2 when the file asks for it to be solved.
inline ScenarioSpec resolve(const ScenarioFile& file) {
  ScenarioSpec spec = file.spec;
  if (file.solve_t2) {
    const auto sol = solve_t2(spec.beta.value(), spec.gamma.value(), spec.bs1, spec.bs2.phi_tau, spec.bs2.phi_rho);
    spec.bs2 = BeamSplitterSpec(sol.t2, spec.bs2.phi_tau, spec.bs2.phi_rho);
  }
  spec.validate();
  return spec;
}

/// Canonical text of a scenario; parse_scenario_text(format_scenario(f)) reproduces f exactly.
inline std::string format_scenario(const ScenarioFile& file) {
  const ScenarioSpec& s = file.spec;
  std::ostringstream out;
  out << "[squeeze]\n"
      << "s = " << format_double(s.squeeze.s) << "\n"
      << "phi = " << format_double(s.squeeze.phi) << "\n\n"
      << "[beams]\n"
      << "beta0 = " << format_double(s.beta.magnitude) << "\n"
      << "gamma0 = " << format_double(s.gamma.magnitude) << "\n"
      << "theta = " << format_double(s.gamma.phase) << "\n\n"
      << "[splitters]\n"
      << "t1 = " << format_double(s.bs1.t) << "\n"
      << "t2 = " << (file.solve_t2 ? std::string("solve") : format_double(s.bs2.t)) << "\n\n"
      << "[phases]\n"
      << "phi_tau1 = " << format_double(s.bs1.phi_tau) << "\n"
      << "phi_rho1 = " << format_double(s.bs1.phi_rho) << "\n"
      << "phi_tau2 = " << format_double(s.bs2.phi_tau) << "\n"
      << "phi_rho2 = " << format_double(s.bs2.phi_rho) << "\n\n"
      << "[truncation]\n"
      << "trunc_in = " << s.trunc_in << "\n"
      << "trunc_out = " << s.trunc_out << "\n";
  return out.str();
}

/// Search-space file:
///   [search]      objective (max_pu | max_pr | match_alpha), beta0_min/max/step,
///                 t1_min/max/step, optional t2_min/max/step (free t2),
///                 pu_floor, target_alpha, alpha_tolerance, top_k
///   [fixed]       s (0.5), phi (π), gamma0 (0.5), theta (π)
///   [truncation]  trunc_in (16), trunc_out (9)
inline SearchSpace parse_search_space(std::istream& in, const std::string& source = "search space") {
  static const detail::Schema schema{
      {"search",
       {"objective", "beta0_min", "beta0_max", "beta0_step", "t1_min", "t1_max", "t1_step", "t2_min", "t2_max",
        "t2_step", "pu_floor", "target_alpha", "alpha_tolerance", "top_k"}},
      {"fixed", {"s", "phi", "gamma0", "theta"}},
      {"truncation", {"trunc_in", "trunc_out"}},
  };
  const auto tree = detail::read_ini(in, schema, source);
  const auto required = [&](const std::string& key) {
    const auto v = detail::get(tree, "search", key);
    if (!v) throw Error(ErrorKind::Parse, source + ": missing search." + key);
    return parse_double(*v, "search." + key);
  };
  SearchSpace space;
  const std::string objective = detail::get(tree, "search", "objective").value_or("max_pu");
  if (objective == "max_pu") {
    space.objective = Objective::MaxPurity;
  } else if (objective == "max_pr") {
    space.objective = Objective::MaxProbability;
  } else if (objective == "match_alpha") {
    space.objective = Objective::MatchAlpha;
  } else {
    throw Error(ErrorKind::Parse, source + ": unknown objective '" + objective + "'");
  }
  space.beta0 = Range{required("beta0_min"), required("beta0_max"), required("beta0_step")};
  space.t1 = Range{required("t1_min"), required("t1_max"), required("t1_step")};
  const bool any_t2 = detail::get(tree, "search", "t2_min") || detail::get(tree, "search", "t2_max") ||
                      detail::get(tree, "search", "t2_step");
  if (any_t2) space.t2 = Range{required("t2_min"), required("t2_max"), required("t2_step")};
  space.pu_floor = detail::get_double(tree, "search", "pu_floor", 0.0);
  if (space.objective == Objective::MatchAlpha) space.target_alpha = required("target_alpha");
  space.alpha_tolerance = detail::get_double(tree, "search", "alpha_tolerance", space.alpha_tolerance);
  const int top_k = detail::get_int(tree, "search", "top_k", 10);
  if (top_k < 1) throw Error(ErrorKind::Validation, "search.top_k must be >= 1");
  space.top_k = static_cast<std::size_t>(top_k);
  space.s = detail::get_double(tree, "fixed", "s", 0.5);
  space.phi = detail::get_double(tree, "fixed", "phi", std::numbers::pi);
  space.gamma0 = detail::get_double(tree, "fixed", "gamma0", 0.5);
  space.theta = detail::get_double(tree, "fixed", "theta", std::numbers::pi);
  space.trunc_in = detail::get_int(tree, "truncation", "trunc_in", 16);
  space.trunc_out = detail::get_int(tree, "truncation", "trunc_out", 9);
  space.validate();
  return space;
}

inline SearchSpace load_search_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open search-space file " + path.string());
  return parse_search_space(in, path.string());
}

// ---- JSON ------------------------------------------------------------------

inline json to_json(const ScenarioSpec& s) {
  return json{
      {"squeeze", {{"s", s.squeeze.s}, {"phi", s.squeeze.phi}}},
      {"beams", {{"beta0", s.beta.magnitude}, {"gamma0", s.gamma.magnitude}, {"theta", s.gamma.phase}}},
      {"splitters", {{"t1", s.bs1.t}, {"t2", s.bs2.t}}},
      {"phases",
       {{"phi_tau1", s.bs1.phi_tau}, {"phi_rho1", s.bs1.phi_rho}, {"phi_tau2", s.bs2.phi_tau}, {"phi_rho2", s.bs2.phi_rho}}},
      {"truncation", {{"trunc_in", s.trunc_in}, {"trunc_out", s.trunc_out}}},
  };
}

/// {"n_max", "re", "im", "p", "pr", "pu"}; re/im/p are row-major (n on v, m on w).
inline json to_json(const HeraldedGrid& g) {
  json re = json::array(), im = json::array(), p = json::array();
  for (int n = 0; n <= g.n_max; ++n) {
    json rr = json::array(), ii = json::array(), pp = json::array();
    for (int m = 0; m <= g.n_max; ++m) {
      rr.push_back(g.amp(n, m).real());
      ii.push_back(g.amp(n, m).imag());
      pp.push_back(g.prob(n, m));
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
    p.push_back(std::move(pp));
  }
  return json{{"n_max", g.n_max}, {"re", re}, {"im", im}, {"p", p}, {"pr", g.pr}, {"pu", g.pu}};
}

/// Accepts a grid object or a bundle carrying one under "heralded_grid".
inline HeraldedGrid grid_from_json(const json& doc) {
  try {
    const json& g = doc.contains("heralded_grid") ? doc.at("heralded_grid") : doc;
    const int n_max = g.at("n_max").get<int>();
    if (n_max < 1 || n_max > kMaxPhotonNumber) throw Error(ErrorKind::Validation, "grid n_max out of range");
    const auto& re = g.at("re");
    const auto& im = g.at("im");
    const auto size = static_cast<std::size_t>(n_max) + 1;
    if (re.size() != size || im.size() != size) throw Error(ErrorKind::Parse, "grid is not (n_max+1) x (n_max+1)");
    std::vector<Amplitude> c(size * size);
    for (std::size_t n = 0; n < size; ++n) {
      if (re[n].size() != size || im[n].size() != size) throw Error(ErrorKind::Parse, "grid rows are ragged");
      for (std::size_t m = 0; m < size; ++m) c[n * size + m] = {re[n][m].get<double>(), im[n][m].get<double>()};
    }
    return make_heralded_grid(std::move(c), n_max);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("grid JSON: ") + e.what());
  }
}

inline json to_json(const FitResult& r) {
  return json{{"alpha", r.alpha},          {"f", r.f},
              {"er", r.er},                {"n_max", r.n_max_used},
              {"normalization", to_string(r.norm)}, {"converged", r.converged},
              {"gradient_norm", r.gradient_norm}};
}

inline json to_json(const ScenarioRow& r) {
  return json{{"s", r.s},
              {"beta0", r.beta0},
              {"gamma0", r.gamma0},
              {"t1", r.t1},
              {"t2", r.t2},
              {"pr", r.pr},
              {"pu", r.pu},
              {"alpha", r.alpha},
              {"f", r.f},
              {"er", r.er},
              {"converged", r.converged},
              {"zero_sum_residual", r.zero_sum_residual},
              {"captured_mass", r.captured_mass},
              {"off_axis_fraction", r.off_axis}};
}

inline json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
inline json nullable_nan(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---- CSV -------------------------------------------------------------------

/// P_nm as a rectangular table: header "n\m,0..n_max", one row per n.
inline std::string grid_csv(const HeraldedGrid& g) {
  std::ostringstream out;
  out << "n\\m";
  for (int m = 0; m <= g.n_max; ++m) out << ',' << m;
  out << '\n';
  for (int n = 0; n <= g.n_max; ++n) {
    out << n;
    for (int m = 0; m <= g.n_max; ++m) out << ',' << format_double(g.prob(n, m));
    out << '\n';
  }
  return out.str();
}

inline constexpr const char* kRowCsvHeader = "s,beta0,gamma0,t1,t2,pr,pu,alpha,f,er,converged,zero_sum_residual,captured_mass,off_axis_fraction";

inline std::string row_csv(const ScenarioRow& r) {
  std::ostringstream out;
  out << format_double(r.s) << ',' << format_double(r.beta0) << ',' << format_double(r.gamma0) << ','
      << format_double(r.t1) << ',' << format_double(r.t2) << ',' << format_double(r.pr) << ',' << format_double(r.pu)
      << ',' << format_double(r.alpha) << ',' << format_double(r.f) << ',' << format_double(r.er) << ','
      << (r.converged ? 1 : 0) << ',' << format_double(r.zero_sum_residual) << ',' << format_double(r.captured_mass)
      << ',' << format_double(r.off_axis);
  return out.str();
}

/// Writes via a sibling temporary file and rename, so readers never see a partial file.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorKind::Config, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace evcs::io
