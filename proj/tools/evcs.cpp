#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evcs/cli.hpp"

namespace {

void add_common(CLI::App* cmd, evcs::cli::Options& o, bool scenario_flags) {
  if (scenario_flags) {
    cmd->add_option("--trunc-in", o.trunc_in, "photon cap per input mode (default 16)");
    cmd->add_option("--trunc-out", o.trunc_out, "photon cap reported on v and w (default 9)");
    cmd->add_option("--phi", o.phi, "override the squeezing phase");
    cmd->add_option("--theta", o.theta, "override the phase of gamma");
  }
  cmd->add_flag("--standard-norm", o.standard_norm, "add Er under both coherent normalizations");
  cmd->add_flag("--paper-norm", o.paper_norm, "fit with the e^{-|a|^2} coefficient");
  cmd->add_option("--out", o.out_path, "write the result here (atomically) instead of stdout");
  cmd->add_option("--threads", o.threads, "worker threads (0: hardware, capped by EVCS_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded entangled vacuum-evacuated coherent state simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(evcs::io::kToolVersion));

  evcs::cli::Options opts;
  std::string scenario_path;
  std::string space_path;
  std::string grid_path;
  std::optional<int> fit_n_max;
  evcs::cli::VerifyOptions verify_opts;
  bool stream_rows = false;

  auto* simulate = app.add_subcommand("simulate", "simulate one scenario file");
  simulate->add_option("scenario", scenario_path, "scenario file")->required();
  add_common(simulate, opts, true);
  simulate->add_option("--format", opts.format, "json (bundle) or csv (P_nm grid)")->check(CLI::IsMember({"json", "csv"}));

  auto* table1 = app.add_subcommand("table1", "recompute the five published operating points");
  add_common(table1, opts, true);
  table1->add_option("--format", opts.format, "text, json or csv")->check(CLI::IsMember({"text", "json", "csv"}));

  auto* verify = app.add_subcommand("verify", "compare the engine against the matrix-exponential oracle");
  verify->add_option("scenario", scenario_path, "scenario file")->required();
  verify->add_option("-D,--dim", verify_opts.dim, "oracle photon cap per input mode (<= 16)");
  verify->add_option("--max-index", verify_opts.max_index, "compare indices up to this value");
  verify->add_flag("--mismatch-conventions", verify_opts.mismatch_conventions,
                   "use the transposed splitter convention in the oracle (negative control)");
  add_common(verify, opts, true);
  verify->add_option("--format", opts.format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* search = app.add_subcommand("search", "grid search over beta0 and t1");
  search->add_option("space", space_path, "search-space file")->required();
  search->add_flag("--stream", stream_rows, "print every evaluated row to stdout as CSV");
  add_common(search, opts, true);
  search->add_option("--format", opts.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* fit = app.add_subcommand("fit", "fit a stored heralded grid (JSON)");
  fit->add_option("grid", grid_path, "grid or bundle JSON file")->required();
  fit->add_option("--n-max", fit_n_max, "highest photon number in Er (default 9)");
  add_common(fit, opts, false);
  fit->add_option("--format", opts.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : evcs::cli::kExitParse;
  }

  if (table1->parsed() && table1->count("--format") == 0) opts.format = "text";
  if (verify->parsed() && verify->count("--format") == 0) opts.format = "text";

  using namespace evcs::cli;
  if (simulate->parsed()) return cmd_simulate(std::filesystem::path(scenario_path), opts, std::cout, std::cerr);
  if (table1->parsed()) return cmd_table1(opts, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify(std::filesystem::path(scenario_path), verify_opts, opts, std::cout, std::cerr);
  if (search->parsed()) {
    if (stream_rows && !opts.out_path) {
      std::cerr << "error (parse): --stream requires --out\n";
      return kExitParse;
    }
    return cmd_search(std::filesystem::path(space_path), opts, std::cout, std::cerr, stream_rows ? &std::cout : nullptr);
  }
  if (fit->parsed()) return cmd_fit(std::filesystem::path(grid_path), fit_n_max, opts, std::cout, std::cerr);
  return kExitParse;
}
