// descsys: analyze descriptor systems F Y_{k+1} = G Y_k from the command line.

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "descsys/io.hpp"

namespace {

struct Options {
  std::string path;
  descsys::Tolerances tol;
  descsys::Index steps = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("file", opt.path, "system file (JSON with F, G, optional y0 and label)")->required();
  cmd->add_option("--rank-rel", opt.tol.rank_rel, "relative singular-value cutoff")
      ->capture_default_str();
  cmd->add_option("--cluster-abs", opt.tol.cluster_abs, "eigenvalue clustering radius")
      ->capture_default_str();
  cmd->add_option("--residual-abs", opt.tol.residual_abs, "residual acceptance threshold")
      ->capture_default_str();
}

int run(const std::string& command, const std::function<void()>& body) {
  try {
    body();
    return descsys::exit_codes::kSuccess;
  } catch (const std::exception& e) {
    std::cout << descsys::error_report(command, e).dump(2) << "\n";
    return descsys::exit_code_for(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analysis of singular discrete-time systems F Y_{k+1} = G Y_k"};
  app.set_version_flag("--version", descsys::kVersion);
  app.require_subcommand(1);

  Options opt;
  auto* analyze = app.add_subcommand("analyze", "full report: spectrum, consistency, equilibria, stability");
  auto* decompose = app.add_subcommand("decompose", "dump the Weierstrass decomposition P, Q, Jp, Hq");
  auto* equilibria = app.add_subcommand("equilibria", "dump a basis of the equilibrium set");
  auto* simulate = app.add_subcommand("simulate", "write the optimal trajectory as a CSV table");
  for (auto* cmd : {analyze, decompose, equilibria, simulate}) add_common(cmd, opt);
  simulate->add_option("--steps", opt.steps, "horizon K (rows k = 0..K)")
      ->required()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--out", opt.out, "output CSV path (standard output when omitted)");

  CLI11_PARSE(app, argc, argv);

  auto load = [&] {
    opt.tol.validate();
    return descsys::parse_system_file(opt.path);
  };

  if (*analyze)
    return run("analyze", [&] { std::cout << descsys::analysis_report(load(), opt.tol).dump(2) << "\n"; });
  if (*decompose)
    return run("decompose", [&] { std::cout << descsys::decomposition_report(load(), opt.tol).dump(2) << "\n"; });
  if (*equilibria)
    return run("equilibria", [&] { std::cout << descsys::equilibria_report(load(), opt.tol).dump(2) << "\n"; });
  return run("simulate", [&] {
    const auto d = load();
    const auto traj = descsys::simulate(d, opt.steps, opt.tol);
    const std::string table = descsys::trajectory_table(traj, opt.tol.residual_abs);
    if (opt.out.empty()) {
      std::cout << table;
      return;
    }
    std::ofstream f(opt.out, std::ios::binary);
    if (!f) throw descsys::IoError("cannot write '" + opt.out + "'");
    f << table;
    if (!f) throw descsys::IoError("failed writing '" + opt.out + "'");
    descsys::Json summary = descsys::report_header("simulate", &d);
    summary["rows"] = traj.states.size();
    summary["max_residual"] = traj.residuals.empty() ? 0.0 : *std::max_element(traj.residuals.begin(), traj.residuals.end());
    summary["out"] = opt.out;
    std::cout << summary.dump(2) << "\n";
  });
}
