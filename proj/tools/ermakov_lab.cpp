// ermakov-lab: run configured checks, list them, or print the SHG demo.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ermakov/checks.hpp"
#include "ermakov/modes.hpp"

namespace {

int list_checks() {
  for (const auto& [name, what] : ermakov::check_catalog()) {
    std::printf("%-28s %s\n", name.c_str(), what.c_str());
  }
  return 0;
}

// Two frames of one SHG process plus the quantum readout of a shared state.
int demo_shg() {
  using namespace ermakov;
  const double w1 = 1.0, w2 = 2.0, n1 = 4.0;
  const double n2 = convert_lagrangian(n1, w1, w2);
  std::printf("SHG, omega1 = %g, omega2 = %g\n", w1, w2);
  std::printf("Lagrangian: n1 = %g  ->  n2 = n1 omega1/omega2 = %g (n1/2 = %g)\n", n1, n2, 0.5 * n1);

  ModeLedger eul;
  eul.process = Process::SHG;
  eul.frame = Frame::Eulerian;
  eul.modes = {{"omega", w1, n2, n2 * w1}, {"2omega", w2, n2, n2 * w2}};
  const auto er = eulerian_energy_relation(eul);
  std::printf("Eulerian: E1/omega1 = %g, E2/omega2 = %g, deficit %.3g, energy in %g, out %g\n", er.ratios[0],
              er.ratios[1], er.deficit, *er.shg_energy_in, *er.shg_energy_out);

  const auto mr = manley_rowe_audit(Process::SHG, {w1, w2}, {n1, 0.0}, manley_rowe_deltas(Process::SHG, -n1));
  std::printf("Manley-Rowe: delta n = (%g, %g), sum omega delta n = %.3g, %s\n", mr.deltas[0], mr.deltas[1],
              mr.energy_balance, mr.pass ? "balanced" : "UNBALANCED");

  const int N = 32;
  const FockSpace s = make_space(N);
  const auto q = quantum_mode_demo(s, equilibrium_frame(w1), equilibrium_frame(w2), coherent_amplitudes(N, 1.5));
  std::printf("quantum: n_hat1 = %.12g, n_hat2 = %.12g, scalar %.12g, mismatch %.3g, <I> drift %.3g\n", q.n_hat_1,
              q.n_hat_2, q.scalar_prediction, q.mismatch, q.invariant_drift);
  const bool ok = n2 == 0.5 * n1 && er.pass && mr.pass && q.mismatch < 1e-8;
  return ok ? 0 : 1;
}

int run_command(const std::string& path, const ermakov::RunOverrides& ov) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "config error: cannot open '" << path << "'\n";
    return 2;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "config error: not valid JSON: " << e.what() << '\n';
    return 2;
  }
  return ermakov::run(j, ov, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ermakov-lab: numerical laboratory for time-dependent oscillator invariants"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the checks named in a config file");
  std::string config;
  std::optional<std::string> out;
  std::optional<int> n;
  std::optional<double> dt;
  run->add_option("--config", config, "experiment config (JSON)")->required();
  run->add_option("--out", out, "output directory (overrides output_dir)");
  run->add_option("--n", n, "Fock dimension N (overrides N)");
  run->add_option("--dt", dt, "time step (overrides dt)");

  auto* list = app.add_subcommand("list-checks", "list the check names");
  auto* demo = app.add_subcommand("demo", "built-in demonstrations");
  std::string which;
  demo->add_option("name", which, "demo name")->required()->check(CLI::IsMember({"shg"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*list) return list_checks();
    if (*demo) return demo_shg();
    ermakov::RunOverrides ov;
    ov.output_dir = out;
    ov.N = n;
    ov.dt = dt;
    return run_command(config, ov);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
