// Acceptance run: one PASS/FAIL line per criterion, each with its runtime bound.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ermakov/checks.hpp"

#ifndef ERMAKOV_LAB_EXE
#error "ERMAKOV_LAB_EXE must point at the ermakov-lab executable"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ermakov;

namespace {

const json kConstant = {{"kind", "constant"}, {"omega0", 1.0}};
const json kStep = {{"kind", "step"}, {"omega0", 1.0}, {"omega1", 2.0}, {"t_step", 5.0}};
const json kRamp = {{"kind", "linear_ramp"}, {"omega0_sq", 1.0}, {"slope", 0.1}};
const json kTanh = {{"kind", "tanh_sweep"}, {"omega0", 1.0}, {"omega1", 2.0}, {"t_center", 5.0}, {"width", 1.0}};
const json kAll = json::array({kConstant, kStep, kRamp, kTanh});

json config(json profiles, const std::string& check, int N, double t_end) {
  return {{"profiles", std::move(profiles)},
          {"N", N},
          {"dt", 5e-4},
          {"t_end", t_end},
          {"grid_points", 21},
          {"initial_state", {{"kind", "coherent"}, {"alpha", 1.0}}},
          {"checks", {check}},
          {"seed", 20240611}};
}

// Worst failing metric, or the largest value/tolerance ratio when all pass.
std::string summarize(const CheckResult& r) {
  if (r.error) return "error: " + *r.error;
  const Metric* worst = nullptr;
  for (const auto& m : r.metrics) {
    if (!m.pass) {
      worst = &m;
      break;
    }
  }
  char buf[256];
  if (worst) {
    std::snprintf(buf, sizeof buf, "%s [%s] = %.3e violates %s %.3e", worst->name.c_str(), worst->scope.c_str(),
                  worst->value, worst->relation.c_str(), worst->tolerance);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%zu metrics pass", r.metrics.size());
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string note;
};

Outcome via_check(const json& cfg_json, const std::string& check) {
  const auto cfg = parse_config(cfg_json);
  const auto r = run_check(check, cfg);
  return {r.pass, summarize(r)};
}

const Metric* find(const CheckResult& r, const std::string& name, const std::string& scope) {
  for (const auto& m : r.metrics) {
    if (m.name == name && m.scope == scope) return &m;
  }
  return nullptr;
}

int exe(const std::string& args) {
  const std::string cmd = std::string(ERMAKOV_LAB_EXE) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "ermakov_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  json cfg = config(json::array({kStep}), "classical_invariants", 32, 4.0);
  cfg["dt"] = 1e-2;
  cfg["checks"] = {"classical_invariants", "manley_rowe"};
  std::ofstream(root / "ok.json") << cfg.dump(2);
  json failing = cfg;
  failing["checks"] = {"manley_rowe"};
  failing["modes"] = {{"process", "SHG"}, {"omegas", {1.0, 2.0}}, {"photon_numbers", {4.0, 0.0}}, {"deltas", {-2.0, 2.0}}};
  std::ofstream(root / "failing.json") << failing.dump(2);
  json malformed = cfg;
  malformed["t_ends"] = 4.0;
  std::ofstream(root / "malformed.json") << malformed.dump(2);

  const int e1 = exe("run --config " + (root / "ok.json").string() + " --out " + (root / "a").string());
  const int e2 = exe("run --config " + (root / "ok.json").string() + " --out " + (root / "b").string());
  const int ef = exe("run --config " + (root / "failing.json").string() + " --out " + (root / "f").string());
  const int em = exe("run --config " + (root / "malformed.json").string() + " --out " + (root / "m").string());
  const int eu = exe("run --bogus");

  std::vector<std::string> compared;
  bool same = true;
  for (const char* f : {"report.json", "expect_I.svg", "expect_H.svg", "rho.svg", "phi.svg"}) {
    const auto a = slurp(root / "a" / f), b = slurp(root / "b" / f);
    if (a.empty() || a != b) same = false;
    compared.push_back(f);
  }
  const bool failing_report = fs::exists(root / "f" / "report.json");
  char buf[200];
  std::snprintf(buf, sizeof buf, "exit codes ok=%d,%d failing=%d malformed=%d usage=%d; %zu files %s", e1, e2, ef, em, eu,
                compared.size(), same ? "byte-identical" : "DIFFER");
  const bool pass = e1 == 0 && e2 == 0 && same && ef == 1 && failing_report && em == 2 && eu == 2;
  return {pass, buf};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double bound_s;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "classical invariance", 5.0, [] { return via_check(config(kAll, "classical_invariants", 64, 20.0), "classical_invariants"); }},
      {2, "Ermakov cross-construction", 5.0,
       [] { return via_check(config(kAll, "ermakov_cross_construction", 64, 20.0), "ermakov_cross_construction"); }},
      {3, "operator identity suite", 30.0,
       [] { return via_check(config(kAll, "operator_identities", 64, 20.0), "operator_identities"); }},
      {4, "conservation under direct propagation", 60.0,
       [] {
         const auto cfg = parse_config(config(json::array({kStep}), "propagate_conservation", 96, 10.0));
         const auto r = run_check("propagate_conservation", cfg);
         const Metric* dh = find(r, "abs_delta_H", "0:step");
         Outcome o{r.pass && dh != nullptr, summarize(r)};
         if (dh) o.note += "; |dH| = " + std::to_string(dh->value);
         return o;
       }},
      {5, "propagator factorization", 60.0,
       [] { return via_check(config(json::array({kStep, kTanh}), "propagate_equivalence", 96, 10.0), "propagate_equivalence"); }},
      {6, "finite-difference equations of motion", 30.0,
       [] { return via_check(config(kAll, "equations_of_motion", 64, 10.0), "equations_of_motion"); }},
      {7, "Turski phase", 120.0,
       [] { return via_check(config(json::array({kStep}), "turski_phase", 128, 10.0), "turski_phase"); }},
      {8, "Susskind-Glogower suite", 10.0, [] { return via_check(config(kAll, "sg_suite", 64, 10.0), "sg_suite"); }},
      {9, "amplitude-phase forms", 10.0,
       [] { return via_check(config(kAll, "amplitude_phase", 64, 10.0), "amplitude_phase"); }},
      {10, "Manley-Rowe bookkeeping", 5.0,
       [] { return via_check(config(json::array({kConstant}), "manley_rowe", 64, 10.0), "manley_rowe"); }},
      {11, "CLI determinism and exit codes", 10.0, cli_determinism},
  };

  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.bound_s;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("%s criterion %2d  %-40s %7.2f s (bound %g s)%s  %s\n", pass ? "PASS" : "FAIL", c.id, c.title, secs,
                c.bound_s, in_time ? "" : " OVER TIME", o.note.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
