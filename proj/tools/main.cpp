// cluspin command line: scenario runs, config validation, donor sampling,
// gate compilation and QEC layout generation.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cspin/error_model.hpp"
#include "cspin/experiments.hpp"
#include "cspin/gate_compiler.hpp"
#include "cspin/qec.hpp"
#include "cspin/spectrum.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string default_out_dir() {
  if (const char* env = std::getenv("CLUSPIN_OUT_DIR")) return env;
  return "out";
}

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path);
  return json::parse(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"donor-cluster spin qubit simulation toolkit"};
  app.require_subcommand(1);

  uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = default_out_dir();
  app.add_option("--seed", seed, "random seed (overrides config)");
  app.add_option("--jobs", jobs, "parallel workers for sweeps");
  app.add_option("--out-dir", out_dir,
                 "output directory (default $CLUSPIN_OUT_DIR or ./out)");

  // run <config-or-scenario-name>
  auto* run = app.add_subcommand("run", "run a sweep scenario");
  std::string run_arg;
  run->add_option("config", run_arg,
                  "config JSON path or a built-in scenario name")
      ->required();

  auto* list = app.add_subcommand("list", "list built-in scenarios");

  auto* validate = app.add_subcommand("validate", "validate a config file");
  std::string validate_path;
  validate->add_option("config", validate_path, "config JSON path")->required();

  auto* sample = app.add_subcommand("sample-donors",
                                    "feasible donor-count Monte Carlo");
  double lo = 0.6, hi = 304.0, gap = 10.0;
  int trials = 1000;
  sample->add_option("--range-lo", lo, "hyperfine range lower edge (MHz)");
  sample->add_option("--range-hi", hi, "hyperfine range upper edge (MHz)");
  sample->add_option("--min-gap", gap, "minimum hyperfine separation (MHz)");
  sample->add_option("--trials", trials, "number of trials");

  auto* cg = app.add_subcommand("compile-gate",
                                "compile a gate and print its pulse table");
  std::string cg_system, cg_kind = "cz", cg_scheme = "direct", cg_scope = "intra";
  std::vector<int> cg_controls, cg_targets;
  double cg_esr_rabi = 0.5, cg_nmr_rabi = 0.01741;
  bool cg_verify = false;
  cg->add_option("--system", cg_system, "SpinSystem JSON path")->required();
  cg->add_option("--kind", cg_kind, "cz|cnot|toffoli|cxx");
  cg->add_option("--scheme", cg_scheme, "direct|esr_assisted|nmr_assisted");
  cg->add_option("--scope", cg_scope, "intra|inter");
  cg->add_option("--controls", cg_controls, "control nucleus ids");
  cg->add_option("--targets", cg_targets, "target nucleus ids");
  cg->add_option("--esr-rabi", cg_esr_rabi, "ESR Rabi frequency (MHz)");
  cg->add_option("--nmr-rabi", cg_nmr_rabi, "NMR Rabi frequency (MHz)");
  cg->add_flag("--verify", cg_verify, "simulate and compare with the ideal gate");

  auto* qec = app.add_subcommand("qec", "XZZX code construction and checks");
  qec->require_subcommand(1);
  auto* qb = qec->add_subcommand("build", "build an XZZX toric code");
  int l1 = 3, l2 = 2;
  std::string qec_out;
  qb->add_option("--l1", l1, "lattice rows");
  qb->add_option("--l2", l2, "lattice columns");
  qb->add_option("--out", qec_out, "write code JSON here (default stdout)");
  auto* qv = qec->add_subcommand("verify", "verify a code JSON file");
  std::string qv_path;
  int qv_maxw = 4;
  qv->add_option("code", qv_path, "code JSON path")->required();
  qv->add_option("--max-weight", qv_maxw, "distance search cutoff");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      const auto& reg = cspin::exp::scenario_registry();
      for (const auto& [name, def] : reg)
        std::cout << name << "  -  " << def.description << "\n";
      return kExitOk;
    }

    if (*validate) {
      json cfg;
      try {
        cfg = load_json(validate_path);
      } catch (const json::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
      }
      const auto errs = cspin::exp::validate_config(cfg);
      if (errs.empty()) {
        std::cout << "ok\n";
        return kExitOk;
      }
      for (const auto& e : errs) std::cerr << e << "\n";
      return kExitConfig;
    }

    if (*run) {
      json cfg;
      const auto& reg = cspin::exp::scenario_registry();
      if (reg.count(run_arg)) {
        cfg = {{"scenario", run_arg}};
      } else {
        try {
          cfg = load_json(run_arg);
        } catch (const json::parse_error& e) {
          std::cerr << "parse error: " << e.what() << "\n";
          return kExitConfig;
        } catch (const std::invalid_argument& e) {
          std::cerr << e.what() << "\n";
          return kExitConfig;
        }
      }
      if (seed != 0 || !cfg.contains("seed")) cfg["seed"] = seed;
      if (!cfg.contains("jobs")) cfg["jobs"] = jobs;
      const auto errs = cspin::exp::validate_config(cfg);
      if (!errs.empty()) {
        for (const auto& e : errs) std::cerr << e << "\n";
        return kExitConfig;
      }
      const auto r = cspin::exp::run_scenario(cfg, out_dir);
      std::cout << r.scenario << ": " << r.cells_total - r.cells_failed << "/"
                << r.cells_total << " cells -> " << r.csv_path << "\n";
      return r.cells_failed == 0 ? kExitOk : kExitRuntime;
    }

    if (*sample) {
      const auto stats =
          cspin::sample_feasible_donor_count(lo, hi, gap, trials, seed);
      json out = {{"mean", stats.mean}, {"sd", stats.sd},
                  {"min", stats.min}, {"max", stats.max},
                  {"trials", trials}, {"seed", seed}};
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }

    if (*cg) {
      const auto sys = cspin::spin_system_from_json(load_json(cg_system));
      cspin::GateSpec gate;
      gate.kind = cg_kind == "cnot" ? cspin::GateSpec::CNOT
                  : cg_kind == "toffoli" ? cspin::GateSpec::Toffoli
                  : cg_kind == "cxx" ? cspin::GateSpec::CXX
                                     : cspin::GateSpec::CZ;
      gate.scheme = cg_scheme == "esr_assisted" ? cspin::GateSpec::esr_assisted
                    : cg_scheme == "nmr_assisted" ? cspin::GateSpec::nmr_assisted
                                                  : cspin::GateSpec::direct;
      gate.scope = cg_scope == "inter" ? cspin::GateSpec::inter
                                       : cspin::GateSpec::intra;
      gate.controls = cg_controls;
      gate.targets = cg_targets;
      cspin::CompileOptions opts;
      opts.esr_rabi_mhz = cg_esr_rabi;
      opts.nmr_rabi_mhz = cg_nmr_rabi;
      const auto compiled = cspin::compile(gate, sys, opts);

      std::cout << "pulses: " << compiled.n_esr << " ESR, "
                << compiled.n_nmr_logical << " NMR (logical), "
                << compiled.n_nmr_physical << " NMR segments\n";
      std::cout << "kind      carrier_mhz        rabi_mhz  duration_us  intent\n";
      for (const auto& p : compiled.flat_sequence().pulses) {
        char line[160];
        std::snprintf(line, sizeof line, "%-8s %14.6f %11.5f %12.6f  %s",
                      p.kind == cspin::Pulse::ESR ? "esr" : "nmr",
                      p.carrier_mhz, p.rabi_mhz, p.duration_us,
                      p.intent.c_str());
        std::cout << line << "\n";
      }
      if (cg_verify) {
        const auto v = cspin::verify_compiled(gate, compiled, sys);
        std::cout << "verify: fidelity=" << v.fidelity
                  << " leakage=" << v.leakage
                  << (v.pass ? " PASS" : " FAIL") << "\n";
        if (!v.pass) return kExitRuntime;
      }
      return kExitOk;
    }

    if (*qb) {
      const auto code = cspin::qec::build_xzzx_toric(l1, l2);
      json j = code.to_json();
      j["k"] = code.k();
      if (qec_out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::ofstream f(qec_out);
        f << j.dump(2) << "\n";
        std::cout << "wrote " << qec_out << "\n";
      }
      return kExitOk;
    }
    if (*qv) {
      const auto code = cspin::qec::code_from_json(load_json(qv_path));
      const bool commute = cspin::qec::all_checks_commute(code);
      const bool logicals = cspin::qec::logicals_valid(code);
      const int d = cspin::qec::brute_force_distance(code, qv_maxw);
      std::cout << "n=" << code.n_qubits << " k=" << code.k()
                << " checks_commute=" << (commute ? "yes" : "no")
                << " logicals_valid=" << (logicals ? "yes" : "no")
                << " distance=" << (d > 0 ? std::to_string(d)
                                          : "> " + std::to_string(qv_maxw))
                << "\n";
      return commute && logicals ? kExitOk : kExitRuntime;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
