#include "cspin/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cspin/dynamics.hpp"
#include "cspin/error_model.hpp"
#include "cspin/gate_compiler.hpp"
#include "cspin/noise.hpp"
#include "cspin/spectrum.hpp"

namespace cspin::exp {

namespace fs = std::filesystem;
using nlohmann::json;

double AxisSpec::value_at(int i) const {
  const double t = steps > 1 ? static_cast<double>(i) / (steps - 1) : 0.0;
  if (!log) return min + (max - min) * t;
  return min * std::pow(max / min, t);
}

uint64_t fnv1a_hash(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

SpinSystem pair_system(std::vector<double> left, std::vector<double> right,
                       double b0, double j, double db = 0.0) {
  SpinSystem sys;
  sys.clusters.push_back({std::move(left)});
  sys.clusters.push_back({std::move(right)});
  sys.b0_t = b0;
  sys.j_mhz = j;
  sys.gradient_db_t = db;
  return sys;
}

// Minimum gap among the populated conditional-ESR lines; pairs sharing
// `same_key` are the deliberately co-driven copies of one operation and do
// not count as crosstalk.
double min_line_gap(const FrequencyTable& table,
                    const std::function<std::string(const FrequencyEntry&)>& same_key,
                    bool exclude_accidental, double tol = 1e-3) {
  std::vector<const FrequencyEntry*> lines;
  for (const auto& e : table.entries)
    if (e.driven_electron == 0 && e.partner_down) lines.push_back(&e);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < lines.size(); ++i)
    for (size_t j = i + 1; j < lines.size(); ++j) {
      if (same_key(*lines[i]) == same_key(*lines[j])) continue;
      const double d = std::abs(lines[i]->freq_mhz - lines[j]->freq_mhz);
      if (exclude_accidental && d < tol) continue;
      best = std::min(best, d);
    }
  return best;
}

std::string branch_tag(Branch b) {
  return b == Branch::plus ? "+" : b == Branch::minus ? "-" : ".";
}

double budget_infidelity(const GateSpec& gate, const SpinSystem& sys,
                         const CompileOptions& copts,
                         const FidelityInputs& inputs) {
  const CompiledGate compiled = compile(gate, sys, copts);
  return 1.0 - gate_error_budget(compiled, inputs).composed_fidelity;
}

json fig5_params() {
  return {{"a_left", {60.0, 170.0}},
          {"a_right_tail", {120.0, 230.0}},
          {"b0_t", 1.35},
          {"esr_rabi_mhz", 0.5},
          {"nmr_rabi_mhz", 0.01741},
          {"t2n_us", 40000.0},
          {"t2e_us", 400.0}};
}

SpinSystem fig5_system(const json& p, double a0, double j) {
  std::vector<double> right = {a0};
  for (const auto& v : p.at("a_right_tail")) right.push_back(v.get<double>());
  return pair_system(p.at("a_left").get<std::vector<double>>(), right,
                     p.at("b0_t").get<double>(), j);
}

std::map<std::string, ScenarioDef> build_registry() {
  std::map<std::string, ScenarioDef> reg;

  // Crosstalk during a 2pi ESR rotation versus detuning, analytic curve
  // against the simulated off-resonant peak transfer.
  {
    ScenarioDef s;
    s.name = "fig3e_esr_crosstalk";
    s.description =
        "off-resonant ESR excitation vs detuning: analytic f^2/(f^2+d^2) "
        "against simulated peak transfer";
    s.axes = {{"detuning_mhz", 0.05, 60.0, 41, true}};
    s.params = {{"esr_rabi_mhz", 0.5}, {"a_mhz", 117.0}, {"b0_t", 1.35}};
    s.value_columns = {"e_ct_analytic", "peak_sim"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      const double f = p.at("esr_rabi_mhz").get<double>();
      const double delta = ax[0];
      SpinSystem sys;
      sys.clusters.push_back({{p.at("a_mhz").get<double>()}});
      sys.b0_t = p.at("b0_t").get<double>();

      FrequencyTable table = esr_frequency_table(sys, TableMode::exact);
      double line = 0.0;
      for (const auto& e : table.entries)
        if (!e.controls[0]) line = e.freq_mhz;  // nucleus Up

      Pulse pulse;
      pulse.kind = Pulse::ESR;
      pulse.carrier_mhz = line + delta;
      pulse.rabi_mhz = f;
      pulse.duration_us = 2.0 / std::sqrt(f * f + delta * delta);
      PulseSequence seq;
      seq.pulses.push_back(pulse);

      Vector init = Vector::Zero(sys.dimension());
      SpinBasisLabel l;
      l.electron_down = {true};
      l.nuclear_down = {false};
      init(l.to_index(sys)) = 1.0;

      EvolveOptions eo;
      eo.max_trace_points = 2048;
      EvolutionResult r = evolve(sys, seq, init, nullptr, eo);
      double peak = 0.0;
      for (const auto& pt : r.traces) {
        double up = 0.0;
        for (int i = 0; i < sys.dimension() / 2; ++i)
          up += pt.populations[static_cast<size_t>(i)];
        peak = std::max(peak, up);
      }
      return std::vector<double>{crosstalk_error(f, delta), peak};
    };
    reg[s.name] = s;
  }

  // NMR addressability map: worst pair of nuclear frequencies over a
  // 2P-1P pair with the second cluster offset by the field gradient.
  {
    ScenarioDef s;
    s.name = "fig4a_nmr_crosstalk";
    s.description = "NMR crosstalk vs hyperfine difference and field gradient";
    s.axes = {{"delta_a_mhz", 0.02, 3.0, 61, false},
              {"delta_b_mt", 0.0, 100.0, 61, false}};
    s.params = {{"nmr_rabi_mhz", 0.03}, {"a0_mhz", 50.0}, {"b0_t", 1.35}};
    s.value_columns = {"e_ct"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      const double da = ax[0], db_t = ax[1] * 1e-3;
      const double a0 = p.at("a0_mhz").get<double>();
      SpinSystem sys = pair_system({a0, a0 + da}, {a0 + 2 * da},
                                   p.at("b0_t").get<double>(), 0.0, db_t);
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < sys.n_nuclei(); ++i)
        for (int j = i + 1; j < sys.n_nuclei(); ++j)
          best = std::min(best, std::abs(nmr_frequency(sys, i) -
                                         nmr_frequency(sys, j)));
      return std::vector<double>{
          crosstalk_error(p.at("nmr_rabi_mhz").get<double>(), best)};
    };
    reg[s.name] = s;
  }

  // Intra-cluster ESR addressability: worst pair among the conditional
  // lines of the driven cluster, with residual exchange shifting lines by
  // the neighbour's nuclear configuration.
  {
    ScenarioDef s;
    s.name = "fig4b_intra_esr";
    s.description =
        "intra-cluster ESR crosstalk vs hyperfine difference and residual "
        "exchange";
    s.axes = {{"delta_a_mhz", 0.25, 30.0, 61, false},
              {"j_off_mhz", 0.0, 15.0, 61, false}};
    s.params = {{"esr_rabi_mhz", 0.5}, {"a0_mhz", 50.0}, {"b0_t", 1.35},
                {"exclude_accidental", false}};
    s.value_columns = {"e_ct"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      const double da = ax[0], j = ax[1];
      const double a0 = p.at("a0_mhz").get<double>();
      SpinSystem sys = pair_system({a0, a0 + da}, {a0 + 2 * da},
                                   p.at("b0_t").get<double>(), j);
      FrequencyTable table = esr_frequency_table(sys, TableMode::analytic);
      // Copies of one conditional line: same driven-cluster configuration
      // and branch, any neighbour configuration.
      const double gap = min_line_gap(
          table,
          [](const FrequencyEntry& e) {
            std::string key = branch_tag(e.branch);
            key += e.controls[0] ? 'D' : 'U';
            key += e.controls[1] ? 'D' : 'U';
            return key;
          },
          p.at("exclude_accidental").get<bool>());
      return std::vector<double>{
          crosstalk_error(p.at("esr_rabi_mhz").get<double>(), gap)};
    };
    reg[s.name] = s;
  }

  // Inter-cluster ESR addressability: every conditional line is distinct;
  // accidental coincidences are excluded.
  {
    ScenarioDef s;
    s.name = "fig4c_inter_esr";
    s.description =
        "inter-cluster ESR crosstalk vs hyperfine difference and activated "
        "exchange";
    s.axes = {{"delta_a_mhz", 1.0, 50.0, 61, false},
              {"j_on_mhz", 1.0, 300.0, 61, false}};
    s.params = {{"esr_rabi_mhz", 0.5}, {"a0_mhz", 50.0}, {"b0_t", 1.35},
                {"exclude_accidental", true}};
    s.value_columns = {"e_ct"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      const double da = ax[0], j = ax[1];
      const double a0 = p.at("a0_mhz").get<double>();
      SpinSystem sys = pair_system({a0, a0 + da}, {a0 + 2 * da},
                                   p.at("b0_t").get<double>(), j);
      FrequencyTable table = esr_frequency_table(sys, TableMode::analytic);
      const double gap = min_line_gap(
          table,
          [](const FrequencyEntry& e) {
            std::string key = branch_tag(e.branch);
            for (bool d : e.controls) key += d ? 'D' : 'U';
            return key;
          },
          p.at("exclude_accidental").get<bool>());
      return std::vector<double>{
          crosstalk_error(p.at("esr_rabi_mhz").get<double>(), gap)};
    };
    reg[s.name] = s;
  }

  // Intra-cluster CNOT infidelity over residual exchange and the loose
  // hyperfine coupling of the neighbouring cluster.
  {
    ScenarioDef s;
    s.name = "fig5b_intra_cnot";
    s.description = "intra-cluster CNOT infidelity vs J_off and A0";
    s.axes = {{"j_off_mhz", 0.0, 10.0, 41, false},
              {"a0_mhz", 2.0, 250.0, 41, false}};
    s.params = fig5_params();
    s.value_columns = {"infidelity"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      SpinSystem sys = fig5_system(p, ax[1], ax[0]);
      GateSpec gate;
      gate.kind = GateSpec::CNOT;
      gate.controls = {0};
      gate.targets = {1};
      gate.scope = GateSpec::intra;
      CompileOptions copts;
      copts.esr_rabi_mhz = p.at("esr_rabi_mhz").get<double>();
      copts.nmr_rabi_mhz = p.at("nmr_rabi_mhz").get<double>();
      copts.table_mode = TableMode::analytic;
      copts.check_collisions = false;
      FidelityInputs fi;
      fi.t2n_us = p.at("t2n_us").get<double>();
      fi.t2e_us = p.at("t2e_us").get<double>();
      return std::vector<double>{budget_infidelity(gate, sys, copts, fi)};
    };
    reg[s.name] = s;
  }

  // Intra-cluster CNOT infidelity over electron coherence and rotation time.
  {
    ScenarioDef s;
    s.name = "fig5c_intra_decoherence";
    s.description =
        "intra-cluster CNOT infidelity vs electron T2 and 2pi rotation time";
    s.axes = {{"tau_e_us", 0.2, 200.0, 41, true},
              {"t2e_us", 10.0, 20000.0, 41, true}};
    s.params = [] {
      json p = fig5_params();
      p["j_off_mhz"] = 3.0;
      p["a0_mhz"] = 15.0;
      return p;
    }();
    s.value_columns = {"infidelity"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      SpinSystem sys = fig5_system(p, p.at("a0_mhz").get<double>(),
                                   p.at("j_off_mhz").get<double>());
      GateSpec gate;
      gate.kind = GateSpec::CNOT;
      gate.controls = {0};
      gate.targets = {1};
      gate.scope = GateSpec::intra;
      CompileOptions copts;
      copts.esr_rabi_mhz = 1.0 / ax[0];  // 2pi rotation time sets the drive
      copts.nmr_rabi_mhz = p.at("nmr_rabi_mhz").get<double>();
      copts.table_mode = TableMode::analytic;
      copts.check_collisions = false;
      FidelityInputs fi;
      fi.t2n_us = p.at("t2n_us").get<double>();
      fi.t2e_us = ax[1];
      return std::vector<double>{budget_infidelity(gate, sys, copts, fi)};
    };
    reg[s.name] = s;
  }

  // Inter-cluster five-qubit Toffoli infidelity over activated exchange
  // and A0.
  {
    ScenarioDef s;
    s.name = "fig6b_inter_toffoli";
    s.description = "inter-cluster Toffoli infidelity vs J_on and A0";
    s.axes = {{"j_on_mhz", 10.0, 300.0, 41, false},
              {"a0_mhz", 2.0, 250.0, 41, false}};
    s.params = [] {
      json p = fig5_params();
      p["esr_rabi_mhz"] = 0.3;
      return p;
    }();
    s.value_columns = {"infidelity"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      SpinSystem sys = fig5_system(p, ax[1], ax[0]);
      GateSpec gate;
      gate.kind = GateSpec::Toffoli;
      gate.controls = {0, 1, 2, 3};
      gate.targets = {4};
      gate.scope = GateSpec::inter;
      CompileOptions copts;
      copts.esr_rabi_mhz = p.at("esr_rabi_mhz").get<double>();
      copts.nmr_rabi_mhz = p.at("nmr_rabi_mhz").get<double>();
      copts.table_mode = TableMode::analytic;
      copts.check_collisions = false;
      FidelityInputs fi;
      fi.t2n_us = p.at("t2n_us").get<double>();
      fi.t2e_us = p.at("t2e_us").get<double>();
      return std::vector<double>{budget_infidelity(gate, sys, copts, fi)};
    };
    reg[s.name] = s;
  }

  // Inter-cluster Toffoli infidelity over electron coherence and rotation
  // time at a fixed working point.
  {
    ScenarioDef s;
    s.name = "fig6c_inter_decoherence";
    s.description =
        "inter-cluster Toffoli infidelity vs electron T2 and rotation time";
    s.axes = {{"tau_e_us", 0.2, 200.0, 41, true},
              {"t2e_us", 10.0, 20000.0, 41, true}};
    s.params = [] {
      json p = fig5_params();
      p["j_on_mhz"] = 100.0;
      p["a0_mhz"] = 60.0;
      return p;
    }();
    s.value_columns = {"infidelity"};
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      SpinSystem sys = fig5_system(p, p.at("a0_mhz").get<double>(),
                                   p.at("j_on_mhz").get<double>());
      GateSpec gate;
      gate.kind = GateSpec::Toffoli;
      gate.controls = {0, 1, 2, 3};
      gate.targets = {4};
      gate.scope = GateSpec::inter;
      CompileOptions copts;
      copts.esr_rabi_mhz = 1.0 / ax[0];
      copts.nmr_rabi_mhz = p.at("nmr_rabi_mhz").get<double>();
      copts.table_mode = TableMode::analytic;
      copts.check_collisions = false;
      FidelityInputs fi;
      fi.t2n_us = p.at("t2n_us").get<double>();
      fi.t2e_us = ax[1];
      return std::vector<double>{budget_infidelity(gate, sys, copts, fi)};
    };
    reg[s.name] = s;
  }

  // Detuning-controlled exchange variants: charge noise stiffens the
  // electron dephasing through dJ/deps.
  {
    ScenarioDef s = reg["fig5b_intra_cnot"];
    s.name = "figS2b_intra_cnot_xnoise";
    s.description =
        "intra-cluster CNOT infidelity with detuning-controlled exchange "
        "noise (symmetry point)";
    s.params["t_c_mhz"] = 3600.0;
    s.params["u_mev"] = 30.0;
    s.params["delta_eps_mhz"] = 241.8;  // ~1 ueV charge noise
    auto base = s.cell;
    s.cell = [base](const json& p, const std::vector<double>& ax, uint64_t seed) {
      SpinSystem sys = fig5_system(p, ax[1], ax[0]);
      GateSpec gate;
      gate.kind = GateSpec::CNOT;
      gate.controls = {0};
      gate.targets = {1};
      gate.scope = GateSpec::intra;
      CompileOptions copts;
      copts.esr_rabi_mhz = p.at("esr_rabi_mhz").get<double>();
      copts.nmr_rabi_mhz = p.at("nmr_rabi_mhz").get<double>();
      copts.table_mode = TableMode::analytic;
      copts.check_collisions = false;
      FidelityInputs fi;
      fi.t2n_us = p.at("t2n_us").get<double>();
      fi.t2e_us = p.at("t2e_us").get<double>();
      ExchangeNoise xn;
      xn.t_c_mhz = p.at("t_c_mhz").get<double>();
      xn.u_mhz = p.at("u_mev").get<double>() * kMhzPerMev;
      xn.eps_mhz = 0.0;  // intra: parked at the charge symmetry point
      xn.delta_eps_mhz = p.at("delta_eps_mhz").get<double>();
      fi.exchange_noise = xn;
      (void)seed;
      (void)base;
      return std::vector<double>{budget_infidelity(gate, sys, copts, fi)};
    };
    reg[s.name] = s;
  }
  {
    ScenarioDef s = reg["fig6b_inter_toffoli"];
    s.name = "figS2c_inter_toffoli_xnoise";
    s.description =
        "inter-cluster Toffoli infidelity with detuning-controlled exchange "
        "noise (J set by detuning)";
    s.params["t_c_mhz"] = 3600.0;
    s.params["u_mev"] = 30.0;
    s.params["delta_eps_mhz"] = 241.8;
    s.cell = [](const json& p, const std::vector<double>& ax, uint64_t) {
      SpinSystem sys = fig5_system(p, ax[1], ax[0]);
      GateSpec gate;
      gate.kind = GateSpec::Toffoli;
      gate.controls = {0, 1, 2, 3};
      gate.targets = {4};
      gate.scope = GateSpec::inter;
      CompileOptions copts;
      copts.esr_rabi_mhz = p.at("esr_rabi_mhz").get<double>();
      copts.nmr_rabi_mhz = p.at("nmr_rabi_mhz").get<double>();
      copts.table_mode = TableMode::analytic;
      copts.check_collisions = false;
      FidelityInputs fi;
      fi.t2n_us = p.at("t2n_us").get<double>();
      fi.t2e_us = p.at("t2e_us").get<double>();
      ExchangeNoise xn;
      xn.t_c_mhz = p.at("t_c_mhz").get<double>();
      xn.u_mhz = p.at("u_mev").get<double>() * kMhzPerMev;
      // Invert J(eps) to find the operating detuning for this J_on.
      const double j0 = 4.0 * xn.t_c_mhz * xn.t_c_mhz / xn.u_mhz;
      const double j = std::max(ax[0], j0 * (1.0 + 1e-9));
      xn.eps_mhz = xn.u_mhz * std::sqrt(std::max(0.0, 1.0 - j0 / j));
      xn.delta_eps_mhz = p.at("delta_eps_mhz").get<double>();
      fi.exchange_noise = xn;
      return std::vector<double>{budget_infidelity(gate, sys, copts, fi)};
    };
    reg[s.name] = s;
  }

  // Assisted-scheme addressability maps on a 2P-3P pair.
  for (int variant = 0; variant < 2; ++variant) {
    ScenarioDef s;
    s.name = variant == 0 ? "figS3a_esr_assisted" : "figS3b_nmr_assisted";
    s.description = variant == 0
                        ? "worst-pulse crosstalk of the ESR-assisted "
                          "inter-cluster CZ vs J and delta-A"
                        : "worst-pulse crosstalk of the NMR-assisted "
                          "inter-cluster CZ vs J and delta-A";
    s.axes = {{"delta_a_mhz", 1.0, 50.0, 41, false},
              {"j_mhz", 1.0, 100.0, 41, false}};
    s.params = {{"esr_rabi_mhz", 0.5}, {"nmr_rabi_mhz", 0.01741},
                {"a0_mhz", 50.0}, {"b0_t", 1.35}};
    const bool esr_variant = variant == 0;
    s.cell = [esr_variant](const json& p, const std::vector<double>& ax, uint64_t) {
      const double da = ax[0], j = ax[1];
      const double a0 = p.at("a0_mhz").get<double>();
      SpinSystem sys = pair_system({a0, a0 + da},
                                   {a0 + 2 * da, a0 + 3 * da, a0 + 4 * da},
                                   p.at("b0_t").get<double>(), j);
      GateSpec gate;
      gate.kind = GateSpec::CZ;
      gate.controls = {};
      gate.targets = {1, 2};  // one qubit per cluster
      gate.scope = GateSpec::inter;
      gate.scheme = esr_variant ? GateSpec::esr_assisted : GateSpec::nmr_assisted;
      CompileOptions copts;
      copts.esr_rabi_mhz = p.at("esr_rabi_mhz").get<double>();
      copts.nmr_rabi_mhz = p.at("nmr_rabi_mhz").get<double>();
      copts.table_mode = TableMode::analytic;
      copts.check_collisions = false;
      const CompiledGate compiled = compile(gate, sys, copts);
      double worst = 0.0;
      for (const auto& line : compiled.esr_lines)
        worst = std::max(worst,
                         crosstalk_error_esr_cz(copts.esr_rabi_mhz,
                                                line.min_detuning_mhz));
      return std::vector<double>{worst};
    };
    s.value_columns = {"e_ct"};
    reg[s.name] = s;
  }

  // Feasible donor numbers per cluster under a minimum hyperfine gap.
  {
    ScenarioDef s;
    s.name = "donor_sampler";
    s.description =
        "Monte Carlo of feasible donor numbers per cluster under a minimum "
        "hyperfine separation";
    s.params = {{"range_lo_mhz", 0.6}, {"range_hi_mhz", 304.0},
                {"min_gap_mhz", 10.0}, {"trials", 1000}};
    s.value_columns = {"trial", "count"};
    s.cell = [](const json&, const std::vector<double>&, uint64_t) {
      return std::vector<double>{};  // replaced by the bulk path below
    };
    reg[s.name] = s;
  }

  return reg;
}

}  // namespace

const std::map<std::string, ScenarioDef>& scenario_registry() {
  static const std::map<std::string, ScenarioDef> reg = build_registry();
  return reg;
}

std::vector<std::string> list_scenarios() {
  std::vector<std::string> names;
  for (const auto& [name, def] : scenario_registry()) names.push_back(name);
  return names;
}

std::vector<std::string> validate_config(const json& config) {
  std::vector<std::string> errs;
  if (!config.is_object()) {
    errs.push_back("config must be a JSON object");
    return errs;
  }
  if (!config.contains("scenario") || !config.at("scenario").is_string()) {
    errs.push_back("missing required key 'scenario' (string)");
    return errs;
  }
  const std::string name = config.at("scenario").get<std::string>();
  const auto& reg = scenario_registry();
  auto it = reg.find(name);
  if (it == reg.end()) {
    errs.push_back("unknown scenario '" + name + "'");
    return errs;
  }
  if (config.contains("seed") && !config.at("seed").is_number_unsigned())
    errs.push_back("/seed: must be an unsigned integer");
  if (config.contains("jobs") &&
      (!config.at("jobs").is_number_integer() || config.at("jobs").get<int>() < 1))
    errs.push_back("/jobs: must be a positive integer");
  if (config.contains("params") && !config.at("params").is_object())
    errs.push_back("/params: must be an object");
  if (config.contains("params"))
    for (const auto& [k, v] : config.at("params").items())
      if (!it->second.params.contains(k))
        errs.push_back("/params/" + k + ": not a parameter of " + name);
  if (config.contains("axes")) {
    if (!config.at("axes").is_array()) {
      errs.push_back("/axes: must be an array");
    } else {
      size_t idx = 0;
      for (const auto& ax : config.at("axes")) {
        const std::string at = "/axes/" + std::to_string(idx);
        if (!ax.is_object()) {
          errs.push_back(at + ": must be an object");
        } else {
          if (!ax.contains("name") || !ax.at("name").is_string()) {
            errs.push_back(at + ": missing axis 'name'");
          } else {
            const std::string axis_name = ax.at("name").get<std::string>();
            bool known = false;
            for (const auto& a : it->second.axes) known |= a.name == axis_name;
            if (!known)
              errs.push_back(at + ": '" + axis_name + "' is not swept by " + name);
          }
          if (ax.contains("steps") &&
              (!ax.at("steps").is_number_integer() || ax.at("steps").get<int>() < 2))
            errs.push_back(at + ": steps must be >= 2");
          if (ax.contains("min") && ax.contains("max") &&
              !(ax.at("min").get<double>() < ax.at("max").get<double>()))
            errs.push_back(at + ": min must be < max");
        }
        ++idx;
      }
    }
  }
  return errs;
}

RunResult run_scenario(const json& config, const std::string& out_dir) {
  const auto errs = validate_config(config);
  if (!errs.empty()) {
    std::string all = "invalid configuration:";
    for (const auto& e : errs) all += "\n  " + e;
    throw std::invalid_argument(all);
  }
  const auto t_start = std::chrono::steady_clock::now();

  const std::string name = config.at("scenario").get<std::string>();
  ScenarioDef def = scenario_registry().at(name);
  const uint64_t seed = config.value("seed", 0ULL);
  const int jobs = config.value("jobs", 1);

  // Apply overrides.
  if (config.contains("params"))
    for (const auto& [k, v] : config.at("params").items()) def.params[k] = v;
  if (config.contains("axes"))
    for (const auto& ax : config.at("axes"))
      for (auto& a : def.axes)
        if (a.name == ax.at("name").get<std::string>()) {
          a.min = ax.value("min", a.min);
          a.max = ax.value("max", a.max);
          a.steps = ax.value("steps", a.steps);
          a.log = ax.value("log", a.log);
        }

  json merged = {{"scenario", name},
                 {"seed", seed},
                 {"jobs", jobs},
                 {"params", def.params},
                 {"notes", config.value("notes", "")}};
  merged["axes"] = json::array();
  for (const auto& a : def.axes)
    merged["axes"].push_back({{"name", a.name}, {"min", a.min},
                              {"max", a.max}, {"steps", a.steps},
                              {"log", a.log}});

  fs::create_directories(out_dir);
  const std::string csv_path = (fs::path(out_dir) / (name + ".csv")).string();
  const std::string manifest_path =
      (fs::path(out_dir) / (name + ".manifest.json")).string();

  std::ostringstream csv;
  json failed = json::array();
  int cells_total = 0;

  if (name == "donor_sampler") {
    const auto& p = def.params;
    DonorCountStats stats = sample_feasible_donor_count(
        p.at("range_lo_mhz").get<double>(), p.at("range_hi_mhz").get<double>(),
        p.at("min_gap_mhz").get<double>(), p.at("trials").get<int>(), seed);
    csv << "trial,count\n";
    for (size_t i = 0; i < stats.counts.size(); ++i)
      csv << i << ',' << stats.counts[i] << '\n';
    cells_total = static_cast<int>(stats.counts.size());
    merged["stats"] = {{"mean", stats.mean}, {"sd", stats.sd},
                       {"min", stats.min}, {"max", stats.max}};
  } else {
    // Grid over up to two axes, row-major, cells independent.
    const int n_axes = static_cast<int>(def.axes.size());
    int total = 1;
    for (const auto& a : def.axes) total *= a.steps;
    cells_total = total;

    std::vector<std::vector<double>> results(static_cast<size_t>(total));
    std::vector<std::string> errors(static_cast<size_t>(total));

    auto work = [&](int lo, int hi) {
      for (int idx = lo; idx < hi; ++idx) {
        std::vector<double> ax(static_cast<size_t>(n_axes));
        int rem = idx;
        for (int a = n_axes - 1; a >= 0; --a) {
          ax[static_cast<size_t>(a)] =
              def.axes[static_cast<size_t>(a)].value_at(rem % def.axes[static_cast<size_t>(a)].steps);
          rem /= def.axes[static_cast<size_t>(a)].steps;
        }
        try {
          results[static_cast<size_t>(idx)] =
              def.cell(def.params, ax, Rng::derive(seed, static_cast<uint64_t>(idx)));
        } catch (const std::exception& ex) {
          errors[static_cast<size_t>(idx)] = ex.what();
        }
      }
    };

    const int n_threads = std::max(1, std::min(jobs, total));
    if (n_threads == 1) {
      work(0, total);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (total + n_threads - 1) / n_threads;
      for (int t = 0; t < n_threads; ++t)
        pool.emplace_back(work, t * chunk, std::min(total, (t + 1) * chunk));
      for (auto& th : pool) th.join();
    }

    for (const auto& a : def.axes) csv << a.name << ',';
    for (size_t c = 0; c < def.value_columns.size(); ++c)
      csv << def.value_columns[c] << (c + 1 < def.value_columns.size() ? "," : "");
    csv << '\n';
    for (int idx = 0; idx < total; ++idx) {
      std::vector<double> ax(static_cast<size_t>(n_axes));
      int rem = idx;
      for (int a = n_axes - 1; a >= 0; --a) {
        ax[static_cast<size_t>(a)] =
            def.axes[static_cast<size_t>(a)].value_at(rem % def.axes[static_cast<size_t>(a)].steps);
        rem /= def.axes[static_cast<size_t>(a)].steps;
      }
      if (!errors[static_cast<size_t>(idx)].empty()) {
        failed.push_back({{"cell", idx}, {"error", errors[static_cast<size_t>(idx)]}});
        continue;
      }
      for (int a = 0; a < n_axes; ++a) csv << format_double(ax[static_cast<size_t>(a)]) << ',';
      const auto& vals = results[static_cast<size_t>(idx)];
      for (size_t c = 0; c < vals.size(); ++c)
        csv << format_double(vals[c]) << (c + 1 < vals.size() ? "," : "");
      csv << '\n';
    }
  }

  const std::string csv_str = csv.str();
  {
    std::ofstream f(csv_path, std::ios::binary);
    f << csv_str;
  }

  const auto t_end = std::chrono::steady_clock::now();
  json manifest;
  manifest["scenario"] = name;
  manifest["config"] = merged;
  manifest["config_hash"] = fnv1a_hash(merged.dump());
  manifest["seed"] = seed;
  manifest["outputs"] = json::array({{{"file", fs::path(csv_path).filename().string()},
                                      {"content_hash", fnv1a_hash(csv_str)}}});
  manifest["failed_cells"] = failed;
  manifest["cells_total"] = cells_total;
  manifest["wall_time_s"] =
      std::chrono::duration<double>(t_end - t_start).count();
  manifest["version"] = "1.0.0";
  {
    std::ofstream f(manifest_path, std::ios::binary);
    f << manifest.dump(2) << '\n';
  }

  RunResult r;
  r.scenario = name;
  r.csv_path = csv_path;
  r.manifest_path = manifest_path;
  r.cells_total = cells_total;
  r.cells_failed = static_cast<int>(failed.size());
  return r;
}

}  // namespace cspin::exp
