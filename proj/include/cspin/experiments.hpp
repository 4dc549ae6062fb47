#pragma once

// Configuration-driven scenario runner: parameter sweeps over the library's
// models, deterministic CSV output plus a provenance manifest per run.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cspin::exp {

struct AxisSpec {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  int steps = 2;
  bool log = false;

  double value_at(int i) const;
};

struct ScenarioDef {
  std::string name;
  std::string description;
  std::vector<AxisSpec> axes;      // 0, 1 or 2 axes
  nlohmann::json params;           // scenario-specific defaults
  std::vector<std::string> value_columns;
  std::function<std::vector<double>(const nlohmann::json& params,
                                    const std::vector<double>& axis_values,
                                    uint64_t cell_seed)>
      cell;
};

const std::map<std::string, ScenarioDef>& scenario_registry();
std::vector<std::string> list_scenarios();

// Structural checks of a run configuration; returns human-readable
// diagnostics (empty when valid).
std::vector<std::string> validate_config(const nlohmann::json& config);

struct RunResult {
  std::string scenario;
  std::string csv_path;
  std::string manifest_path;
  int cells_total = 0;
  int cells_failed = 0;
};

// Executes a scenario configuration: {"scenario": name, "seed": u64,
// "jobs": n, "axes": [...], "params": {...}, "notes": "..."}; axes/params
// override the registered defaults. Output is one CSV (axis columns then
// value columns, full round-trip precision) and one manifest JSON.
RunResult run_scenario(const nlohmann::json& config,
                       const std::string& out_dir);

uint64_t fnv1a_hash(const std::string& bytes);
std::string format_double(double v);

}  // namespace cspin::exp
