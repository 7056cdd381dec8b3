#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "microflow/model.hpp"
#include "microflow/scheduler.hpp"

namespace microflow::sim {

struct LatencyDist {
  Millis min_ms = 60'000;
  Millis max_ms = 420'000;
};

struct WorkerModel {
  int count = 1;
  double accuracy_p = 1.0;
  double skip_p = 0.0;
  LatencyDist latency;
};

struct OracleBehavior {
  std::string statement;
  std::vector<Assertion> assertions;
};

struct OracleFunction {
  std::vector<Field> params;
  std::vector<OracleBehavior> behaviors;
  Table table;
  std::vector<PseudoCall> pseudo_calls;  // declared by every implement step

  const OracleBehavior* find(std::string_view statement) const;
};

struct Scenario {
  std::string name;
  Value project_spec;
  std::map<std::string, OracleFunction> oracle;
  std::vector<WorkerModel> workers;
  std::uint64_t seed = 42;
  std::int64_t max_steps = 0;
  SchedulerConfig scheduler;

  int worker_count() const;
  std::size_t behavior_count() const;
};

/// Validates and decodes a scenario document. Throws InvalidScenario.
Scenario scenario_from_value(const Value& v);
/// Accepts a file path or the name of a shipped scenario.
Scenario load_scenario(const std::string& name_or_path);
std::filesystem::path resolve_scenario(const std::string& name_or_path);

/// Microtasks an error-free crowd needs at minimum: per function, one
/// identify per behavior plus the closing identify, one test per behavior,
/// and one implement.
std::int64_t minimal_microtasks(const Scenario& scenario);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double unit(std::mt19937_64& rng);
/// Uniform integer in [lo, hi].
std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);

/// Minimal perturbations. Test-side and implementation-side edits never
/// produce the same value, and neither reproduces the original.
Value corrupt_expected(const Value& v);
Value corrupt_result(const Value& v);

enum class Outcome { Completed, NonConvergent, StepLimit };
std::string_view to_string(Outcome outcome);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> accuracy_p;  // overrides every worker model
  std::optional<std::int64_t> max_steps;
  std::filesystem::path out_dir;
};

struct RunResult {
  Outcome outcome = Outcome::StepLimit;
  Value report;
  Value bundle;  // null unless Completed
  std::string final_state;  // canonical live state at the end of the run
  std::filesystem::path log_path;
  ProjectId project;
};

/// Drives an in-process service over HTTP with simulated workers in
/// virtual time. Writes events.log, report.json and (when completed)
/// bundle.json under out_dir.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options);

struct Comparison {
  bool identical = true;
  std::int64_t divergent_seq = 0;  // first differing line, 1-based
};

/// Line-by-line comparison of two checksum-valid logs. Throws CorruptLog.
Comparison compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace microflow::sim
