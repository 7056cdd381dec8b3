#include "microflow/metrics.hpp"

#include <algorithm>
#include <set>

#include "microflow/codec.hpp"

namespace microflow {

std::int64_t lower_median(std::vector<std::int64_t> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

MetricsReport compute_metrics(std::span<const Event> events, ProjectId project) {
  MetricsReport report;
  const std::string pid = project.str();

  struct TaskInfo {
    std::string kind;
    Millis assigned_at = 0;
  };
  std::map<std::string, TaskInfo> tasks;  // this project's microtasks
  std::map<std::string, Millis> first_assigned;
  std::set<std::string> onboarded;
  std::set<std::string> tested;
  std::set<std::string> passing;
  std::vector<std::int64_t> durations;

  auto in_project = [&](const Value& p) {
    return p.get("projectId").is_string() && p.at("projectId").as_string() == pid;
  };

  for (const auto& e : events) {
    const Value& p = e.payload;
    switch (e.kind) {
      case EventKind::MicrotaskQueued: {
        const Value& m = p.at("microtask");
        if (m.at("projectId").as_string() != pid) break;
        tasks[m.at("id").as_string()].kind = m.at("kind").as_string();
        if (m.at("kind").as_string() == "DebugFailure") report.debug_tasks++;
        break;
      }
      case EventKind::MicrotaskAssigned: {
        auto it = tasks.find(p.at("microtaskId").as_string());
        if (it == tasks.end()) break;
        it->second.assigned_at = e.timestamp;
        first_assigned.emplace(p.at("workerId").as_string(), e.timestamp);
        break;
      }
      case EventKind::SubmissionApplied: {
        auto it = tasks.find(p.at("microtaskId").as_string());
        if (it == tasks.end() || p.at("outcome").as_string() != "completed") break;
        report.microtasks_completed++;
        report.counts_by_kind[it->second.kind]++;
        durations.push_back((e.timestamp - it->second.assigned_at) / 1000);
        const std::string& worker = p.at("workerId").as_string();
        if (onboarded.insert(worker).second) {
          report.onboarding_seconds[worker] =
              (e.timestamp - first_assigned.at(worker)) / 1000;
        }
        break;
      }
      case EventKind::BehaviorAdded:
        if (in_project(p)) report.behaviors_identified++;
        break;
      case EventKind::TestStored:
        if (!in_project(p)) break;
        report.tests_written++;
        tested.insert(p.at("test").at("behaviorId").as_string());
        passing.erase(p.at("test").at("behaviorId").as_string());
        break;
      case EventKind::SuiteRan:
        if (!in_project(p)) break;
        for (const auto& b : p.get("passing").is_null() ? Value::List{}
                                                        : p.at("passing").as_list()) {
          passing.insert(b.as_string());
        }
        break;
      case EventKind::ConflictOpened:
        if (!in_project(p)) break;
        report.conflicts_opened++;
        passing.erase(p.at("conflict").at("a").at("behaviorId").as_string());
        passing.erase(p.at("conflict").at("b").at("behaviorId").as_string());
        break;
      case EventKind::ConflictResolved:
        if (in_project(p)) report.conflicts_resolved++;
        break;
      case EventKind::BehaviorRetired:
        if (in_project(p)) passing.erase(p.at("behaviorId").as_string());
        break;
      case EventKind::FunctionCompleted:
        if (in_project(p)) report.functions_implemented++;
        break;
      default:
        break;
    }
  }
  report.behaviors_tested = static_cast<std::int64_t>(tested.size());
  report.behaviors_passing = static_cast<std::int64_t>(passing.size());
  report.completion_seconds_median = lower_median(std::move(durations));
  return report;
}

Value to_value(const MetricsReport& m) {
  Value out = Value::object();
  out["microtasksCompleted"] = m.microtasks_completed;
  out["completionSecondsMedian"] = m.completion_seconds_median;
  Value by_kind = Value::object();
  for (const auto& [kind, n] : m.counts_by_kind) by_kind[kind] = n;
  out["countsByKind"] = std::move(by_kind);
  out["behaviorsIdentified"] = m.behaviors_identified;
  out["behaviorsTested"] = m.behaviors_tested;
  out["behaviorsPassing"] = m.behaviors_passing;
  out["functionsImplemented"] = m.functions_implemented;
  out["testsWritten"] = m.tests_written;
  out["conflictsOpened"] = m.conflicts_opened;
  out["conflictsResolved"] = m.conflicts_resolved;
  out["debugTasks"] = m.debug_tasks;
  Value onboarding = Value::object();
  for (const auto& [worker, s] : m.onboarding_seconds) onboarding[worker] = s;
  out["onboardingSeconds"] = std::move(onboarding);
  out["onboardingDefinition"] = "first assignment to first completed submission";
  return out;
}

}  // namespace microflow
