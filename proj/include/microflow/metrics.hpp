#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "microflow/events.hpp"

namespace microflow {

/// Study-style measurements, computed purely from the event log.
struct MetricsReport {
  std::int64_t microtasks_completed = 0;
  std::int64_t completion_seconds_median = 0;
  std::map<std::string, std::int64_t> counts_by_kind;  // completed, by kind
  std::int64_t behaviors_identified = 0;
  std::int64_t behaviors_tested = 0;   // distinct behaviors with a stored test
  std::int64_t behaviors_passing = 0;  // currently Passing
  std::int64_t functions_implemented = 0;  // functions that reached Complete
  std::int64_t tests_written = 0;          // stored test versions
  std::int64_t conflicts_opened = 0;
  std::int64_t conflicts_resolved = 0;
  std::int64_t debug_tasks = 0;  // DebugFailure microtasks created
  // Proxy: first assignment to first completed submission, per worker.
  std::map<std::string, std::int64_t> onboarding_seconds;
};

/// Lower-middle median of integral values; 0 for an empty input.
std::int64_t lower_median(std::vector<std::int64_t> values);

MetricsReport compute_metrics(std::span<const Event> events,
                              ProjectId project);

Value to_value(const MetricsReport& m);

}  // namespace microflow
