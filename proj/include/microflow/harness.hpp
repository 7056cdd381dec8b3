#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "microflow/model.hpp"

namespace microflow {

struct SuiteCase {
  AssertionRef ref;
  std::vector<Value> args;
  Value expected;
};

struct CaseResult {
  AssertionRef ref;
  std::vector<Value> args;
  Value expected;
  CaseStatus status = CaseStatus::Pass;
  std::optional<Value> actual;
  std::optional<std::string> message;
};

struct SuiteReport {
  FunctionId function;
  int implementation_version = 0;
  std::vector<CaseResult> results;  // sorted by (behavior, assertion index)
  std::int64_t duration_millis = 0;

  bool all_pass() const;
};

Value to_value(const SuiteReport& report);

// Runner adapter protocol: one canonical-JSON request line on the child's
// stdin, one canonical-JSON response line on its stdout.
//
//   request:  {"cases":[{"args":[...],"caseId":"c0"}],"function":"name",
//              "languageTag":"python","source":"...","timeoutMillis":2000}
//   response: {"results":[{"caseId":"c0","status":"ok","value":...}]}
//
// status is one of ok | error | timeout; error carries "errorText".
struct RunnerCase {
  std::string case_id;
  std::vector<Value> args;
};

struct RunnerRequest {
  std::string language_tag;
  std::string function_name;
  std::string source;
  std::int64_t timeout_millis = 0;  // per case
  std::vector<RunnerCase> cases;
};

struct RunnerResult {
  std::string case_id;
  CaseStatus status = CaseStatus::Pass;  // Pass means "returned a value"
  std::optional<Value> value;
  std::optional<std::string> error_text;
};

struct RunnerResponse {
  std::vector<RunnerResult> results;
};

Value to_value(const RunnerRequest& request);
/// Throws ProtocolViolation on a malformed response.
RunnerResponse runner_response_from_value(const Value& v);

class RunnerAdapter {
 public:
  virtual ~RunnerAdapter() = default;
  /// Runs all cases; a response is returned for a deadline overrun with
  /// every case marked Timeout. Throws RunnerUnavailable / ProtocolViolation.
  virtual RunnerResponse run(const RunnerRequest& request,
                             std::chrono::milliseconds deadline) = 0;
};

/// Executes `/bin/sh -c <command>` per request.
class ProcessRunner : public RunnerAdapter {
 public:
  explicit ProcessRunner(std::string command) : command_(std::move(command)) {}
  RunnerResponse run(const RunnerRequest& request,
                     std::chrono::milliseconds deadline) override;

 private:
  std::string command_;
};

struct HarnessConfig {
  std::chrono::milliseconds per_case_timeout{2000};
  std::chrono::milliseconds suite_cap{60000};
  std::map<std::string, std::string> adapters;  // languageTag -> command
};

/// Active assertions of a function, in report order.
std::vector<SuiteCase> suite_cases(const State& state, FunctionId function);

/// Evaluates a Table implementation at `args` (lookup, falling back to the
/// default value).
Value evaluate_table(const Table& table, const std::vector<Value>& args);

SuiteReport run_suite(const Implementation& impl, std::string_view function_name,
                      std::span<const SuiteCase> cases,
                      const HarnessConfig& config);

/// Same as above with an explicit adapter for Source implementations.
SuiteReport run_suite(const Implementation& impl, std::string_view function_name,
                      std::span<const SuiteCase> cases,
                      const HarnessConfig& config, RunnerAdapter* adapter);

/// The non-Pass entries of `report`, or nothing when every case passed.
std::optional<FailureReport> build_failure_report(const SuiteReport& report);

}  // namespace microflow
