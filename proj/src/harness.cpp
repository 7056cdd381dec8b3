#include "microflow/harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <set>

#include "microflow/codec.hpp"
#include "microflow/errors.hpp"

namespace microflow {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

RunnerResponse all_timed_out(const RunnerRequest& request) {
  RunnerResponse response;
  for (const auto& c : request.cases) {
    response.results.push_back(
        {c.case_id, CaseStatus::Timeout, std::nullopt, "suite deadline exceeded"});
  }
  return response;
}

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) {
      fail(ErrorCode::RunnerUnavailable, std::string("pipe: ") + std::strerror(errno));
    }
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fd[0] >= 0) ::close(fd[0]);
    fd[0] = -1;
  }
  void close_write() {
    if (fd[1] >= 0) ::close(fd[1]);
    fd[1] = -1;
  }
};

}  // namespace

bool SuiteReport::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const CaseResult& r) {
    return r.status == CaseStatus::Pass;
  });
}

Value to_value(const SuiteReport& report) {
  Value out = Value::object();
  out["functionId"] = report.function.str();
  out["implementationVersion"] = report.implementation_version;
  out["durationMillis"] = report.duration_millis;
  Value::List results;
  for (const auto& r : report.results) {
    Value item = Value::object();
    item["behaviorId"] = r.ref.behavior.str();
    item["assertionIndex"] = static_cast<std::uint64_t>(r.ref.index);
    item["status"] = to_string(r.status);
    if (r.actual) item["actual"] = *r.actual;
    if (r.message) item["message"] = *r.message;
    results.push_back(std::move(item));
  }
  out["results"] = Value(std::move(results));
  return out;
}

Value to_value(const RunnerRequest& request) {
  Value out = Value::object();
  out["languageTag"] = request.language_tag;
  out["function"] = request.function_name;
  out["source"] = request.source;
  out["timeoutMillis"] = request.timeout_millis;
  Value::List cases;
  for (const auto& c : request.cases) {
    Value item = Value::object();
    item["caseId"] = c.case_id;
    item["args"] = to_value(c.args);
    cases.push_back(std::move(item));
  }
  out["cases"] = Value(std::move(cases));
  return out;
}

RunnerResponse runner_response_from_value(const Value& v) {
  RunnerResponse response;
  try {
    for (const auto& item : v.at("results").as_list()) {
      RunnerResult r;
      r.case_id = item.at("caseId").as_string();
      const std::string& status = item.at("status").as_string();
      if (status == "ok") {
        r.status = CaseStatus::Pass;
        r.value = item.at("value");
      } else if (status == "error") {
        r.status = CaseStatus::Error;
        r.error_text = item.get("errorText").is_string()
                           ? item.at("errorText").as_string()
                           : std::string("error");
      } else if (status == "timeout") {
        r.status = CaseStatus::Timeout;
      } else {
        fail(ErrorCode::ProtocolViolation, "unknown case status " + status);
      }
      response.results.push_back(std::move(r));
    }
  } catch (const DomainError& e) {
    if (e.code() == ErrorCode::ProtocolViolation) throw;
    fail(ErrorCode::ProtocolViolation, std::string("malformed response: ") + e.what());
  }
  return response;
}

RunnerResponse ProcessRunner::run(const RunnerRequest& request,
                                  std::chrono::milliseconds deadline) {
  ignore_sigpipe();
  Pipe in;
  Pipe out;
  pid_t pid = ::fork();
  if (pid < 0) {
    fail(ErrorCode::RunnerUnavailable, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in.fd[0], STDIN_FILENO);
    ::dup2(out.fd[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  in.close_read();
  out.close_write();
  ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);

  std::string request_line = canonicalize(to_value(request)) + "\n";
  std::string_view pending = request_line;
  std::string response_bytes;
  const auto until = Clock::now() + deadline;
  bool timed_out = false;

  while (out.fd[0] >= 0) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        until - Clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {out.fd[0], POLLIN, 0};
    if (in.fd[1] >= 0) fds[n++] = {in.fd[1], POLLOUT, 0};
    int rc = ::poll(fds, n, static_cast<int>(left.count()));
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t w = ::write(in.fd[1], pending.data(), pending.size());
      if (w > 0) pending.remove_prefix(static_cast<std::size_t>(w));
      if (w < 0 && errno != EAGAIN) pending = {};
      if (pending.empty()) in.close_write();
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[65536];
      ssize_t r = ::read(out.fd[0], buf, sizeof buf);
      if (r > 0) {
        response_bytes.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || errno != EINTR) {
        out.close_read();
      }
    }
  }
  in.close_write();

  int status = 0;
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    return all_timed_out(request);
  }
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    fail(ErrorCode::RunnerUnavailable,
         "adapter exited abnormally (status " + std::to_string(status) + ")");
  }
  auto nl = response_bytes.find('\n');
  std::string_view line(response_bytes);
  if (nl != std::string::npos) line = line.substr(0, nl);
  Value parsed;
  try {
    parsed = parse_json(line);
  } catch (const DomainError& e) {
    fail(ErrorCode::ProtocolViolation, std::string("response is not JSON: ") + e.what());
  }
  return runner_response_from_value(parsed);
}

std::vector<SuiteCase> suite_cases(const State& state, FunctionId function) {
  std::vector<SuiteCase> cases;
  for (const auto& a : active_assertions(state, function)) {
    cases.push_back({a.ref, a.assertion->args, a.assertion->expected});
  }
  std::sort(cases.begin(), cases.end(),
            [](const SuiteCase& x, const SuiteCase& y) { return x.ref < y.ref; });
  return cases;
}

Value evaluate_table(const Table& table, const std::vector<Value>& args) {
  return table.lookup(args);
}

SuiteReport run_suite(const Implementation& impl, std::string_view function_name,
                      std::span<const SuiteCase> cases,
                      const HarnessConfig& config) {
  std::unique_ptr<RunnerAdapter> adapter;
  if (impl.kind == ImplementationKind::Source) {
    auto it = config.adapters.find(impl.language_tag);
    if (it == config.adapters.end()) {
      fail(ErrorCode::RunnerUnavailable,
           "no runner adapter for language '" + impl.language_tag + "'");
    }
    adapter = std::make_unique<ProcessRunner>(it->second);
  }
  return run_suite(impl, function_name, cases, config, adapter.get());
}

SuiteReport run_suite(const Implementation& impl, std::string_view function_name,
                      std::span<const SuiteCase> cases,
                      const HarnessConfig& config, RunnerAdapter* adapter) {
  SuiteReport report;
  report.function = impl.function;
  report.implementation_version = impl.version;

  auto judge = [](CaseResult& r, const Value& actual) {
    r.actual = actual;
    r.status = canonicalize(actual) == canonicalize(r.expected) ? CaseStatus::Pass
                                                                : CaseStatus::Fail;
  };

  for (const auto& c : cases) {
    report.results.push_back({c.ref, c.args, c.expected, CaseStatus::Pass, {}, {}});
  }

  if (impl.kind == ImplementationKind::Table) {
    for (auto& r : report.results) {
      if (!impl.table) {
        r.status = CaseStatus::Error;
        r.message = "table implementation without a table";
        continue;
      }
      judge(r, evaluate_table(*impl.table, r.args));
    }
  } else {
    if (adapter == nullptr) {
      fail(ErrorCode::RunnerUnavailable, "no runner adapter configured");
    }
    RunnerRequest request;
    request.language_tag = impl.language_tag;
    request.function_name = std::string(function_name);
    request.source = impl.source.value_or("");
    request.timeout_millis = config.per_case_timeout.count();
    for (std::size_t i = 0; i < report.results.size(); ++i) {
      request.cases.push_back({"c" + std::to_string(i), report.results[i].args});
    }
    auto deadline = std::min(
        config.suite_cap,
        config.per_case_timeout * static_cast<long>(std::max<std::size_t>(1, cases.size())));
    auto start = Clock::now();
    RunnerResponse response = adapter->run(request, deadline);
    report.duration_millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 Clock::now() - start)
                                 .count();

    std::map<std::string, const RunnerResult*> by_id;
    for (const auto& r : response.results) {
      if (!by_id.emplace(r.case_id, &r).second) {
        fail(ErrorCode::ProtocolViolation, "duplicate caseId " + r.case_id);
      }
    }
    if (by_id.size() != request.cases.size()) {
      fail(ErrorCode::ProtocolViolation,
           "response has " + std::to_string(by_id.size()) + " results for " +
               std::to_string(request.cases.size()) + " cases");
    }
    for (std::size_t i = 0; i < report.results.size(); ++i) {
      auto it = by_id.find(request.cases[i].case_id);
      if (it == by_id.end()) {
        fail(ErrorCode::ProtocolViolation, "missing caseId " + request.cases[i].case_id);
      }
      const RunnerResult& rr = *it->second;
      CaseResult& r = report.results[i];
      switch (rr.status) {
        case CaseStatus::Pass:
          judge(r, rr.value.value_or(Value()));
          break;
        case CaseStatus::Timeout:
          r.status = CaseStatus::Timeout;
          r.message = "case exceeded " + std::to_string(request.timeout_millis) + " ms";
          break;
        default:
          r.status = CaseStatus::Error;
          r.message = rr.error_text.value_or("error");
          break;
      }
    }
  }

  std::stable_sort(report.results.begin(), report.results.end(),
                   [](const CaseResult& a, const CaseResult& b) { return a.ref < b.ref; });
  return report;
}

std::optional<FailureReport> build_failure_report(const SuiteReport& report) {
  FailureReport failure;
  failure.function = report.function;
  failure.implementation_version = report.implementation_version;
  for (const auto& r : report.results) {
    if (r.status == CaseStatus::Pass) continue;
    FailureEntry entry;
    entry.behavior = r.ref.behavior;
    entry.assertion_index = r.ref.index;
    entry.args = r.args;
    entry.expected = r.expected;
    entry.status = r.status;
    entry.actual = r.actual;
    entry.error = r.message;
    failure.failures.push_back(std::move(entry));
  }
  if (failure.failures.empty()) return std::nullopt;
  return failure;
}

}  // namespace microflow
