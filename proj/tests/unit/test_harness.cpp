#include "microflow/harness.hpp"
#include "support.hpp"

using namespace microflow;
using namespace microflow::testing;

namespace {

std::string adapter_command(const std::string& flags = "") {
  return std::string(MICROFLOW_PYTHON) + " " + MICROFLOW_TEST_ADAPTERS +
         "/python_runner.py " + flags;
}

Implementation table_of(std::vector<std::pair<std::vector<Value>, Value>> rows,
                        Value fallback) {
  Implementation impl;
  impl.function = FunctionId{1};
  impl.kind = ImplementationKind::Table;
  impl.version = 1;
  Table t;
  for (auto& [args, v] : rows) t.set(args, v);
  t.default_value = std::move(fallback);
  impl.table = std::move(t);
  return impl;
}

Implementation python(const std::string& source) {
  Implementation impl;
  impl.function = FunctionId{1};
  impl.kind = ImplementationKind::Source;
  impl.language_tag = "python";
  impl.source = source;
  impl.version = 3;
  return impl;
}

SuiteCase make_case(std::uint64_t behavior, std::size_t index, std::vector<Value> args,
                    Value expected) {
  return {{BehaviorId{behavior}, index}, std::move(args), std::move(expected)};
}

HarnessConfig python_config(const std::string& flags = "") {
  HarnessConfig c;
  c.per_case_timeout = std::chrono::milliseconds(2000);
  c.adapters["python"] = adapter_command(flags);
  return c;
}

}  // namespace

TEST(Harness, TableHitPasses) {
  auto impl = table_of({{{Value(2), Value(3)}, Value(5)}}, Value(0));
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(2), Value(3)}, Value(5))};
  SuiteReport r = run_suite(impl, "add", cases, {});
  ASSERT_EQ(r.results.size(), 1u);
  EXPECT_EQ(r.results[0].status, CaseStatus::Pass);
  EXPECT_FALSE(build_failure_report(r).has_value());
}

TEST(Harness, TableMissFallsBackToDefault) {
  auto impl = table_of({{{Value(2), Value(3)}, Value(5)}}, Value(0));
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(7), Value(1)}, Value(9))};
  SuiteReport r = run_suite(impl, "add", cases, {});
  EXPECT_EQ(r.results[0].status, CaseStatus::Fail);
  EXPECT_EQ(r.results[0].actual, Value(0));
}

TEST(Harness, ResultsAreOrderedByBehaviorThenIndex) {
  auto impl = table_of({}, Value());
  std::vector<SuiteCase> cases = {make_case(3, 1, {}, Value()), make_case(1, 2, {}, Value()),
                                  make_case(3, 0, {}, Value()), make_case(1, 0, {}, Value())};
  SuiteReport r = run_suite(impl, "f", cases, {});
  std::vector<AssertionRef> refs;
  for (const auto& c : r.results) refs.push_back(c.ref);
  EXPECT_TRUE(std::is_sorted(refs.begin(), refs.end()));
  EXPECT_EQ(refs.size(), 4u);
}

TEST(Harness, FailureReportKeepsExactlyNonPassEntries) {
  SuiteReport r;
  r.function = FunctionId{4};
  r.implementation_version = 2;
  r.results = {{{BehaviorId{1}, 0}, {Value(1)}, Value(1), CaseStatus::Pass, Value(1), {}},
               {{BehaviorId{1}, 1}, {Value(2)}, Value(2), CaseStatus::Fail, Value(3), {}},
               {{BehaviorId{2}, 0}, {Value(3)}, Value(3), CaseStatus::Pass, Value(3), {}},
               {{BehaviorId{2}, 1}, {Value(4)}, Value(4), CaseStatus::Timeout, {}, "slow"}};
  auto failure = build_failure_report(r);
  ASSERT_TRUE(failure.has_value());
  ASSERT_EQ(failure->failures.size(), 2u);
  EXPECT_EQ(failure->failures[0].status, CaseStatus::Fail);
  EXPECT_EQ(failure->failures[0].actual, Value(3));
  EXPECT_EQ(failure->failures[1].status, CaseStatus::Timeout);
  EXPECT_EQ(failure->implementation_version, 2);
}

TEST(Harness, RandomTablesMatchReevaluationOracle) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 300; ++round) {
    std::vector<std::pair<std::vector<Value>, Value>> rows;
    int n_rows = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int i = 0; i < n_rows; ++i) {
      rows.push_back({{random_value(rng, 1)}, random_value(rng, 1)});
    }
    Value fallback = random_value(rng, 1);
    auto impl = table_of(rows, fallback);

    std::vector<SuiteCase> cases;
    int n_cases = std::uniform_int_distribution<int>(1, 10)(rng);
    for (int i = 0; i < n_cases; ++i) {
      cases.push_back(make_case(1 + i % 3, static_cast<std::size_t>(i),
                                {random_value(rng, 1)}, random_value(rng, 1)));
    }
    SuiteReport report = run_suite(impl, "f", cases, {});
    ASSERT_EQ(report.results.size(), cases.size());

    // Oracle: the last row written for a key wins, scanning rows linearly.
    std::set<AssertionRef> disagree;
    for (const auto& c : cases) {
      Value actual = fallback;
      for (const auto& [args, v] : rows) {
        if (canonicalize(Value(Value::List(args))) ==
            canonicalize(Value(Value::List(c.args)))) {
          actual = v;
        }
      }
      if (canonicalize(actual) != canonicalize(c.expected)) disagree.insert(c.ref);
    }
    std::set<AssertionRef> reported;
    if (auto f = build_failure_report(report)) {
      for (const auto& e : f->failures) reported.insert({e.behavior, e.assertion_index});
    }
    EXPECT_EQ(reported, disagree) << "round " << round;
  }
}

TEST(Harness, TableRunsAreDeterministic) {
  auto impl = table_of({{{Value("a")}, Value(1)}}, Value(0));
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value("a")}, Value(1)),
                                  make_case(2, 0, {Value("b")}, Value(1))};
  EXPECT_EQ(canonicalize(to_value(run_suite(impl, "f", cases, {}))),
            canonicalize(to_value(run_suite(impl, "f", cases, {}))));
}

TEST(RunnerProcess, PythonSourceIsExecuted) {
  auto impl = python("def add(a, b):\n    return a + b\n");
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(2), Value(3)}, Value(5)),
                                  make_case(1, 1, {Value(2), Value(2)}, Value(5))};
  SuiteReport r = run_suite(impl, "add", cases, python_config());
  ASSERT_EQ(r.results.size(), 2u);
  EXPECT_EQ(r.results[0].status, CaseStatus::Pass);
  EXPECT_EQ(r.results[1].status, CaseStatus::Fail);
  EXPECT_EQ(r.results[1].actual, Value(4));
  EXPECT_EQ(r.implementation_version, 3);
}

TEST(RunnerProcess, ErrorsAndTimeoutsAreDistinct) {
  auto impl = python(
      "import time\n"
      "def f(x):\n"
      "    if x == 0:\n"
      "        raise ValueError('zero')\n"
      "    if x == 1:\n"
      "        time.sleep(5)\n"
      "    return x\n");
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(0)}, Value(0)),
                                  make_case(1, 1, {Value(1)}, Value(1)),
                                  make_case(1, 2, {Value(2)}, Value(2))};
  SuiteReport r = run_suite(impl, "f", cases, python_config());
  ASSERT_EQ(r.results.size(), 3u);
  EXPECT_EQ(r.results[0].status, CaseStatus::Error);
  EXPECT_NE(r.results[0].message->find("zero"), std::string::npos);
  EXPECT_EQ(r.results[1].status, CaseStatus::Timeout);
  EXPECT_EQ(r.results[2].status, CaseStatus::Pass);
  EXPECT_EQ(build_failure_report(r)->failures.size(), 2u);
}

TEST(RunnerProcess, MissingCaseIsProtocolViolation) {
  auto impl = python("def f(x):\n    return x\n");
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(0)}, Value(0)),
                                  make_case(1, 1, {Value(1)}, Value(1)),
                                  make_case(1, 2, {Value(2)}, Value(2))};
  EXPECT_DOMAIN_ERROR(run_suite(impl, "f", cases, python_config("--drop-last")),
                      ErrorCode::ProtocolViolation);
}

TEST(RunnerProcess, MalformedResponseIsProtocolViolation) {
  auto impl = python("def f(x):\n    return x\n");
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(0)}, Value(0))};
  EXPECT_DOMAIN_ERROR(run_suite(impl, "f", cases, python_config("--garbage")),
                      ErrorCode::ProtocolViolation);
}

TEST(RunnerProcess, NonzeroExitIsRunnerUnavailable) {
  auto impl = python("def f(x):\n    return x\n");
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(0)}, Value(0))};
  EXPECT_DOMAIN_ERROR(run_suite(impl, "f", cases, python_config("--exit 3")),
                      ErrorCode::RunnerUnavailable);
  HarnessConfig missing;
  missing.adapters["python"] = "/nonexistent/runner";
  EXPECT_DOMAIN_ERROR(run_suite(impl, "f", cases, missing), ErrorCode::RunnerUnavailable);
}

TEST(RunnerProcess, UnconfiguredLanguageIsRunnerUnavailable) {
  auto impl = python("def f(x):\n    return x\n");
  impl.language_tag = "cobol";
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(0)}, Value(0))};
  EXPECT_DOMAIN_ERROR(run_suite(impl, "f", cases, python_config()),
                      ErrorCode::RunnerUnavailable);
}

TEST(RunnerProcess, HungAdapterTimesOutEveryCase) {
  auto impl = python("def f(x):\n    return x\n");
  HarnessConfig c = python_config("--hang");
  c.per_case_timeout = std::chrono::milliseconds(200);
  std::vector<SuiteCase> cases = {make_case(1, 0, {Value(0)}, Value(0)),
                                  make_case(1, 1, {Value(1)}, Value(1))};
  auto start = std::chrono::steady_clock::now();
  SuiteReport r = run_suite(impl, "f", cases, c);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
  ASSERT_EQ(r.results.size(), 2u);
  for (const auto& result : r.results) EXPECT_EQ(result.status, CaseStatus::Timeout);
}
