#include "microflow/simulator.hpp"

#include <httplib.h>

#include <fstream>
#include <set>
#include <sstream>

#include "microflow/codec.hpp"
#include "microflow/errors.hpp"
#include "microflow/event_store.hpp"
#include "microflow/http_server.hpp"
#include "microflow/service.hpp"

namespace microflow::sim {

namespace {

[[noreturn]] void invalid(const std::string& message) {
  fail(ErrorCode::InvalidScenario, message);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
  if (!out) fail(ErrorCode::StorageFull, "cannot write " + path.string());
}

bool same(const Value& a, const Value& b) { return canonicalize(a) == canonicalize(b); }

}  // namespace

const OracleBehavior* OracleFunction::find(std::string_view statement) const {
  for (const auto& b : behaviors) {
    if (b.statement == statement) return &b;
  }
  return nullptr;
}

int Scenario::worker_count() const {
  int n = 0;
  for (const auto& w : workers) n += w.count;
  return n;
}

std::size_t Scenario::behavior_count() const {
  std::size_t n = 0;
  for (const auto& [_, f] : oracle) n += f.behaviors.size();
  return n;
}

Scenario scenario_from_value(const Value& v) {
  Scenario s;
  try {
    s.name = v.get("name").is_string() ? v.at("name").as_string() : "scenario";
    s.project_spec = v.at("projectSpec");
    if (!v.get("seed").is_null()) s.seed = static_cast<std::uint64_t>(v.at("seed").as_int());
    if (!v.get("scheduler").is_null()) {
      s.scheduler = scheduler_config_from_value(v.at("scheduler"));
    }

    ProjectSpec spec = parse_project_spec(s.project_spec);
    std::map<std::string, std::vector<Field>> signatures;
    for (const auto& e : spec.endpoints) signatures[e.name] = e.request_schema;

    for (const auto& [name, item] : v.at("oracle").as_object()) {
      OracleFunction f;
      f.table = from_value<Table>(item.at("table"));
      for (const auto& call : item.get("pseudoCalls").is_null()
                                  ? Value::List{}
                                  : item.at("pseudoCalls").as_list()) {
        f.pseudo_calls.push_back(from_value<PseudoCall>(call));
      }
      for (const auto& b : item.at("behaviors").as_list()) {
        OracleBehavior ob;
        ob.statement = b.at("statement").as_string();
        ob.assertions = from_value<std::vector<Assertion>>(b.at("assertions"));
        if (ob.statement.empty() || ob.assertions.empty()) {
          invalid(name + ": behaviors need a statement and assertions");
        }
        if (f.find(ob.statement) != nullptr) {
          invalid(name + ": duplicate statement '" + ob.statement + "'");
        }
        f.behaviors.push_back(std::move(ob));
      }
      if (f.behaviors.empty()) invalid(name + " has no oracle behaviors");
      s.oracle.emplace(name, std::move(f));
    }

    for (const auto& [name, f] : s.oracle) {
      for (const auto& call : f.pseudo_calls) {
        auto [it, inserted] = signatures.emplace(call.name, call.params);
        if (!inserted && it->second != call.params) {
          invalid("conflicting signatures for " + call.name);
        }
      }
    }
    for (auto& [name, f] : s.oracle) {
      auto it = signatures.find(name);
      if (it == signatures.end()) invalid(name + " is neither an endpoint nor a pseudo-call");
      f.params = it->second;
      for (const auto& b : f.behaviors) {
        for (const auto& a : b.assertions) {
          if (a.args.size() != f.params.size()) {
            invalid(name + ": arity mismatch in '" + b.statement + "'");
          }
          if (!same(f.table.lookup(a.args), a.expected)) {
            invalid(name + ": oracle table fails '" + b.statement + "' at " +
                    canonical_args(a.args));
          }
        }
      }
    }
    for (const auto& [name, _] : signatures) {
      if (s.oracle.count(name) == 0) invalid("no oracle for " + name);
    }

    for (const auto& w : v.at("workers").as_list()) {
      WorkerModel m;
      m.count = static_cast<int>(w.at("count").as_int());
      m.accuracy_p = w.at("accuracyP").as_number();
      m.skip_p = w.get("skipP").is_null() ? 0.0 : w.at("skipP").as_number();
      if (!w.get("latency").is_null()) {
        m.latency.min_ms = w.at("latency").at("minMs").as_int();
        m.latency.max_ms = w.at("latency").at("maxMs").as_int();
      }
      if (m.count < 1 || m.accuracy_p < 0 || m.accuracy_p > 1 || m.skip_p < 0 ||
          m.skip_p >= 1 || m.latency.min_ms < 0 || m.latency.min_ms > m.latency.max_ms) {
        invalid("worker model out of range");
      }
      s.workers.push_back(m);
    }
    if (s.workers.empty()) invalid("scenario needs workers");
    s.max_steps = v.get("maxSteps").is_null() ? 50 * minimal_microtasks(s)
                                              : v.at("maxSteps").as_int();
    if (s.max_steps <= 0) invalid("maxSteps must be positive");
  } catch (const DomainError& e) {
    if (e.code() == ErrorCode::InvalidScenario) throw;
    invalid(std::string("malformed scenario: ") + e.what());
  }
  return s;
}

std::filesystem::path resolve_scenario(const std::string& name_or_path) {
  std::filesystem::path direct(name_or_path);
  if (std::filesystem::exists(direct)) return direct;
  std::filesystem::path shipped =
      std::filesystem::path(MICROFLOW_SCENARIO_DIR) / (name_or_path + ".json");
  if (std::filesystem::exists(shipped)) return shipped;
  invalid("no scenario named " + name_or_path);
}

Scenario load_scenario(const std::string& name_or_path) {
  return scenario_from_value(parse_json(read_file(resolve_scenario(name_or_path))));
}

std::int64_t minimal_microtasks(const Scenario& scenario) {
  std::int64_t total = 0;
  for (const auto& [_, f] : scenario.oracle) {
    total += 2 * static_cast<std::int64_t>(f.behaviors.size()) + 2;
  }
  return total;
}

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

Value corrupt_expected(const Value& v) {
  switch (v.type()) {
    case Value::Type::Number: return Value(v.as_number() + 1);
    case Value::Type::String: return Value(v.as_string() + "x");
    case Value::Type::Boolean: return Value(!v.as_bool());
    case Value::Type::Null: return Value(0);
    case Value::Type::List: {
      Value out = v;
      out.push_back(Value(0));
      return out;
    }
    case Value::Type::Object: {
      Value out = v;
      out["~expected"] = true;
      return out;
    }
  }
  return v;
}

Value corrupt_result(const Value& v) {
  switch (v.type()) {
    case Value::Type::Number: return Value(v.as_number() - 1);
    case Value::Type::String: return Value(v.as_string() + "y");
    case Value::Type::Boolean: return Value();
    case Value::Type::Null: return Value(false);
    case Value::Type::List: {
      Value out = v;
      out.push_back(Value());
      return out;
    }
    case Value::Type::Object: {
      Value out = v;
      out["~result"] = false;
      return out;
    }
  }
  return v;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Completed: return "Completed";
    case Outcome::NonConvergent: return "NonConvergent";
    case Outcome::StepLimit: return "StepLimit";
  }
  return "StepLimit";
}

namespace {

// Decides submission bodies from the oracle.
class Crowd {
 public:
  Crowd(const Scenario& scenario, std::mt19937_64& rng) : scenario_(scenario), rng_(rng) {}

  // Returns null when the worker should skip instead.
  Value body_for(const Value& payload, double accuracy) {
    const std::string& kind = payload.at("kind").as_string();
    auto it = scenario_.oracle.find(payload.at("function").at("name").as_string());
    if (it == scenario_.oracle.end()) return Value();
    const OracleFunction& f = it->second;
    Value body = Value::object();
    body["kind"] = kind;

    if (kind == "IdentifyBehavior") {
      std::set<std::string> present;
      for (const auto& b : payload.at("behaviors").as_list()) {
        present.insert(b.at("statement").as_string());
      }
      for (const auto& b : f.behaviors) {
        if (present.count(b.statement) == 0) {
          body["statement"] = b.statement;
          return body;
        }
      }
      body["noMoreBehaviors"] = true;
      return body;
    }

    const bool corrupt = unit(rng_) >= accuracy;
    if (kind == "WriteTest") {
      const OracleBehavior* b = f.find(payload.at("behavior").at("statement").as_string());
      if (b == nullptr) return Value();
      body["assertions"] = assertions(b->assertions, corrupt);
      return body;
    }
    if (kind == "ImplementBehavior") {
      body["implementation"] = implementation(f, corrupt);
      body["pseudoCalls"] = pseudo_calls(f);
      return body;
    }
    if (kind == "DebugFailure") {
      for (const auto& entry : payload.at("failureReport").at("failures").as_list()) {
        if (!same(f.table.lookup(value_list(entry.at("args"))), entry.at("expected"))) {
          body["outcome"] = "disputeTest";
          body["behaviorId"] = entry.at("behaviorId");
          return body;
        }
      }
      body["outcome"] = "fix";
      body["implementation"] = implementation(f, corrupt);
      body["pseudoCalls"] = pseudo_calls(f);
      return body;
    }
    if (kind == "ResolveConflict") {
      Value tests = Value::object();
      for (const auto& b : payload.at("behaviors").as_list()) {
        bool wrong = false;
        for (const auto& a : b.at("assertions").as_list()) {
          wrong = wrong ||
                  !same(f.table.lookup(value_list(a.at("args"))), a.at("expected"));
        }
        if (!wrong) continue;
        std::vector<Assertion> fixed;
        if (const OracleBehavior* ob = f.find(b.at("statement").as_string())) {
          fixed = ob->assertions;
        } else {
          for (const auto& a : b.at("assertions").as_list()) {
            auto args = value_list(a.at("args"));
            fixed.push_back({args, f.table.lookup(args)});
          }
        }
        tests[b.at("id").as_string()] = assertions(fixed, corrupt);
      }
      body["tests"] = std::move(tests);
      return body;
    }
    return Value();
  }

 private:
  Value assertions(std::vector<Assertion> list, bool corrupt) {
    if (corrupt) {
      auto i = static_cast<std::size_t>(uniform(rng_, 0, static_cast<std::int64_t>(list.size()) - 1));
      list[i].expected = corrupt_expected(list[i].expected);
    }
    return to_value(list);
  }

  Value implementation(const OracleFunction& f, bool corrupt) {
    Table table = f.table;
    if (corrupt) {
      if (table.entries.empty()) {
        table.default_value = corrupt_result(table.default_value);
      } else {
        auto i = uniform(rng_, 0, static_cast<std::int64_t>(table.entries.size()) - 1);
        auto it = std::next(table.entries.begin(), i);
        it->second = corrupt_result(it->second);
      }
    }
    Value impl = Value::object();
    impl["kind"] = "table";
    impl["languageTag"] = "table";
    impl["table"] = to_value(table);
    return impl;
  }

  Value pseudo_calls(const OracleFunction& f) {
    Value::List out;
    for (const auto& call : f.pseudo_calls) out.push_back(to_value(call));
    return Value(std::move(out));
  }

  const Scenario& scenario_;
  std::mt19937_64& rng_;
};

class Wire {
 public:
  Wire(int port) : client_("127.0.0.1", port) {
    client_.set_keep_alive(true);
    client_.set_tcp_nodelay(true);
  }

  void close() { client_.stop(); }

  std::pair<int, Value> call(const std::string& method, const std::string& path,
                             const std::string& token, const Value& body = Value()) {
    httplib::Headers headers{{"Authorization", "Bearer " + token}};
    const std::string text = body.is_null() ? "" : canonicalize(body);
    httplib::Result r = method == "GET"
                            ? client_.Get(path, headers)
                            : client_.Post(path, headers, text, "application/json");
    if (!r) fail(ErrorCode::ServiceUnreachable, method + " " + path + " failed");
    return {r->status, r->body.empty() ? Value() : parse_json(r->body)};
  }

  Value expect(int status, const std::string& method, const std::string& path,
               const std::string& token, const Value& body = Value()) {
    auto [code, value] = call(method, path, token, body);
    if (code != status) {
      fail(ErrorCode::ServiceUnreachable, method + " " + path + " returned " +
                                              std::to_string(code) + " " +
                                              canonicalize(value));
    }
    return value;
  }

 private:
  httplib::Client client_;
};

struct SimWorker {
  int index = 0;
  WorkerModel model;
  std::string id;
  std::string token;
  Millis next_time = 0;
  std::optional<std::string> holding;
  Value pending;  // null means skip
};

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  const std::uint64_t seed = options.seed.value_or(scenario.seed);
  const std::int64_t max_steps = options.max_steps.value_or(scenario.max_steps);
  std::filesystem::create_directories(options.out_dir);
  RunResult result;
  result.log_path = options.out_dir / "events.log";
  std::filesystem::remove(result.log_path);

  ServiceConfig config;
  config.listen_address = "127.0.0.1:0";
  config.client_token = "sim-client";
  config.worker_token = "sim-worker";
  config.scheduler = scenario.scheduler;
  config.log_path = result.log_path.string();
  config.clock_mode = ClockMode::Manual;
  config.fsync = FsyncPolicy::None;

  Service service(config);
  HttpServer http(service);
  Wire wire(http.start("127.0.0.1", 0));
  const std::string client = config.client_token;

  auto set_clock = [&](Millis t) {
    Value body = Value::object();
    body["now"] = t;
    wire.expect(200, "POST", "/clock", client, body);
  };

  set_clock(0);
  const std::string pid =
      wire.expect(201, "POST", "/projects", client, scenario.project_spec)
          .at("projectId")
          .as_string();
  result.project = ProjectId::parse(pid);

  std::vector<SimWorker> workers;
  for (const auto& model : scenario.workers) {
    for (int i = 0; i < model.count; ++i) {
      SimWorker w;
      w.index = static_cast<int>(workers.size());
      w.model = model;
      if (options.accuracy_p) w.model.accuracy_p = *options.accuracy_p;
      Value body = Value::object();
      body["handle"] = "sim-" + std::to_string(w.index);
      Value reg = wire.expect(201, "POST", "/workers", config.worker_token, body);
      w.id = reg.at("workerId").as_string();
      w.token = reg.at("token").as_string();
      workers.push_back(std::move(w));
    }
  }

  std::mt19937_64 rng(seed);
  Crowd crowd(scenario, rng);
  std::int64_t steps = 0;
  int idle_streak = 0;
  Millis clock = 0;
  Outcome outcome = Outcome::StepLimit;
  bool done = false;

  while (!done && steps < max_steps) {
    SimWorker* w = &workers.front();
    for (auto& candidate : workers) {
      if (candidate.next_time < w->next_time) w = &candidate;
    }
    clock = w->next_time;
    set_clock(clock);

    if (w->holding) {
      const std::string base = "/microtasks/" + *w->holding;
      bool skip = w->pending.is_null();
      if (!skip) {
        auto [code, reply] = wire.call("POST", base + "/submit", w->token, w->pending);
        if (code == 200) {
          done = reply.at("projectCompleted").as_bool();
        } else if (code == 409) {
          skip = true;
        } else {
          fail(ErrorCode::ServiceUnreachable,
               "submit returned " + std::to_string(code) + " " + canonicalize(reply));
        }
      }
      if (skip) wire.expect(200, "POST", base + "/skip", w->token);
      ++steps;
      idle_streak = 0;
      w->holding.reset();
      w->pending = Value();
      w->next_time = clock + 1000;
      if (done) outcome = Outcome::Completed;
      continue;
    }

    Value fetched = wire.expect(200, "POST", "/workers/" + w->id + "/fetch", w->token);
    if (fetched.at("noWork").as_bool()) {
      w->next_time = clock + 30'000;
      bool anyone_holding = false;
      for (const auto& other : workers) anyone_holding = anyone_holding || other.holding;
      if (++idle_streak >= static_cast<int>(workers.size()) && !anyone_holding) {
        outcome = Outcome::NonConvergent;
        done = true;
      }
      continue;
    }
    idle_streak = 0;
    w->holding = fetched.at("microtaskId").as_string();
    Millis latency = uniform(rng, w->model.latency.min_ms, w->model.latency.max_ms);
    bool skip = unit(rng) < w->model.skip_p;
    w->pending = skip ? Value() : crowd.body_for(fetched.at("payload"), w->model.accuracy_p);
    w->next_time = clock + latency;
  }

  Value status = wire.expect(200, "GET", "/projects/" + pid + "/status", client);
  if (status.at("state").as_string() == "Complete") outcome = Outcome::Completed;
  Value metrics = wire.expect(200, "GET", "/metrics/" + pid, client);
  if (outcome == Outcome::Completed) {
    result.bundle = wire.expect(200, "GET", "/projects/" + pid + "/bundle", client);
    write_file(options.out_dir / "bundle.json", canonicalize(result.bundle));
  }
  wire.close();
  http.stop();

  State final_state = service.state();
  result.final_state = state_bytes(final_state);
  result.outcome = outcome;

  Value by_kind = Value::object();
  std::int64_t total = 0;
  for (const auto& [_, m] : final_state.microtasks) {
    if (m.project != result.project) continue;
    ++total;
    const std::string kind(microflow::to_string(m.kind));
    by_kind[kind] = by_kind.get(kind).is_null() ? 1 : by_kind.at(kind).as_int() + 1;
  }
  Value report = Value::object();
  report["scenario"] = scenario.name;
  report["seed"] = seed;
  report["outcome"] = to_string(outcome);
  report["projectId"] = pid;
  report["totalMicrotasks"] = total;
  report["minimalMicrotasks"] = minimal_microtasks(scenario);
  report["countsByKind"] = std::move(by_kind);
  report["conflictsOpened"] = metrics.at("conflictsOpened");
  report["conflictsResolved"] = metrics.at("conflictsResolved");
  report["debugTasks"] = metrics.at("debugTasks");
  report["wallSteps"] = steps;
  report["virtualMillis"] = clock;
  report["functions"] = static_cast<std::uint64_t>(status.at("functions").as_list().size());
  report["testsWritten"] = metrics.at("testsWritten");
  report["stuck"] = status.at("stuck");
  report["flagged"] = status.at("flagged");
  report["metricsFromService"] = metrics;
  report["eventLogPath"] = result.log_path.string();
  result.report = report;
  write_file(options.out_dir / "report.json", canonicalize(report));
  return result;
}

Comparison compare_runs(const std::filesystem::path& a, const std::filesystem::path& b) {
  auto lines = [](const std::filesystem::path& path) {
    std::vector<std::string> out;
    std::istringstream in(read_file(path));
    for (std::string line; std::getline(in, line);) {
      decode_log_line(line);
      out.push_back(std::move(line));
    }
    return out;
  };
  auto xs = lines(a);
  auto ys = lines(b);
  std::size_t n = std::min(xs.size(), ys.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (xs[i] != ys[i]) return {false, static_cast<std::int64_t>(i + 1)};
  }
  if (xs.size() != ys.size()) return {false, static_cast<std::int64_t>(n + 1)};
  return {};
}

}  // namespace microflow::sim
