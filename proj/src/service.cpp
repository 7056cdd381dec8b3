#include "microflow/service.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include "microflow/codec.hpp"
#include "microflow/deployer.hpp"
#include "microflow/errors.hpp"
#include "microflow/metrics.hpp"

namespace microflow {

namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) parts.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

template <class IdT>
IdT parse_route_id(const std::string& text) {
  try {
    return IdT::parse(text);
  } catch (const DomainError&) {
    fail(ErrorCode::NotFound, "no such resource " + text);
  }
}

Value error_body(ErrorCode code, const std::string& message) {
  Value out = Value::object();
  out["error"] = error_name(code);
  out["message"] = message;
  return out;
}

Value body_or_empty(std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return Value::object();
  return parse_json(body);
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string ServiceConfig::host() const {
  return listen_address.substr(0, listen_address.rfind(':'));
}

int ServiceConfig::port() const {
  return std::stoi(listen_address.substr(listen_address.rfind(':') + 1));
}

ServiceConfig service_config_from_value(const Value& v) {
  if (!v.is_object()) fail(ErrorCode::BadRequest, "config must be an object");
  ServiceConfig c;
  if (v.get("listenAddress").is_string()) c.listen_address = v.at("listenAddress").as_string();
  auto colon = c.listen_address.rfind(':');
  int port = -1;
  if (colon != std::string::npos && colon > 0) {
    std::string_view digits(c.listen_address);
    digits.remove_prefix(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) port = -1;
  }
  if (port < 0 || port > 65535) {
    fail(ErrorCode::BadRequest, "listenAddress must be host:port");
  }
  const Value& tokens = v.at("authTokens");
  c.client_token = tokens.at("client").as_string();
  c.worker_token = tokens.at("worker").as_string();
  if (c.client_token.empty() || c.worker_token.empty() ||
      c.client_token == c.worker_token) {
    fail(ErrorCode::BadRequest, "client and worker tokens must be non-empty and distinct");
  }
  if (!v.get("scheduler").is_null()) {
    c.scheduler = scheduler_config_from_value(v.at("scheduler"));
  }
  if (!v.get("runnerAdapters").is_null()) {
    for (const auto& [tag, command] : v.at("runnerAdapters").as_object()) {
      c.harness.adapters[tag] = command.as_string();
    }
  }
  if (!v.get("harness").is_null()) {
    const Value& h = v.at("harness");
    if (!h.get("perCaseMillis").is_null()) {
      c.harness.per_case_timeout = std::chrono::milliseconds(h.at("perCaseMillis").as_int());
    }
    if (!h.get("suiteCapMillis").is_null()) {
      c.harness.suite_cap = std::chrono::milliseconds(h.at("suiteCapMillis").as_int());
    }
    if (c.harness.per_case_timeout.count() <= 0 || c.harness.suite_cap.count() <= 0) {
      fail(ErrorCode::BadRequest, "harness timeouts must be positive");
    }
  }
  if (v.get("logPath").is_string()) c.log_path = v.at("logPath").as_string();
  if (v.get("snapshotPath").is_string()) c.snapshot_path = v.at("snapshotPath").as_string();
  if (!v.get("snapshotEvery").is_null()) {
    c.snapshot_every = static_cast<int>(v.at("snapshotEvery").as_int());
    if (c.snapshot_every < 0) fail(ErrorCode::BadRequest, "snapshotEvery must be >= 0");
  }
  if (v.get("clockMode").is_string()) {
    const auto& mode = v.at("clockMode").as_string();
    if (mode == "system") {
      c.clock_mode = ClockMode::System;
    } else if (mode == "manual") {
      c.clock_mode = ClockMode::Manual;
    } else {
      fail(ErrorCode::BadRequest, "clockMode must be system or manual");
    }
  }
  if (v.get("fsync").is_string()) {
    const auto& mode = v.at("fsync").as_string();
    if (mode == "commit") {
      c.fsync = FsyncPolicy::EveryCommit;
    } else if (mode == "none") {
      c.fsync = FsyncPolicy::None;
    } else {
      fail(ErrorCode::BadRequest, "fsync must be commit or none");
    }
  }
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadRequest, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return service_config_from_value(parse_json(buffer.str()));
}

Value to_value(const ServiceConfig& c) {
  Value out = Value::object();
  out["listenAddress"] = c.listen_address;
  Value tokens = Value::object();
  tokens["client"] = c.client_token;
  tokens["worker"] = c.worker_token;
  out["authTokens"] = std::move(tokens);
  out["scheduler"] = to_value(c.scheduler);
  Value adapters = Value::object();
  for (const auto& [tag, command] : c.harness.adapters) adapters[tag] = command;
  out["runnerAdapters"] = std::move(adapters);
  Value harness = Value::object();
  harness["perCaseMillis"] = static_cast<std::int64_t>(c.harness.per_case_timeout.count());
  harness["suiteCapMillis"] = static_cast<std::int64_t>(c.harness.suite_cap.count());
  out["harness"] = std::move(harness);
  out["logPath"] = c.log_path;
  out["snapshotPath"] = c.snapshot_path;
  out["snapshotEvery"] = c.snapshot_every;
  out["clockMode"] = c.clock_mode == ClockMode::Manual ? "manual" : "system";
  out["fsync"] = c.fsync == FsyncPolicy::EveryCommit ? "commit" : "none";
  return out;
}

namespace {

EventLog open_log(const ServiceConfig& config) {
  if (config.log_path.empty()) return EventLog();
  EventLog log = EventLog::open(config.log_path, config.fsync);
  if (log.corrupt()) fail(ErrorCode::CorruptLog, log.corruption());
  return log;
}

State initial_state(const ServiceConfig& config, const EventLog& log) {
  if (!config.snapshot_path.empty() && std::filesystem::exists(config.snapshot_path)) {
    Snapshot snap = read_snapshot(config.snapshot_path);
    if (snap.as_of_seq <= log.last_seq()) {
      std::span<const Event> all(log.events());
      return replay_from_snapshot(snap, all.subspan(static_cast<std::size_t>(snap.as_of_seq)));
    }
  }
  return replay(log);
}

}  // namespace

Service::Service(ServiceConfig config)
    : config_(std::move(config)),
      log_(open_log(config_)),
      engine_(EngineConfig{config_.scheduler, config_.harness}, initial_state(config_, log_)) {
  engine_.set_sink([this](std::span<const Event> events) { log_.append(events); });
  last_snapshot_seq_ = log_.last_seq();
  for (const auto& [id, _] : engine_.state().workers) {
    credentials_[worker_credential(id)] = id;
  }
}

Millis Service::now() const {
  if (config_.clock_mode == ClockMode::Manual) return manual_now_;
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void Service::set_now(Millis now) {
  std::lock_guard lock(mutex_);
  if (config_.clock_mode != ClockMode::Manual) {
    fail(ErrorCode::BadRequest, "clock is not manual");
  }
  manual_now_ = now;
}

std::string Service::worker_credential(WorkerId worker) const {
  return sha256_hex(config_.worker_token + ":" + worker.str()).substr(0, 32);
}

State Service::state() const {
  std::lock_guard lock(mutex_);
  return engine_.state();
}

std::vector<Event> Service::events() const {
  std::lock_guard lock(mutex_);
  return log_.events();
}

void Service::set_runner(RunnerAdapter* runner) {
  std::lock_guard lock(mutex_);
  engine_.set_runner(runner);
}

Value Service::status_report(ProjectId project) const {
  std::lock_guard lock(mutex_);
  return status_locked(project);
}

Value Service::status_locked(ProjectId pid) const {
  const State& s = engine_.state();
  const Project& project = s.project(pid);
  Value out = Value::object();
  out["projectId"] = pid.str();
  out["name"] = project.spec.name;
  out["state"] = to_string(project.state);

  Value::List functions;
  for (FunctionId fid : project.functions) {
    const FunctionSpec& f = s.function(fid);
    Value fv = Value::object();
    fv["id"] = fid.str();
    fv["name"] = f.name;
    fv["state"] = to_string(f.state);
    fv["identifyClosed"] = f.identify_closed;
    fv["noMoreDeclarations"] = static_cast<std::uint64_t>(f.no_more_declarations());
    fv["implementationVersion"] = f.implementation ? f.implementation->version : 0;
    fv["openFailure"] = f.open_failure.has_value();
    Value::List behaviors;
    for (BehaviorId bid : f.behaviors) {
      const Behavior& b = s.behavior(bid);
      Value bv = Value::object();
      bv["id"] = bid.str();
      bv["statement"] = b.statement;
      bv["state"] = to_string(b.state);
      behaviors.push_back(std::move(bv));
    }
    fv["behaviors"] = Value(std::move(behaviors));
    functions.push_back(std::move(fv));
  }
  out["functions"] = Value(std::move(functions));

  Value queue = Value::object();
  Value in_flight = Value::object();
  Value::List flagged;
  Value::List stuck;
  for (const auto& [id, m] : s.microtasks) {
    if (m.project != pid) continue;
    const std::string kind(to_string(m.kind));
    if (m.state == MicrotaskState::Queued) {
      queue[kind] = queue.get(kind).is_null() ? 1 : queue.at(kind).as_int() + 1;
    } else if (m.state == MicrotaskState::Assigned) {
      in_flight[kind] = in_flight.get(kind).is_null() ? 1 : in_flight.at(kind).as_int() + 1;
    }
    if (m.terminal()) continue;
    if (m.flagged) flagged.push_back(Value(id.str()));
    if (m.stuck) stuck.push_back(Value(id.str()));
  }
  out["queue"] = std::move(queue);
  out["inFlight"] = std::move(in_flight);
  out["flagged"] = Value(std::move(flagged));
  out["stuck"] = Value(std::move(stuck));

  Value::List open;
  for (const auto& [_, c] : s.conflicts) {
    if (c.state == ConflictState::Open && s.function(c.function).project == pid) {
      open.push_back(to_value(c));
    }
  }
  out["openConflicts"] = Value(std::move(open));
  out["metrics"] = to_value(compute_metrics(log_.events(), pid));
  out["lastSeq"] = s.last_seq;
  return out;
}

Service::Caller Service::authenticate(std::string_view token) const {
  if (token.empty()) return {};
  if (token == config_.client_token) return {Role::Client, {}};
  if (token == config_.worker_token) return {Role::WorkerPool, {}};
  auto it = credentials_.find(std::string(token));
  if (it != credentials_.end()) return {Role::Worker, it->second};
  return {};
}

void Service::after_commit() {
  if (config_.snapshot_path.empty() || config_.snapshot_every <= 0) return;
  if (log_.last_seq() - last_snapshot_seq_ < config_.snapshot_every) return;
  write_snapshot(config_.snapshot_path, engine_.state());
  last_snapshot_seq_ = log_.last_seq();
}

Response Service::route(std::string_view method, std::string_view path,
                        std::string_view token, std::string_view body) {
  std::lock_guard lock(mutex_);
  try {
    Caller caller = authenticate(token);
    if (caller.role == Role::None) {
      return {401, error_body(ErrorCode::Unauthorized, "missing or unknown token")};
    }
    Response r = dispatch(method, split_path(path), caller, body);
    after_commit();
    return r;
  } catch (const DomainError& e) {
    return {http_status(e.code()), error_body(e.code(), e.what())};
  } catch (const std::exception& e) {
    Value out = Value::object();
    out["error"] = "Internal";
    out["message"] = e.what();
    return {500, out};
  }
}

Response Service::dispatch(std::string_view method, const std::vector<std::string>& parts,
                           const Caller& caller, std::string_view body) {
  auto require = [&](std::initializer_list<Role> roles) {
    for (Role r : roles) {
      if (caller.role == r) return;
    }
    fail(ErrorCode::Unauthorized, "token not valid for this route");
  };
  const std::size_t n = parts.size();
  auto at = [&](std::size_t i, std::string_view text) { return n > i && parts[i] == text; };

  if (method == "POST" && n == 1 && at(0, "projects")) {
    require({Role::Client});
    ProjectSpec spec = parse_project_spec(body_or_empty(body));
    ProjectId id = engine_.create_project(now(), spec);
    Value out = Value::object();
    out["projectId"] = id.str();
    return {201, out};
  }
  if (method == "GET" && n == 3 && at(0, "projects") && at(2, "status")) {
    require({Role::Client, Role::WorkerPool, Role::Worker});
    return {200, status_locked(parse_route_id<ProjectId>(parts[1]))};
  }
  if (method == "GET" && n == 3 && at(0, "projects") && at(2, "bundle")) {
    require({Role::Client});
    ProjectId pid = parse_route_id<ProjectId>(parts[1]);
    return {200, deployer::build_bundle(engine_.state(), log_.events(), pid)};
  }
  if (method == "GET" && n == 2 && at(0, "metrics")) {
    require({Role::Client, Role::WorkerPool, Role::Worker});
    ProjectId pid = parse_route_id<ProjectId>(parts[1]);
    engine_.state().project(pid);
    return {200, to_value(compute_metrics(log_.events(), pid))};
  }
  if (method == "POST" && n == 1 && at(0, "workers")) {
    require({Role::WorkerPool});
    Value request = body_or_empty(body);
    std::string handle = request.get("handle").is_string() ? request.at("handle").as_string() : "";
    WorkerId id = engine_.register_worker(now(), handle);
    std::string credential = worker_credential(id);
    credentials_[credential] = id;
    Value out = Value::object();
    out["workerId"] = id.str();
    out["token"] = credential;
    return {201, out};
  }
  if (method == "POST" && n == 3 && at(0, "workers") && at(2, "fetch")) {
    require({Role::Worker});
    WorkerId id = parse_route_id<WorkerId>(parts[1]);
    if (caller.worker != id) fail(ErrorCode::Unauthorized, "token belongs to another worker");
    auto assignment = engine_.fetch(now(), id);
    Value out = Value::object();
    if (!assignment) {
      out["noWork"] = true;
      return {200, out};
    }
    out["noWork"] = false;
    out["microtaskId"] = assignment->microtask.str();
    out["leaseExpiry"] = assignment->lease_expiry;
    out["payload"] = engine_.render_assignment(assignment->microtask);
    return {200, out};
  }
  if (method == "POST" && n == 3 && at(0, "microtasks") && at(2, "submit")) {
    require({Role::Worker});
    MicrotaskId id = parse_route_id<MicrotaskId>(parts[1]);
    Value request = parse_json(body);
    SubmissionResult result = engine_.submit(now(), caller.worker, id, request);
    Value out = Value::object();
    out["accepted"] = true;
    out["requeued"] = result.requeued;
    Value::List spawned;
    for (MicrotaskId m : result.spawned) spawned.push_back(Value(m.str()));
    out["spawned"] = Value(std::move(spawned));
    const Microtask& m = engine_.state().microtask(id);
    out["projectCompleted"] =
        engine_.state().project(m.project).state == ProjectState::Complete;
    return {200, out};
  }
  if (method == "POST" && n == 3 && at(0, "microtasks") && at(2, "skip")) {
    require({Role::Worker});
    MicrotaskId id = parse_route_id<MicrotaskId>(parts[1]);
    engine_.skip(now(), caller.worker, id);
    Value out = Value::object();
    out["skipped"] = true;
    return {200, out};
  }
  if (method == "POST" && n == 1 && at(0, "clock") &&
      config_.clock_mode == ClockMode::Manual) {
    require({Role::Client});
    Value request = parse_json(body);
    manual_now_ = request.at("now").as_int();
    Value out = Value::object();
    out["now"] = manual_now_;
    return {200, out};
  }
  fail(ErrorCode::NotFound, "no route " + std::string(method));
}

}  // namespace microflow
