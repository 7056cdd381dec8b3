#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "microflow/engine.hpp"
#include "microflow/event_store.hpp"
#include "microflow/value.hpp"

namespace microflow {

enum class ClockMode { System, Manual };

struct ServiceConfig {
  std::string listen_address = "127.0.0.1:8080";
  std::string client_token;
  std::string worker_token;
  SchedulerConfig scheduler;
  HarnessConfig harness;
  std::string log_path;       // empty keeps the log in memory
  std::string snapshot_path;  // empty disables snapshots
  int snapshot_every = 0;     // events between snapshots
  ClockMode clock_mode = ClockMode::System;
  FsyncPolicy fsync = FsyncPolicy::EveryCommit;

  std::string host() const;
  int port() const;
};

/// Throws BadRequest on malformed or inconsistent settings.
ServiceConfig service_config_from_value(const Value& v);
ServiceConfig load_service_config(const std::filesystem::path& path);
Value to_value(const ServiceConfig& c);

struct Response {
  int status = 200;
  Value body;
};

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Transport-independent request handling. All calls are serialized by an
/// internal mutex; every mutation reaches the event log before the call
/// returns.
class Service {
 public:
  /// Opens (and recovers) the configured log and rebuilds the state from
  /// the snapshot plus tail, or the full log. Throws CorruptLog.
  explicit Service(ServiceConfig config);

  /// `token` is the bearer credential without the "Bearer " prefix.
  Response route(std::string_view method, std::string_view path,
                 std::string_view token, std::string_view body);

  Millis now() const;
  /// Manual clock only.
  void set_now(Millis now);

  /// Credential handed to a registered worker.
  std::string worker_credential(WorkerId worker) const;

  State state() const;
  std::vector<Event> events() const;
  Value status_report(ProjectId project) const;
  const ServiceConfig& config() const { return config_; }
  void set_runner(RunnerAdapter* runner);

 private:
  enum class Role { None, Client, WorkerPool, Worker };
  struct Caller {
    Role role = Role::None;
    WorkerId worker;
  };

  Caller authenticate(std::string_view token) const;
  Response dispatch(std::string_view method, const std::vector<std::string>& parts,
                    const Caller& caller, std::string_view body);
  void after_commit();
  Value status_locked(ProjectId project) const;

  ServiceConfig config_;
  EventLog log_;
  Engine engine_;
  Millis manual_now_ = 0;
  std::int64_t last_snapshot_seq_ = 0;
  std::map<std::string, WorkerId> credentials_;
  mutable std::mutex mutex_;
};

}  // namespace microflow
