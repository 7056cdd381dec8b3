#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "microflow/events.hpp"

namespace microflow {

enum class FsyncPolicy { None, EveryCommit };

/// Encodes one log line: `<canonical JSON>#<crc32 hex>` (no newline).
std::string encode_log_line(const Event& e);
/// Decodes and checksum-verifies a log line. Throws CorruptLog.
Event decode_log_line(std::string_view line);

/// Append-only event log. Backed by a file when opened with a path,
/// in memory otherwise.
///
/// Opening scans the whole file. A torn tail (a final line without a
/// newline, or trailing events after the last commit marker) is cut back to
/// the last commit boundary. A complete line that fails its checksum marks
/// the log corrupt: the valid prefix stays readable but appends and
/// replays are refused.
class EventLog {
 public:
  EventLog() = default;  // in-memory
  static EventLog open(const std::filesystem::path& path,
                       FsyncPolicy fsync = FsyncPolicy::EveryCommit);

  EventLog(EventLog&& other) noexcept;
  EventLog& operator=(EventLog&& other) noexcept;
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog();

  /// Appends one commit atomically; marks the last event as the commit
  /// end. Returns the last sequence number. Throws CorruptLog or StorageFull.
  std::int64_t append(std::span<const Event> events);

  const std::vector<Event>& events() const { return events_; }
  std::int64_t last_seq() const {
    return events_.empty() ? 0 : events_.back().seq;
  }
  bool corrupt() const { return corrupt_; }
  const std::string& corruption() const { return corruption_; }
  /// Bytes dropped from a torn tail while opening.
  std::uint64_t recovered_bytes() const { return recovered_bytes_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  std::optional<std::filesystem::path> path_;
  int fd_ = -1;
  FsyncPolicy fsync_ = FsyncPolicy::None;
  std::vector<Event> events_;
  bool corrupt_ = false;
  std::string corruption_;
  std::uint64_t recovered_bytes_ = 0;
};

/// Deterministic fold of the log prefix up to `up_to_seq` (all if empty).
/// Throws CorruptLog on a corrupt log.
State replay(const EventLog& log, std::optional<std::int64_t> up_to_seq = {});
State replay(std::span<const Event> events,
             std::optional<std::int64_t> up_to_seq = {});

struct Snapshot {
  std::int64_t as_of_seq = 0;
  State state;
};

Value to_value(const Snapshot& s);
Snapshot snapshot_from_value(const Value& v);

void write_snapshot(const std::filesystem::path& path, const State& state);
Snapshot read_snapshot(const std::filesystem::path& path);

/// Folds the events after the snapshot onto it.
State replay_from_snapshot(const Snapshot& snapshot,
                           std::span<const Event> events);

/// Canonical serialization of a state, used for bytewise comparisons.
std::string state_bytes(const State& state);

}  // namespace microflow
