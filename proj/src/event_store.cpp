#include "microflow/event_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "microflow/codec.hpp"
#include "microflow/errors.hpp"

namespace microflow {

namespace {

std::string crc_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

[[noreturn]] void storage_error(const std::string& what) {
  if (errno == ENOSPC || errno == EDQUOT) {
    fail(ErrorCode::StorageFull, what + ": " + std::strerror(errno));
  }
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_error("event log write");
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string encode_log_line(const Event& e) {
  std::string json = canonicalize(to_value(e));
  std::string crc = crc_hex(json);
  json += '#';
  json += crc;
  return json;
}

Event decode_log_line(std::string_view line) {
  auto hash = line.rfind('#');
  if (hash == std::string_view::npos || line.size() - hash != 9) {
    fail(ErrorCode::CorruptLog, "missing checksum");
  }
  auto json = line.substr(0, hash);
  if (crc_hex(json) != line.substr(hash + 1)) {
    fail(ErrorCode::CorruptLog, "checksum mismatch");
  }
  try {
    return event_from_value(parse_json(json));
  } catch (const DomainError& e) {
    fail(ErrorCode::CorruptLog, std::string("undecodable event: ") + e.what());
  }
}

EventLog EventLog::open(const std::filesystem::path& path, FsyncPolicy fsync) {
  EventLog log;
  log.path_ = path;
  log.fsync_ = fsync;

  std::string content;
  if (std::filesystem::exists(path)) content = read_file(path);

  // Offset just past the last complete commit, and the number of events
  // that precede it.
  std::size_t boundary = 0;
  std::size_t committed_events = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final line
    std::string_view line(content.data() + pos, nl - pos);
    try {
      Event e = decode_log_line(line);
      if (e.seq != static_cast<std::int64_t>(log.events_.size()) + 1) {
        fail(ErrorCode::CorruptLog, "sequence gap at " + std::to_string(e.seq));
      }
      log.events_.push_back(std::move(e));
    } catch (const DomainError& err) {
      log.corrupt_ = true;
      log.corruption_ = "line " + std::to_string(log.events_.size() + 1) +
                        ": " + err.what();
      break;
    }
    pos = nl + 1;
    if (log.events_.back().commit_end) {
      boundary = pos;
      committed_events = log.events_.size();
    }
  }

  if (log.corrupt_) {
    // Keep the readable prefix but never write to this file.
    log.events_.resize(committed_events);
    return log;
  }

  log.events_.resize(committed_events);
  log.fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (log.fd_ < 0) storage_error("open " + path.string());
  if (boundary < content.size()) {
    log.recovered_bytes_ = content.size() - boundary;
    if (::ftruncate(log.fd_, static_cast<off_t>(boundary)) != 0) {
      storage_error("truncate torn tail");
    }
  }
  if (::lseek(log.fd_, 0, SEEK_END) < 0) storage_error("seek");
  return log;
}

EventLog::EventLog(EventLog&& other) noexcept
    : path_(std::move(other.path_)),
      fd_(other.fd_),
      fsync_(other.fsync_),
      events_(std::move(other.events_)),
      corrupt_(other.corrupt_),
      corruption_(std::move(other.corruption_)),
      recovered_bytes_(other.recovered_bytes_) {
  other.fd_ = -1;
}

EventLog& EventLog::operator=(EventLog&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    fd_ = other.fd_;
    fsync_ = other.fsync_;
    events_ = std::move(other.events_);
    corrupt_ = other.corrupt_;
    corruption_ = std::move(other.corruption_);
    recovered_bytes_ = other.recovered_bytes_;
    other.fd_ = -1;
  }
  return *this;
}

EventLog::~EventLog() {
  if (fd_ >= 0) ::close(fd_);
}

std::int64_t EventLog::append(std::span<const Event> events) {
  if (corrupt_) fail(ErrorCode::CorruptLog, "append refused: " + corruption_);
  if (events.empty()) return last_seq();

  std::vector<Event> batch(events.begin(), events.end());
  std::int64_t expected = last_seq() + 1;
  for (auto& e : batch) {
    if (e.seq != expected++) {
      fail(ErrorCode::CorruptLog, "append out of sequence at " +
                                      std::to_string(e.seq));
    }
    e.commit_end = false;
  }
  batch.back().commit_end = true;

  if (fd_ >= 0) {
    std::string bytes;
    for (const auto& e : batch) {
      bytes += encode_log_line(e);
      bytes += '\n';
    }
    off_t before = ::lseek(fd_, 0, SEEK_END);
    try {
      write_all(fd_, bytes);
      if (fsync_ == FsyncPolicy::EveryCommit && ::fsync(fd_) != 0) {
        storage_error("fsync");
      }
    } catch (...) {
      // All-or-nothing: drop whatever part of the commit reached the file.
      if (before >= 0 && ::ftruncate(fd_, before) == 0) ::lseek(fd_, before, SEEK_SET);
      throw;
    }
  }
  for (auto& e : batch) events_.push_back(std::move(e));
  return last_seq();
}

State replay(const EventLog& log, std::optional<std::int64_t> up_to_seq) {
  if (log.corrupt()) fail(ErrorCode::CorruptLog, log.corruption());
  return replay(std::span<const Event>(log.events()), up_to_seq);
}

State replay(std::span<const Event> events,
             std::optional<std::int64_t> up_to_seq) {
  std::size_t n = events.size();
  if (up_to_seq) {
    n = static_cast<std::size_t>(
        std::clamp<std::int64_t>(*up_to_seq, 0, static_cast<std::int64_t>(n)));
  }
  return fold(State{}, events.first(n));
}

Value to_value(const Snapshot& s) {
  Value out = Value::object();
  out["asOfSeq"] = s.as_of_seq;
  out["state"] = to_value(s.state);
  return out;
}

Snapshot snapshot_from_value(const Value& v) {
  Snapshot s;
  s.as_of_seq = v.at("asOfSeq").as_int();
  s.state = from_value<State>(v.at("state"));
  if (s.state.last_seq != s.as_of_seq) {
    fail(ErrorCode::CorruptLog, "snapshot sequence mismatch");
  }
  return s;
}

void write_snapshot(const std::filesystem::path& path, const State& state) {
  Snapshot snap{state.last_seq, state};
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << canonicalize(to_value(snap));
    if (!out) fail(ErrorCode::StorageFull, "snapshot write failed");
  }
  std::filesystem::rename(tmp, path);
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  return snapshot_from_value(parse_json(read_file(path)));
}

State replay_from_snapshot(const Snapshot& snapshot,
                           std::span<const Event> events) {
  State state = snapshot.state;
  for (const auto& e : events) {
    if (e.seq <= snapshot.as_of_seq) continue;
    apply_event(state, e);
  }
  return state;
}

std::string state_bytes(const State& state) {
  return canonicalize(to_value(state));
}

}  // namespace microflow
