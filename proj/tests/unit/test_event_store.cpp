#include <fstream>
#include <sstream>

#include "microflow/event_store.hpp"
#include "support.hpp"

using namespace microflow;
using namespace microflow::testing;

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_all(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

// One function taken from creation to completion.
void complete_small_project(Driver& d) {
  d.engine.create_project(d.now, spec_of({endpoint("GET", "/f", "f", {"x"})}));
  WorkerId w = d.worker("w");
  d.now += 5'000;
  d.submit(w, d.take(w, MicrotaskKind::IdentifyBehavior), identify("doubles one"));
  d.now += 5'000;
  d.submit(w, d.take(w, MicrotaskKind::WriteTest), write_test({assertion({Value(1)}, Value(2))}));
  d.now += 5'000;
  d.submit(w, d.take(w, MicrotaskKind::ImplementBehavior),
           implement(table_impl({{{Value(1)}, Value(2)}})));
  d.now += 5'000;
  d.submit(w, d.take(w, MicrotaskKind::IdentifyBehavior), no_more());
}

// Drives the engine into a file-backed log and records the file size after
// every commit.
struct FileRun {
  explicit FileRun(const std::filesystem::path& path) : log(EventLog::open(path)) {
    d.engine.set_sink([&, path](std::span<const Event> events) {
      log.append(events);
      d.log.insert(d.log.end(), events.begin(), events.end());
      boundaries.push_back({std::filesystem::file_size(path), d.log.size()});
    });
    complete_small_project(d);
  }
  EventLog log;
  Driver d;
  std::vector<std::pair<std::uintmax_t, std::size_t>> boundaries;  // bytes, events
};

}  // namespace

TEST(EventLog, AppendKeepsConsecutiveSequences) {
  EventLog log;
  std::vector<Event> batch(3);
  for (std::size_t i = 0; i < 3; ++i) {
    batch[i].seq = static_cast<std::int64_t>(i + 1);
    batch[i].payload = Value::object();
  }
  EXPECT_EQ(log.append(batch), 3);
  std::vector<Event> gap(1);
  gap[0].seq = 5;
  EXPECT_DOMAIN_ERROR(log.append(gap), ErrorCode::CorruptLog);
  ASSERT_EQ(log.events().size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(log.events()[i].seq, static_cast<std::int64_t>(i + 1));
  EXPECT_FALSE(log.events()[1].commit_end);
  EXPECT_TRUE(log.events()[2].commit_end);
}

TEST(EventLog, LineRoundTripAndChecksum) {
  Event e;
  e.seq = 7;
  e.timestamp = 1234;
  e.kind = EventKind::BehaviorAdded;
  e.payload = json(R"({"projectId":"p1","statement":"x"})");
  e.commit_end = true;
  std::string line = encode_log_line(e);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.rfind('#'), std::string::npos);
  EXPECT_EQ(decode_log_line(line), e);

  std::string tampered = line;
  tampered[tampered.find("\"x\"") + 1] = 'y';
  EXPECT_DOMAIN_ERROR(decode_log_line(tampered), ErrorCode::CorruptLog);
  EXPECT_DOMAIN_ERROR(decode_log_line("not a log line"), ErrorCode::CorruptLog);
}

TEST(EventLog, ReopenRestoresEveryEvent) {
  TempDir dir;
  std::vector<Event> live;
  {
    FileRun run(dir / "events.log");
    live = run.d.log;
    EXPECT_EQ(run.d.state().projects.begin()->second.state, ProjectState::Complete);
  }
  EventLog reopened = EventLog::open(dir / "events.log");
  EXPECT_FALSE(reopened.corrupt());
  EXPECT_EQ(reopened.recovered_bytes(), 0u);
  EXPECT_EQ(reopened.events(), live);
}

TEST(EventLog, KillAtAnyByteRecoversToCommitBoundary) {
  TempDir dir;
  auto source = dir / "events.log";
  std::vector<std::pair<std::uintmax_t, std::size_t>> boundaries;
  std::vector<Event> live;
  {
    FileRun run(source);
    boundaries = run.boundaries;
    live = run.d.log;
  }
  const std::string bytes = read_all(source);
  ASSERT_EQ(bytes.size(), boundaries.back().first);

  auto cut = dir / "cut.log";
  for (std::size_t k = 0; k <= bytes.size(); ++k) {
    write_all(cut, bytes.substr(0, k));
    std::size_t expected_events = 0;
    std::uintmax_t expected_bytes = 0;
    for (const auto& [size, count] : boundaries) {
      if (size <= k) {
        expected_bytes = size;
        expected_events = count;
      }
    }
    EventLog log = EventLog::open(cut);
    ASSERT_FALSE(log.corrupt()) << "offset " << k;
    ASSERT_EQ(log.events().size(), expected_events) << "offset " << k;
    ASSERT_EQ(log.recovered_bytes(), k - expected_bytes) << "offset " << k;
    ASSERT_EQ(std::filesystem::file_size(cut), expected_bytes) << "offset " << k;
    for (std::size_t i = 0; i < expected_events; ++i) ASSERT_EQ(log.events()[i], live[i]);
    if (expected_events > 0) ASSERT_TRUE(log.events().back().commit_end);
  }
}

TEST(EventLog, RecoveredLogAcceptsNewCommits) {
  TempDir dir;
  auto path = dir / "events.log";
  { FileRun run(path); }
  std::string bytes = read_all(path);
  write_all(path, bytes.substr(0, bytes.size() - 5));
  EventLog log = EventLog::open(path);
  std::int64_t before = log.last_seq();
  std::vector<Event> extra(1);
  extra[0].seq = before + 1;
  extra[0].kind = EventKind::WorkerRegistered;
  extra[0].payload = json(R"({"workerId":"w9"})");
  EXPECT_EQ(log.append(extra), before + 1);
  EventLog again = EventLog::open(path);
  EXPECT_EQ(again.last_seq(), before + 1);
  EXPECT_EQ(again.recovered_bytes(), 0u);
}

TEST(EventLog, ChecksumFailureMarksCorruptAndRefusesWrites) {
  TempDir dir;
  auto path = dir / "events.log";
  { FileRun run(path); }
  std::string bytes = read_all(path);
  std::size_t third = 0;
  for (int i = 0; i < 2; ++i) third = bytes.find('\n', third) + 1;
  std::size_t brace = bytes.find('{', third);
  bytes[brace + 2] = bytes[brace + 2] == 'a' ? 'b' : 'a';
  write_all(path, bytes);

  EventLog log = EventLog::open(path);
  EXPECT_TRUE(log.corrupt());
  EXPECT_NE(log.corruption().find("line 3"), std::string::npos) << log.corruption();
  EXPECT_LE(log.events().size(), 2u);
  std::vector<Event> extra(1);
  extra[0].seq = log.last_seq() + 1;
  extra[0].payload = Value::object();
  EXPECT_DOMAIN_ERROR(log.append(extra), ErrorCode::CorruptLog);
  EXPECT_DOMAIN_ERROR(replay(log), ErrorCode::CorruptLog);
  EXPECT_EQ(read_all(path), bytes);
}

TEST(EventLog, SequenceGapIsCorruption) {
  TempDir dir;
  auto path = dir / "events.log";
  Event a;
  a.seq = 1;
  a.payload = Value::object();
  a.commit_end = true;
  Event b = a;
  b.seq = 3;
  write_all(path, encode_log_line(a) + "\n" + encode_log_line(b) + "\n");
  EventLog log = EventLog::open(path);
  EXPECT_TRUE(log.corrupt());
  EXPECT_EQ(log.events().size(), 1u);
}

TEST(Replay, EmptyLogIsEmptyState) {
  EventLog log;
  State s = replay(log);
  EXPECT_EQ(s.last_seq, 0);
  EXPECT_TRUE(s.projects.empty());
  EXPECT_EQ(state_bytes(s), state_bytes(State{}));
}

TEST(Replay, FullFoldEqualsLiveStateBytewise) {
  Driver d;
  complete_small_project(d);
  EXPECT_EQ(state_bytes(replay(d.log)), state_bytes(d.state()));
  EXPECT_EQ(state_bytes(replay(d.log)), state_bytes(replay(d.log)));
}

TEST(Replay, PrefixFoldMatchesStateAtThatCommit) {
  std::vector<std::pair<std::int64_t, std::string>> checkpoints;
  Driver d;
  d.engine.set_sink([&](std::span<const Event> events) {
    d.log.insert(d.log.end(), events.begin(), events.end());
    State copy = fold(State{}, d.log);
    checkpoints.push_back({d.log.back().seq, state_bytes(copy)});
  });
  complete_small_project(d);
  ASSERT_GT(checkpoints.size(), 4u);
  for (const auto& [seq, bytes] : checkpoints) {
    EXPECT_EQ(state_bytes(replay(d.log, seq)), bytes) << "seq " << seq;
  }
}

TEST(Replay, SnapshotPlusTailEqualsFullFold) {
  Driver d;
  complete_small_project(d);
  TempDir dir;
  std::span<const Event> all(d.log);
  for (std::size_t cut = 0; cut <= all.size(); ++cut) {
    State head = replay(all.subspan(0, cut));
    write_snapshot(dir / "snap.json", head);
    Snapshot snap = read_snapshot(dir / "snap.json");
    EXPECT_EQ(snap.as_of_seq, static_cast<std::int64_t>(cut));
    EXPECT_EQ(state_bytes(replay_from_snapshot(snap, all.subspan(cut))), state_bytes(d.state()))
        << "cut " << cut;
  }
}

TEST(Replay, SnapshotValueRoundTrip) {
  Driver d;
  complete_small_project(d);
  Snapshot snap{d.state().last_seq, d.state()};
  Snapshot back = snapshot_from_value(to_value(snap));
  EXPECT_EQ(back.as_of_seq, snap.as_of_seq);
  EXPECT_EQ(state_bytes(back.state), state_bytes(snap.state));
}

TEST(Replay, IdenticalRunsGiveIdenticalLogs) {
  Driver a;
  Driver b;
  complete_small_project(a);
  complete_small_project(b);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(encode_log_line(a.log[i]), encode_log_line(b.log[i]));
  }
}
