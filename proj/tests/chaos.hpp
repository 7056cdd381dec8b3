#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "microflow/codec.hpp"
#include "microflow/engine.hpp"
#include "microflow/errors.hpp"
#include "microflow/event_store.hpp"

namespace microflow::testing {

/// Tallies from one randomized interleaving.
struct ChaosStats {
  int operations = 0;
  int fetches = 0;
  int submits = 0;
  int rejected = 0;
  int skips = 0;
  int timeouts = 0;
  int transition_violations = 0;
  int double_assignments = 0;
  int writer_overlaps = 0;
  int priority_errors = 0;
  int replay_mismatches = 0;
  std::vector<std::string> notes;
};

/// Random fetch/submit/skip/timeout interleavings over a two-function
/// project. Workers submit bodies that are sometimes wrong, sometimes
/// stale, sometimes for the wrong kind; every step is followed by an
/// independent invariant check.
class Chaos {
 public:
  Chaos(std::uint64_t seed, int workers) : rng_(seed), engine_(make_config()) {
    engine_.set_sink([this](std::span<const Event> events) {
      log_.insert(log_.end(), events.begin(), events.end());
    });
    Value spec = parse_json(
        R"({"name":"chaos","endpoints":[)"
        R"({"method":"GET","path":"/f","name":"f","requestSchema":[{"name":"x","type":"number"}]},)"
        R"({"method":"POST","path":"/g","name":"g","requestSchema":[{"name":"x","type":"number"}]}]})");
    guard([&] { engine_.create_project(now_, parse_project_spec(spec)); });
    for (int i = 0; i < workers; ++i) {
      guard([&] { workers_.push_back(engine_.register_worker(now_, "w" + std::to_string(i))); });
    }
  }

  ChaosStats run(int operations) {
    for (int i = 0; i < operations; ++i) {
      step();
      stats_.operations++;
      check_invariants();
    }
    check_replay();
    return stats_;
  }

 private:
  static EngineConfig make_config() {
    EngineConfig c;
    c.scheduler.lease_seconds = 60;
    c.scheduler.max_attempts = 3;
    c.scheduler.max_skips_before_flag = 2;
    return c;
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  template <class Fn>
  void guard(Fn&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      if (e.code() == ErrorCode::TransitionViolation) {
        stats_.transition_violations++;
        stats_.notes.push_back(e.what());
      } else {
        stats_.rejected++;
      }
    }
  }

  const State& s() const { return engine_.state(); }

  void step() {
    now_ += pick(0, 20) * 1000;
    WorkerId w = workers_[static_cast<std::size_t>(pick(0, static_cast<int>(workers_.size()) - 1))];
    const Worker& worker = s().worker(w);
    int action = pick(0, 9);
    if (action == 0) {
      now_ += 61'000;  // lets every live lease lapse
      guard([&] { stats_.timeouts += static_cast<int>(engine_.reclaim(now_).size()); });
      return;
    }
    if (!worker.assigned) {
      fetch(w);
      return;
    }
    MicrotaskId held = *worker.assigned;
    if (action == 1) {
      guard([&] {
        engine_.skip(now_, w, held);
        stats_.skips++;
      });
      return;
    }
    if (action == 2) {
      // Somebody else tries to act on it.
      WorkerId other = workers_[static_cast<std::size_t>(pick(0, static_cast<int>(workers_.size()) - 1))];
      guard([&] { engine_.submit(now_, other, held, body_for(held)); });
      return;
    }
    if (action == 3) {
      Value wrong = body_for(held);
      wrong["kind"] = wrong.at("kind").as_string() == "WriteTest" ? "IdentifyBehavior"
                                                                  : "WriteTest";
      guard([&] { engine_.submit(now_, w, held, wrong); });
      return;
    }
    guard([&] {
      stats_.submits++;
      engine_.submit(now_, w, held, body_for(held));
    });
    if (chance(0.2)) {
      // Resubmitting a finished microtask must be refused.
      guard([&] { engine_.submit(now_, w, held, body_for(held)); });
    }
  }

  void fetch(WorkerId w) {
    guard([&] { engine_.reclaim(now_); });
    std::optional<MicrotaskId> expected = oracle_pick();
    guard([&] {
      auto a = engine_.fetch(now_, w);
      stats_.fetches++;
      std::optional<MicrotaskId> got;
      if (a) got = a->microtask;
      if (got != expected) {
        stats_.priority_errors++;
        stats_.notes.push_back("fetch returned " + (got ? got->str() : "none") +
                               ", oracle " + (expected ? expected->str() : "none"));
      }
    });
  }

  // Independent selection rule, recomputed from microtask records alone.
  std::optional<MicrotaskId> oracle_pick() const {
    static const std::map<MicrotaskKind, int> kRank = {
        {MicrotaskKind::DebugFailure, 0},
        {MicrotaskKind::ResolveConflict, 1},
        {MicrotaskKind::ImplementBehavior, 2},
        {MicrotaskKind::WriteTest, 3},
        {MicrotaskKind::IdentifyBehavior, 4}};
    std::optional<std::pair<std::pair<int, std::uint64_t>, MicrotaskId>> best;
    for (const auto& [id, m] : s().microtasks) {
      if (m.state != MicrotaskState::Queued) continue;
      bool writer = m.kind == MicrotaskKind::ImplementBehavior ||
                    m.kind == MicrotaskKind::DebugFailure;
      if (writer) {
        bool busy = false;
        for (const auto& [_, other] : s().microtasks) {
          busy = busy || (other.state == MicrotaskState::Assigned &&
                          other.function == m.function &&
                          (other.kind == MicrotaskKind::ImplementBehavior ||
                           other.kind == MicrotaskKind::DebugFailure));
        }
        for (const auto& [_, c] : s().conflicts) {
          busy = busy || (c.function == m.function && c.state == ConflictState::Open);
        }
        if (busy) continue;
      }
      std::pair<int, std::uint64_t> key{kRank.at(m.kind), m.enqueue_seq};
      if (!best || key < best->first) best = {{key, id}};
    }
    if (!best) return std::nullopt;
    return best->second;
  }

  Value body_for(MicrotaskId id) {
    const Microtask& m = s().microtask(id);
    const FunctionSpec& f = s().function(m.function);
    Value body = Value::object();
    body["kind"] = to_string(m.kind);
    switch (m.kind) {
      case MicrotaskKind::IdentifyBehavior:
        if (!f.behaviors.empty() && chance(0.4)) {
          body["noMoreBehaviors"] = true;
        } else {
          // Small statement pool so duplicates get exercised.
          body["statement"] = f.name + " behaves " + std::to_string(pick(0, 5));
        }
        break;
      case MicrotaskKind::WriteTest: {
        Value::List assertions;
        int n = pick(chance(0.05) ? 0 : 1, 2);
        for (int i = 0; i < n; ++i) {
          Value a = Value::object();
          Value::List args{Value(pick(0, 3))};
          if (chance(0.03)) args.push_back(Value(0));  // arity error
          a["args"] = Value(std::move(args));
          a["expected"] = pick(0, 1);
          assertions.push_back(std::move(a));
        }
        body["assertions"] = Value(std::move(assertions));
        break;
      }
      case MicrotaskKind::ImplementBehavior:
        body["implementation"] = table_from_suite(f, chance(0.7));
        if (chance(0.1)) {
          body["pseudoCalls"] = parse_json(
              R"([{"name":"helper","params":[{"name":"x","type":"number"}],"returnType":"number"}])");
        }
        break;
      case MicrotaskKind::DebugFailure: {
        int choice = pick(0, 9);
        std::optional<BehaviorId> failing;
        if (f.open_failure && !f.open_failure->failures.empty()) {
          failing = f.open_failure->failures.front().behavior;
        }
        if (choice < 7 || !failing) {
          body["outcome"] = "fix";
          body["implementation"] = table_from_suite(f, choice < 6);
        } else {
          body["outcome"] = choice == 7 ? "disputeTest" : "disputeBehavior";
          body["behaviorId"] = failing->str();
          body["reason"] = "disagree";
        }
        break;
      }
      case MicrotaskKind::ResolveConflict: {
        const Conflict& c = s().conflict(*m.conflict);
        Value tests = Value::object();
        if (chance(0.85)) {
          // Rewrite b's assertions at the witness to agree with a.
          const Behavior& b = s().behavior(c.b.behavior);
          Value::List rewritten;
          if (const TestArtifact* t = s().test_of(b)) {
            for (const auto& a : t->assertions) {
              Value v = to_value(a);
              if (canonical_args(a.args) == canonical_args(c.args)) v["expected"] = c.expected_a;
              rewritten.push_back(std::move(v));
            }
          }
          tests[c.b.behavior.str()] = Value(std::move(rewritten));
        }
        body["tests"] = std::move(tests);
        break;
      }
    }
    return body;
  }

  // A table agreeing with the first active assertion per input, or noise.
  Value table_from_suite(const FunctionSpec& f, bool faithful) {
    Value entries = Value::list();
    std::set<std::string> seen;
    for (const auto& a : active_assertions(s(), f.id)) {
      std::string key = canonical_args(a.assertion->args);
      if (!seen.insert(key).second) continue;
      Value e = Value::object();
      e["args"] = to_value(a.assertion->args);
      e["value"] = faithful ? a.assertion->expected : Value(pick(0, 1));
      entries.push_back(std::move(e));
    }
    Value table = Value::object();
    table["entries"] = std::move(entries);
    table["default"] = Value();
    Value impl = Value::object();
    impl["kind"] = "table";
    impl["table"] = std::move(table);
    return impl;
  }

  void check_invariants() {
    std::map<MicrotaskId, int> holders;
    for (const auto& [wid, w] : s().workers) {
      if (!w.assigned) continue;
      holders[*w.assigned]++;
      const Microtask& m = s().microtask(*w.assigned);
      if (m.state != MicrotaskState::Assigned || m.assignee != wid) {
        stats_.double_assignments++;
        stats_.notes.push_back(wid.str() + " slot disagrees with " + m.id.str());
      }
    }
    std::map<FunctionId, int> writers;
    for (const auto& [id, m] : s().microtasks) {
      if (m.state == MicrotaskState::Assigned) {
        if (holders[id] != 1) {
          stats_.double_assignments++;
          stats_.notes.push_back(id.str() + " held by " + std::to_string(holders[id]));
        }
        if (m.kind == MicrotaskKind::ImplementBehavior || m.kind == MicrotaskKind::DebugFailure) {
          writers[m.function]++;
        }
      }
    }
    for (const auto& [fid, n] : writers) {
      if (n > 1) {
        stats_.writer_overlaps++;
        stats_.notes.push_back(fid.str() + " has " + std::to_string(n) + " writers");
      }
    }
  }

  void check_replay() {
    try {
      if (state_bytes(replay(log_)) != state_bytes(s())) stats_.replay_mismatches++;
    } catch (const DomainError& e) {
      stats_.replay_mismatches++;
      stats_.notes.push_back(std::string("replay: ") + e.what());
    }
  }

  std::mt19937_64 rng_;
  Engine engine_;
  std::vector<Event> log_;
  std::vector<WorkerId> workers_;
  Millis now_ = 1'000;
  ChaosStats stats_;
};

}  // namespace microflow::testing
