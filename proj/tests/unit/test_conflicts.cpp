#include "microflow/conflicts.hpp"
#include "microflow/scheduler.hpp"
#include "support.hpp"

using namespace microflow;
using namespace microflow::testing;

namespace {

struct Pool {
  std::vector<Assertion> storage;
  std::vector<ActiveAssertion> active;
};

Pool make_pool(const std::vector<std::tuple<std::uint64_t, int, int>>& rows) {
  Pool p;
  p.storage.reserve(rows.size());
  std::map<std::uint64_t, std::size_t> next_index;
  for (auto [behavior, arg, expected] : rows) {
    p.storage.push_back({{Value(arg)}, Value(expected)});
    (void)behavior;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::uint64_t b = std::get<0>(rows[i]);
    p.active.push_back({{BehaviorId{b}, next_index[b]++}, &p.storage[i]});
  }
  return p;
}

// Conflict fixture: one function f(x), a worker that keeps the first
// implement microtask in flight so tests accumulate without being built.
class ConflictFlow : public ::testing::Test {
 protected:
  void SetUp() override {
    d.engine.create_project(d.now, spec_of({endpoint("GET", "/f", "f", {"x"})}));
    author = d.worker("author");
    holder = d.worker("holder");
  }

  BehaviorId add(const std::string& statement, std::vector<Value> assertions) {
    MicrotaskId identify_task = d.take(author, MicrotaskKind::IdentifyBehavior);
    d.submit(author, identify_task, identify(statement));
    BehaviorId b{d.state().next_behavior - 1};
    MicrotaskId test_task = d.take(author, MicrotaskKind::WriteTest);
    last = d.submit(author, test_task, write_test(std::move(assertions)));
    if (!holding) {
      held = d.take(holder, MicrotaskKind::ImplementBehavior);
      holding = true;
    }
    return b;
  }

  std::vector<const Conflict*> open() const {
    std::vector<const Conflict*> out;
    for (const auto& [_, c] : d.state().conflicts) {
      if (c.state == ConflictState::Open) out.push_back(&c);
    }
    return out;
  }

  Driver d;
  WorkerId author;
  WorkerId holder;
  MicrotaskId held;
  bool holding = false;
  SubmissionResult last;
};

Value resolve_body(std::map<BehaviorId, std::vector<Value>> tests) {
  Value body = Value::object();
  body["kind"] = "ResolveConflict";
  Value t = Value::object();
  for (auto& [bid, assertions] : tests) t[bid.str()] = Value(Value::List(assertions));
  body["tests"] = std::move(t);
  return body;
}

}  // namespace

TEST(Detect, UnequalExpectedIsOneConflict) {
  Pool p = make_pool({{1, 1, 2}, {2, 1, 3}});
  auto found = conflicts::find_contradictions(p.active);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].a.behavior, BehaviorId{1});
  EXPECT_EQ(found[0].b.behavior, BehaviorId{2});
  EXPECT_EQ(found[0].expected_a, Value(2));
  EXPECT_EQ(found[0].expected_b, Value(3));
}

TEST(Detect, EqualExpectedIsNoConflict) {
  Pool p = make_pool({{1, 1, 2}, {2, 1, 2}});
  EXPECT_TRUE(conflicts::find_contradictions(p.active).empty());
}

TEST(Detect, SameBehaviorPairsAreIgnored) {
  Pool p = make_pool({{1, 1, 2}, {1, 1, 3}});
  EXPECT_TRUE(conflicts::find_contradictions(p.active).empty());
}

TEST(Detect, RandomSetsMatchPairwiseOracle) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::vector<std::tuple<std::uint64_t, int, int>> rows;
    int n = std::uniform_int_distribution<int>(0, 100)(rng);
    for (int i = 0; i < n; ++i) {
      rows.emplace_back(std::uniform_int_distribution<int>(1, 10)(rng),
                        std::uniform_int_distribution<int>(0, 15)(rng),
                        std::uniform_int_distribution<int>(0, 2)(rng));
    }
    Pool p = make_pool(rows);
    std::set<std::pair<AssertionRef, AssertionRef>> oracle;
    for (std::size_t i = 0; i < p.active.size(); ++i) {
      for (std::size_t j = 0; j < p.active.size(); ++j) {
        const auto& x = p.active[i];
        const auto& y = p.active[j];
        if (x.ref.behavior == y.ref.behavior || !(x.ref < y.ref)) continue;
        if (x.assertion->args[0] == y.assertion->args[0] &&
            !(x.assertion->expected == y.assertion->expected)) {
          oracle.insert({x.ref, y.ref});
        }
      }
    }
    std::set<std::pair<AssertionRef, AssertionRef>> got;
    for (const auto& c : conflicts::find_contradictions(p.active)) got.insert({c.a, c.b});
    EXPECT_EQ(got, oracle) << "round " << round;
  }
}

TEST_F(ConflictFlow, ContradictingTestOpensConflictAndTicket) {
  BehaviorId b1 = add("b1 says two", {assertion({Value(1)}, Value(2))});
  BehaviorId b2 = add("b2 says three", {assertion({Value(1)}, Value(3))});

  auto c = open();
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(d.state().behavior(b1).state, BehaviorState::Conflicted);
  EXPECT_EQ(d.state().behavior(b2).state, BehaviorState::Conflicted);
  ASSERT_TRUE(c[0]->ticket.has_value());
  ASSERT_EQ(last.spawned.size(), 1u);
  EXPECT_EQ(last.spawned[0], *c[0]->ticket);
  EXPECT_EQ(d.state().microtask(last.spawned[0]).kind, MicrotaskKind::ResolveConflict);
}

TEST_F(ConflictFlow, SecondTicketIsRejected) {
  add("b1", {assertion({Value(1)}, Value(2))});
  add("b2", {assertion({Value(1)}, Value(3))});
  ConflictId id = open()[0]->id;
  Txn txn(d.state(), d.now);
  EXPECT_DOMAIN_ERROR(conflicts::open_resolution(txn, id), ErrorCode::AlreadyTicketed);
}

TEST_F(ConflictFlow, ImplementIsWithheldWhileConflictOpen) {
  add("b1", {assertion({Value(1)}, Value(2))});
  add("b3", {assertion({Value(7)}, Value(7))});
  add("b2", {assertion({Value(1)}, Value(3))});
  ASSERT_EQ(open().size(), 1u);
  // Free the writer slot; the queued implement must stay withheld.
  d.submit(holder, held, implement(table_impl({{{Value(1)}, Value(2)}})));

  WorkerId other = d.worker("other");
  for (int i = 0; i < 5; ++i) {
    auto a = d.engine.fetch(d.now, other);
    if (!a) break;
    EXPECT_NE(d.state().microtask(a->microtask).kind, MicrotaskKind::ImplementBehavior);
    d.engine.skip(d.now, other, a->microtask);
  }
}

TEST_F(ConflictFlow, EditingOneSideResolvesAndRequeuesImplement) {
  BehaviorId b1 = add("b1", {assertion({Value(1)}, Value(2))});
  BehaviorId b2 = add("b2", {assertion({Value(1)}, Value(3))});
  MicrotaskId ticket = d.take(author, MicrotaskKind::ResolveConflict);
  SubmissionResult r = d.submit(author, ticket, resolve_body({{b2, {assertion({Value(1)}, Value(2))}}}));

  EXPECT_TRUE(open().empty());
  EXPECT_EQ(d.state().behavior(b1).state, BehaviorState::Tested);
  EXPECT_EQ(d.state().behavior(b2).state, BehaviorState::Tested);
  EXPECT_EQ(d.state().tests.at(*d.state().behavior(b2).test).version, 2);
  ASSERT_EQ(r.spawned.size(), 1u);
  EXPECT_EQ(d.state().microtask(r.spawned[0]).kind, MicrotaskKind::ImplementBehavior);
}

TEST_F(ConflictFlow, NoOpEditIsUnresolvedAndChangesNothing) {
  add("b1", {assertion({Value(1)}, Value(2))});
  add("b2", {assertion({Value(1)}, Value(3))});
  MicrotaskId ticket = d.take(author, MicrotaskKind::ResolveConflict);
  std::string before = canonicalize(to_value(d.state()));
  std::size_t log_size = d.log.size();
  Value body = Value::object();
  body["kind"] = "ResolveConflict";
  EXPECT_DOMAIN_ERROR(d.submit(author, ticket, body), ErrorCode::UnresolvedContradiction);
  EXPECT_EQ(canonicalize(to_value(d.state())), before);
  EXPECT_EQ(d.log.size(), log_size);
}

TEST_F(ConflictFlow, EditingAnUnrelatedBehaviorIsRejected) {
  BehaviorId b3 = add("b3", {assertion({Value(9)}, Value(9))});
  add("b1", {assertion({Value(1)}, Value(2))});
  add("b2", {assertion({Value(1)}, Value(3))});
  MicrotaskId ticket = d.take(author, MicrotaskKind::ResolveConflict);
  EXPECT_DOMAIN_ERROR(
      d.submit(author, ticket, resolve_body({{b3, {assertion({Value(1)}, Value(3))}}})),
      ErrorCode::UnknownBehavior);
}

TEST_F(ConflictFlow, ResolutionIntroducingNewContradictionOpensItInSameCommit) {
  BehaviorId b1 = add("b1", {assertion({Value(1)}, Value(2))});
  BehaviorId b3 = add("b3", {assertion({Value(5)}, Value(1))});
  BehaviorId b2 = add("b2", {assertion({Value(1)}, Value(3))});
  ConflictId first = open()[0]->id;
  MicrotaskId ticket = d.take(author, MicrotaskKind::ResolveConflict);
  std::size_t before = d.log.size();
  d.submit(author, ticket,
           resolve_body({{b2, {assertion({Value(1)}, Value(2)), assertion({Value(5)}, Value(9))}}}));

  EXPECT_EQ(d.state().conflict(first).state, ConflictState::Resolved);
  auto now_open = open();
  ASSERT_EQ(now_open.size(), 1u);
  EXPECT_EQ(now_open[0]->a.behavior, b3 < b2 ? b3 : b2);
  EXPECT_EQ(now_open[0]->args, std::vector<Value>{Value(5)});
  EXPECT_EQ(d.state().behavior(b1).state, BehaviorState::Tested);
  EXPECT_EQ(d.state().behavior(b2).state, BehaviorState::Conflicted);

  // Resolution, new conflict and new ticket land in one commit.
  std::vector<EventKind> kinds;
  for (std::size_t i = before; i < d.log.size(); ++i) kinds.push_back(d.log[i].kind);
  auto resolved = std::find(kinds.begin(), kinds.end(), EventKind::ConflictResolved);
  auto opened = std::find(kinds.begin(), kinds.end(), EventKind::ConflictOpened);
  ASSERT_NE(resolved, kinds.end());
  ASSERT_NE(opened, kinds.end());
  EXPECT_LT(resolved, opened);
  std::size_t commit_ends = 0;
  for (std::size_t i = before; i < d.log.size(); ++i) commit_ends += d.log[i].commit_end;
  EXPECT_EQ(commit_ends, 1u);
}

TEST_F(ConflictFlow, EveryOpenConflictWitnessStillContradicts) {
  add("b1", {assertion({Value(1)}, Value(2)), assertion({Value(2)}, Value(2))});
  add("b2", {assertion({Value(1)}, Value(3))});
  WorkerId resolver = d.worker("resolver");
  d.take(resolver, MicrotaskKind::ResolveConflict);
  add("b3", {assertion({Value(2)}, Value(4))});
  ASSERT_EQ(open().size(), 2u);
  for (const Conflict* c : open()) {
    EXPECT_TRUE(conflicts::witness_contradicts(d.state(), *c));
  }
  // Completeness: every contradiction has an open conflict for its pair.
  for (const auto& x : conflicts::detect(d.state(), FunctionId{1})) {
    bool covered = false;
    for (const Conflict* c : open()) {
      covered = covered || (c->a.behavior == x.a.behavior && c->b.behavior == x.b.behavior);
    }
    EXPECT_TRUE(covered);
  }
  // One live ticket per function.
  std::size_t live_tickets = 0;
  for (const auto& [_, m] : d.state().microtasks) {
    live_tickets += m.kind == MicrotaskKind::ResolveConflict && !m.terminal();
  }
  EXPECT_EQ(live_tickets, 1u);
}
