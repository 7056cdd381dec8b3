#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "microflow/events.hpp"
#include "microflow/model.hpp"

namespace microflow {

class Engine;

namespace conflicts {

/// A pair of assertions that demand different results for the same input.
/// `a` always orders before `b`.
struct Contradiction {
  AssertionRef a;
  AssertionRef b;
  std::vector<Value> args;
  Value expected_a;
  Value expected_b;

  friend bool operator==(const Contradiction&, const Contradiction&) = default;
};

/// Assertion pairs from distinct behaviors with canonically equal args and
/// canonically unequal expected values, sorted by (a, b).
std::vector<Contradiction> find_contradictions(std::span<const ActiveAssertion> assertions);

/// All contradictions among the function's active assertions.
std::vector<Contradiction> detect(const State& state, FunctionId function);

/// Whether `conflict`'s witness input still yields unequal results between
/// its two behaviors' current tests.
bool witness_contradicts(const State& state, const Conflict& conflict);

/// Opens one Conflict per behavior pair that contradicts and has no Open
/// conflict yet (the lowest witness is recorded). Returns the new ids.
std::vector<ConflictId> open_new(Txn& txn, FunctionId function);

/// Queues the ResolveConflict microtask for an Open, unticketed conflict.
/// Throws AlreadyTicketed / UnknownConflict.
MicrotaskId open_resolution(Txn& txn, ConflictId conflict);

/// Resolves Open, unticketed conflicts whose witness no longer contradicts.
void resolve_stale(Txn& txn, FunctionId function);

/// Tickets the oldest unticketed Open conflict when the function has no
/// live ResolveConflict microtask. At most one ticket per function is live.
void ticket_next(Txn& txn, FunctionId function);

/// Runs the full detection step after test artifacts changed: stale
/// conflicts resolved, new ones opened, next one ticketed. Returns the
/// newly opened conflicts.
std::vector<ConflictId> reconcile(Txn& txn, FunctionId function);

struct Resolution {
  std::map<BehaviorId, std::string> statements;
  std::map<BehaviorId, std::vector<Assertion>> tests;
};

/// Stores the edits as new artifact versions and resolves `conflict` when
/// its witness no longer contradicts; any other contradictions found are
/// opened in the same commit. Throws UnresolvedContradiction when the edits
/// leave the witness contradictory, UnknownConflict when it is not Open.
void apply_resolution(Txn& txn, ConflictId conflict, const Resolution& edits,
                      WorkerId author);

bool has_open_conflict(const State& state, FunctionId function);

}  // namespace conflicts
}  // namespace microflow
