#pragma once

#include "microflow/model.hpp"
#include "microflow/value.hpp"

namespace microflow {

// Value encodings of the domain types. The same shapes appear in the event
// log, in snapshots, in bundles and on the wire. Decoders throw
// DomainError(BadRequest) on malformed input.

Value to_value(const Field& v);
Value to_value(const std::vector<Field>& v);
Value to_value(const EndpointDescription& v);
Value to_value(const ProjectSpec& v);
Value to_value(const Assertion& v);
Value to_value(const std::vector<Assertion>& v);
Value to_value(const PseudoCall& v);
Value to_value(const Table& v);
Value to_value(const Implementation& v);
Value to_value(const FailureEntry& v);
Value to_value(const FailureReport& v);
Value to_value(const FunctionSpec& v);
Value to_value(const Behavior& v);
Value to_value(const TestArtifact& v);
Value to_value(const Microtask& v);
Value to_value(const Worker& v);
Value to_value(const Conflict& v);
Value to_value(const Project& v);
Value to_value(const State& v);

template <class T>
T from_value(const Value& v);

template <> Field from_value<Field>(const Value& v);
template <> std::vector<Field> from_value<std::vector<Field>>(const Value& v);
template <> EndpointDescription from_value<EndpointDescription>(const Value& v);
template <> ProjectSpec from_value<ProjectSpec>(const Value& v);
template <> Assertion from_value<Assertion>(const Value& v);
template <> std::vector<Assertion> from_value<std::vector<Assertion>>(const Value& v);
template <> PseudoCall from_value<PseudoCall>(const Value& v);
template <> Table from_value<Table>(const Value& v);
template <> Implementation from_value<Implementation>(const Value& v);
template <> FailureEntry from_value<FailureEntry>(const Value& v);
template <> FailureReport from_value<FailureReport>(const Value& v);
template <> FunctionSpec from_value<FunctionSpec>(const Value& v);
template <> Behavior from_value<Behavior>(const Value& v);
template <> TestArtifact from_value<TestArtifact>(const Value& v);
template <> Microtask from_value<Microtask>(const Value& v);
template <> Worker from_value<Worker>(const Value& v);
template <> Conflict from_value<Conflict>(const Value& v);
template <> Project from_value<Project>(const Value& v);
template <> State from_value<State>(const Value& v);

std::vector<Value> value_list(const Value& v);
Value to_value(const std::vector<Value>& values);

template <char P>
Value to_value(Id<P> id) {
  return Value(id.str());
}

template <char P>
Id<P> id_from(const Value& v) {
  return Id<P>::parse(v.as_string());
}

/// Rebuilds the derived ready-queue index from microtask states.
void rebuild_queue(State& state);

}  // namespace microflow
