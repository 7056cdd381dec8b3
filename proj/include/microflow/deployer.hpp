#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "microflow/events.hpp"
#include "microflow/model.hpp"

namespace microflow::deployer {

/// Deployable bundle for a Complete project as a canonical document with
/// sections functions, manifest, metricsSnapshot, serviceDescriptor and
/// suites. Pure function of the log prefix. Throws NotComplete.
Value build_bundle(const State& state, std::span<const Event> events,
                   ProjectId project);

/// SHA-256 over the canonical bundle with manifest.contentHash removed.
std::string content_hash(const Value& bundle);

/// Throws HashMismatch unless the recorded hash matches the content.
void verify_bundle(const Value& bundle);

/// Parses and verifies bundle bytes. Throws BadRequest / HashMismatch.
Value load_bundle(std::string_view bytes);

/// Evaluates a bundled function. Throws UnknownEndpoint for an unknown
/// name and UnsupportedKind for non-table implementations.
Value call_function(const Value& bundle, std::string_view name,
                    const std::vector<Value>& args);

/// Routes an endpoint request to its function. Verifies the bundle first.
Value serve_local(const Value& bundle, std::string_view method,
                  std::string_view path, const std::vector<Value>& args);

}  // namespace microflow::deployer
