#include "microflow/deployer.hpp"

#include "microflow/codec.hpp"
#include "microflow/errors.hpp"
#include "microflow/metrics.hpp"
#include "microflow/service.hpp"

namespace microflow::deployer {

namespace {

Value function_entry(const FunctionSpec& f) {
  const Implementation& impl = *f.implementation;
  Value out = Value::object();
  out["params"] = to_value(f.params);
  out["returnType"] = to_string(f.return_type);
  out["kind"] = to_string(impl.kind);
  out["languageTag"] = impl.language_tag;
  out["version"] = impl.version;
  if (impl.table) out["table"] = to_value(*impl.table);
  if (impl.source) out["source"] = *impl.source;
  return out;
}

Value suite_entry(const State& s, const FunctionSpec& f) {
  Value::List out;
  for (BehaviorId bid : f.behaviors) {
    const Behavior& b = s.behavior(bid);
    if (b.state != BehaviorState::Passing) continue;
    Value item = Value::object();
    item["behaviorId"] = bid.str();
    item["statement"] = b.statement;
    item["assertions"] = to_value(s.test_of(b)->assertions);
    out.push_back(std::move(item));
  }
  return Value(std::move(out));
}

}  // namespace

Value build_bundle(const State& state, std::span<const Event> events, ProjectId pid) {
  const Project& project = state.project(pid);
  if (project.state != ProjectState::Complete) {
    fail(ErrorCode::NotComplete, pid.str() + " is not complete");
  }
  Value functions = Value::object();
  Value suites = Value::object();
  for (FunctionId fid : project.functions) {
    const FunctionSpec& f = state.function(fid);
    functions[f.name] = function_entry(f);
    suites[f.name] = suite_entry(state, f);
  }
  Value::List descriptor;
  for (const auto& e : project.spec.endpoints) {
    Value item = Value::object();
    item["method"] = to_string(e.method);
    item["path"] = e.path;
    item["function"] = e.name;
    item["requestSchema"] = to_value(e.request_schema);
    item["responseSchema"] = to_value(e.response_schema);
    descriptor.push_back(std::move(item));
  }

  std::int64_t created_from = 0;
  for (const auto& e : events) {
    if (e.seq > state.last_seq) break;
    created_from = e.seq;
  }

  Value bundle = Value::object();
  bundle["functions"] = std::move(functions);
  bundle["suites"] = std::move(suites);
  bundle["serviceDescriptor"] = Value(std::move(descriptor));
  bundle["metricsSnapshot"] = to_value(compute_metrics(
      events.subspan(0, static_cast<std::size_t>(created_from)), pid));
  Value manifest = Value::object();
  manifest["projectId"] = pid.str();
  manifest["projectName"] = project.spec.name;
  manifest["createdFromSeq"] = created_from;
  bundle["manifest"] = std::move(manifest);
  bundle["manifest"]["contentHash"] = content_hash(bundle);
  return bundle;
}

std::string content_hash(const Value& bundle) {
  Value copy = bundle;
  if (copy.get("manifest").is_object()) {
    copy["manifest"].as_object().erase("contentHash");
  }
  return sha256_hex(canonicalize(copy));
}

void verify_bundle(const Value& bundle) {
  if (!bundle.is_object() || !bundle.get("manifest").is_object() ||
      !bundle.at("manifest").get("contentHash").is_string()) {
    fail(ErrorCode::HashMismatch, "bundle has no content hash");
  }
  if (bundle.at("manifest").at("contentHash").as_string() != content_hash(bundle)) {
    fail(ErrorCode::HashMismatch, "bundle content does not match its hash");
  }
}

Value load_bundle(std::string_view bytes) {
  Value bundle = parse_json(bytes);
  verify_bundle(bundle);
  return bundle;
}

Value call_function(const Value& bundle, std::string_view name,
                    const std::vector<Value>& args) {
  const Value& functions = bundle.at("functions");
  if (!functions.contains(name)) {
    fail(ErrorCode::UnknownEndpoint, "no function " + std::string(name));
  }
  const Value& f = functions.at(name);
  if (f.at("kind").as_string() != "table") {
    fail(ErrorCode::UnsupportedKind,
         std::string(name) + " is " + f.at("languageTag").as_string() +
             " source; local serving evaluates tables only");
  }
  Table table = from_value<Table>(f.at("table"));
  if (args.size() != f.at("params").as_list().size()) {
    fail(ErrorCode::BadRequest, std::string(name) + " takes " +
                                    std::to_string(f.at("params").as_list().size()) +
                                    " arguments");
  }
  return table.lookup(args);
}

Value serve_local(const Value& bundle, std::string_view method, std::string_view path,
                  const std::vector<Value>& args) {
  verify_bundle(bundle);
  for (const auto& e : bundle.at("serviceDescriptor").as_list()) {
    if (e.at("method").as_string() == method && e.at("path").as_string() == path) {
      return call_function(bundle, e.at("function").as_string(), args);
    }
  }
  fail(ErrorCode::UnknownEndpoint, std::string(method) + " " + std::string(path));
}

}  // namespace microflow::deployer
