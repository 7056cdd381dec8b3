#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "microflow/codec.hpp"
#include "microflow/engine.hpp"
#include "microflow/errors.hpp"
#include "microflow/value.hpp"

namespace microflow::testing {

#define EXPECT_DOMAIN_ERROR(stmt, error_code)                                   \
  do {                                                                          \
    try {                                                                       \
      stmt;                                                                     \
      ADD_FAILURE() << "expected " << ::microflow::error_name(error_code);      \
    } catch (const ::microflow::DomainError& e__) {                             \
      EXPECT_EQ(::microflow::error_name(e__.code()),                            \
                ::microflow::error_name(error_code))                            \
          << e__.what();                                                        \
    }                                                                           \
  } while (0)

inline Value json(std::string_view text) { return parse_json(text); }

inline Value endpoint(const std::string& method, const std::string& path,
                      const std::string& name, const std::vector<std::string>& params) {
  Value e = Value::object();
  e["method"] = method;
  e["path"] = path;
  e["name"] = name;
  e["description"] = name + " endpoint";
  Value::List schema;
  for (const auto& p : params) {
    Value f = Value::object();
    f["name"] = p;
    f["type"] = "number";
    schema.push_back(std::move(f));
  }
  e["requestSchema"] = Value(std::move(schema));
  e["responseSchema"] = Value::list();
  return e;
}

inline ProjectSpec spec_of(std::initializer_list<Value> endpoints) {
  Value v = Value::object();
  v["name"] = "demo";
  Value::List list(endpoints);
  v["endpoints"] = Value(std::move(list));
  return parse_project_spec(v);
}

inline Value assertion(std::vector<Value> args, Value expected) {
  Value a = Value::object();
  a["args"] = Value(Value::List(std::move(args)));
  a["expected"] = std::move(expected);
  return a;
}

inline Value identify(const std::string& statement) {
  Value b = Value::object();
  b["kind"] = "IdentifyBehavior";
  b["statement"] = statement;
  return b;
}

inline Value no_more() {
  Value b = Value::object();
  b["kind"] = "IdentifyBehavior";
  b["noMoreBehaviors"] = true;
  return b;
}

inline Value write_test(std::vector<Value> assertions) {
  Value b = Value::object();
  b["kind"] = "WriteTest";
  b["assertions"] = Value(Value::List(std::move(assertions)));
  return b;
}

/// Table implementation body from (args, value) rows.
inline Value table_impl(const std::vector<std::pair<std::vector<Value>, Value>>& rows,
                        Value fallback = Value()) {
  Value entries = Value::list();
  for (const auto& [args, value] : rows) {
    Value e = Value::object();
    e["args"] = Value(Value::List(args));
    e["value"] = value;
    entries.push_back(std::move(e));
  }
  Value table = Value::object();
  table["entries"] = std::move(entries);
  table["default"] = std::move(fallback);
  Value impl = Value::object();
  impl["kind"] = "table";
  impl["table"] = std::move(table);
  return impl;
}

inline Value implement(Value impl, Value pseudo_calls = Value::list()) {
  Value b = Value::object();
  b["kind"] = "ImplementBehavior";
  b["implementation"] = std::move(impl);
  b["pseudoCalls"] = std::move(pseudo_calls);
  return b;
}

/// Drives an engine directly, one worker action at a time.
class Driver {
 public:
  explicit Driver(EngineConfig config = {}) : engine(std::move(config)) {
    engine.set_sink([this](std::span<const Event> events) {
      log.insert(log.end(), events.begin(), events.end());
    });
  }

  WorkerId worker(const std::string& handle = "w") {
    return engine.register_worker(now, handle);
  }

  /// Fetches and requires a microtask of `kind`.
  MicrotaskId take(WorkerId w, MicrotaskKind kind) {
    auto a = engine.fetch(now, w);
    if (!a) {
      ADD_FAILURE() << "no work for " << w.str();
      return {};
    }
    const Microtask& m = engine.state().microtask(a->microtask);
    EXPECT_EQ(to_string(m.kind), to_string(kind));
    return a->microtask;
  }

  SubmissionResult submit(WorkerId w, MicrotaskId m, const Value& body) {
    return engine.submit(now, w, m, body);
  }

  const State& state() const { return engine.state(); }

  Engine engine;
  std::vector<Event> log;
  Millis now = 1'000;
};

inline std::size_t count_events(const std::vector<Event>& log, EventKind kind) {
  std::size_t n = 0;
  for (const auto& e : log) n += e.kind == kind;
  return n;
}

class TempDir {
 public:
  TempDir() {
    std::string pattern =
        (std::filesystem::temp_directory_path() / "microflow-test-XXXXXX").string();
    path_ = ::mkdtemp(pattern.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random value of bounded depth drawn from a small alphabet so that
/// collisions (structurally equal pairs) are common.
inline Value random_value(std::mt19937_64& rng, int depth = 2) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 5 : 3);
  switch (pick(rng)) {
    case 0: return Value();
    case 1: return Value(std::uniform_int_distribution<int>(0, 1)(rng) == 1);
    case 2: return Value(std::uniform_int_distribution<int>(-2, 2)(rng) * 0.5);
    case 3: {
      static const char* kWords[] = {"", "a", "b", "ab"};
      return Value(kWords[std::uniform_int_distribution<int>(0, 3)(rng)]);
    }
    case 4: {
      Value::List l;
      int n = std::uniform_int_distribution<int>(0, 2)(rng);
      for (int i = 0; i < n; ++i) l.push_back(random_value(rng, depth - 1));
      return Value(std::move(l));
    }
    default: {
      Value::Object o;
      int n = std::uniform_int_distribution<int>(0, 2)(rng);
      static const char* kKeys[] = {"x", "y", "z"};
      for (int i = 0; i < n; ++i) {
        o[kKeys[std::uniform_int_distribution<int>(0, 2)(rng)]] =
            random_value(rng, depth - 1);
      }
      return Value(std::move(o));
    }
  }
}

}  // namespace microflow::testing
