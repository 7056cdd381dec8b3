#include "microflow/deployer.hpp"
#include "support.hpp"

using namespace microflow;
using namespace microflow::testing;

namespace {

// listTodos returns the empty list; addTodo echoes a fixed todo for "milk".
struct Finished {
  Finished() {
    project = d.engine.create_project(
        d.now, spec_of({endpoint("GET", "/todos", "listTodos", {}),
                        endpoint("POST", "/todos", "addTodo", {"title"})}));
    WorkerId w = d.worker("w");
    Value todo = json(R"({"done":false,"id":1,"title":"milk"})");

    d.submit(w, d.take(w, MicrotaskKind::IdentifyBehavior), identify("an empty store lists nothing"));
    d.submit(w, d.take(w, MicrotaskKind::WriteTest), write_test({assertion({}, Value::list())}));
    d.submit(w, d.take(w, MicrotaskKind::ImplementBehavior),
             implement(table_impl({{{}, Value::list()}}, Value::list())));
    d.submit(w, d.take(w, MicrotaskKind::IdentifyBehavior), identify("a title creates a todo"));
    d.submit(w, d.take(w, MicrotaskKind::WriteTest),
             write_test({assertion({Value("milk")}, todo)}));
    d.submit(w, d.take(w, MicrotaskKind::ImplementBehavior),
             implement(table_impl({{{Value("milk")}, todo}}, json(R"({"error":"bad"})"))));
    while (d.state().project(project).state != ProjectState::Complete) {
      auto a = d.engine.fetch(d.now, w);
      if (!a) break;
      d.submit(w, a->microtask, no_more());
    }
  }
  Value bundle() const { return deployer::build_bundle(d.state(), d.log, project); }

  Driver d;
  ProjectId project;
};

}  // namespace

TEST(Deployer, IncompleteProjectHasNoBundle) {
  Driver d;
  ProjectId p = d.engine.create_project(d.now, spec_of({endpoint("GET", "/f", "f", {"x"})}));
  EXPECT_DOMAIN_ERROR(deployer::build_bundle(d.state(), d.log, p), ErrorCode::NotComplete);
}

TEST(Deployer, BundleSectionsDescribeTheProject) {
  Finished f;
  ASSERT_EQ(f.d.state().project(f.project).state, ProjectState::Complete);
  Value b = f.bundle();
  for (const char* section :
       {"functions", "manifest", "metricsSnapshot", "serviceDescriptor", "suites"}) {
    EXPECT_TRUE(b.contains(section)) << section;
  }
  EXPECT_EQ(b.at("serviceDescriptor").as_list().size(), 2u);
  EXPECT_EQ(b.at("functions").at("addTodo").at("kind").as_string(), "table");
  EXPECT_EQ(b.at("suites").at("addTodo").as_list().size(), 1u);
  EXPECT_EQ(b.at("manifest").at("createdFromSeq").as_int(), f.d.state().last_seq);
  EXPECT_EQ(b.at("metricsSnapshot").at("functionsImplemented").as_int(), 2);
  EXPECT_EQ(b.at("manifest").at("contentHash").as_string().size(), 64u);
}

TEST(Deployer, DoubleBuildIsByteIdentical) {
  Finished f;
  Value a = f.bundle();
  Value b = f.bundle();
  EXPECT_EQ(canonicalize(a), canonicalize(b));
  EXPECT_EQ(deployer::content_hash(a), deployer::content_hash(b));
  // A later unrelated event does not change what the prefix builds.
  std::vector<Event> longer = f.d.log;
  Event extra;
  extra.seq = longer.back().seq + 1;
  extra.kind = EventKind::WorkerRegistered;
  extra.payload = json(R"({"workerId":"w9"})");
  longer.push_back(extra);
  EXPECT_EQ(canonicalize(deployer::build_bundle(f.d.state(), longer, f.project)),
            canonicalize(a));
}

TEST(Deployer, TamperedBundleFailsVerification) {
  Finished f;
  std::string bytes = canonicalize(f.bundle());
  EXPECT_NO_THROW(deployer::load_bundle(bytes));
  std::size_t at = bytes.find("milk");
  ASSERT_NE(at, std::string::npos);
  bytes[at] = 'n';
  EXPECT_DOMAIN_ERROR(deployer::load_bundle(bytes), ErrorCode::HashMismatch);
  EXPECT_DOMAIN_ERROR(deployer::verify_bundle(json("{}")), ErrorCode::HashMismatch);
}

TEST(Deployer, ServeLocalRunsEverySuiteAssertion) {
  Finished f;
  Value b = f.bundle();
  EXPECT_EQ(canonicalize(deployer::serve_local(b, "GET", "/todos", {})), "[]");
  EXPECT_EQ(canonicalize(deployer::serve_local(b, "POST", "/todos", {Value("milk")})),
            R"({"done":false,"id":1,"title":"milk"})");
  for (const auto& [name, suite] : b.at("suites").as_object()) {
    for (const auto& item : suite.as_list()) {
      for (const auto& a : item.at("assertions").as_list()) {
        EXPECT_EQ(canonicalize(deployer::call_function(b, name, a.at("args").as_list())),
                  canonicalize(a.at("expected")));
      }
    }
  }
  EXPECT_DOMAIN_ERROR(deployer::serve_local(b, "GET", "/nope", {}), ErrorCode::UnknownEndpoint);
  EXPECT_DOMAIN_ERROR(deployer::call_function(b, "missing", {}), ErrorCode::UnknownEndpoint);
}

TEST(Deployer, SourceFunctionsAreNotServedLocally) {
  Finished f;
  Value b = f.bundle();
  Value& fn = b["functions"]["listTodos"];
  fn["kind"] = "source";
  fn["languageTag"] = "python";
  fn["source"] = "def listTodos():\n    return []\n";
  b["manifest"]["contentHash"] = deployer::content_hash(b);
  EXPECT_DOMAIN_ERROR(deployer::serve_local(b, "GET", "/todos", {}), ErrorCode::UnsupportedKind);
}
