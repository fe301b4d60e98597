#include <gtest/gtest.h>

#include <orc/http.hpp>
#include <orc/service.hpp>

#include <thread>

using namespace orc;
using namespace orc::service;

namespace {

const char* kFlow = R"(layout "demo" {
  window { width: 120; height: 100; }
  widget w1 { pref: 50x20; }
  widget w2 { pref: 50x20; }
  widget w3 { pref: 50x20; }
  pattern hflow(items: [w1, w2, w3]);
})";

Response call(Service& svc, const std::string& method, const std::string& path, const Json& body = nullptr,
              std::multimap<std::string, std::string> query = {}) {
  return svc.handle({method, path, std::move(query), body.is_null() ? "" : body.dump()});
}

std::string create(Service& svc, const std::string& spec = kFlow) {
  auto r = call(svc, "POST", "/v1/sessions", {{"spec", spec}});
  EXPECT_EQ(r.status, 201) << r.body.dump();
  return r.body.value("id", "");
}

Response edit(Service& svc, const std::string& id, int rev, const Json& e) {
  return call(svc, "POST", "/v1/sessions/" + id + "/edits", {{"expected_revision", rev}, {"edit", e}});
}

Json widget(const Json& solution, const std::string& id) {
  for (const auto& w : solution["widgets"])
    if (w["id"] == id) return w;
  return nullptr;
}

Json untimed(Json solution) {
  solution.erase("solve_ms");
  return solution;
}

}  // namespace

TEST(Service, CreateReturnsSolution) {
  Service svc;
  auto r = call(svc, "POST", "/v1/sessions", {{"spec", kFlow}});
  ASSERT_EQ(r.status, 201);
  EXPECT_EQ(r.body["revision"], 0);
  const Json w3 = widget(r.body["solution"], "w3");
  EXPECT_DOUBLE_EQ(w3["left"].get<double>(), 0);
  EXPECT_DOUBLE_EQ(w3["top"].get<double>(), 20);
  EXPECT_EQ(svc.session_count(), 1u);

  auto g = call(svc, "GET", "/v1/sessions/" + r.body["id"].get<std::string>() + "/solution");
  ASSERT_EQ(g.status, 200);
  EXPECT_EQ(untimed(g.body["solution"]), untimed(r.body["solution"]));
}

TEST(Service, BadSpecGivesLocatedDiagnostics) {
  Service svc;
  auto r = call(svc, "POST", "/v1/sessions", {{"spec", "layout \"x\" {\n  widget a { pref: 10x; }\n}"}});
  ASSERT_EQ(r.status, 422);
  ASSERT_FALSE(r.body["diagnostics"].empty());
  EXPECT_EQ(r.body["diagnostics"][0]["line"], 2);
  EXPECT_GT(r.body["diagnostics"][0]["column"].get<int>(), 0);

  EXPECT_EQ(call(svc, "POST", "/v1/sessions", {{"nope", 1}}).status, 422);
  EXPECT_EQ(svc.handle({"POST", "/v1/sessions", {}, "{not json"}).status, 422);
  EXPECT_EQ(svc.session_count(), 0u);
}

TEST(Service, UnknownSessionAndRoutes) {
  Service svc;
  EXPECT_EQ(call(svc, "GET", "/v1/sessions/missing/solution").status, 404);
  EXPECT_EQ(call(svc, "GET", "/v2/things").status, 404);
  const auto id = create(svc);
  EXPECT_EQ(call(svc, "GET", "/v1/sessions/" + id + "/whatever").status, 404);
}

TEST(Service, DeleteEndsSession) {
  Service svc;
  const auto id = create(svc);
  EXPECT_EQ(call(svc, "DELETE", "/v1/sessions/" + id).status, 204);
  EXPECT_EQ(call(svc, "GET", "/v1/sessions/" + id + "/solution").status, 404);
  EXPECT_EQ(svc.session_count(), 0u);
}

TEST(Service, StaleRevisionIsRejected) {
  Service svc;
  const auto id = create(svc);
  auto ok = edit(svc, id, 0, {{"type", "resize_widget"}, {"id", "w1"}, {"width", 40}, {"height", 20}});
  ASSERT_EQ(ok.status, 200) << ok.body.dump();
  EXPECT_EQ(ok.body["revision"], 1);
  auto stale = edit(svc, id, 0, {{"type", "resize_widget"}, {"id", "w1"}, {"width", 30}, {"height", 20}});
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(stale.body["revision"], 1);
  EXPECT_EQ(stale.body["error"], "revision mismatch");
}

TEST(Service, ConflictingEditRollsBack) {
  Service svc;
  const auto id =
      create(svc, R"(layout "r" { window { width: 200; height: 100; } widget w1 { min: 10x10; pref: 50x20; max: 90x40; } })");
  auto first = edit(svc, id, 0, {{"type", "add_constraint"}, {"constraint", "hard: w1.width == 45"}});
  ASSERT_EQ(first.status, 200) << first.body.dump();
  const auto before = call(svc, "GET", "/v1/sessions/" + id + "/solution");
  const auto spec_before = call(svc, "GET", "/v1/sessions/" + id + "/spec");

  auto bad = edit(svc, id, 1, {{"type", "add_constraint"}, {"constraint", "hard: w1.width == 48"}});
  ASSERT_EQ(bad.status, 409) << bad.body.dump();
  EXPECT_FALSE(bad.body["conflicts"].empty());
  EXPECT_EQ(bad.body["revision"], 1);

  const auto after = call(svc, "GET", "/v1/sessions/" + id + "/solution");
  EXPECT_EQ(after.body["revision"], 1);
  EXPECT_EQ(untimed(after.body["solution"]).dump(), untimed(before.body["solution"]).dump());
  EXPECT_EQ(call(svc, "GET", "/v1/sessions/" + id + "/spec").body, spec_before.body);
}

TEST(Service, InvalidEditsAre422) {
  Service svc;
  const auto id = create(svc);
  EXPECT_EQ(edit(svc, id, 0, {{"type", "teleport"}}).status, 422);
  EXPECT_EQ(edit(svc, id, 0, {{"type", "delete_widget"}, {"id", "ghost"}}).status, 422);
  EXPECT_EQ(edit(svc, id, 0, {{"type", "add_pattern"}, {"pattern", "hflow(items: [w1"}}).status, 422);
  EXPECT_EQ(edit(svc, id, 0, {{"type", "remove_pattern"}, {"index", 7}}).status, 422);
  EXPECT_EQ(call(svc, "POST", "/v1/sessions/" + id + "/edits", {{"edit", {{"type", "x"}}}}).status, 422);
  EXPECT_EQ(call(svc, "GET", "/v1/sessions/" + id + "/solution").body["revision"], 0);
}

TEST(Service, ViewportOverrideIsReadOnly) {
  Service svc;
  const auto id = create(svc);
  auto wide = call(svc, "GET", "/v1/sessions/" + id + "/solution", nullptr, {{"width", "300"}, {"height", "100"}});
  ASSERT_EQ(wide.status, 200);
  EXPECT_EQ(wide.body["revision"], 0);
  EXPECT_DOUBLE_EQ(widget(wide.body["solution"], "w3")["top"].get<double>(), 0);
  auto base = call(svc, "GET", "/v1/sessions/" + id + "/solution");
  EXPECT_DOUBLE_EQ(widget(base.body["solution"], "w3")["top"].get<double>(), 20);
  EXPECT_EQ(call(svc, "GET", "/v1/sessions/" + id + "/solution", nullptr, {{"width", "300"}}).status, 422);
  EXPECT_EQ(call(svc, "GET", "/v1/sessions/" + id + "/solution", nullptr, {{"width", "x"}, {"height", "1"}}).status,
            422);
}

TEST(Service, EditsMatchFreshSolveOfPrintedSpec) {
  Service svc;
  const auto id = create(svc);
  const std::vector<Json> edits = {
      {{"type", "insert_widget"}, {"id", "w4"}, {"pref", {{"width", 30}, {"height", 20}}}, {"pattern", 0}},
      {{"type", "move_widget"}, {"id", "w2"}, {"left", 60}, {"top", 40}},
      {{"type", "set_viewport"}, {"width", 200}, {"height", 90}},
      {{"type", "delete_widget"}, {"id", "w1"}},
      {{"type", "add_constraint"}, {"constraint", "soft(3): w3.width >= 70"}},
  };
  int rev = 0;
  for (const auto& e : edits) {
    auto r = edit(svc, id, rev, e);
    ASSERT_EQ(r.status, 200) << e.dump() << " " << r.body.dump();
    rev = r.body["revision"];
    const std::string spec = call(svc, "GET", "/v1/sessions/" + id + "/spec").body["spec"];
    Service fresh;
    auto f = call(fresh, "POST", "/v1/sessions", {{"spec", spec}});
    ASSERT_EQ(f.status, 201) << spec;
    EXPECT_EQ(untimed(r.body["solution"]).dump(), untimed(f.body["solution"]).dump()) << e.dump();
  }
  EXPECT_EQ(rev, 5);
}

TEST(Service, MoveWidgetLandsWhereAsked) {
  Service svc;
  const auto id = create(svc, R"(layout "m" { window { width: 300; height: 200; } widget a { pref: 40x20; } })");
  auto r = edit(svc, id, 0, {{"type", "move_widget"}, {"id", "a"}, {"left", 100}, {"top", 50}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const Json a = widget(r.body["solution"], "a");
  EXPECT_DOUBLE_EQ(a["left"].get<double>(), 100);
  EXPECT_DOUBLE_EQ(a["top"].get<double>(), 50);
}

TEST(Http, RoundTripOverLoopback) {
  Service svc;
  httplib::Server server;
  mount(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/v1/sessions", Json{{"spec", kFlow}}.dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const Json body = Json::parse(created->body);
  const std::string id = body["id"];
  auto got = client.Get("/v1/sessions/" + id + "/solution?width=300&height=100");
  ASSERT_TRUE(got);
  EXPECT_EQ(got->status, 200);
  EXPECT_EQ(got->get_header_value("Content-Type"), "application/json");
  EXPECT_DOUBLE_EQ(widget(Json::parse(got->body)["solution"], "w3")["top"].get<double>(), 0);
  auto gone = client.Delete("/v1/sessions/" + id);
  ASSERT_TRUE(gone);
  EXPECT_EQ(gone->status, 204);
  auto missing = client.Get("/v1/sessions/" + id + "/spec");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  t.join();
}
