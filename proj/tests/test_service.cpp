/*
 * Copyright 2026 The LanForge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "criteria.hpp"
#include "lanforge/server.hpp"
#include "lanforge/service.hpp"
#include "support.hpp"

using namespace lanforge;
using namespace lanforge::testing;

namespace {

// One rule of execution knowledge makes the translator right.
std::string responder(const CompletionRequest& r) {
    if (r.tag.rfind("em:", 0) == 0)
        return em_reply(r.prompt.find("Use the rule") != std::string::npos ? "right" : "wrong");
    if (r.tag == "judge") return judge_reply(false);
    if (r.tag == "step1") return Json{{"gap", "wrong"}, {"sub_task", "translation"}}.dump();
    if (r.tag == "step2")
        return Json{{"reason_type", "poor_performance"}, {"agent_name", "Translate French to English"}, {"reason_content", "x"}}.dump();
    if (r.tag == "step3") return Json{{"reason_type", "lacks_knowledge"}, {"reason_content", "x"}}.dump();
    if (r.tag == "step4") return Json{{"parameters", {{"knowledge", "Use the rule"}}}}.dump();
    return "";
}

struct Fixture {
    TempDir dir;
    SessionStore store{dir.path()};
    Service service;
    std::string base;

    Fixture() : service(store, std::make_shared<ScriptedBackend>(responder), engine_options()) {
        auto r = call("POST", "/sessions", {{"task_description", "Translate French to English"},
                                            {"input_description", "French"},
                                            {"output_description", "English"}});
        REQUIRE(r.status == 201);
        base = "/sessions/" + r.body["session"]["id"].get<std::string>();
    }
    static EngineOptions engine_options() {
        EngineOptions o;
        o.clock = fixed_clock();
        return o;
    }
    ApiResponse call(std::string_view method, const std::string& path, const Json& body = nullptr,
                     const std::map<std::string, std::string>& query = {}) {
        return service.handle(method, path, body.is_null() ? "" : body.dump(), query);
    }
    std::size_t revisions() { return call("GET", base + "/revisions").body["revisions"].size(); }
    Lan lan() { return lan_from_json(call("GET", base + "/lan").body["lan"]); }
};

}  // namespace

TEST_CASE("sessions") {
    Fixture f;
    CHECK(f.call("GET", "/sessions").body["sessions"] == Json::array({"s1"}));
    CHECK(f.call("GET", "/sessions/nope").status == 404);
    CHECK(f.call("GET", "/elsewhere").status == 404);
    CHECK(f.call("DELETE", "/sessions").status == 405);
    CHECK(f.service.handle("POST", "/sessions", "{oops").status == 400);
    CHECK(f.call("POST", "/sessions", {{"task_description", " "}}).status == 422);
}

TEST_CASE("agent and edge edits") {
    Fixture f;
    CHECK(f.call("POST", f.base + "/lan/agents",
                 {{"name", "Polisher"}, {"subtask_description", "polish"}, {"output_description", "text"}})
              .status == 201);
    CHECK(f.call("POST", f.base + "/lan/edges", {{"source", "Translate French to English"}, {"target", "Polisher"}})
              .status == 201);
    CHECK(f.revisions() == 3);

    SUBCASE("save-blocking rules answer 422 and leave no revision") {
        auto dup = f.call("POST", f.base + "/lan/agents",
                          {{"name", "Polisher"}, {"subtask_description", "p"}, {"output_description", "t"}});
        CHECK(dup.status == 422);
        CHECK(dup.body["violations"][0]["type"] == "DuplicateNameViolation");
        auto cycle = f.call("POST", f.base + "/lan/edges", {{"source", "Polisher"}, {"target", "Translate French to English"}});
        CHECK(cycle.status == 422);
        CHECK(cycle.body["violations"][0]["type"] == "CycleViolation");
        auto blank = f.call("PATCH", f.base + "/lan/agents/Polisher", {{"output_description", ""}});
        CHECK(blank.status == 422);
        CHECK(f.revisions() == 3);
    }
    SUBCASE("patch edits fields and renames") {
        auto r = f.call("PATCH", f.base + "/lan/agents/Polisher",
                        {{"name", "Rhyming Polisher"}, {"em_knowledge", {"Rhyme"}}, {"cm_enabled", false}});
        CHECK(r.status == 200);
        Lan lan = f.lan();
        REQUIRE(lan.find_agent("Rhyming Polisher"));
        CHECK(lan.has_edge("Translate French to English", "Rhyming Polisher"));
        CHECK(lan.find_agent("Rhyming Polisher")->execution.knowledge[0].text == "Rhyme");
        CHECK_FALSE(lan.find_agent("Rhyming Polisher")->control.enabled);
    }
    SUBCASE("deleting an agent drops its edges") {
        CHECK(f.call("DELETE", f.base + "/lan/agents/Polisher").status == 200);
        CHECK(f.lan().edges.empty());
        CHECK(f.call("DELETE", f.base + "/lan/agents/Polisher").status == 404);
    }
    SUBCASE("edges can be removed by query") {
        CHECK(f.call("DELETE", f.base + "/lan/edges", nullptr,
                     {{"source", "Translate French to English"}, {"target", "Polisher"}})
                  .status == 200);
        CHECK(f.lan().edges.empty());
    }
    SUBCASE("diff between revisions") {
        auto d = f.call("GET", f.base + "/diff", nullptr, {{"from", "1"}, {"to", "2"}});
        CHECK(d.status == 200);
        CHECK(d.body["lmd"] == 2);
        CHECK(d.body["script"].size() == 1);
        CHECK(f.call("GET", f.base + "/diff").body["lmd"] == 0);
        CHECK(f.call("GET", f.base + "/diff", nullptr, {{"from", "9"}}).status == 404);
        CHECK(f.call("GET", f.base + "/revisions/1").body["revision"]["cause"] == "manual_edit");
    }
}

TEST_CASE("runs are stored as traces") {
    Fixture f;
    auto r = f.call("POST", f.base + "/run", {{"input", "Il pleut"}});
    REQUIRE(r.status == 200);
    CHECK(r.body["trace"]["final_output"] == "wrong");
    auto id = std::to_string(r.body["trace_id"].get<int>());
    CHECK(f.call("GET", f.base + "/traces/" + id).body["trace"] == r.body["trace"]);
    CHECK(f.call("GET", f.base + "/traces/99").status == 404);
    CHECK(f.call("POST", f.base + "/run", Json::object()).status == 400);
}

TEST_CASE("pipeline endpoints") {
    Fixture f;
    CHECK(f.call("POST", f.base + "/pipeline/confirm").status == 409);
    CHECK(f.call("GET", f.base + "/pipeline").body["pipeline"].is_null());
    CHECK(f.call("POST", f.base + "/examples", {{"id", "ex1"}, {"input", "Il pleut"}, {"ground_truth", "right"}})
              .status == 201);
    CHECK(f.call("POST", f.base + "/pipeline/start", {{"example_id", "nope"}}).status == 404);

    auto started = f.call("POST", f.base + "/pipeline/start", {{"example_id", "ex1"}});
    REQUIRE(started.status == 200);
    CHECK(started.body["pipeline"]["current_step"] == "gap");
    CHECK(f.call("POST", f.base + "/pipeline/start", {{"example_id", "ex1"}}).status == 409);

    SUBCASE("four confirmations apply one strategy") {
        for (int i = 0; i < 4; ++i) CHECK(f.call("POST", f.base + "/pipeline/confirm").status == 200);
        CHECK(f.call("GET", f.base + "/pipeline").body["pipeline"]["status"] == "satisfied");
        CHECK(f.revisions() == 2);
        CHECK(f.call("GET", f.base + "/revisions/1").body["revision"]["cause"] == "strategy");
        CHECK(f.call("POST", f.base + "/pipeline/confirm").status == 409);
        CHECK(f.call("POST", f.base + "/pipeline/abort").status == 409);
    }
    SUBCASE("a manual edit marks the pipeline stale") {
        f.call("PATCH", f.base + "/lan/agents/Translate French to English", {{"subtask_description", "Translate"}});
        CHECK(f.call("GET", f.base + "/pipeline").body["pipeline"]["stale"] == true);
    }
    SUBCASE("retry with an edit") {
        auto r = f.call("POST", f.base + "/pipeline/retry", {{"edited_document", {{"gap", "tense"}}}});
        CHECK(r.status == 200);
        CHECK(r.body["pipeline"]["gap"]["gap"] == "tense");
    }
    SUBCASE("abort") {
        CHECK(f.call("POST", f.base + "/pipeline/abort").status == 200);
        CHECK(f.call("GET", f.base + "/pipeline").body["pipeline"]["status"] == "aborted");
    }
}

TEST_CASE("HTTP server: events and console") {
    Fixture f;
    TempDir console;
    write_file(console.path() / "index.html", "<html>console</html>");
    ServerOptions so;
    so.port = 0;
    so.console_dir = console.path();
    HttpServer server(f.service, so);
    int port = server.bind();
    std::thread thread([&] { server.listen(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto page = client.Get("/console/index.html");
    REQUIRE(page);
    CHECK(page->body == "<html>console</html>");
    auto lan = client.Get(f.base + "/lan");
    REQUIRE(lan);
    CHECK(lan->status == 200);
    CHECK(lan->get_header_value("Access-Control-Allow-Origin") == "*");

    std::string received;
    std::atomic<bool> got{false};
    std::thread listener([&] {
        httplib::Client sse("127.0.0.1", port);
        sse.Get(f.base + "/events", [&](const char* data, std::size_t n) {
            received.append(data, n);
            if (received.find("event: lan_changed") != std::string::npos) {
                got = true;
                return false;
            }
            return true;
        });
    });
    // Subscription happens asynchronously; keep editing until an event lands.
    for (int i = 0; i < 50 && !got; ++i) {
        f.call("PATCH", f.base + "/lan/agents/Translate French to English",
               {{"subtask_description", "Translate " + std::to_string(i)}});
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    listener.join();
    CHECK(got);
    CHECK(received.find("data: {") != std::string::npos);
    CHECK(client.Get("/sessions/nope/events")->status == 404);

    server.stop();
    thread.join();
}

TEST_CASE("bind address from the environment") {
    setenv("LANFORGE_BIND_ADDR", "0.0.0.0:9000", 1);
    auto o = server_options_from_env();
    CHECK(o.host == "0.0.0.0");
    CHECK(o.port == 9000);
    setenv("LANFORGE_BIND_ADDR", "host:x", 1);
    CHECK_THROWS_AS(server_options_from_env(), ConfigError);
    unsetenv("LANFORGE_BIND_ADDR");
}

TEST_CASE("service contract") {
    auto r = service_contract();
    INFO(r.first_failure);
    CHECK(r.ok());
}
