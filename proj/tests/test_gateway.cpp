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

#include "lanforge/gateway.hpp"
#include "support.hpp"

using namespace lanforge;
using namespace lanforge::testing;

namespace {

CompletionRequest req(std::string prompt, std::string tag = "t") {
    CompletionRequest r;
    r.prompt = std::move(prompt);
    r.tag = std::move(tag);
    return r;
}

/// Local chat-completions stub. `statuses` are served in order, then 200.
struct StubProvider {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::vector<int> statuses;
    std::atomic<int> hits{0};
    std::string last_auth;
    Json last_body;

    StubProvider() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& rq, httplib::Response& rs) {
            int i = hits++;
            last_auth = rq.get_header_value("Authorization");
            last_body = Json::parse(rq.body);
            if (i < static_cast<int>(statuses.size())) {
                rs.status = statuses[i];
                rs.set_content("busy", "text/plain");
                return;
            }
            Json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo"}}}}}}};
            rs.set_content(reply.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubProvider() {
        server.stop();
        thread.join();
    }
    HttpBackendConfig config() const {
        HttpBackendConfig c;
        c.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
        c.key = "secret";
        c.model = "m";
        c.retry.base = std::chrono::milliseconds(1);
        c.retry.cap = std::chrono::milliseconds(4);
        return c;
    }
};

}  // namespace

TEST_CASE("scripted backend") {
    ScriptedBackend b(std::vector<std::string>{"true"});
    CHECK(b.complete(req("anything")).text == "true");
    CHECK_THROWS_AS(b.complete(req("more")), OracleExhaustedError);
    CHECK_THROWS_AS(b.complete(req("")), ValidationError);
    // The exhausted attempt is still a call.
    CHECK(b.calls() == 2);
}

TEST_CASE("scripted backend is deterministic") {
    auto run = [] {
        ScriptedBackend b([](const CompletionRequest& r) { return r.prompt + "!"; });
        std::vector<std::string> out;
        for (const char* p : {"a", "b", "c"}) out.push_back(b.complete(req(p)).text);
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("record and replay") {
    auto inner = std::make_shared<ScriptedBackend>(std::vector<std::string>{"r1", "r2", "r3"});
    RecordingBackend rec(inner);
    for (const char* p : {"p1", "p2", "p3"}) rec.complete(req(p, std::string("tag-") + p));
    auto t = rec.transcript();
    REQUIRE(t.exchanges.size() == 3);
    CHECK(t.exchanges[1].prompt_sha256 == sha256_hex("p2"));

    SUBCASE("same prompts replay") {
        ReplayBackend replay(t);
        CHECK(replay.complete(req("p1")).text == "r1");
        CHECK(replay.complete(req("p2", "renamed")).text == "r2");
        CHECK(replay.complete(req("p3")).text == "r3");
        CHECK(replay.exhausted());
        CHECK_THROWS_AS(replay.complete(req("p4")), ReplayMismatchError);
    }
    SUBCASE("a mutated second prompt fails loudly") {
        ReplayBackend replay(t);
        replay.complete(req("p1"));
        try {
            replay.complete(req("p2 changed"));
            FAIL("expected ReplayMismatchError");
        } catch (const ReplayMismatchError& e) {
            CHECK(e.index() == 2);
            CHECK(e.diff().find("p2") != std::string::npos);
        }
    }
    SUBCASE("record over replay reproduces the transcript") {
        RecordingBackend again(std::make_shared<ReplayBackend>(t));
        for (const char* p : {"p1", "p2", "p3"}) again.complete(req(p, std::string("tag-") + p));
        CHECK(again.transcript().to_jsonl() == t.to_jsonl());
        CHECK(again.transcript().fingerprint() == t.fingerprint());
    }
    SUBCASE("JSON lines round trip") {
        auto text = t.to_jsonl();
        auto first = Json::parse(text.substr(0, text.find('\n')));
        for (const char* key : {"prompt_sha256", "prompt", "response", "tag"}) CHECK(first.contains(key));
        CHECK(Transcript::from_jsonl(text).to_jsonl() == text);
        TempDir dir;
        t.save((dir.path() / "t.jsonl").string());
        CHECK(Transcript::load((dir.path() / "t.jsonl").string()).fingerprint() == t.fingerprint());
    }
    SUBCASE("fingerprints ignore tags") {
        Transcript other = t;
        for (auto& e : other.exchanges) e.tag = "x";
        CHECK(other.fingerprint() == t.fingerprint());
    }
}

TEST_CASE("recording sink observes every exchange") {
    std::vector<std::string> seen;
    RecordingBackend rec(std::make_shared<ScriptedBackend>(std::vector<std::string>{"a", "b"}),
                         [&](const Exchange& e) { seen.push_back(e.response); });
    rec.complete(req("1"));
    rec.complete(req("2"));
    CHECK(seen == std::vector<std::string>{"a", "b"});
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("retry delays grow exponentially up to the cap") {
    RetryPolicy p;
    CHECK(p.delay(0).count() == 1000);
    CHECK(p.delay(1).count() == 2000);
    CHECK(p.delay(5).count() == 32000);
    CHECK(p.delay(6).count() == 60000);
    CHECK(p.delay(50).count() == 60000);
}

TEST_CASE("HTTP backend") {
    StubProvider stub;
    SUBCASE("success carries the completion and the bearer key") {
        HttpBackend b(stub.config());
        auto r = b.complete(req("hello"));
        CHECK(r.text == "echo");
        CHECK(stub.last_auth == "Bearer secret");
        CHECK(stub.last_body["messages"][0]["content"] == "hello");
        CHECK(stub.last_body["model"] == "m");
    }
    SUBCASE("transient failures are retried") {
        stub.statuses = {500, 429, 503};
        HttpBackend b(stub.config());
        CHECK(b.complete(req("hello")).text == "echo");
        CHECK(stub.hits == 4);
    }
    SUBCASE("client errors are not retried") {
        stub.statuses = {400};
        HttpBackend b(stub.config());
        CHECK_THROWS_AS(b.complete(req("hello")), Error);
        CHECK(stub.hits == 1);
    }
    SUBCASE("cancellation stops the retry loop") {
        stub.statuses = std::vector<int>(1000, 500);
        auto c = stub.config();
        c.retry.base = std::chrono::milliseconds(50);
        HttpBackend b(c);
        CancelToken token;
        auto r = req("hello");
        r.cancel = token;
        std::thread canceller([&] {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
            token.cancel();
        });
        CHECK_THROWS_AS(b.complete(r), AbortedError);
        canceller.join();
    }
    SUBCASE("prompt length limit") {
        auto c = stub.config();
        c.max_prompt_bytes = 3;
        HttpBackend b(c);
        CHECK_THROWS_AS(b.complete(req("four")), PromptTooLongError);
        CHECK(stub.hits == 0);
    }
}

TEST_CASE("configuration from the environment") {
    unsetenv("LANFORGE_LLM_URL");
    CHECK_THROWS_AS(HttpBackendConfig::from_env(), ConfigError);
    setenv("LANFORGE_LLM_URL", "http://127.0.0.1:1/v1", 1);
    setenv("LANFORGE_LLM_MAX_PROMPT_BYTES", "abc", 1);
    CHECK_THROWS_AS(HttpBackendConfig::from_env(), ConfigError);
    setenv("LANFORGE_LLM_MAX_PROMPT_BYTES", "100", 1);
    CHECK(HttpBackendConfig::from_env().max_prompt_bytes == 100);
    unsetenv("LANFORGE_LLM_URL");
    unsetenv("LANFORGE_LLM_MAX_PROMPT_BYTES");
}
