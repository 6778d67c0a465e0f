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

#include "criteria.hpp"
#include "support.hpp"

using namespace lanforge;
using namespace lanforge::testing;

namespace {

const std::string kIn(kExternalInputLabel);

Agent agent(const std::string& name, const std::string& subtask, bool cm = true) {
    Agent a;
    a.name = name;
    a.execution.subtask_description = subtask;
    a.execution.output_description = "text";
    a.control.enabled = cm;
    return a;
}

// The two-agent translation network before training: a literal translator
// followed by a polisher that only acts on rhyming lines.
Lan translator_and_polisher() {
    Lan lan;
    lan.task_description = "Translate French to English";
    lan.agents.push_back(agent("Literal Translator", "Translate the French text literally", false));
    Agent p = agent("Rhyming Polisher", "Polish the translation so that it rhymes");
    p.control.knowledge.push_back({"Activate only for rhyming French lines", Origin::user, ""});
    lan.agents.push_back(p);
    lan.add_edge("Literal Translator", "Rhyming Polisher");
    return lan;
}

}  // namespace

TEST_CASE("a single agent with a disabled control module") {
    Lan lan;
    lan.task_description = "Translate";
    lan.agents.push_back(agent("Translator", "Translate the text", false));
    ScriptedBackend b(std::vector<std::string>{em_reply("Good night")});
    auto trace = run_lan(lan, "Bonne nuit", b);
    CHECK(b.calls() == 1);
    CHECK(b.requests()[0].tag == "em:Translator");
    CHECK(trace.final_output == "Good night");
    CHECK(trace.activated() == std::set<std::string>{"Translator"});
    CHECK_FALSE(trace.records[0].cm_prompt);
}

TEST_CASE("an inactive polisher passes its input through") {
    Lan lan = translator_and_polisher();
    ScriptedBackend b([](const CompletionRequest& r) {
        if (r.tag == "em:Literal Translator") return em_reply("The weather is nice");
        if (r.tag == "cm:Rhyming Polisher") return cm_reply(false, "no rhyme");
        FAIL("unexpected call " << r.tag);
        return std::string();
    });
    auto trace = run_lan(lan, "Il fait beau", b);
    CHECK(b.calls() == 2);
    const auto* polisher = trace.record("Rhyming Polisher");
    REQUIRE(polisher);
    CHECK_FALSE(polisher->activated);
    CHECK(polisher->cm_thought == "no rhyme");
    CHECK(polisher->output.size() == 2);
    CHECK(*polisher->output.find("Literal Translator") == "The weather is nice");
    CHECK(trace.final_output == "The weather is nice");
}

TEST_CASE("activation decisions") {
    Lan lan = translator_and_polisher();
    NamedValues inputs{{kIn, "x"}};
    ScriptedBackend none;

    SUBCASE("disabled control modules activate without a call") {
        auto d = decide_activation(lan.agents[0], inputs, {}, lan, none);
        CHECK(d.activated);
        CHECK_FALSE(d.prompt);
    }
    SUBCASE("an inactive required predecessor deactivates without a call") {
        Agent p = lan.agents[1];
        p.control.required_predecessors = {"Literal Translator"};
        auto d = decide_activation(p, inputs, {{"Literal Translator", false}}, lan, none);
        CHECK_FALSE(d.activated);
        CHECK(none.calls() == 0);
    }
    SUBCASE("otherwise the model decides") {
        ScriptedBackend b(std::vector<std::string>{cm_reply(true, "rhymes")});
        auto d = decide_activation(lan.agents[1], inputs, {{"Literal Translator", true}}, lan, b);
        CHECK(d.activated);
        CHECK(d.thought == "rhymes");
        CHECK(d.calls.size() == 1);
        CHECK(b.requests()[0].temperature == doctest::Approx(kDecisionTemperature));
    }
}

TEST_CASE("execution output is repaired when malformed") {
    Lan lan = translator_and_polisher();
    ScriptedBackend b(std::vector<std::string>{"Sure! The answer is hi", em_reply("hi")});
    auto r = execute_agent(lan.agents[0], NamedValues{{kIn, "salut"}}, lan, b);
    CHECK(r.output == "hi");
    CHECK(b.calls() == 2);
    REQUIRE(r.calls.size() == 2);
    CHECK(r.calls[1].tag == "repair:em:Literal Translator");
}

TEST_CASE("strict parsing tolerates one fence") {
    CHECK(parse_strict("```json\n{\"a\": 1}\n```"));
    CHECK(parse_strict("  {\"a\": 1}\n"));
    CHECK_FALSE(parse_strict("text {\"a\": 1}"));
    CHECK_FALSE(parse_strict("[1]"));
    CHECK(cm_template().violation(Json{{"thought", "t"}, {"result", "yes"}}));
    CHECK_FALSE(cm_template().violation(Json{{"thought", "t"}, {"result", true}}));
}

TEST_CASE("prompt sections") {
    Lan lan = translator_and_polisher();
    NamedValues inputs{{kIn, "Il pleut"}, {"Literal Translator", "It rains"}};

    SUBCASE("the inputs section labels every source") {
        CHECK(render_inputs(inputs, lan) ==
              "## Input of the network\nIl pleut\n\n"
              "## Output of \"Literal Translator\"\n"
              "// The subtask of \"Literal Translator\": Translate the French text literally\n"
              "It rains\n");
    }
    SUBCASE("empty knowledge and examples are omitted") {
        auto prompt = build_em_prompt(lan.agents[1], inputs, lan);
        CHECK(prompt.find("# Knowledge") == std::string::npos);
        CHECK(prompt.find("# Examples") == std::string::npos);
        CHECK(prompt.find("Let's think step by step.") != std::string::npos);
    }
    SUBCASE("control prompt for the polisher") {
        Agent p = lan.agents[1];
        p.control.examples.push_back(
            {NamedValues{{kIn, "Le ciel est bleu"}, {"Literal Translator", "The sky is blue"}},
             false, "ex1"});
        auto prompt = build_cm_prompt(p, inputs, lan);
        CHECK(prompt.find("(from the network) Le ciel est bleu\n") != std::string::npos);
        CHECK(prompt.find("(from \"Literal Translator\") The sky is blue\n") != std::string::npos);
        CHECK(matches_golden("polisher_cm_prompt.txt", prompt));
    }
    SUBCASE("one knowledge item changes only the knowledge section") {
        Agent p = lan.agents[1];
        auto before = build_em_prompt(p, inputs, lan);
        p.execution.knowledge.push_back({"Keep it short", Origin::user, ""});
        auto after = build_em_prompt(p, inputs, lan);
        std::string section = "# Knowledge\n1. Keep it short\n\n";
        auto at = after.find(section);
        REQUIRE(at != std::string::npos);
        CHECK(after.substr(0, at) + after.substr(at + section.size()) == before);
    }
}

TEST_CASE("traces round trip through JSON") {
    Lan lan = translator_and_polisher();
    ScriptedBackend b([](const CompletionRequest& r) {
        return r.tag.rfind("cm:", 0) == 0 ? cm_reply(true) : em_reply("out " + r.tag);
    });
    auto trace = run_lan(lan, "Il fait beau", b);
    CHECK(trace_from_json(to_json(trace)) == trace);
    CHECK(trace.llm_calls() == 3);
    CHECK(trace.final_output == "out em:Rhyming Polisher");
}

TEST_CASE("cancellation returns the completed records") {
    Lan lan = translator_and_polisher();
    CancelToken token;
    ScriptedBackend b([&](const CompletionRequest&) {
        token.cancel();
        return em_reply("done");
    });
    RunOptions options;
    options.cancel = token;
    try {
        run_lan(lan, "x", b, options);
        FAIL("expected ExecutionAborted");
    } catch (const ExecutionAborted& e) {
        CHECK(e.partial_trace().records.size() == 1);
    }
}

TEST_CASE("invalid networks are refused before any call") {
    Lan lan = translator_and_polisher();
    lan.add_edge("Rhyming Polisher", "Literal Translator");
    ScriptedBackend b;
    CHECK_THROWS_AS(run_lan(lan, "x", b), ValidationError);
    CHECK(b.calls() == 0);
}

TEST_CASE("final output falls back to the external input") {
    CHECK(final_output_of({}, "in") == "in");
}

TEST_CASE("runtime semantics on small networks") {
    auto r = runtime_semantics(3);
    INFO(r.first_failure);
    CHECK(r.ok());
}

TEST_CASE("format repair budget") {
    auto r = format_repair();
    INFO(r.first_failure);
    CHECK(r.ok());
}
