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
#include "lanforge/pipeline.hpp"
#include "support.hpp"

using namespace lanforge;
using namespace lanforge::testing;

namespace {

const TrainingExample kExample{"ex1", "Il pleut", "rules=2"};

Lan translator() { return init_lan("Translate French to English", "French", "English", fixed_clock()); }

EngineOptions options() {
    EngineOptions o;
    o.clock = fixed_clock();
    return o;
}

// The translator's output counts the rules it knows; each iteration teaches
// it one more. Steps 1 to 4 always blame missing execution knowledge.
struct Teacher {
    int rules_taught = 0;
    std::vector<std::string> tags;

    std::string operator()(const CompletionRequest& r) {
        tags.push_back(r.tag);
        const std::string agent = agent_name();
        if (r.tag == "em:" + agent) {
            int n = 0;
            for (auto at = r.prompt.find("Use rule"); at != std::string::npos; at = r.prompt.find("Use rule", at + 1))
                ++n;
            return em_reply("rules=" + std::to_string(n));
        }
        if (r.tag == "judge") return judge_reply(false);
        if (r.tag == "step1") return Json{{"gap", "too few rules"}, {"sub_task", "translation"}}.dump();
        if (r.tag == "step2")
            return Json{{"reason_type", "poor_performance"}, {"agent_name", agent}, {"reason_content", "weak"}}.dump();
        if (r.tag == "step3") return Json{{"reason_type", "lacks_knowledge"}, {"reason_content", "rules"}}.dump();
        if (r.tag == "step4")
            return Json{{"parameters", {{"knowledge", "Use rule " + std::to_string(++rules_taught)}}}}.dump();
        if (r.tag == "complete:step2")
            return Json{{"reason_type", "poor_performance"}, {"agent_name", nullptr}, {"reason_content", "nobody translates idioms"}}.dump();
        FAIL("unexpected tag " << r.tag);
        return "";
    }
    static std::string agent_name() { return translator().agents[0].name; }
};

ScriptedBackend teacher_backend(Teacher& t) {
    return ScriptedBackend([&t](const CompletionRequest& r) { return t(r); });
}

}  // namespace

TEST_CASE("an already satisfied example applies no strategy") {
    Teacher t;
    auto b = teacher_backend(t);
    auto r = train_example(translator(), {}, {"ex0", "Il pleut", "rules=0"}, b, SupervisionPolicy::auto_confirm,
                           options());
    CHECK(r.strategies_applied == 0);
    CHECK(r.state.status == PipelineStatus::satisfied);
    CHECK(r.history.size() == 1);
    CHECK(r.lan.agents[0].execution.examples.size() == 1);
    CHECK(t.tags == std::vector<std::string>{"em:" + Teacher::agent_name()});
}

TEST_CASE("two rounds of execution knowledge") {
    Teacher t;
    auto b = teacher_backend(t);
    auto r = train_example(translator(), {}, kExample, b, SupervisionPolicy::auto_confirm, options());
    CHECK(r.strategies_applied == 2);
    REQUIRE(r.state.log.size() == 2);
    CHECK_FALSE(r.state.log[0].satisfied_after);
    CHECK(r.state.log[1].satisfied_after);
    CHECK(r.state.log[1].plan->strategy == Strategy::AddEmKnowledge);
    const auto& k = r.lan.agents[0].execution.knowledge;
    REQUIRE(k.size() == 2);
    CHECK(k[1].text == "Use rule 2");
    CHECK(k[1].origin == Origin::pipeline);
    CHECK(r.runs.size() == 3);
    CHECK(r.runs.back().final_output == "rules=2");
}

TEST_CASE("the iteration cap stops training") {
    Teacher t;
    auto b = teacher_backend(t);
    auto o = options();
    o.iteration_cap = 1;
    CHECK_THROWS_AS(train_example(translator(), {}, kExample, b, SupervisionPolicy::auto_confirm, o),
                    IterationCapReached);
}

TEST_CASE("confirming every step interactively equals auto_confirm") {
    Teacher t1, t2;
    auto b1 = teacher_backend(t1);
    auto b2 = teacher_backend(t2);
    auto automatic = train_example(translator(), {}, kExample, b1, SupervisionPolicy::auto_confirm, options());
    int pauses = 0;
    auto interactive = train_example(translator(), {}, kExample, b2, SupervisionPolicy::interactive, options(),
                                     [&](const PipelineState& s) {
                                         CHECK(s.status == PipelineStatus::awaiting_confirmation);
                                         ++pauses;
                                         return SupervisorAction{};
                                     });
    CHECK(interactive.lan == automatic.lan);
    CHECK(t1.tags == t2.tags);
    CHECK(pauses == 8);  // four steps per iteration
}

TEST_CASE("pipeline state") {
    Teacher t;
    auto b = teacher_backend(t);
    Lan lan = translator();
    std::vector<HistoryEntry> history;
    auto o = options();
    PipelineContext ctx{lan, history, b, o};
    PipelineState state;
    pipeline_start(state, kExample, ctx);
    CHECK(state.current_step == Step::gap);
    CHECK(state.status == PipelineStatus::awaiting_confirmation);
    REQUIRE(state.gap);

    SUBCASE("round trips through JSON") {
        pipeline_confirm(state, ctx);
        auto back = pipeline_state_from_json(to_json(state));
        CHECK(to_json(back) == to_json(state));
        CHECK(back.cause == state.cause);
    }
    SUBCASE("a quick edit fills placeholders with one completion call") {
        pipeline_confirm(state, ctx);
        auto calls = t.tags.size();
        Intervention iv;
        iv.edited_document = Json{{"reason_type", "missing_agent"}, {"reason_content", std::string(kPlaceholder)}};
        pipeline_retry(state, iv, ctx);
        CHECK(t.tags.size() == calls + 1);
        CHECK(t.tags.back() == "complete:step2");
        REQUIRE(state.cause);
        // User values win over the completion.
        CHECK(state.cause->reason_type == CauseType::missing_agent);
        CHECK(state.cause->reason_content == "nobody translates idioms");
        CHECK(state.strategy == Strategy::AddAgent);
    }
    SUBCASE("an edit without placeholders needs no call") {
        auto calls = t.tags.size();
        Intervention iv;
        iv.edited_document = Json{{"gap", "wrong tense"}};
        pipeline_retry(state, iv, ctx);
        CHECK(t.tags.size() == calls);
        CHECK(state.gap->gap == "wrong tense");
        CHECK(state.gap->sub_task == "translation");
    }
    SUBCASE("a hint is added to the step prompt and nothing else") {
        auto plain = build_step_prompt(Step::gap, state);
        Intervention iv;
        iv.hint_text = "Look at the verb";
        pipeline_retry(state, iv, ctx);
        CHECK(t.tags.back() == "step1");
        std::string section = "# User guidance\nLook at the verb\n\n";
        auto at = state.step_prompt.find(section);
        REQUIRE(at != std::string::npos);
        CHECK(state.step_prompt.substr(0, at) + state.step_prompt.substr(at + section.size()) == plain);
    }
    SUBCASE("unknown fields cannot be merged") {
        Intervention iv;
        iv.edited_document = Json{{"gap", "x"}, {"colour", "red"}};
        pipeline_retry(state, iv, ctx);
        CHECK(state.error_kind == "MergeError");
        CHECK_THROWS_AS(merge_step_document(Step::gap, state, Json::object(), Json{{"colour", "red"}}), MergeError);
    }
    SUBCASE("aborting ends the pipeline") {
        pipeline_abort(state);
        CHECK(pipeline_finished(state));
        CHECK_THROWS_AS(pipeline_confirm(state, ctx), PipelineStateError);
    }
    SUBCASE("a manual edit makes the current step stale") {
        pipeline_invalidate(state);
        CHECK(state.stale);
        pipeline_confirm(state, ctx);
        CHECK(state.current_step == Step::gap);
        CHECK_FALSE(state.stale);
    }
}

TEST_CASE("placeholders are found at any depth") {
    CHECK(contains_placeholder(Json{{"a", {{"b", Json::array({std::string(kPlaceholder)})}}}}));
    CHECK_FALSE(contains_placeholder(Json{{"a", "?"}}));
}

TEST_CASE("routing covers every reason") {
    auto r = routing_table();
    INFO(r.first_failure);
    CHECK(r.ok());
}
