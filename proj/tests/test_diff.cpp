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

#include "lanforge/diff.hpp"
#include "support.hpp"

using namespace lanforge;
using namespace lanforge::testing;

namespace {

Lan pair_lan() {
    Lan lan;
    lan.task_description = "task";
    for (const char* n : {"A", "B"}) {
        Agent a;
        a.name = n;
        a.execution.subtask_description = "s";
        a.execution.output_description = "o";
        lan.agents.push_back(a);
    }
    return lan;
}

}  // namespace

TEST_CASE("identical LANs need no edits") {
    Lan lan = pair_lan();
    CHECK(lan_edit_script(lan, lan).empty());
    CHECK(lmd(lan, lan) == 0);
}

TEST_CASE("a new isolated agent is a click plus its name") {
    Lan from = pair_lan();
    Lan to = from;
    Agent x = default_new_agent();
    x.name = "X";
    to.agents.push_back(x);
    auto script = lan_edit_script(from, to);
    REQUIRE(script.size() == 2);
    CHECK(std::holds_alternative<NewAgentOp>(script[0]));
    const auto& set = std::get<SetTextOp>(script[1]);
    CHECK(set.field == TextField::name);
    CHECK(set.new_value == "X");
    // 1 click for the agent, 1 click + 1 keypress for the name.
    CHECK(lmd(from, to) == 3);
    CHECK(structurally_equal(apply_edit_script(from, script), to));
}

TEST_CASE("edge costs") {
    Lan from = pair_lan();
    Lan to = from;
    to.add_edge("A", "B");
    CHECK(lmd(from, to) == 2);  // drag
    CHECK(lmd(to, from) == 3);  // select + delete
}

TEST_CASE("text replacement deletes then types") {
    Lan from = pair_lan();
    Lan to = from;
    to.agents[0].execution.subtask_description = "nuit";
    // Delete "s" (select 2 + delete 1), then click + 4 keypresses.
    CHECK(lmd(from, to) == 3 + 1 + 4);
    CHECK(keystrokes("été") == 3);
    CHECK(keystrokes("中文") == 2);
}

TEST_CASE("knowledge edits are counted per item") {
    Lan from = pair_lan();
    Lan to = from;
    to.agents[1].control.knowledge.push_back({"ab", Origin::user, ""});
    auto script = lan_edit_script(from, to);
    REQUIRE(script.size() == 1);
    CHECK(std::holds_alternative<AddKnowledgeOp>(script[0]));
    CHECK(edit_cost(script[0]) > 0);
    CHECK(apply_edit_script(from, script) == to);
}

TEST_CASE("ops that do not apply are rejected") {
    Lan lan = pair_lan();
    CHECK_THROWS_AS(apply_edit_script(lan, {DeleteAgentOp{"Z"}}), ValidationError);
    CHECK_THROWS_AS(apply_edit_script(lan, {DisconnectOp{"A", "B"}}), ValidationError);
}

TEST_CASE("action costs") {
    CHECK(cost_of(EditActionKind::click) == 1);
    CHECK(cost_of(EditActionKind::keypress) == 1);
    CHECK(cost_of(EditActionKind::drag) == 2);
    CHECK(cost_of(EditActionKind::select) == 2);
}

TEST_CASE("random pairs replay") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        Lan a = random_lan(rng), b = random_lan(rng);
        CHECK(structurally_equal(apply_edit_script(a, lan_edit_script(a, b)), b));
        CHECK(lmd(a, b) >= 0);
    }
}
