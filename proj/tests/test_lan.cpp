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

Agent agent(const std::string& name) {
    Agent a;
    a.name = name;
    a.execution.subtask_description = "subtask of " + name;
    a.execution.output_description = "text";
    return a;
}

Lan lan_of(std::initializer_list<const char*> names, std::vector<Edge> edges = {}) {
    Lan lan;
    lan.task_description = "task";
    for (const char* n : names) lan.agents.push_back(agent(n));
    lan.edges = std::move(edges);
    return lan;
}

}  // namespace

TEST_CASE("NamedValues keeps labels unique") {
    NamedValues v{{"__input__", "x"}};
    CHECK_THROWS_AS(v.add("__input__", "y"), ValidationError);
    CHECK_FALSE(v.merge("__input__", "y"));
    CHECK(*v.find("__input__") == "x");
    CHECK(v.merge("A", "a"));
    CHECK(v.size() == 2);
}

TEST_CASE("removing an agent cascades its edges and required-predecessor references") {
    Lan lan = lan_of({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"A", "C"}});
    lan.find_agent("C")->control.required_predecessors = {"B", "A"};
    CHECK(lan.remove_agent("B"));
    CHECK(lan.edges == std::vector<Edge>{{"A", "C"}});
    CHECK(lan.find_agent("C")->control.required_predecessors == std::vector<std::string>{"A"});
    CHECK_FALSE(lan.remove_agent("B"));
    CHECK(lan.predecessors("C") == std::vector<std::string>{"A"});
}

TEST_CASE("validate_lan flags the three save-blocking rules") {
    CHECK(validate_lan(lan_of({"Translator"})).empty());

    auto cycle = validate_lan(lan_of({"A", "B"}, {{"A", "B"}, {"B", "A"}}));
    REQUIRE(cycle.size() == 1);
    CHECK(std::get<CycleViolation>(cycle[0]).agents == std::vector<std::string>{"A", "B"});

    auto dup = validate_lan(lan_of({"X", "X"}));
    REQUIRE(dup.size() == 1);
    CHECK(std::get<DuplicateNameViolation>(dup[0]).name == "X");

    Lan empty = lan_of({"A"});
    empty.agents[0].execution.output_description = "  ";
    auto e = validate_lan(empty);
    REQUIRE(e.size() == 1);
    CHECK(std::get<EmptyFieldViolation>(e[0]).field == AgentField::output_description);

    Lan self = lan_of({"A"}, {{"A", "A"}});
    CHECK(validate_lan(self).size() == 1);
}

TEST_CASE("structural problems cover what validation does not") {
    Lan lan = lan_of({"A", "B"}, {{"A", "Z"}, {"A", "B"}, {"A", "B"}});
    lan.find_agent("A")->control.required_predecessors = {"B"};
    auto problems = structural_problems(lan);
    CHECK(problems.size() == 3);
    Lan reserved = lan_of({"__input__"});
    CHECK(structural_problems(reserved).size() == 1);
}

TEST_CASE("topological order breaks ties by insertion") {
    CHECK(topological_order(lan_of({"A"})) == std::vector<std::string>{"A"});
    CHECK(topological_order(lan_of({"Literal Translator", "Rhyming Polisher"},
                                   {{"Literal Translator", "Rhyming Polisher"}})) ==
          std::vector<std::string>{"Literal Translator", "Rhyming Polisher"});
    Lan diamond = lan_of({"A", "B", "C", "D"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}});
    CHECK(topological_order(diamond) == std::vector<std::string>{"A", "B", "C", "D"});
    CHECK(topological_order(diamond) == reference_topological_order(diamond));
    Lan reversed = lan_of({"D", "C", "B", "A"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}});
    CHECK(topological_order(reversed) == std::vector<std::string>{"A", "C", "B", "D"});
    CHECK_THROWS_AS(topological_order(lan_of({"A", "B"}, {{"A", "B"}, {"B", "A"}})), CycleError);
}

TEST_CASE("LAN documents") {
    Lan lan = lan_of({"Translator"});
    lan.agents[0].control.enabled = false;
    auto text = serialize_lan(lan);
    CHECK(text.back() == '\n');
    CHECK(serialize_lan(deserialize_lan(text)) == text);
    CHECK(matches_golden("minimal_lan.json", text));

    auto doc = parse_json(text);
    CHECK(doc["version"] == 1);
    CHECK(doc["edges"].is_array());

    SUBCASE("missing agents") {
        doc.erase("agents");
        try {
            lan_from_json(doc);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.location() == "/agents");
        }
    }
    SUBCASE("unknown version") {
        doc["version"] = 2;
        CHECK_THROWS_AS(lan_from_json(doc), SchemaVersionError);
    }
    SUBCASE("syntax error reports an offset") {
        try {
            deserialize_lan("{\"version\": 1,, }");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK_FALSE(e.location().empty());
        }
    }
    SUBCASE("edges are source/target pairs") {
        Lan two = lan_of({"A", "B"}, {{"A", "B"}});
        auto j = lan_to_json(two);
        CHECK(j["edges"] == Json::array({Json::array({"A", "B"})}));
    }
}

TEST_CASE("invariant suite on a smaller sample") {
    auto r = invariant_suite(200, 99);
    INFO(r.first_failure);
    CHECK(r.ok());
}

TEST_CASE("init contract on a smaller sample") {
    auto r = init_contract(200, 5);
    INFO(r.first_failure);
    CHECK(r.ok());
}
