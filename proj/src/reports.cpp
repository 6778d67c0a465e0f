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

#include <algorithm>
#include <cctype>

#include "lanforge/engine.hpp"
#include "lanforge/errors.hpp"

namespace lanforge {
namespace {

std::string normalize_token(std::string_view text) {
    std::string out;
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (c == ' ' || c == '-' || c == '_')
            out += '_';
        else if (std::isalnum(u))
            out += static_cast<char>(std::tolower(u));
    }
    while (!out.empty() && out.front() == '_') out.erase(out.begin());
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

template <class E>
std::optional<E> lookup(std::string_view text,
                        std::initializer_list<std::pair<const char*, E>> table) {
    auto token = normalize_token(text);
    for (const auto& [alias, value] : table)
        if (token == alias) return value;
    return std::nullopt;
}

std::vector<std::string> string_list(const Json& obj, const char* key, const std::string& where,
                                     std::vector<std::string>& problems) {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return out;
    if (it->is_string()) {
        out.push_back(it->get<std::string>());
        return out;
    }
    if (!it->is_array()) {
        problems.push_back(where + "." + key + " must be a list of strings");
        return out;
    }
    for (const auto& v : *it) {
        if (v.is_string())
            out.push_back(v.get<std::string>());
        else
            problems.push_back(where + "." + key + " must contain only strings");
    }
    return out;
}

std::string text_field(const Json& obj, const char* key, const std::string& where,
                       std::vector<std::string>& problems, bool required = true) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) problems.push_back(where + "." + key + " is missing");
        return {};
    }
    if (!it->is_string()) {
        problems.push_back(where + "." + key + " must be a string");
        return {};
    }
    return it->get<std::string>();
}

AgentSpec spec_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems) {
    AgentSpec s;
    if (!j.is_object()) {
        problems.push_back(where + " must be an object");
        return s;
    }
    s.name = text_field(j, "name", where, problems);
    s.subtask_description = text_field(j, "subtask_description", where, problems);
    s.output_description = text_field(j, "output_description", where, problems);
    if (auto it = j.find("cm_enabled"); it != j.end() && !it->is_null()) {
        if (it->is_boolean())
            s.cm_enabled = it->get<bool>();
        else
            problems.push_back(where + ".cm_enabled must be a boolean");
    }
    s.required_predecessors = string_list(j, "required_predecessors", where, problems);
    s.cm_knowledge = string_list(j, "cm_knowledge", where, problems);
    s.em_knowledge = string_list(j, "em_knowledge", where, problems);
    return s;
}

std::vector<Edge> edges_from_json(const Json& obj, const std::string& where,
                                  std::vector<std::string>& problems) {
    std::vector<Edge> out;
    auto it = obj.find("edges");
    if (it == obj.end() || it->is_null()) return out;
    if (!it->is_array()) {
        problems.push_back(where + ".edges must be a list");
        return out;
    }
    for (const auto& e : *it) {
        if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string())
            out.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
        else if (e.is_object() && e.contains("source") && e.contains("target") &&
                 e["source"].is_string() && e["target"].is_string())
            out.push_back({e["source"].get<std::string>(), e["target"].get<std::string>()});
        else
            problems.push_back(where + ".edges entries must be [source, target]");
    }
    return out;
}

Json edges_to_json(const std::vector<Edge>& edges) {
    Json arr = Json::array();
    for (const auto& e : edges) arr.push_back(Json::array({e.source, e.target}));
    return arr;
}

}  // namespace

std::string_view to_string(CauseType t) {
    switch (t) {
        case CauseType::missing_agent: return "missing_agent";
        case CauseType::wrongly_activated: return "wrongly_activated";
        case CauseType::poor_performance: return "poor_performance";
    }
    return "?";
}

std::string_view to_string(AgentCauseType t) {
    switch (t) {
        case AgentCauseType::not_activated: return "not_activated";
        case AgentCauseType::lacks_knowledge: return "lacks_knowledge";
        case AgentCauseType::needs_split: return "needs_split";
        case AgentCauseType::needs_inputs: return "needs_inputs";
    }
    return "?";
}

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::AddAgent: return "AddAgent";
        case Strategy::SplitAgent: return "SplitAgent";
        case Strategy::AddCmKnowledge: return "AddCmKnowledge";
        case Strategy::AddEmKnowledge: return "AddEmKnowledge";
        case Strategy::AddInputs: return "AddInputs";
    }
    return "?";
}

std::string_view to_string(SplitMode m) { return m == SplitMode::sequential ? "sequential" : "parallel"; }

std::string_view to_string(Step s) {
    switch (s) {
        case Step::gap: return "gap";
        case Step::cause: return "cause";
        case Step::agent_cause: return "agent_cause";
        case Step::params: return "params";
        case Step::apply: return "apply";
        case Step::done: return "done";
    }
    return "?";
}

std::optional<Step> parse_step(std::string_view text) {
    return lookup<Step>(text, {{"gap", Step::gap},
                               {"step1", Step::gap},
                               {"cause", Step::cause},
                               {"step2", Step::cause},
                               {"agent_cause", Step::agent_cause},
                               {"step3", Step::agent_cause},
                               {"params", Step::params},
                               {"step4", Step::params},
                               {"apply", Step::apply},
                               {"done", Step::done}});
}

std::optional<CauseType> parse_cause_type(std::string_view text) {
    return lookup<CauseType>(text, {{"missing_agent", CauseType::missing_agent},
                                    {"lack_of_agents", CauseType::missing_agent},
                                    {"lack_of_agent", CauseType::missing_agent},
                                    {"no_agent", CauseType::missing_agent},
                                    {"wrongly_activated", CauseType::wrongly_activated},
                                    {"wrong_activation", CauseType::wrongly_activated},
                                    {"wrongly_activated_agent", CauseType::wrongly_activated},
                                    {"poor_performance", CauseType::poor_performance}});
}

std::optional<AgentCauseType> parse_agent_cause_type(std::string_view text) {
    return lookup<AgentCauseType>(text, {{"not_activated", AgentCauseType::not_activated},
                                         {"agent_not_activated", AgentCauseType::not_activated},
                                         {"lacks_knowledge", AgentCauseType::lacks_knowledge},
                                         {"lack_of_knowledge", AgentCauseType::lacks_knowledge},
                                         {"lack_knowledge", AgentCauseType::lacks_knowledge},
                                         {"needs_split", AgentCauseType::needs_split},
                                         {"need_split", AgentCauseType::needs_split},
                                         {"requires_split", AgentCauseType::needs_split},
                                         {"needs_inputs", AgentCauseType::needs_inputs},
                                         {"need_inputs", AgentCauseType::needs_inputs},
                                         {"requires_inputs", AgentCauseType::needs_inputs},
                                         {"lack_of_inputs", AgentCauseType::needs_inputs}});
}

std::optional<Strategy> parse_strategy(std::string_view text) {
    return lookup<Strategy>(text, {{"addagent", Strategy::AddAgent},
                                   {"add_agent", Strategy::AddAgent},
                                   {"splitagent", Strategy::SplitAgent},
                                   {"split_agent", Strategy::SplitAgent},
                                   {"addcmknowledge", Strategy::AddCmKnowledge},
                                   {"add_cm_knowledge", Strategy::AddCmKnowledge},
                                   {"addemknowledge", Strategy::AddEmKnowledge},
                                   {"add_em_knowledge", Strategy::AddEmKnowledge},
                                   {"addinputs", Strategy::AddInputs},
                                   {"add_inputs", Strategy::AddInputs}});
}

Route route_after_cause(CauseType cause) {
    switch (cause) {
        case CauseType::missing_agent: return {Step::params, Strategy::AddAgent};
        case CauseType::wrongly_activated: return {Step::params, Strategy::AddCmKnowledge};
        case CauseType::poor_performance: return {Step::agent_cause, std::nullopt};
    }
    return {Step::agent_cause, std::nullopt};
}

Strategy strategy_for(AgentCauseType cause) {
    switch (cause) {
        case AgentCauseType::not_activated: return Strategy::AddCmKnowledge;
        case AgentCauseType::lacks_knowledge: return Strategy::AddEmKnowledge;
        case AgentCauseType::needs_split: return Strategy::SplitAgent;
        case AgentCauseType::needs_inputs: return Strategy::AddInputs;
    }
    return Strategy::AddEmKnowledge;
}

Json to_json(const GapReport& r) { return {{"gap", r.gap}, {"sub_task", r.sub_task}}; }

Json to_json(const CauseReport& r) {
    return {{"reason_type", to_string(r.reason_type)},
            {"agent_name", r.agent_name ? Json(*r.agent_name) : Json(nullptr)},
            {"reason_content", r.reason_content}};
}

Json to_json(const AgentCauseReport& r) {
    return {{"reason_type", to_string(r.reason_type)}, {"reason_content", r.reason_content}};
}

Json to_json(const AgentSpec& s) {
    Json j{{"name", s.name},
           {"subtask_description", s.subtask_description},
           {"output_description", s.output_description},
           {"required_predecessors", s.required_predecessors},
           {"cm_knowledge", s.cm_knowledge},
           {"em_knowledge", s.em_knowledge}};
    j["cm_enabled"] = s.cm_enabled ? Json(*s.cm_enabled) : Json(nullptr);
    return j;
}

Json to_json(const StrategyPlan& p) {
    Json params = std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AddAgentParams>) {
                return {{"agent", to_json(v.agent)}, {"edges", edges_to_json(v.edges)}};
            } else if constexpr (std::is_same_v<T, SplitAgentParams>) {
                Json agents = Json::array();
                for (const auto& s : v.agents) agents.push_back(to_json(s));
                return {{"agent", v.agent},
                        {"mode", to_string(v.mode)},
                        {"agents", std::move(agents)},
                        {"edges", edges_to_json(v.edges)}};
            } else if constexpr (std::is_same_v<T, AddKnowledgeParams>) {
                return {{"agent", v.agent}, {"knowledge", v.knowledge}};
            } else {
                return {{"agent", v.agent}, {"sources", v.sources}};
            }
        },
        p.parameters);
    return {{"parameters", std::move(params)}};
}

Json to_json(const TrainingExample& e) {
    return {{"id", e.id}, {"input", e.input}, {"ground_truth", e.ground_truth}};
}

TrainingExample training_example_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("example", "expected an object");
    TrainingExample e;
    try {
        e.id = j.value("id", "");
        e.input = j.at("input").get<std::string>();
        e.ground_truth = j.at("ground_truth").get<std::string>();
    } catch (const Json::exception& ex) {
        throw ParseError("example", ex.what());
    }
    if (e.input.empty() || e.ground_truth.empty())
        throw ValidationError("training example needs a non-empty input and ground truth");
    return e;
}

GapReport gap_from_json(const Json& j) {
    GapReport r;
    if (auto it = j.find("gap"); it != j.end() && it->is_string()) r.gap = it->get<std::string>();
    if (auto it = j.find("sub_task"); it != j.end() && it->is_string())
        r.sub_task = it->get<std::string>();
    return r;
}

CauseReport cause_from_json(const Json& j) {
    CauseReport r;
    auto type = j.value("reason_type", Json(nullptr));
    auto parsed = type.is_string() ? parse_cause_type(type.get<std::string>()) : std::nullopt;
    if (!parsed) throw UnknownReasonType(type.is_string() ? type.get<std::string>() : type.dump());
    r.reason_type = *parsed;
    if (auto it = j.find("agent_name");
        it != j.end() && it->is_string() && r.reason_type != CauseType::missing_agent &&
        !it->get<std::string>().empty())
        r.agent_name = it->get<std::string>();
    if (auto it = j.find("reason_content"); it != j.end() && it->is_string())
        r.reason_content = it->get<std::string>();
    return r;
}

AgentCauseReport agent_cause_from_json(const Json& j) {
    AgentCauseReport r;
    auto type = j.value("reason_type", Json(nullptr));
    auto parsed = type.is_string() ? parse_agent_cause_type(type.get<std::string>()) : std::nullopt;
    if (!parsed) throw UnknownReasonType(type.is_string() ? type.get<std::string>() : type.dump());
    r.reason_type = *parsed;
    if (auto it = j.find("reason_content"); it != j.end() && it->is_string())
        r.reason_content = it->get<std::string>();
    return r;
}

StrategyPlan plan_from_json(Strategy strategy, const Json& doc,
                            const std::optional<std::string>& default_agent) {
    const Json& p = doc.contains("parameters") ? doc["parameters"] : doc;
    std::vector<std::string> problems;
    StrategyPlan plan;
    plan.strategy = strategy;
    if (!p.is_object()) throw PlanValidationError({"parameters must be an object"});

    auto target = [&]() {
        auto name = text_field(p, "agent", "parameters", problems, !default_agent.has_value());
        return name.empty() && default_agent ? *default_agent : name;
    };

    switch (strategy) {
        case Strategy::AddAgent: {
            AddAgentParams a;
            if (auto it = p.find("agent"); it != p.end())
                a.agent = spec_from_json(*it, "parameters.agent", problems);
            else
                problems.push_back("parameters.agent is missing");
            a.edges = edges_from_json(p, "parameters", problems);
            plan.parameters = std::move(a);
            break;
        }
        case Strategy::SplitAgent: {
            SplitAgentParams s;
            s.agent = target();
            auto mode = text_field(p, "mode", "parameters", problems);
            if (mode == "sequential")
                s.mode = SplitMode::sequential;
            else if (mode == "parallel")
                s.mode = SplitMode::parallel;
            else if (!mode.empty())
                problems.push_back("parameters.mode must be \"sequential\" or \"parallel\"");
            if (auto it = p.find("agents"); it != p.end() && it->is_array()) {
                for (std::size_t i = 0; i < it->size(); ++i)
                    s.agents.push_back(spec_from_json((*it)[i],
                                                      "parameters.agents[" + std::to_string(i) + "]",
                                                      problems));
            } else {
                problems.push_back("parameters.agents must be a list of agents");
            }
            s.edges = edges_from_json(p, "parameters", problems);
            plan.parameters = std::move(s);
            break;
        }
        case Strategy::AddCmKnowledge:
        case Strategy::AddEmKnowledge: {
            AddKnowledgeParams k;
            k.agent = target();
            k.knowledge = text_field(p, "knowledge", "parameters", problems);
            plan.parameters = std::move(k);
            break;
        }
        case Strategy::AddInputs: {
            AddInputsParams a;
            a.agent = target();
            a.sources = string_list(p, "sources", "parameters", problems);
            plan.parameters = std::move(a);
            break;
        }
    }
    if (!problems.empty()) throw PlanValidationError(problems);
    return plan;
}

}  // namespace lanforge
