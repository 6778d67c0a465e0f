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
#include <sstream>

#include "lanforge/pipeline.hpp"

namespace lanforge {
namespace {

std::string in_quotes(const std::string& name) { return "\"" + name + "\""; }

const Lan& current_lan(const PipelineState& state) { return state.last_trace.lan_snapshot; }

std::optional<std::string> target_agent(const PipelineState& state) {
    if (state.cause && state.cause->agent_name) return state.cause->agent_name;
    return std::nullopt;
}

const char* kSpecPlaceholder =
    "{\"name\": \"...\", \"subtask_description\": \"...\", \"output_description\": \"...\", "
    "\"cm_enabled\": <true or false>, \"required_predecessors\": [\"...\"], "
    "\"cm_knowledge\": [\"...\"], \"em_knowledge\": [\"...\"]}";

std::string params_placeholder(Strategy s) {
    switch (s) {
        case Strategy::AddAgent:
            return std::string("{\"agent\": ") + kSpecPlaceholder +
                   ", \"edges\": [[\"<source>\", \"<target>\"]]}";
        case Strategy::SplitAgent:
            return std::string("{\"agent\": \"...\", \"mode\": \"<sequential or parallel>\", "
                               "\"agents\": [") +
                   kSpecPlaceholder + ", ...], \"edges\": [[\"<source>\", \"<target>\"]]}";
        case Strategy::AddCmKnowledge:
        case Strategy::AddEmKnowledge: return "{\"agent\": \"...\", \"knowledge\": \"...\"}";
        case Strategy::AddInputs: return "{\"agent\": \"...\", \"sources\": [\"...\"]}";
    }
    return "{}";
}

std::string params_comment(Strategy s) {
    switch (s) {
        case Strategy::AddAgent:
            return "the new agent and the edges that place it in the network; every edge must\n"
                   "touch the new agent. cm_enabled false makes the agent always active.\n"
                   "required_predecessors must be sources of its incoming edges";
        case Strategy::SplitAgent:
            return "the agent to split, how the new agents work together, the new agents\n"
                   "(in execution order for sequential mode) with the original knowledge\n"
                   "redistributed among them, and the edges between new agents (leave empty\n"
                   "for a chain in sequential mode; parallel agents have no edges)";
        case Strategy::AddCmKnowledge:
            return "the agent and one piece of knowledge for its control module that makes\n"
                   "it activate exactly when it should";
        case Strategy::AddEmKnowledge:
            return "the agent and one piece of knowledge for its execution module";
        case Strategy::AddInputs:
            return "the agent and the existing agents whose outputs it should also receive";
    }
    return {};
}

std::string strategy_explanation(Strategy s) {
    switch (s) {
        case Strategy::AddAgent:
            return "Add an agent: create a new agent responsible for the missing sub-task.";
        case Strategy::SplitAgent:
            return "Split an agent: replace the agent by several agents that work sequentially "
                   "or in parallel.";
        case Strategy::AddCmKnowledge:
            return "Add knowledge to the control module: change when the agent is activated.";
        case Strategy::AddEmKnowledge:
            return "Add knowledge to the execution module: improve how the agent performs its "
                   "subtask.";
        case Strategy::AddInputs:
            return "Add inputs to an agent: let the agent receive the outputs of other agents.";
    }
    return {};
}

std::optional<std::string> enum_check(const Json& v, bool agent_level) {
    auto text = v.get<std::string>();
    bool ok = agent_level ? parse_agent_cause_type(text).has_value() : parse_cause_type(text).has_value();
    if (ok) return std::nullopt;
    return "unknown value " + in_quotes(text);
}

Json spec_shape() {
    return {{"name", nullptr},
            {"subtask_description", nullptr},
            {"output_description", nullptr},
            {"cm_enabled", nullptr},
            {"required_predecessors", nullptr},
            {"cm_knowledge", nullptr},
            {"em_knowledge", nullptr}};
}

// Allowed keys of a step's result: objects list their keys, a one-element
// array describes its items, null is any leaf.
Json step_shape(Step step, const PipelineState& state) {
    switch (step) {
        case Step::gap: return {{"gap", nullptr}, {"sub_task", nullptr}};
        case Step::cause:
            return {{"reason_type", nullptr}, {"agent_name", nullptr}, {"reason_content", nullptr}};
        case Step::agent_cause: return {{"reason_type", nullptr}, {"reason_content", nullptr}};
        case Step::params: {
            if (!state.strategy) throw MergeError("no strategy has been selected yet");
            Json p;
            switch (*state.strategy) {
                case Strategy::AddAgent: p = {{"agent", spec_shape()}, {"edges", nullptr}}; break;
                case Strategy::SplitAgent:
                    p = {{"agent", nullptr},
                         {"mode", nullptr},
                         {"agents", Json::array({spec_shape()})},
                         {"edges", nullptr}};
                    break;
                case Strategy::AddCmKnowledge:
                case Strategy::AddEmKnowledge: p = {{"agent", nullptr}, {"knowledge", nullptr}}; break;
                case Strategy::AddInputs: p = {{"agent", nullptr}, {"sources", nullptr}}; break;
            }
            return {{"parameters", p}};
        }
        default: throw MergeError("step " + std::string(to_string(step)) + " has no result");
    }
}

void check_keys(const Json& value, const Json& shape, const std::string& path) {
    if (shape.is_object() && value.is_object()) {
        for (const auto& [key, v] : value.items()) {
            if (!shape.contains(key))
                throw MergeError("unknown field " + in_quotes(path.empty() ? key : path + "." + key));
            check_keys(v, shape[key], path.empty() ? key : path + "." + key);
        }
    } else if (shape.is_array() && value.is_array() && !shape.empty()) {
        for (std::size_t i = 0; i < value.size(); ++i)
            check_keys(value[i], shape[0], path + "[" + std::to_string(i) + "]");
    }
}

Json deep_merge(const Json& base, const Json& edit) {
    if (!base.is_object() || !edit.is_object()) return edit;
    Json out = base;
    for (const auto& [key, v] : edit.items())
        out[key] = out.contains(key) ? deep_merge(out[key], v) : v;
    return out;
}

// Keeps every value the user wrote; placeholders take the model's value.
Json overlay_user_values(const Json& completed, const Json& user) {
    if (user.is_string()) return contains_placeholder(user) ? completed : user;
    if (user.is_array()) return contains_placeholder(user) ? completed : user;
    if (!user.is_object() || !completed.is_object()) return contains_placeholder(user) ? completed : user;
    Json out = completed;
    for (const auto& [key, v] : user.items())
        out[key] = completed.contains(key) ? overlay_user_values(completed[key], v) : v;
    return out;
}

std::string step_tag(Step step) {
    switch (step) {
        case Step::gap: return "step1";
        case Step::cause: return "step2";
        case Step::agent_cause: return "step3";
        case Step::params: return "step4";
        default: return "step";
    }
}

Json call_step(Step step, PipelineState& state, Backend& backend, const EngineOptions& options,
               const std::optional<std::string>& guidance) {
    auto tmpl = step_template(step, state);
    CompletionRequest request;
    request.prompt = build_step_prompt(step, state, guidance);
    request.temperature = kDecisionTemperature;
    request.max_tokens = options.run.max_tokens;
    request.tag = step_tag(step);
    request.cancel = options.run.cancel;
    state.step_prompt = request.prompt;
    auto response = backend.complete(request);
    RepairContext ctx{request.tag, kDecisionTemperature, options.run.max_tokens, options.run.cancel};
    try {
        return parse_or_reformat(response.text, tmpl, backend, options.run.repair_budget, ctx);
    } catch (const FormatError& e) {
        // An answer that is well formed except for its enum is reported as such.
        if (step == Step::cause || step == Step::agent_cause) {
            for (auto it = e.attempts().rbegin(); it != e.attempts().rend(); ++it) {
                auto parsed = parse_strict(*it);
                if (!parsed || !parsed->contains("reason_type")) continue;
                const auto& v = (*parsed)["reason_type"];
                auto text = v.is_string() ? v.get<std::string>() : v.dump();
                bool known = step == Step::cause ? parse_cause_type(text).has_value()
                                                 : parse_agent_cause_type(text).has_value();
                if (!known) throw UnknownReasonType(text);
                break;
            }
        }
        throw;
    }
}

// Validates a step's result document and stores it in the state.
void accept_result(Step step, PipelineState& state, const Json& doc) {
    auto tmpl = step_template(step, state);
    if (auto v = tmpl.violation(doc)) {
        if ((step == Step::cause || step == Step::agent_cause) && doc.is_object() &&
            doc.contains("reason_type") && doc["reason_type"].is_string() &&
            (step == Step::cause ? !parse_cause_type(doc["reason_type"].get<std::string>())
                                 : !parse_agent_cause_type(doc["reason_type"].get<std::string>())))
            throw UnknownReasonType(doc["reason_type"].get<std::string>());
        if (step == Step::params && doc.is_object() && doc.contains("parameters") && state.strategy)
            plan_from_json(*state.strategy, doc, target_agent(state));
        throw RejectedStepError("step result does not match the template: " + *v);
    }
    switch (step) {
        case Step::gap: {
            auto gap = gap_from_json(doc);
            if (normalize_whitespace(gap.gap).empty())
                throw RejectedStepError("the gap must not be empty");
            state.gap = std::move(gap);
            break;
        }
        case Step::cause: {
            auto cause = cause_from_json(doc);
            if (cause.reason_type != CauseType::missing_agent && !cause.agent_name)
                throw RejectedStepError("agent_name is required unless the reason is missing_agent");
            state.cause = std::move(cause);
            state.agent_cause.reset();
            state.strategy = route_after_cause(state.cause->reason_type).strategy;
            break;
        }
        case Step::agent_cause:
            state.agent_cause = agent_cause_from_json(doc);
            state.strategy = strategy_for(state.agent_cause->reason_type);
            break;
        case Step::params: {
            if (!state.strategy) throw PipelineStateError("no strategy has been selected");
            auto plan = plan_from_json(*state.strategy, doc, target_agent(state));
            if (auto v = validate_plan(current_lan(state), plan); !v.empty())
                throw PlanValidationError(std::move(v));
            state.plan = std::move(plan);
            break;
        }
        default: throw PipelineStateError("step " + std::string(to_string(step)) + " has no result");
    }
}

void render_previous(std::ostringstream& out, Step step, const PipelineState& state) {
    std::ostringstream prev;
    if (step != Step::gap && state.gap) {
        prev << "## The gap\n" << state.gap->gap << "\n";
        if (!state.gap->sub_task.empty()) prev << "Crucial sub-task: " << state.gap->sub_task << "\n";
    }
    if (step == Step::agent_cause && state.cause)
        prev << "## Description of the poor performance\n" << state.cause->reason_content << "\n";
    if (step == Step::params) {
        if (auto agent = target_agent(state)) prev << "## The agent to be updated\n" << *agent << "\n";
        if (state.cause)
            prev << "## Why the gap exists\n"
                 << to_string(state.cause->reason_type) << ": " << state.cause->reason_content << "\n";
        if (state.agent_cause)
            prev << "## Why the agent performs poorly\n"
                 << to_string(state.agent_cause->reason_type) << ": "
                 << state.agent_cause->reason_content << "\n";
        if (state.strategy)
            prev << "## The selected strategy\n" << strategy_explanation(*state.strategy) << "\n";
    }
    auto text = prev.str();
    if (!text.empty()) out << "# Outputs of previous steps\n" << text << "\n";
}

}  // namespace

bool contains_placeholder(const Json& value) {
    if (value.is_string()) return value.get<std::string>().find(kPlaceholder) != std::string::npos;
    if (value.is_array() || value.is_object())
        for (const auto& v : value)
            if (contains_placeholder(v)) return true;
    return false;
}

ResponseTemplate step_template(Step step, const PipelineState& state) {
    ResponseTemplate t;
    switch (step) {
        case Step::gap:
            t.fields = {
                {"gap", FieldKind::string,
                 "the most significant deficiency of the output compared with the ground truth",
                 "\"...\""},
                {"sub_task", FieldKind::string, "the crucial sub-task that is executed inadequately",
                 "\"...\"", false},
            };
            break;
        case Step::cause: {
            std::vector<std::string> names;
            for (const auto& a : current_lan(state).agents) names.push_back(a.name);
            t.fields = {
                {"reason_type", FieldKind::string,
                 "one of:\n"
                 "\"missing_agent\": no agent is responsible for the sub-task\n"
                 "\"wrongly_activated\": the sub-task should not be executed, but its agent was "
                 "activated\n"
                 "\"poor_performance\": an agent handles the sub-task, but performs poorly",
                 "\"...\"", true, [](const Json& v) { return enum_check(v, false); }},
                {"agent_name", FieldKind::any,
                 "the name of the agent responsible for the sub-task, null for missing_agent",
                 "\"...\"", false,
                 [names](const Json& v) -> std::optional<std::string> {
                     if (v.is_null()) return std::nullopt;
                     if (!v.is_string()) return "must be a string or null";
                     auto name = v.get<std::string>();
                     if (name.empty() || std::find(names.begin(), names.end(), name) != names.end())
                         return std::nullopt;
                     return "there is no agent named " + in_quotes(name);
                 }},
                {"reason_content", FieldKind::string, "why the gap exists", "\"...\""},
            };
            break;
        }
        case Step::agent_cause:
            t.fields = {
                {"reason_type", FieldKind::string,
                 "one of:\n"
                 "\"not_activated\": the agent should have been activated but was not\n"
                 "\"lacks_knowledge\": the agent lacks knowledge for its subtask\n"
                 "\"needs_split\": the subtask is too complex for one agent\n"
                 "\"needs_inputs\": the agent lacks the outputs of other agents",
                 "\"...\"", true, [](const Json& v) { return enum_check(v, true); }},
                {"reason_content", FieldKind::string, "why the agent performs poorly", "\"...\""},
            };
            break;
        case Step::params: {
            if (!state.strategy) throw PipelineStateError("no strategy has been selected");
            Strategy s = *state.strategy;
            auto agent = target_agent(state);
            t.fields = {
                {"parameters", FieldKind::object, params_comment(s), params_placeholder(s), true,
                 [s, agent](const Json& v) -> std::optional<std::string> {
                     try {
                         plan_from_json(s, Json{{"parameters", v}}, agent);
                     } catch (const PlanValidationError& e) {
                         return e.violations().front();
                     }
                     return std::nullopt;
                 }},
            };
            break;
        }
        default: throw PipelineStateError("step " + std::string(to_string(step)) + " has no template");
    }
    return t;
}

std::string build_step_prompt(Step step, const PipelineState& state,
                              const std::optional<std::string>& guidance) {
    const Lan& lan = current_lan(state);
    const RunTrace& trace = state.last_trace;
    std::ostringstream out;
    out << "# Task\n"
        << "You are improving a network of LLM agents (a LAN) so that it handles the training "
           "example below correctly.\n";
    switch (step) {
        case Step::gap:
            out << "Find the gap between the LAN's output and the ground truth. Identify the most "
                   "significant deficiency of the LAN and isolate the crucial sub-task that is "
                   "executed inadequately.\n\n";
            break;
        case Step::cause:
            out << "Find why the gap exists. Either no agent is responsible for the sub-task, or "
                   "the sub-task should not be executed but its agent was activated, or an agent "
                   "handles the sub-task but performs poorly.\n\n";
            break;
        case Step::agent_cause:
            out << "Why the agent has a poor performance? It may not have been activated, lack "
                   "knowledge, have a subtask that should be split, or lack inputs from other "
                   "agents.\n\n";
            break;
        case Step::params:
            out << "Calculate the parameter for the strategy.\n\n";
            break;
        default: throw PipelineStateError("step " + std::string(to_string(step)) + " has no prompt");
    }

    render_previous(out, step, state);

    if (step != Step::agent_cause)
        out << "# Description of the LAN\n" << render_lan_description(lan, trace) << "\n";
    if (step == Step::agent_cause || step == Step::params) {
        if (auto name = target_agent(state))
            if (const Agent* agent = lan.find_agent(*name))
                out << "# Description of the agent\n" << render_agent_description(*agent, trace) << "\n";
    }

    out << "# Training example\n"
        << "## Input\n" << state.example.input << "\n"
        << "## Ground truth\n" << state.example.ground_truth << "\n";
    if (step == Step::gap) out << "## Output of the LAN\n" << trace.final_output << "\n";
    out << "\n";

    if (guidance && !guidance->empty()) out << "# User guidance\n" << *guidance << "\n\n";

    out << "# Output format\n"
        << "Reply with a JSON object that follows this template and nothing else. "
           "Lines starting with \"//\" are comments.\n"
        << step_template(step, state).render();
    return out.str();
}

std::optional<Json> PipelineState::step_result() const {
    switch (current_step) {
        case Step::gap: return gap ? std::optional<Json>(to_json(*gap)) : std::nullopt;
        case Step::cause: return cause ? std::optional<Json>(to_json(*cause)) : std::nullopt;
        case Step::agent_cause:
            return agent_cause ? std::optional<Json>(to_json(*agent_cause)) : std::nullopt;
        case Step::params: return plan ? std::optional<Json>(to_json(*plan)) : std::nullopt;
        default: return std::nullopt;
    }
}

GapReport step1_find_gap(PipelineState& state, Backend& backend, const EngineOptions& options,
                         const std::optional<std::string>& guidance) {
    accept_result(Step::gap, state, call_step(Step::gap, state, backend, options, guidance));
    return *state.gap;
}

CauseReport step2_classify_cause(PipelineState& state, Backend& backend, const EngineOptions& options,
                                 const std::optional<std::string>& guidance) {
    if (!state.gap) throw PipelineStateError("step 2 needs the gap of step 1");
    accept_result(Step::cause, state, call_step(Step::cause, state, backend, options, guidance));
    return *state.cause;
}

AgentCauseReport step3_agent_cause(PipelineState& state, Backend& backend,
                                   const EngineOptions& options,
                                   const std::optional<std::string>& guidance) {
    if (!state.cause || state.cause->reason_type != CauseType::poor_performance)
        throw PipelineStateError("step 3 needs a poor-performance cause");
    accept_result(Step::agent_cause, state,
                  call_step(Step::agent_cause, state, backend, options, guidance));
    return *state.agent_cause;
}

StrategyPlan step4_compute_params(PipelineState& state, Backend& backend,
                                  const EngineOptions& options,
                                  const std::optional<std::string>& guidance) {
    if (!state.strategy) throw PipelineStateError("step 4 needs a selected strategy");
    accept_result(Step::params, state, call_step(Step::params, state, backend, options, guidance));
    return *state.plan;
}

Json merge_step_document(Step step, const PipelineState& state, const Json& base, const Json& edit) {
    if (!edit.is_object()) throw MergeError("the edited result must be a JSON object");
    check_keys(edit, step_shape(step, state), "");
    return deep_merge(base.is_object() ? base : Json::object(), edit);
}

Json apply_intervention(PipelineState& state, Step step, const Intervention& intervention,
                        Backend& backend, const EngineOptions& options) {
    if (!intervention.edited_document && !intervention.hint_text)
        throw ValidationError("an intervention needs an edited result or a hint");

    Json base = Json::object();
    if (intervention.hint_text) {
        base = call_step(step, state, backend, options, intervention.hint_text);
        if (!intervention.edited_document) {
            accept_result(step, state, base);
            return *state.step_result();
        }
    } else if (auto current = state.step_result(); current && state.current_step == step) {
        base = *current;
    }

    Json merged = merge_step_document(step, state, base, *intervention.edited_document);
    Json result = merged;
    if (contains_placeholder(merged)) {
        auto tmpl = step_template(step, state);
        CompletionRequest request;
        request.prompt = build_step_prompt(step, state, intervention.hint_text) +
                         "\n# Partially filled answer\n"
                         "The user filled in part of the answer. Replace every \"" +
                         std::string(kPlaceholder) +
                         "\" with a suitable value and keep every other value unchanged. Reply "
                         "with the complete JSON object only.\n" +
                         merged.dump(2) + "\n";
        request.temperature = kDecisionTemperature;
        request.max_tokens = options.run.max_tokens;
        request.tag = "complete:" + step_tag(step);
        request.cancel = options.run.cancel;
        state.step_prompt = request.prompt;
        auto response = backend.complete(request);
        RepairContext ctx{request.tag, kDecisionTemperature, options.run.max_tokens,
                          options.run.cancel};
        auto completed =
            parse_or_reformat(response.text, tmpl, backend, options.run.repair_budget, ctx);
        result = overlay_user_values(completed, merged);
    }
    accept_result(step, state, result);
    return *state.step_result();
}

}  // namespace lanforge
