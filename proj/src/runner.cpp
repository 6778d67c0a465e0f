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

#include "lanforge/runtime.hpp"
#include "lanforge/serialize.hpp"
#include "lanforge/validate.hpp"

namespace lanforge {

const std::string* AgentRunRecord::own_output() const {
    return activated ? output.find(agent) : nullptr;
}

const AgentRunRecord* RunTrace::record(std::string_view agent) const {
    for (const auto& r : records)
        if (r.agent == agent) return &r;
    return nullptr;
}

std::set<std::string> RunTrace::activated() const {
    std::set<std::string> out;
    for (const auto& r : records)
        if (r.activated) out.insert(r.agent);
    return out;
}

std::size_t RunTrace::llm_calls() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.calls.size();
    return n;
}

namespace {

Json optional_text(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<std::string> optional_text(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

Json to_json(const RunTrace& trace) {
    Json records = Json::array();
    for (const auto& r : trace.records) {
        Json calls = Json::array();
        for (const auto& c : r.calls)
            calls.push_back({{"tag", c.tag}, {"prompt_bytes", c.prompt_bytes}, {"response", c.response}});
        records.push_back({{"agent", r.agent},
                           {"inputs", to_json(r.inputs)},
                           {"cm_prompt", optional_text(r.cm_prompt)},
                           {"cm_thought", optional_text(r.cm_thought)},
                           {"activated", r.activated},
                           {"em_prompt", optional_text(r.em_prompt)},
                           {"em_thought", optional_text(r.em_thought)},
                           {"output", to_json(r.output)},
                           {"llm_calls", std::move(calls)}});
    }
    return {{"lan_snapshot", lan_to_json(trace.lan_snapshot)},
            {"external_input", trace.external_input},
            {"records", std::move(records)},
            {"final_output", trace.final_output}};
}

RunTrace trace_from_json(const Json& j) {
    try {
        RunTrace t;
        t.lan_snapshot = lan_from_json(j.at("lan_snapshot"));
        t.external_input = j.at("external_input").get<std::string>();
        t.final_output = j.at("final_output").get<std::string>();
        for (const auto& r : j.at("records")) {
            AgentRunRecord rec;
            rec.agent = r.at("agent").get<std::string>();
            rec.inputs = named_values_from_json(r.at("inputs"), "/records/inputs");
            rec.cm_prompt = optional_text(r, "cm_prompt");
            rec.cm_thought = optional_text(r, "cm_thought");
            rec.activated = r.at("activated").get<bool>();
            rec.em_prompt = optional_text(r, "em_prompt");
            rec.em_thought = optional_text(r, "em_thought");
            rec.output = named_values_from_json(r.at("output"), "/records/output");
            if (auto calls = r.find("llm_calls"); calls != r.end())
                for (const auto& c : *calls)
                    rec.calls.push_back({c.at("tag").get<std::string>(),
                                         c.at("prompt_bytes").get<std::size_t>(),
                                         c.at("response").get<std::string>()});
            t.records.push_back(std::move(rec));
        }
        return t;
    } catch (const Json::exception& e) {
        throw ParseError("trace", e.what());
    }
}

ActivationDecision decide_activation(const Agent& agent, const NamedValues& inputs,
                                     const std::map<std::string, bool>& predecessors_activated,
                                     const Lan& lan, Backend& backend, const RunOptions& options) {
    ActivationDecision d;
    if (!agent.control.enabled) {
        d.activated = true;
        return d;
    }
    for (const auto& required : agent.control.required_predecessors) {
        auto it = predecessors_activated.find(required);
        if (it == predecessors_activated.end() || !it->second) {
            d.activated = false;
            return d;
        }
    }
    CompletionRequest request;
    request.prompt = build_cm_prompt(agent, inputs, lan);
    request.temperature = options.cm_temperature;
    request.max_tokens = options.max_tokens;
    request.tag = "cm:" + agent.name;
    request.cancel = options.cancel;
    auto response = backend.complete(request);
    d.calls.push_back({request.tag, request.prompt.size(), response.text});
    d.prompt = request.prompt;

    RepairContext ctx{request.tag, kDecisionTemperature, options.max_tokens, options.cancel, &d.calls};
    auto parsed = parse_or_reformat(response.text, cm_template(), backend, options.repair_budget, ctx);
    d.activated = parsed.at("result").get<bool>();
    d.thought = parsed.at("thought").get<std::string>();
    return d;
}

ExecutionResult execute_agent(const Agent& agent, const NamedValues& inputs, const Lan& lan,
                              Backend& backend, const RunOptions& options) {
    ExecutionResult r;
    CompletionRequest request;
    request.prompt = build_em_prompt(agent, inputs, lan);
    request.temperature = options.em_temperature;
    request.max_tokens = options.max_tokens;
    request.tag = "em:" + agent.name;
    request.cancel = options.cancel;
    auto response = backend.complete(request);
    r.calls.push_back({request.tag, request.prompt.size(), response.text});
    r.prompt = request.prompt;

    RepairContext ctx{request.tag, kDecisionTemperature, options.max_tokens, options.cancel, &r.calls};
    auto parsed = parse_or_reformat(response.text, em_template(), backend, options.repair_budget, ctx);
    r.output = parsed.at("result").get<std::string>();
    r.thought = parsed.at("thought").get<std::string>();
    return r;
}

NamedValues gather_inputs(const std::string& external_input,
                          const std::vector<const NamedValues*>& predecessor_outputs,
                          const std::vector<std::string>& order) {
    auto rank = [&](const std::string& label) -> std::ptrdiff_t {
        if (label == kExternalInputLabel) return -1;
        auto it = std::find(order.begin(), order.end(), label);
        return it == order.end() ? static_cast<std::ptrdiff_t>(order.size()) : it - order.begin();
    };
    std::vector<NamedValues::Entry> entries{{std::string(kExternalInputLabel), external_input}};
    for (const auto* out : predecessor_outputs)
        for (const auto& entry : *out)
            if (std::none_of(entries.begin(), entries.end(),
                             [&](const auto& e) { return e.first == entry.first; }))
                entries.push_back(entry);
    std::stable_sort(entries.begin(), entries.end(),
                     [&](const auto& a, const auto& b) { return rank(a.first) < rank(b.first); });
    NamedValues merged;
    for (auto& [label, value] : entries) merged.add(std::move(label), std::move(value));
    return merged;
}

std::string final_output_of(const std::vector<AgentRunRecord>& records,
                            const std::string& external_input) {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
        if (const auto* out = it->own_output()) return *out;
    return external_input;
}

RunTrace run_lan(const Lan& lan, const std::string& external_input, Backend& backend,
                 const RunOptions& options) {
    if (auto violations = validate_lan(lan); !violations.empty())
        throw ValidationError("cannot run an invalid LAN: " + describe(violations.front()));
    if (auto problems = structural_problems(lan); !problems.empty())
        throw ValidationError("cannot run a malformed LAN: " + problems.front());

    RunTrace trace;
    trace.lan_snapshot = lan;
    trace.external_input = external_input;
    const auto order = topological_order(lan);
    std::map<std::string, std::size_t> position;

    try {
        for (const auto& name : order) {
            const Agent& agent = *lan.find_agent(name);
            std::vector<const NamedValues*> upstream;
            std::map<std::string, bool> upstream_active;
            for (const auto& pred : lan.predecessors(name)) {
                const auto& rec = trace.records[position.at(pred)];
                upstream.push_back(&rec.output);
                upstream_active[pred] = rec.activated;
            }

            AgentRunRecord rec;
            rec.agent = name;
            rec.inputs = gather_inputs(external_input, upstream, order);
            auto decision = decide_activation(agent, rec.inputs, upstream_active, lan, backend, options);
            rec.activated = decision.activated;
            rec.cm_prompt = std::move(decision.prompt);
            rec.cm_thought = std::move(decision.thought);
            rec.calls = std::move(decision.calls);
            rec.output = rec.inputs;
            if (rec.activated) {
                auto result = execute_agent(agent, rec.inputs, lan, backend, options);
                rec.em_prompt = std::move(result.prompt);
                rec.em_thought = std::move(result.thought);
                rec.calls.insert(rec.calls.end(), result.calls.begin(), result.calls.end());
                rec.output.add(name, std::move(result.output));
            }
            position[name] = trace.records.size();
            trace.records.push_back(std::move(rec));
        }
    } catch (const AbortedError&) {
        trace.final_output = final_output_of(trace.records, external_input);
        throw ExecutionAborted(std::move(trace));
    }
    trace.final_output = final_output_of(trace.records, external_input);
    return trace;
}

}  // namespace lanforge
