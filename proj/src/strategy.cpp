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
#include <map>
#include <set>
#include <sstream>

#include "lanforge/engine.hpp"
#include "lanforge/validate.hpp"

namespace lanforge {
namespace {

bool blank(const std::string& s) { return normalize_whitespace(s).empty(); }

std::string in_quotes(const std::string& name) { return "\"" + name + "\""; }

KnowledgeItem pipeline_item(const std::string& text, const Clock& clock) {
    return {text, Origin::pipeline, clock ? clock() : system_clock_now()};
}

Agent agent_from_spec(const AgentSpec& spec, const Clock& clock) {
    Agent a;
    a.name = spec.name;
    a.control.enabled = spec.cm_enabled.value_or(true);
    a.control.required_predecessors = spec.required_predecessors;
    a.execution.subtask_description = spec.subtask_description;
    a.execution.output_description = spec.output_description;
    for (const auto& k : spec.cm_knowledge) a.control.knowledge.push_back(pipeline_item(k, clock));
    for (const auto& k : spec.em_knowledge) a.execution.knowledge.push_back(pipeline_item(k, clock));
    return a;
}

void add_unique(std::vector<std::string>& list, const std::string& value) {
    if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(value);
}

// Knowledge for one module of a split agent: items whose text matches an
// original item keep its metadata.
std::vector<KnowledgeItem> carry_knowledge(const std::vector<std::string>& texts,
                                           const std::vector<KnowledgeItem>& original,
                                           std::set<std::size_t>& used, const Clock& clock) {
    std::vector<KnowledgeItem> out;
    for (const auto& text : texts) {
        auto it = std::find_if(original.begin(), original.end(),
                               [&](const KnowledgeItem& k) { return k.text == text; });
        if (it != original.end()) {
            used.insert(static_cast<std::size_t>(it - original.begin()));
            out.push_back(*it);
        } else {
            out.push_back(pipeline_item(text, clock));
        }
    }
    return out;
}

std::vector<Edge> internal_edges(const SplitAgentParams& p) {
    if (!p.edges.empty() || p.mode == SplitMode::parallel) return p.edges;
    std::vector<Edge> chain;
    for (std::size_t i = 1; i < p.agents.size(); ++i)
        chain.push_back({p.agents[i - 1].name, p.agents[i].name});
    return chain;
}

Lan split_structure(const Lan& lan, const SplitAgentParams& p, const Clock& clock) {
    const Agent& original = *lan.find_agent(p.agent);
    const auto index = *lan.index_of(p.agent);
    const auto preds = lan.predecessors(p.agent);
    const auto succs = lan.successors(p.agent);
    const bool sequential = p.mode == SplitMode::sequential;

    std::set<std::size_t> used_cm, used_em;
    std::vector<Agent> created;
    for (const auto& spec : p.agents) {
        Agent a = agent_from_spec(spec, clock);
        a.control.knowledge = carry_knowledge(spec.cm_knowledge, original.control.knowledge, used_cm, clock);
        a.execution.knowledge =
            carry_knowledge(spec.em_knowledge, original.execution.knowledge, used_em, clock);
        created.push_back(std::move(a));
    }
    // Knowledge the plan did not place stays with the agents that take over
    // the original's position.
    auto leftovers = [](const std::vector<KnowledgeItem>& items, const std::set<std::size_t>& used) {
        std::vector<KnowledgeItem> out;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (!used.count(i)) out.push_back(items[i]);
        return out;
    };
    auto cm_left = leftovers(original.control.knowledge, used_cm);
    auto em_left = leftovers(original.execution.knowledge, used_em);
    for (std::size_t i = 0; i < created.size(); ++i) {
        if (sequential && i > 0) break;
        auto& a = created[i];
        a.control.knowledge.insert(a.control.knowledge.end(), cm_left.begin(), cm_left.end());
        a.execution.knowledge.insert(a.execution.knowledge.end(), em_left.begin(), em_left.end());
        for (const auto& r : original.control.required_predecessors)
            add_unique(a.control.required_predecessors, r);
    }

    const std::string& last = created.back().name;
    Lan out = lan;
    out.edges.clear();
    for (const auto& e : lan.edges)
        if (e.source != p.agent && e.target != p.agent) out.edges.push_back(e);
    for (auto& a : out.agents) {
        auto& req = a.control.required_predecessors;
        auto it = std::find(req.begin(), req.end(), p.agent);
        if (it == req.end()) continue;
        if (sequential)
            *it = last;
        else
            req.erase(it);
    }
    out.agents.erase(out.agents.begin() + static_cast<std::ptrdiff_t>(index));
    out.agents.insert(out.agents.begin() + static_cast<std::ptrdiff_t>(index), created.begin(),
                      created.end());

    for (const auto& e : internal_edges(p)) out.add_edge(e.source, e.target);
    for (std::size_t i = 0; i < created.size(); ++i) {
        const auto& name = created[i].name;
        if (!sequential || i == 0)
            for (const auto& pr : preds) out.add_edge(pr, name);
        if (!sequential || i + 1 == created.size())
            for (const auto& s : succs) out.add_edge(name, s);
    }
    return out;
}

Lan build_structure(const Lan& lan, const StrategyPlan& plan, const Clock& clock) {
    Lan out = lan;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, AddAgentParams>) {
                out.agents.push_back(agent_from_spec(p.agent, clock));
                for (const auto& e : p.edges) out.edges.push_back(e);
            } else if constexpr (std::is_same_v<T, SplitAgentParams>) {
                out = split_structure(lan, p, clock);
            } else if constexpr (std::is_same_v<T, AddKnowledgeParams>) {
                Agent* a = out.find_agent(p.agent);
                auto& items = plan.strategy == Strategy::AddCmKnowledge ? a->control.knowledge
                                                                        : a->execution.knowledge;
                items.push_back(pipeline_item(p.knowledge, clock));
            } else {
                for (const auto& s : p.sources) out.edges.push_back({s, p.agent});
            }
        },
        plan.parameters);
    return out;
}

bool params_match(const StrategyPlan& plan) {
    switch (plan.strategy) {
        case Strategy::AddAgent: return std::holds_alternative<AddAgentParams>(plan.parameters);
        case Strategy::SplitAgent: return std::holds_alternative<SplitAgentParams>(plan.parameters);
        case Strategy::AddCmKnowledge:
        case Strategy::AddEmKnowledge: return std::holds_alternative<AddKnowledgeParams>(plan.parameters);
        case Strategy::AddInputs: return std::holds_alternative<AddInputsParams>(plan.parameters);
    }
    return false;
}

// Checks that need the original LAN; the candidate LAN is checked afterwards.
std::vector<std::string> precheck(const Lan& lan, const StrategyPlan& plan) {
    std::vector<std::string> v;
    if (!params_match(plan)) {
        v.push_back("parameters do not match strategy " + std::string(to_string(plan.strategy)));
        return v;
    }
    auto require_agent = [&](const std::string& name) {
        if (name.empty())
            v.push_back("no target agent given");
        else if (!lan.find_agent(name))
            v.push_back("unknown agent " + in_quotes(name));
    };
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, AddAgentParams>) {
                const auto& name = p.agent.name;
                if (!blank(name) && lan.find_agent(name))
                    v.push_back("an agent named " + in_quotes(name) + " already exists");
                for (const auto& e : p.edges)
                    if (e.source != name && e.target != name)
                        v.push_back("edge " + in_quotes(e.source) + " -> " + in_quotes(e.target) +
                                    " does not touch the new agent");
            } else if constexpr (std::is_same_v<T, SplitAgentParams>) {
                require_agent(p.agent);
                if (p.agents.size() < 2) v.push_back("a split needs at least two new agents");
                std::set<std::string> names;
                for (const auto& s : p.agents) names.insert(s.name);
                for (const auto& s : p.agents)
                    if (s.name != p.agent && lan.find_agent(s.name))
                        v.push_back("an agent named " + in_quotes(s.name) + " already exists");
                for (const auto& e : p.edges)
                    if (!names.count(e.source) || !names.count(e.target))
                        v.push_back("edge " + in_quotes(e.source) + " -> " + in_quotes(e.target) +
                                    " is not between new agents");
                if (p.mode == SplitMode::parallel && !p.edges.empty())
                    v.push_back("parallel agents cannot be connected to each other");
            } else if constexpr (std::is_same_v<T, AddKnowledgeParams>) {
                require_agent(p.agent);
                if (blank(p.knowledge)) v.push_back("knowledge must not be empty");
            } else {
                require_agent(p.agent);
                if (p.sources.empty()) v.push_back("no input sources given");
                for (const auto& s : p.sources) {
                    if (!lan.find_agent(s))
                        v.push_back("unknown agent " + in_quotes(s));
                    else if (lan.has_edge(s, p.agent))
                        v.push_back(in_quotes(s) + " is already an input of " + in_quotes(p.agent));
                }
            }
        },
        plan.parameters);
    return v;
}

// ---------------------------------------------------------------------------
// Consistency bookkeeping

struct PendingExamples {
    std::map<std::string, std::vector<Example>> cm;
    std::map<std::string, std::vector<Example>> em;
};

void attach(Lan& lan, PendingExamples& pending) {
    for (auto& [name, examples] : pending.cm) {
        Agent* a = lan.find_agent(name);
        if (!a || examples.empty()) continue;
        bool negative = std::any_of(examples.begin(), examples.end(), [](const Example& e) {
            return std::get_if<bool>(&e.result) && !std::get<bool>(e.result);
        });
        // A negative decision can only be reproduced by an enabled CM; a
        // disabled CM already reproduces a positive one.
        if (negative) a->control.enabled = true;
        if (!a->control.enabled) continue;
        a->control.examples.insert(a->control.examples.end(), examples.begin(), examples.end());
    }
    for (auto& [name, examples] : pending.em)
        if (Agent* a = lan.find_agent(name))
            a->execution.examples.insert(a->execution.examples.end(), examples.begin(), examples.end());
}

void relabel(Lan& lan, const std::set<std::string>& skip, const std::string& provenance,
             const std::string& from, const std::string& to) {
    auto fix = [&](std::vector<Example>& examples) {
        for (auto& ex : examples) {
            if (ex.provenance != provenance || !ex.inputs.contains(from)) continue;
            NamedValues renamed;
            for (const auto& [label, value] : ex.inputs)
                renamed.merge(label == from ? to : label, value);
            ex.inputs = std::move(renamed);
        }
    };
    for (auto& a : lan.agents) {
        if (skip.count(a.name)) continue;
        fix(a.control.examples);
        fix(a.execution.examples);
    }
}

ResponseTemplate select_template(std::vector<std::string> names) {
    ResponseTemplate t;
    std::string listed;
    for (const auto& n : names) listed += (listed.empty() ? "" : ", ") + in_quotes(n);
    t.fields = {
        {"thought", FieldKind::string, "your step-by-step reasoning", "\"...\""},
        {"agent_name", FieldKind::string, "exactly one of: " + listed, "\"...\"", true,
         [names](const Json& v) -> std::optional<std::string> {
             if (std::find(names.begin(), names.end(), v.get<std::string>()) == names.end())
                 return "must be the name of one of the new agents";
             return std::nullopt;
         }},
    };
    return t;
}

std::string build_select_prompt(const Lan& lan, const SplitAgentParams& p, const AgentRunRecord& rec,
                                const ResponseTemplate& tmpl) {
    std::ostringstream out;
    out << "# Task\n"
        << "The agent " << in_quotes(p.agent)
        << " of a network of LLM agents was split into agents that work in parallel. For the "
           "input below, "
        << in_quotes(p.agent)
        << " was activated and produced the output below. Select the one new agent that is "
           "responsible for producing this output.\n\n"
        << "# Inputs of " << in_quotes(p.agent) << "\n"
        << render_inputs(rec.inputs, lan) << "\n"
        << "# Output of " << in_quotes(p.agent) << "\n"
        << (rec.own_output() ? *rec.own_output() : std::string()) << "\n\n"
        << "# New agents\n";
    for (const auto& s : p.agents)
        out << "## " << in_quotes(s.name) << "\n"
            << "Subtask: " << s.subtask_description << "\n"
            << "Output description: " << s.output_description << "\n";
    out << "\nLet's think step by step.\n\n"
        << "# Output format\n"
        << "Reply with a JSON object that follows this template and nothing else. "
           "Lines starting with \"//\" are comments.\n"
        << tmpl.render();
    return out.str();
}

}  // namespace

std::vector<std::string> validate_plan(const Lan& lan, const StrategyPlan& plan) {
    auto v = precheck(lan, plan);
    if (!v.empty()) return v;
    Lan candidate = build_structure(lan, plan, fixed_clock());
    for (const auto& violation : validate_lan(candidate)) v.push_back(describe(violation));
    for (auto& problem : structural_problems(candidate)) v.push_back(std::move(problem));
    return v;
}

Lan apply_plan_structure(const Lan& lan, const StrategyPlan& plan, const Clock& clock) {
    if (auto v = validate_plan(lan, plan); !v.empty()) throw PlanValidationError(std::move(v));
    return build_structure(lan, plan, clock);
}

RunTrace simulate_trace(const Lan& lan, const RunTrace& old, const DecisionHook& hook) {
    RunTrace trace;
    trace.lan_snapshot = lan;
    trace.external_input = old.external_input;
    const auto order = topological_order(lan);
    std::map<std::string, std::size_t> position;
    for (const auto& name : order) {
        const Agent& agent = *lan.find_agent(name);
        std::vector<const NamedValues*> upstream;
        std::map<std::string, bool> upstream_active;
        for (const auto& pred : lan.predecessors(name)) {
            const auto& r = trace.records[position.at(pred)];
            upstream.push_back(&r.output);
            upstream_active[pred] = r.activated;
        }
        AgentRunRecord rec;
        rec.agent = name;
        rec.inputs = gather_inputs(old.external_input, upstream, order);
        rec.output = rec.inputs;
        if (const auto* before = old.record(name)) {
            rec.activated = before->activated;
            rec.cm_prompt = before->cm_prompt;
            rec.cm_thought = before->cm_thought;
            rec.em_prompt = before->em_prompt;
            rec.em_thought = before->em_thought;
            if (const auto* value = before->own_output()) rec.output.add(name, *value);
        } else {
            auto decision = hook ? hook(agent, rec.inputs) : std::nullopt;
            bool gated = std::any_of(agent.control.required_predecessors.begin(),
                                     agent.control.required_predecessors.end(),
                                     [&](const std::string& r) { return !upstream_active[r]; });
            if (agent.control.enabled && !gated)
                rec.cm_prompt = build_cm_prompt(agent, rec.inputs, lan);
            if (decision && decision->activated) {
                rec.activated = true;
                rec.output.add(name, decision->output);
            }
        }
        position[name] = trace.records.size();
        trace.records.push_back(std::move(rec));
    }
    trace.final_output = final_output_of(trace.records, trace.external_input);
    return trace;
}

ApplyResult apply_strategy(const Lan& lan, const StrategyPlan& plan,
                           const std::vector<HistoryEntry>& history, Backend& backend,
                           const EngineOptions& options) {
    ApplyResult result;
    result.lan = apply_plan_structure(lan, plan, options.clock);
    auto warn = [&](std::string message) {
        if (options.warn) options.warn(message);
        result.warnings.push_back(std::move(message));
    };

    PendingExamples pending;
    std::vector<HistoryEntry> rederived;

    const auto* add = std::get_if<AddAgentParams>(&plan.parameters);
    const auto* split = std::get_if<SplitAgentParams>(&plan.parameters);
    std::set<std::string> created;
    if (add) created.insert(add->agent.name);
    if (split)
        for (const auto& s : split->agents) created.insert(s.name);

    for (const auto& entry : history) {
        const std::string& id = entry.example.id;
        // Agents kept from the old LAN but absent from its trace cannot be
        // reconstructed; they stay inactive.
        bool incomplete = false;
        DecisionHook base_hook = [&](const Agent& a, const NamedValues&) -> std::optional<SimulatedDecision> {
            if (!created.count(a.name)) incomplete = true;
            return std::nullopt;
        };

        if (add) {
            const std::string& name = add->agent.name;
            std::optional<NamedValues> inputs;
            DecisionHook hook = [&](const Agent& a, const NamedValues& in) -> std::optional<SimulatedDecision> {
                if (a.name == name) inputs = in;
                return base_hook(a, in);
            };
            auto trace = simulate_trace(result.lan, entry.trace, hook);
            bool sources_known = true;
            for (const auto& pred : result.lan.predecessors(name))
                if (!entry.trace.record(pred)) sources_known = false;
            if (inputs && sources_known && !incomplete)
                pending.cm[name].push_back({*inputs, false, id});
            else
                warn("example " + in_quotes(id) + ": inputs of " + in_quotes(name) +
                     " cannot be reconstructed; no negative example added");
            rederived.push_back({entry.example, std::move(trace)});
            continue;
        }

        if (split) {
            const auto* original = entry.trace.record(split->agent);
            if (!original) {
                warn("example " + in_quotes(id) + ": " + in_quotes(split->agent) +
                     " is missing from its trace; no examples redistributed");
                rederived.push_back({entry.example, simulate_trace(result.lan, entry.trace, base_hook)});
                continue;
            }
            std::string takeover;
            DecisionHook hook;
            if (!original->activated) {
                hook = [&](const Agent& a, const NamedValues& in) -> std::optional<SimulatedDecision> {
                    if (created.count(a.name)) pending.cm[a.name].push_back({in, false, id});
                    return base_hook(a, in);
                };
            } else if (split->mode == SplitMode::parallel) {
                std::vector<std::string> names;
                for (const auto& s : split->agents) names.push_back(s.name);
                const auto& tmpl = select_template(names);
                CompletionRequest request;
                request.prompt = build_select_prompt(result.lan, *split, *original, tmpl);
                request.temperature = kDecisionTemperature;
                request.max_tokens = options.run.max_tokens;
                request.tag = "select:" + split->agent;
                request.cancel = options.run.cancel;
                auto response = backend.complete(request);
                result.calls.push_back({request.tag, request.prompt.size(), response.text});
                RepairContext ctx{request.tag, kDecisionTemperature, options.run.max_tokens,
                                  options.run.cancel, &result.calls};
                auto parsed = parse_or_reformat(response.text, tmpl, backend,
                                                options.run.repair_budget, ctx);
                takeover = parsed.at("agent_name").get<std::string>();
                const std::string output = *original->own_output();
                hook = [&, output](const Agent& a, const NamedValues& in) -> std::optional<SimulatedDecision> {
                    if (!created.count(a.name)) return base_hook(a, in);
                    bool chosen = a.name == takeover;
                    pending.cm[a.name].push_back({in, chosen, id});
                    if (!chosen) return std::nullopt;
                    pending.em[a.name].push_back({in, output, id});
                    return SimulatedDecision{true, output};
                };
            } else {
                takeover = split->agents.back().name;
                const std::string output = *original->own_output();
                hook = [&, output](const Agent& a, const NamedValues& in) -> std::optional<SimulatedDecision> {
                    if (!created.count(a.name)) return base_hook(a, in);
                    pending.cm[a.name].push_back({in, true, id});
                    std::string value = output;
                    if (a.name != takeover) {
                        auto run = execute_agent(a, in, result.lan, backend, options.run);
                        result.calls.insert(result.calls.end(), run.calls.begin(), run.calls.end());
                        value = run.output;
                    }
                    pending.em[a.name].push_back({in, value, id});
                    return SimulatedDecision{true, value};
                };
            }
            auto trace = simulate_trace(result.lan, entry.trace, hook);
            if (incomplete)
                warn("example " + in_quotes(id) + ": some agents are missing from its trace");
            if (!takeover.empty() && takeover != split->agent)
                relabel(result.lan, created, id, split->agent, takeover);
            rederived.push_back({entry.example, std::move(trace)});
            continue;
        }

        rederived.push_back({entry.example, simulate_trace(result.lan, entry.trace, base_hook)});
        if (incomplete) warn("example " + in_quotes(id) + ": some agents are missing from its trace");
    }

    attach(result.lan, pending);
    // Snapshots in the re-derived traces must carry the final examples.
    for (auto& entry : rederived) {
        entry.trace.lan_snapshot = result.lan;
        std::map<std::string, bool> active;
        for (auto& rec : entry.trace.records) {
            active[rec.agent] = rec.activated;
            const Agent* a = result.lan.find_agent(rec.agent);
            if (!a || !created.count(a->name)) continue;
            bool gated = std::any_of(a->control.required_predecessors.begin(),
                                     a->control.required_predecessors.end(),
                                     [&](const std::string& r) { return !active[r]; });
            if (a->control.enabled && !gated)
                rec.cm_prompt = build_cm_prompt(*a, rec.inputs, result.lan);
            else
                rec.cm_prompt.reset();
        }
    }
    result.history = std::move(rederived);
    return result;
}

}  // namespace lanforge
