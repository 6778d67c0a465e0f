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
#include <chrono>
#include <ctime>
#include <sstream>

#include "lanforge/engine.hpp"
#include "lanforge/validate.hpp"

namespace lanforge {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

const ResponseTemplate& judge_template() {
    static const ResponseTemplate t{{
        {"thought", FieldKind::string, "your step-by-step reasoning", "\"...\""},
        {"result", FieldKind::boolean,
         "true if the output is as good as the ground truth for this task, false otherwise",
         "<true or false>"},
    }};
    return t;
}

bool has_example_from(const std::vector<Example>& examples, const std::string& provenance) {
    return std::any_of(examples.begin(), examples.end(),
                       [&](const Example& e) { return e.provenance == provenance; });
}

void render_knowledge_list(std::ostringstream& out, const std::vector<KnowledgeItem>& items) {
    if (items.empty()) {
        out << "(none)\n";
        return;
    }
    for (std::size_t i = 0; i < items.size(); ++i) out << i + 1 << ". " << items[i].text << "\n";
}

void render_example_list(std::ostringstream& out, const std::vector<Example>& examples) {
    if (examples.empty()) {
        out << "(none)\n";
        return;
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out << "### Example " << i + 1 << "\n"
            << "Input:\n"
            << render_example_inputs(examples[i].inputs)
            << "Result: " << render_example_result(examples[i].result) << "\n";
    }
}

std::string in_quotes(const std::string& name) { return "\"" + name + "\""; }

}  // namespace

std::string system_clock_now() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Clock fixed_clock(std::string instant) {
    return [instant = std::move(instant)] { return instant; };
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool pending = false;
    for (char c : text) {
        if (is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out += ' ';
        pending = false;
        out += c;
    }
    return out;
}

std::string agent_name_from_task(const std::string& task_description) {
    std::string cleaned;
    for (char c : task_description) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::ispunct(u)) continue;
        cleaned += c;
    }
    std::istringstream words(cleaned);
    std::string word, name;
    for (int n = 0; n < 6 && words >> word; ++n) name += (name.empty() ? "" : " ") + word;
    if (name.empty()) name = "Agent";
    return name;
}

Lan init_lan(const std::string& task_description, const std::string& input_description,
             const std::string& output_description, const Clock&) {
    if (normalize_whitespace(task_description).empty())
        throw ValidationError("task description must not be empty");
    Lan lan;
    lan.task_description = task_description;
    lan.input_description = input_description;
    lan.output_description = output_description;
    Agent agent;
    agent.name = agent_name_from_task(task_description);
    agent.control.enabled = false;
    agent.execution.subtask_description = task_description;
    agent.execution.output_description = normalize_whitespace(output_description).empty()
                                             ? "A string, the result of the task"
                                             : output_description;
    lan.agents.push_back(std::move(agent));
    return lan;
}

std::string build_judge_prompt(const RunTrace& trace, const TrainingExample& example) {
    std::ostringstream out;
    out << "# Task\n"
        << "Decide whether the output of a network of LLM agents is satisfactory. It is "
           "satisfactory when it fulfils the task as well as the ground truth does; the wording "
           "may differ.\n";
    if (!trace.lan_snapshot.task_description.empty())
        out << "The task of the network: " << trace.lan_snapshot.task_description << "\n";
    out << "\n# Input\n" << example.input << "\n\n"
        << "# Ground truth\n" << example.ground_truth << "\n\n"
        << "# Output of the network\n" << trace.final_output << "\n\n"
        << "Let's think step by step.\n\n"
        << "# Output format\n"
        << "Reply with a JSON object that follows this template and nothing else. "
           "Lines starting with \"//\" are comments.\n"
        << judge_template().render();
    return out.str();
}

SatisfactionResult check_satisfaction(const RunTrace& trace, const TrainingExample& example,
                                      Backend& backend, const EngineOptions& options) {
    SatisfactionResult r;
    if (normalize_whitespace(trace.final_output) == normalize_whitespace(example.ground_truth)) {
        r.satisfied = true;
        return r;
    }
    CompletionRequest request;
    request.prompt = build_judge_prompt(trace, example);
    request.temperature = kDecisionTemperature;
    request.max_tokens = options.run.max_tokens;
    request.tag = "judge";
    request.cancel = options.run.cancel;
    auto response = backend.complete(request);
    r.calls.push_back({request.tag, request.prompt.size(), response.text});
    RepairContext ctx{request.tag, kDecisionTemperature, options.run.max_tokens, options.run.cancel,
                      &r.calls};
    auto parsed = parse_or_reformat(response.text, judge_template(), backend,
                                    options.run.repair_budget, ctx);
    r.satisfied = parsed.at("result").get<bool>();
    r.thought = parsed.at("thought").get<std::string>();
    return r;
}

Lan record_success(Lan lan, const RunTrace& trace, const std::string& provenance) {
    for (const auto& rec : trace.records) {
        Agent* agent = lan.find_agent(rec.agent);
        if (!agent) continue;
        if (rec.cm_prompt && !has_example_from(agent->control.examples, provenance))
            agent->control.examples.push_back({rec.inputs, rec.activated, provenance});
        if (const auto* out = rec.own_output();
            out && !has_example_from(agent->execution.examples, provenance))
            agent->execution.examples.push_back({rec.inputs, *out, provenance});
    }
    return lan;
}

std::string render_lan_description(const Lan& lan, const RunTrace& trace) {
    std::ostringstream out;
    out << "# Agents of the network\n";
    for (const auto& a : lan.agents)
        out << "## " << in_quotes(a.name) << "\n"
            << "Subtask: " << a.execution.subtask_description << "\n";

    out << "\n# Data flow of the last execution\n";
    std::vector<std::string> order;
    try {
        order = topological_order(lan);
    } catch (const CycleError&) {
        for (const auto& a : lan.agents) order.push_back(a.name);
    }
    for (const auto& name : order) {
        auto preds = lan.predecessors(name);
        if (preds.empty())
            out << "- From the input of the network to " << in_quotes(name) << ":\n"
                << trace.external_input << "\n";
        for (const auto& p : preds) {
            out << "- From " << in_quotes(p) << " to " << in_quotes(name) << ":\n";
            const auto* rec = trace.record(p);
            const auto* value = rec ? rec->own_output() : nullptr;
            if (value)
                out << *value << "\n";
            else if (rec)
                out << "(nothing, " << in_quotes(p) << " was not activated)\n";
            else
                out << "(nothing, " << in_quotes(p) << " did not run)\n";
        }
    }

    out << "\n# Input and output of the network\n";
    if (!lan.input_description.empty()) out << "Input description: " << lan.input_description << "\n";
    out << "Input:\n" << trace.external_input << "\n";
    if (!lan.output_description.empty())
        out << "Output description: " << lan.output_description << "\n";
    out << "Output:\n" << trace.final_output << "\n";
    return out.str();
}

std::string render_agent_description(const Agent& agent, const RunTrace& trace) {
    std::ostringstream out;
    out << "# Agent " << in_quotes(agent.name) << "\n"
        << "Subtask: " << agent.execution.subtask_description << "\n"
        << "Output description: " << agent.execution.output_description << "\n";

    out << "\n# Control module\n";
    if (!agent.control.enabled) out << "Disabled: the agent is always activated.\n";
    if (!agent.control.required_predecessors.empty()) {
        out << "Required predecessors:";
        for (const auto& r : agent.control.required_predecessors) out << " " << in_quotes(r);
        out << "\n";
    }
    out << "## Knowledge\n";
    render_knowledge_list(out, agent.control.knowledge);
    out << "## Examples\n";
    render_example_list(out, agent.control.examples);

    out << "\n# Execution module\n## Knowledge\n";
    render_knowledge_list(out, agent.execution.knowledge);
    out << "## Examples\n";
    render_example_list(out, agent.execution.examples);

    out << "\n# Last execution\n";
    const auto* rec = trace.record(agent.name);
    if (!rec) {
        out << "The agent did not run.\n";
        return out.str();
    }
    out << "## Inputs\n" << render_inputs(rec->inputs, trace.lan_snapshot);
    if (rec->cm_thought) out << "## Thought of the control module\n" << *rec->cm_thought << "\n";
    out << "## Activated\n" << (rec->activated ? "yes" : "no") << "\n";
    if (rec->em_thought) out << "## Thought of the execution module\n" << *rec->em_thought << "\n";
    if (const auto* value = rec->own_output()) out << "## Output\n" << *value << "\n";
    return out.str();
}

}  // namespace lanforge
