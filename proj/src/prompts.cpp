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

#include <sstream>

#include "lanforge/runtime.hpp"

namespace lanforge {
namespace {

void render_knowledge(std::ostringstream& out, const std::vector<KnowledgeItem>& knowledge) {
    if (knowledge.empty()) return;
    out << "# Knowledge\n";
    for (std::size_t i = 0; i < knowledge.size(); ++i) out << i + 1 << ". " << knowledge[i].text << "\n";
    out << "\n";
}

void render_examples(std::ostringstream& out, const std::vector<Example>& examples) {
    if (examples.empty()) return;
    out << "# Examples\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out << "## Example " << i + 1 << "\n"
            << "Input:\n"
            << render_example_inputs(examples[i].inputs)
            << "Result: " << render_example_result(examples[i].result) << "\n\n";
    }
}

void render_task_header(std::ostringstream& out, const Lan& lan) {
    if (!lan.task_description.empty())
        out << "The overall task of the network: " << lan.task_description << "\n";
}

const char* kChainOfThought = "Let's think step by step.\n\n";

void render_format(std::ostringstream& out, const ResponseTemplate& tmpl) {
    out << "# Output format\n"
        << "Reply with a JSON object that follows this template and nothing else. "
           "Lines starting with \"//\" are comments.\n"
        << tmpl.render();
}

}  // namespace

const ResponseTemplate& cm_template() {
    static const ResponseTemplate t{{
        {"thought", FieldKind::string, "your step-by-step reasoning", "\"...\""},
        {"result", FieldKind::boolean, "true to activate the agent, false otherwise",
         "<true or false>"},
    }};
    return t;
}

const ResponseTemplate& em_template() {
    static const ResponseTemplate t{{
        {"thought", FieldKind::string, "your step-by-step reasoning", "\"...\""},
        {"result", FieldKind::string, "the output of the agent", "\"...\""},
    }};
    return t;
}

std::string render_inputs(const NamedValues& inputs, const Lan& lan) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [label, value] : inputs) {
        if (!first) out << "\n";
        first = false;
        if (label == kExternalInputLabel) {
            out << "## Input of the network\n" << value << "\n";
            continue;
        }
        out << "## Output of \"" << label << "\"\n";
        if (const Agent* source = lan.find_agent(label))
            out << "// The subtask of \"" << label << "\": " << source->execution.subtask_description
                << "\n";
        out << value << "\n";
    }
    return out.str();
}

std::string render_example_inputs(const NamedValues& inputs) {
    std::string out;
    for (const auto& [label, value] : inputs) {
        if (label == kExternalInputLabel)
            out += "(from the network) " + value + "\n";
        else
            out += "(from \"" + label + "\") " + value + "\n";
    }
    return out;
}

std::string render_example_result(const ExampleResult& result) {
    if (const bool* b = std::get_if<bool>(&result)) return *b ? "true" : "false";
    return std::get<std::string>(result);
}

std::string build_cm_prompt(const Agent& agent, const NamedValues& inputs, const Lan& lan) {
    std::ostringstream out;
    out << "# Task\n"
        << "You are the control module of the agent \"" << agent.name
        << "\" in a network of LLM agents.\n";
    render_task_header(out, lan);
    out << "The subtask of \"" << agent.name << "\": " << agent.execution.subtask_description << "\n"
        << "Decide whether the agent should be activated for the inputs below. Activate it only "
           "when its subtask needs to be performed on these inputs; an inactive agent forwards "
           "its inputs unchanged.\n\n"
        << "# Inputs of the agent\n"
        << render_inputs(inputs, lan) << "\n";
    render_knowledge(out, agent.control.knowledge);
    render_examples(out, agent.control.examples);
    out << kChainOfThought;
    render_format(out, cm_template());
    return out.str();
}

std::string build_em_prompt(const Agent& agent, const NamedValues& inputs, const Lan& lan) {
    std::ostringstream out;
    out << "# Task\n"
        << "You are the agent \"" << agent.name << "\" in a network of LLM agents.\n";
    render_task_header(out, lan);
    out << "Your subtask: " << agent.execution.subtask_description << "\n"
        << "Your output: " << agent.execution.output_description << "\n\n"
        << "# Inputs of the agent\n"
        << render_inputs(inputs, lan) << "\n";
    render_knowledge(out, agent.execution.knowledge);
    render_examples(out, agent.execution.examples);
    out << kChainOfThought;
    render_format(out, em_template());
    return out.str();
}

}  // namespace lanforge
