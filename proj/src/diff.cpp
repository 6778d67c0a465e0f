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

#include "lanforge/diff.hpp"

#include <algorithm>
#include <set>

#include "lanforge/errors.hpp"

namespace lanforge {
namespace {

constexpr int kDeleteSpan = 3;  // select (2) + Delete key (1)

int type_text(std::string_view text) {
    return text.empty() ? 0 : cost_of(EditActionKind::click) + static_cast<int>(keystrokes(text));
}

int replace_text(std::string_view old_value, std::string_view new_value) {
    return (old_value.empty() ? 0 : kDeleteSpan) + type_text(new_value);
}

std::string render_example(const Example& ex) {
    std::string s;
    for (const auto& [label, value] : ex.inputs) s += label + value;
    if (const bool* b = std::get_if<bool>(&ex.result))
        s += *b ? "true" : "false";
    else
        s += std::get<std::string>(ex.result);
    return s;
}

std::vector<KnowledgeItem>& knowledge_of(Agent& a, Module m) {
    return m == Module::control ? a.control.knowledge : a.execution.knowledge;
}
const std::vector<KnowledgeItem>& knowledge_of(const Agent& a, Module m) {
    return m == Module::control ? a.control.knowledge : a.execution.knowledge;
}
std::vector<Example>& examples_of(Agent& a, Module m) {
    return m == Module::control ? a.control.examples : a.execution.examples;
}
const std::vector<Example>& examples_of(const Agent& a, Module m) {
    return m == Module::control ? a.control.examples : a.execution.examples;
}

template <class T, class RemoveOp, class AddOp>
void diff_list(const std::vector<T>& from, const std::vector<T>& to, RemoveOp remove, AddOp add) {
    std::size_t prefix = 0;
    while (prefix < from.size() && prefix < to.size() && from[prefix] == to[prefix]) ++prefix;
    for (std::size_t i = from.size(); i-- > prefix;) remove(i, from[i]);
    for (std::size_t i = prefix; i < to.size(); ++i) add(to[i]);
}

// Ops turning `from` into `to`; `name` is the agent's current name.
void diff_agent(const Agent& from, const Agent& to, std::vector<EditOp>& out) {
    const auto& name = to.name;
    if (from.execution.subtask_description != to.execution.subtask_description)
        out.push_back(SetTextOp{name, TextField::subtask_description,
                                from.execution.subtask_description,
                                to.execution.subtask_description});
    if (from.execution.output_description != to.execution.output_description)
        out.push_back(SetTextOp{name, TextField::output_description,
                                from.execution.output_description, to.execution.output_description});
    if (from.control.enabled != to.control.enabled)
        out.push_back(SetEnabledOp{name, to.control.enabled});
    for (Module m : {Module::control, Module::execution}) {
        diff_list(
            knowledge_of(from, m), knowledge_of(to, m),
            [&](std::size_t i, const KnowledgeItem& k) {
                out.push_back(RemoveKnowledgeOp{name, m, i, k.text});
            },
            [&](const KnowledgeItem& k) { out.push_back(AddKnowledgeOp{name, m, k}); });
        diff_list(
            examples_of(from, m), examples_of(to, m),
            [&](std::size_t i, const Example&) { out.push_back(RemoveExampleOp{name, m, i}); },
            [&](const Example& e) { out.push_back(AddExampleOp{name, m, e}); });
    }
}

Agent& agent_or_throw(Lan& lan, const std::string& name) {
    Agent* a = lan.find_agent(name);
    if (!a) throw ValidationError("edit script names unknown agent '" + name + "'");
    return *a;
}

void rename_agent(Lan& lan, const std::string& from, const std::string& to) {
    if (from == to) return;
    if (lan.find_agent(to)) throw ValidationError("agent '" + to + "' already exists");
    agent_or_throw(lan, from).name = to;
    for (auto& e : lan.edges) {
        if (e.source == from) e.source = to;
        if (e.target == from) e.target = to;
    }
    for (auto& a : lan.agents)
        for (auto& r : a.control.required_predecessors)
            if (r == from) r = to;
}

}  // namespace

int cost_of(EditActionKind kind) noexcept {
    switch (kind) {
        case EditActionKind::click:
        case EditActionKind::keypress: return 1;
        case EditActionKind::drag:
        case EditActionKind::select: return 2;
    }
    return 0;
}

int EditAction::cost() const noexcept { return cost_of(kind); }

std::size_t keystrokes(std::string_view text) {
    std::size_t n = 0;
    for (unsigned char c : text)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

Agent default_new_agent() {
    Agent a;
    a.control.enabled = true;
    a.execution.subtask_description = "New subtask";
    a.execution.output_description = "A string";
    return a;
}

std::vector<EditOp> lan_edit_script(const Lan& from, const Lan& to) {
    std::vector<EditOp> out;
    using F = SetLanTextOp::Field;
    if (from.task_description != to.task_description)
        out.push_back(SetLanTextOp{F::task_description, from.task_description, to.task_description});
    if (from.input_description != to.input_description)
        out.push_back(SetLanTextOp{F::input_description, from.input_description, to.input_description});
    if (from.output_description != to.output_description)
        out.push_back(
            SetLanTextOp{F::output_description, from.output_description, to.output_description});

    std::set<std::string> removed;
    for (const auto& a : from.agents) {
        if (to.find_agent(a.name)) continue;
        out.push_back(DeleteAgentOp{a.name});
        removed.insert(a.name);
    }
    for (const auto& e : from.edges) {
        if (removed.count(e.source) || removed.count(e.target)) continue;
        if (!to.has_edge(e.source, e.target)) out.push_back(DisconnectOp{e.source, e.target});
    }

    const Agent blank = default_new_agent();
    for (const auto& a : to.agents) {
        if (const Agent* old = from.find_agent(a.name)) {
            diff_agent(*old, a, out);
        } else {
            out.push_back(NewAgentOp{});
            out.push_back(SetTextOp{"", TextField::name, "", a.name});
            diff_agent(blank, a, out);
        }
    }

    for (const auto& e : to.edges)
        if (!from.has_edge(e.source, e.target)) out.push_back(ConnectOp{e.source, e.target});

    for (const auto& a : to.agents) {
        const Agent* old = from.find_agent(a.name);
        const auto& before = old ? old->control.required_predecessors : blank.control.required_predecessors;
        if (before != a.control.required_predecessors)
            out.push_back(SetRequiredPredecessorsOp{a.name, before, a.control.required_predecessors});
    }
    return out;
}

Lan apply_edit_script(Lan lan, const std::vector<EditOp>& script) {
    for (const auto& op : script) {
        std::visit(
            [&](const auto& o) {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, NewAgentOp>) {
                    if (lan.find_agent(""))
                        throw ValidationError("an unnamed agent already exists");
                    lan.agents.push_back(default_new_agent());
                } else if constexpr (std::is_same_v<T, DeleteAgentOp>) {
                    if (!lan.remove_agent(o.agent))
                        throw ValidationError("cannot delete unknown agent '" + o.agent + "'");
                } else if constexpr (std::is_same_v<T, ConnectOp>) {
                    agent_or_throw(lan, o.source);
                    agent_or_throw(lan, o.target);
                    lan.add_edge(o.source, o.target);
                } else if constexpr (std::is_same_v<T, DisconnectOp>) {
                    if (!lan.remove_edge(o.source, o.target))
                        throw ValidationError("no edge " + o.source + " -> " + o.target);
                } else if constexpr (std::is_same_v<T, SetTextOp>) {
                    switch (o.field) {
                        case TextField::name: rename_agent(lan, o.agent, o.new_value); break;
                        case TextField::subtask_description:
                            agent_or_throw(lan, o.agent).execution.subtask_description = o.new_value;
                            break;
                        case TextField::output_description:
                            agent_or_throw(lan, o.agent).execution.output_description = o.new_value;
                            break;
                    }
                } else if constexpr (std::is_same_v<T, SetEnabledOp>) {
                    agent_or_throw(lan, o.agent).control.enabled = o.enabled;
                } else if constexpr (std::is_same_v<T, SetRequiredPredecessorsOp>) {
                    agent_or_throw(lan, o.agent).control.required_predecessors = o.new_value;
                } else if constexpr (std::is_same_v<T, AddKnowledgeOp>) {
                    knowledge_of(agent_or_throw(lan, o.agent), o.module).push_back(o.item);
                } else if constexpr (std::is_same_v<T, RemoveKnowledgeOp>) {
                    auto& list = knowledge_of(agent_or_throw(lan, o.agent), o.module);
                    if (o.index >= list.size()) throw ValidationError("knowledge index out of range");
                    list.erase(list.begin() + static_cast<std::ptrdiff_t>(o.index));
                } else if constexpr (std::is_same_v<T, AddExampleOp>) {
                    examples_of(agent_or_throw(lan, o.agent), o.module).push_back(o.example);
                } else if constexpr (std::is_same_v<T, RemoveExampleOp>) {
                    auto& list = examples_of(agent_or_throw(lan, o.agent), o.module);
                    if (o.index >= list.size()) throw ValidationError("example index out of range");
                    list.erase(list.begin() + static_cast<std::ptrdiff_t>(o.index));
                } else if constexpr (std::is_same_v<T, SetLanTextOp>) {
                    using F = SetLanTextOp::Field;
                    (o.field == F::task_description    ? lan.task_description
                     : o.field == F::input_description ? lan.input_description
                                                       : lan.output_description) = o.new_value;
                }
            },
            op);
    }
    return lan;
}

int edit_cost(const EditOp& op) {
    return std::visit(
        [](const auto& o) -> int {
            using T = std::decay_t<decltype(o)>;
            const int click = cost_of(EditActionKind::click);
            if constexpr (std::is_same_v<T, NewAgentOp>) {
                return click;
            } else if constexpr (std::is_same_v<T, DeleteAgentOp>) {
                return click + cost_of(EditActionKind::keypress);  // select node, press Delete
            } else if constexpr (std::is_same_v<T, ConnectOp>) {
                return cost_of(EditActionKind::drag);
            } else if constexpr (std::is_same_v<T, DisconnectOp>) {
                return kDeleteSpan;
            } else if constexpr (std::is_same_v<T, SetTextOp> || std::is_same_v<T, SetLanTextOp>) {
                return replace_text(o.old_value, o.new_value);
            } else if constexpr (std::is_same_v<T, SetEnabledOp>) {
                return click;
            } else if constexpr (std::is_same_v<T, SetRequiredPredecessorsOp>) {
                std::set<std::string> a(o.old_value.begin(), o.old_value.end());
                std::set<std::string> b(o.new_value.begin(), o.new_value.end());
                int n = 0;
                for (const auto& x : a) n += !b.count(x);
                for (const auto& x : b) n += !a.count(x);
                return n * click;
            } else if constexpr (std::is_same_v<T, AddKnowledgeOp>) {
                return type_text(o.item.text);
            } else if constexpr (std::is_same_v<T, AddExampleOp>) {
                return type_text(render_example(o.example));
            } else {
                return kDeleteSpan;  // RemoveKnowledgeOp, RemoveExampleOp
            }
        },
        op);
}

int lmd(const Lan& from, const Lan& to) {
    int total = 0;
    for (const auto& op : lan_edit_script(from, to)) total += edit_cost(op);
    return total;
}

std::string describe(const EditOp& op) {
    auto module_name = [](Module m) { return m == Module::control ? "CM" : "EM"; };
    auto field_name = [](TextField f) {
        switch (f) {
            case TextField::name: return "name";
            case TextField::subtask_description: return "subtask_description";
            case TextField::output_description: return "output_description";
        }
        return "?";
    };
    return std::visit(
        [&](const auto& o) -> std::string {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, NewAgentOp>) {
                return "NewAgent";
            } else if constexpr (std::is_same_v<T, DeleteAgentOp>) {
                return "DeleteAgent(" + o.agent + ")";
            } else if constexpr (std::is_same_v<T, ConnectOp>) {
                return "Connect(" + o.source + " -> " + o.target + ")";
            } else if constexpr (std::is_same_v<T, DisconnectOp>) {
                return "Disconnect(" + o.source + " -> " + o.target + ")";
            } else if constexpr (std::is_same_v<T, SetTextOp>) {
                return std::string("Set") + field_name(o.field) + "(" + o.agent + ", \"" +
                       o.new_value + "\")";
            } else if constexpr (std::is_same_v<T, SetEnabledOp>) {
                return "SetEnabled(" + o.agent + ", " + (o.enabled ? "true" : "false") + ")";
            } else if constexpr (std::is_same_v<T, SetRequiredPredecessorsOp>) {
                std::string s = "SetRequiredPredecessors(" + o.agent + ", [";
                for (std::size_t i = 0; i < o.new_value.size(); ++i)
                    s += (i ? ", " : "") + o.new_value[i];
                return s + "])";
            } else if constexpr (std::is_same_v<T, AddKnowledgeOp>) {
                return std::string("AddKnowledge(") + o.agent + ", " + module_name(o.module) +
                       ", \"" + o.item.text + "\")";
            } else if constexpr (std::is_same_v<T, RemoveKnowledgeOp>) {
                return std::string("RemoveKnowledge(") + o.agent + ", " + module_name(o.module) +
                       ", #" + std::to_string(o.index) + ")";
            } else if constexpr (std::is_same_v<T, AddExampleOp>) {
                return std::string("AddExample(") + o.agent + ", " + module_name(o.module) + ")";
            } else if constexpr (std::is_same_v<T, RemoveExampleOp>) {
                return std::string("RemoveExample(") + o.agent + ", " + module_name(o.module) +
                       ", #" + std::to_string(o.index) + ")";
            } else {
                return "SetLanText(\"" + o.new_value + "\")";
            }
        },
        op);
}

}  // namespace lanforge
