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

#include "lanforge/validate.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "lanforge/errors.hpp"

namespace lanforge {
namespace {

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

// Adjacency by insertion index. Edges naming unknown agents are ignored here;
// structural_problems reports them.
std::vector<std::vector<std::size_t>> adjacency(const Lan& lan) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < lan.agents.size(); ++i) index.emplace(lan.agents[i].name, i);
    std::vector<std::vector<std::size_t>> adj(lan.agents.size());
    for (const auto& e : lan.edges) {
        auto s = index.find(e.source);
        auto t = index.find(e.target);
        if (s == index.end() || t == index.end()) continue;
        adj[s->second].push_back(t->second);
    }
    return adj;
}

// Tarjan's strongly connected components. Returns components that contain a
// cycle (size > 1, or a self loop).
std::vector<std::vector<std::size_t>> cyclic_components(
    const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> out;
    int counter = 0;

    // Iterative to keep deep graphs off the call stack.
    struct Frame {
        std::size_t node;
        std::size_t next;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            auto& f = frames.back();
            if (f.next < adj[f.node].size()) {
                std::size_t w = adj[f.node][f.next++];
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.node] = std::min(low[f.node], index[w]);
                }
                continue;
            }
            std::size_t v = f.node;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().node] = std::min(low[frames.back().node], low[v]);
            if (low[v] != index[v]) continue;
            std::vector<std::size_t> comp;
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
            } while (w != v);
            bool self_loop = std::find(adj[v].begin(), adj[v].end(), v) != adj[v].end();
            if (comp.size() > 1 || self_loop) {
                std::sort(comp.begin(), comp.end());
                out.push_back(std::move(comp));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<Violation> validate_lan(const Lan& lan) {
    std::vector<Violation> out;

    for (const auto& comp : cyclic_components(adjacency(lan))) {
        CycleViolation v;
        for (auto i : comp) v.agents.push_back(lan.agents[i].name);
        out.emplace_back(std::move(v));
    }

    for (std::size_t i = 0; i < lan.agents.size(); ++i) {
        const auto& a = lan.agents[i];
        if (blank(a.name)) out.emplace_back(EmptyFieldViolation{i, a.name, AgentField::name});
        if (blank(a.execution.subtask_description))
            out.emplace_back(EmptyFieldViolation{i, a.name, AgentField::subtask_description});
        if (blank(a.execution.output_description))
            out.emplace_back(EmptyFieldViolation{i, a.name, AgentField::output_description});
    }

    std::map<std::string, int> counts;
    std::vector<std::string> order;
    for (const auto& a : lan.agents) {
        if (blank(a.name)) continue;
        if (counts[a.name]++ == 1) order.push_back(a.name);
    }
    for (auto& name : order) out.emplace_back(DuplicateNameViolation{std::move(name)});
    return out;
}

std::vector<std::string> structural_problems(const Lan& lan) {
    std::vector<std::string> out;
    std::set<std::string> names;
    for (const auto& a : lan.agents) {
        names.insert(a.name);
        if (a.name == kExternalInputLabel)
            out.push_back("agent name '" + a.name + "' is reserved for the external input");
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : lan.edges) {
        if (!names.count(e.source))
            out.push_back("edge source '" + e.source + "' is not an agent");
        if (!names.count(e.target))
            out.push_back("edge target '" + e.target + "' is not an agent");
        if (!seen.emplace(e.source, e.target).second)
            out.push_back("duplicate edge " + e.source + " -> " + e.target);
    }
    for (const auto& a : lan.agents) {
        for (const auto& r : a.control.required_predecessors) {
            if (!lan.has_edge(r, a.name))
                out.push_back("required predecessor '" + r + "' of '" + a.name +
                              "' is not a predecessor");
        }
        for (const auto& ex : a.control.examples)
            if (!std::holds_alternative<bool>(ex.result))
                out.push_back("control example of '" + a.name + "' has a non-boolean result");
        for (const auto& ex : a.execution.examples)
            if (!std::holds_alternative<std::string>(ex.result))
                out.push_back("execution example of '" + a.name + "' has a non-text result");
    }
    return out;
}

std::vector<std::string> topological_order(const Lan& lan) {
    auto adj = adjacency(lan);
    const std::size_t n = adj.size();
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& targets : adj)
        for (auto t : targets) ++indegree[t];
    // Ready set ordered by insertion index.
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.insert(i);
    std::vector<std::string> order;
    order.reserve(n);
    while (!ready.empty()) {
        std::size_t v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(lan.agents[v].name);
        for (auto t : adj[v])
            if (--indegree[t] == 0) ready.insert(t);
    }
    if (order.size() != n) throw CycleError("the agent graph contains a cycle");
    return order;
}

std::string_view to_string(AgentField field) {
    switch (field) {
        case AgentField::name: return "name";
        case AgentField::subtask_description: return "subtask_description";
        case AgentField::output_description: return "output_description";
    }
    return "?";
}

std::string describe(const Violation& violation) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, CycleViolation>) {
                std::string s = "cycle through";
                for (const auto& a : v.agents) s += " '" + a + "'";
                return s;
            } else if constexpr (std::is_same_v<T, EmptyFieldViolation>) {
                return "agent #" + std::to_string(v.agent_index) + " ('" + v.agent + "') has an empty " +
                       std::string(to_string(v.field));
            } else {
                return "duplicate agent name '" + v.name + "'";
            }
        },
        violation);
}

}  // namespace lanforge
