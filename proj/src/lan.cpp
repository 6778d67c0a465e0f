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

#include "lanforge/lan.hpp"

#include <algorithm>
#include <map>

#include "lanforge/errors.hpp"

namespace lanforge {

NamedValues::NamedValues(std::initializer_list<Entry> entries) {
    for (const auto& [label, value] : entries) add(label, value);
}

void NamedValues::add(std::string label, std::string value) {
    if (contains(label)) throw ValidationError("duplicate input label '" + label + "'");
    entries_.emplace_back(std::move(label), std::move(value));
}

bool NamedValues::merge(const std::string& label, const std::string& value) {
    if (contains(label)) return false;
    entries_.emplace_back(label, value);
    return true;
}

bool NamedValues::contains(std::string_view label) const { return find(label) != nullptr; }

const std::string* NamedValues::find(std::string_view label) const {
    for (const auto& [l, v] : entries_)
        if (l == label) return &v;
    return nullptr;
}

const Agent* Lan::find_agent(std::string_view name) const {
    for (const auto& a : agents)
        if (a.name == name) return &a;
    return nullptr;
}

Agent* Lan::find_agent(std::string_view name) {
    for (auto& a : agents)
        if (a.name == name) return &a;
    return nullptr;
}

std::optional<std::size_t> Lan::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < agents.size(); ++i)
        if (agents[i].name == name) return i;
    return std::nullopt;
}

bool Lan::has_edge(std::string_view source, std::string_view target) const {
    return std::any_of(edges.begin(), edges.end(),
                       [&](const Edge& e) { return e.source == source && e.target == target; });
}

bool Lan::add_edge(std::string source, std::string target) {
    if (has_edge(source, target)) return false;
    edges.push_back({std::move(source), std::move(target)});
    return true;
}

bool Lan::remove_edge(std::string_view source, std::string_view target) {
    auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) {
        return e.source == source && e.target == target;
    });
    if (it == edges.end()) return false;
    edges.erase(it);
    for (auto& a : agents) {
        if (a.name != target) continue;
        auto& req = a.control.required_predecessors;
        req.erase(std::remove(req.begin(), req.end(), source), req.end());
    }
    return true;
}

bool Lan::remove_agent(std::string_view name) {
    auto it = std::find_if(agents.begin(), agents.end(),
                           [&](const Agent& a) { return a.name == name; });
    if (it == agents.end()) return false;
    agents.erase(it);
    std::erase_if(edges, [&](const Edge& e) { return e.source == name || e.target == name; });
    for (auto& a : agents) {
        auto& req = a.control.required_predecessors;
        req.erase(std::remove(req.begin(), req.end(), name), req.end());
    }
    return true;
}

std::vector<std::string> Lan::predecessors(std::string_view name) const {
    std::vector<std::string> out;
    for (const auto& a : agents)
        if (has_edge(a.name, name)) out.push_back(a.name);
    return out;
}

std::vector<std::string> Lan::successors(std::string_view name) const {
    std::vector<std::string> out;
    for (const auto& a : agents)
        if (has_edge(name, a.name)) out.push_back(a.name);
    return out;
}

bool structurally_equal(const Lan& a, const Lan& b) {
    if (a.task_description != b.task_description || a.input_description != b.input_description ||
        a.output_description != b.output_description || a.agents.size() != b.agents.size() ||
        a.edges.size() != b.edges.size())
        return false;
    std::map<std::string, const Agent*> by_name;
    for (const auto& agent : a.agents) by_name.emplace(agent.name, &agent);
    if (by_name.size() != a.agents.size()) return false;
    for (const auto& agent : b.agents) {
        auto it = by_name.find(agent.name);
        if (it == by_name.end() || !(*it->second == agent)) return false;
    }
    auto ea = a.edges, eb = b.edges;
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    return ea == eb;
}

std::string_view to_string(Origin origin) {
    return origin == Origin::user ? "user" : "pipeline";
}

Origin origin_from_string(std::string_view text) {
    if (text == "user") return Origin::user;
    if (text == "pipeline") return Origin::pipeline;
    throw ValidationError("unknown knowledge origin '" + std::string(text) + "'");
}

}  // namespace lanforge
