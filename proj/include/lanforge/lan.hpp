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

#pragma once

// Core value types of an LLM agent network (LAN): a DAG of agents, each
// gated by a control module and computing through an execution module.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace lanforge {

/// Label of the network's external input inside a NamedValues.
inline constexpr std::string_view kExternalInputLabel = "__input__";

enum class Origin { user, pipeline };

struct KnowledgeItem {
    std::string text;
    Origin origin = Origin::user;
    std::string created_at;  // ISO-8601 UTC

    friend bool operator==(const KnowledgeItem&, const KnowledgeItem&) = default;
};

/// Ordered (source label, value) pairs. Labels are unique.
class NamedValues {
public:
    using Entry = std::pair<std::string, std::string>;

    NamedValues() = default;
    NamedValues(std::initializer_list<Entry> entries);

    /// Throws ValidationError if the label is already present.
    void add(std::string label, std::string value);
    /// Adds the entry unless the label is already present.
    bool merge(const std::string& label, const std::string& value);

    bool contains(std::string_view label) const;
    const std::string* find(std::string_view label) const;

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    friend bool operator==(const NamedValues&, const NamedValues&) = default;

private:
    std::vector<Entry> entries_;
};

/// CM examples carry a boolean result, EM examples a text result.
using ExampleResult = std::variant<bool, std::string>;

struct Example {
    NamedValues inputs;
    ExampleResult result;
    std::string provenance;  // training example id

    friend bool operator==(const Example&, const Example&) = default;
};

struct ControlModule {
    bool enabled = true;
    std::vector<std::string> required_predecessors;
    std::vector<KnowledgeItem> knowledge;
    std::vector<Example> examples;

    friend bool operator==(const ControlModule&, const ControlModule&) = default;
};

struct ExecutionModule {
    std::string subtask_description;
    std::string output_description;
    std::vector<KnowledgeItem> knowledge;
    std::vector<Example> examples;

    friend bool operator==(const ExecutionModule&, const ExecutionModule&) = default;
};

struct Agent {
    std::string name;
    ControlModule control;
    ExecutionModule execution;

    friend bool operator==(const Agent&, const Agent&) = default;
};

struct Edge {
    std::string source;
    std::string target;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Lan {
    std::string task_description;
    std::string input_description;
    std::string output_description;
    std::vector<Agent> agents;  // insertion order
    std::vector<Edge> edges;

    const Agent* find_agent(std::string_view name) const;
    Agent* find_agent(std::string_view name);
    /// Insertion index of the named agent, or nullopt.
    std::optional<std::size_t> index_of(std::string_view name) const;

    bool has_edge(std::string_view source, std::string_view target) const;
    /// Adds the edge if absent; returns false when it already existed.
    bool add_edge(std::string source, std::string target);
    bool remove_edge(std::string_view source, std::string_view target);
    /// Removes the agent with its incident edges and any required-predecessor
    /// references to it.
    bool remove_agent(std::string_view name);

    /// Direct predecessors in agent insertion order.
    std::vector<std::string> predecessors(std::string_view name) const;
    /// Direct successors in agent insertion order.
    std::vector<std::string> successors(std::string_view name) const;

    /// Exact equality: agent order and edge order included.
    friend bool operator==(const Lan&, const Lan&) = default;
};

/// Equality up to agent insertion order and edge order.
bool structurally_equal(const Lan& a, const Lan& b);

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view text);

}  // namespace lanforge
