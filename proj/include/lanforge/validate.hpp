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

#include <string>
#include <variant>
#include <vector>

#include "lanforge/lan.hpp"

namespace lanforge {

/// Agents on one directed cycle (a strongly connected component), in
/// insertion order.
struct CycleViolation {
    std::vector<std::string> agents;
    friend bool operator==(const CycleViolation&, const CycleViolation&) = default;
};

enum class AgentField { name, subtask_description, output_description };

struct EmptyFieldViolation {
    std::size_t agent_index;  // position in Lan::agents
    std::string agent;        // may itself be empty
    AgentField field;
    friend bool operator==(const EmptyFieldViolation&, const EmptyFieldViolation&) = default;
};

struct DuplicateNameViolation {
    std::string name;
    friend bool operator==(const DuplicateNameViolation&, const DuplicateNameViolation&) = default;
};

/// One of the three rules that block saving a LAN.
using Violation = std::variant<CycleViolation, EmptyFieldViolation, DuplicateNameViolation>;

/// Every save-blocking violation; empty iff the LAN can be saved.
std::vector<Violation> validate_lan(const Lan& lan);

/// Type-level invariants that validate_lan does not cover: dangling edge
/// endpoints, self loops, duplicate edges, the reserved input label used as an
/// agent name, and required predecessors that are not predecessors.
/// Returns human-readable problems; empty when well-formed.
std::vector<std::string> structural_problems(const Lan& lan);

/// Deterministic topological order; among ready agents the earliest inserted
/// goes first. Throws CycleError if the graph has a cycle.
std::vector<std::string> topological_order(const Lan& lan);

std::string_view to_string(AgentField field);
std::string describe(const Violation& violation);

}  // namespace lanforge
