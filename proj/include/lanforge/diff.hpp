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

// Edit scripts between two LANs expressed as the operations a user performs
// in a manual graph editor, and the interaction cost of such scripts.

#include <string>
#include <variant>
#include <vector>

#include "lanforge/lan.hpp"

namespace lanforge {

enum class EditActionKind { click, keypress, drag, select };

/// Primitive user interaction with a fixed cost.
struct EditAction {
    EditActionKind kind;
    int cost() const noexcept;
};

int cost_of(EditActionKind kind) noexcept;

enum class Module { control, execution };
enum class TextField { name, subtask_description, output_description };

/// Creates an agent with default_new_agent() contents.
struct NewAgentOp {};
struct DeleteAgentOp {
    std::string agent;
};
struct ConnectOp {
    std::string source, target;
};
struct DisconnectOp {
    std::string source, target;
};
/// Replaces a text field; `old_value` drives the deletion cost.
struct SetTextOp {
    std::string agent;
    TextField field;
    std::string old_value;
    std::string new_value;
};
struct SetEnabledOp {
    std::string agent;
    bool enabled;
};
struct SetRequiredPredecessorsOp {
    std::string agent;
    std::vector<std::string> old_value;
    std::vector<std::string> new_value;
};
struct AddKnowledgeOp {
    std::string agent;
    Module module;
    KnowledgeItem item;
};
/// Removes the knowledge item at `index`.
struct RemoveKnowledgeOp {
    std::string agent;
    Module module;
    std::size_t index;
    std::string text;
};
struct AddExampleOp {
    std::string agent;
    Module module;
    Example example;
};
struct RemoveExampleOp {
    std::string agent;
    Module module;
    std::size_t index;
};
struct SetLanTextOp {
    enum class Field { task_description, input_description, output_description } field;
    std::string old_value;
    std::string new_value;
};

using EditOp = std::variant<NewAgentOp, DeleteAgentOp, ConnectOp, DisconnectOp, SetTextOp,
                            SetEnabledOp, SetRequiredPredecessorsOp, AddKnowledgeOp,
                            RemoveKnowledgeOp, AddExampleOp, RemoveExampleOp, SetLanTextOp>;

/// What the editor's "New agent" button creates: empty name, placeholder
/// descriptions, CM enabled with no knowledge or examples.
Agent default_new_agent();

/// Canonical script turning `from` into `to`. Agents are matched by name, so
/// a rename shows up as delete + create.
std::vector<EditOp> lan_edit_script(const Lan& from, const Lan& to);

/// Replays a script. Throws ValidationError if an op does not apply.
Lan apply_edit_script(Lan lan, const std::vector<EditOp>& script);

/// Interaction cost of one op under the click/key = 1, drag/select = 2 model.
int edit_cost(const EditOp& op);

/// Cost of the canonical script. This is an upper bound on the true minimum
/// editing distance, not the minimum itself.
int lmd(const Lan& from, const Lan& to);

/// One-line human readable description of an op.
std::string describe(const EditOp& op);

/// Number of Unicode code points in a UTF-8 string (one keypress each).
std::size_t keystrokes(std::string_view text);

}  // namespace lanforge
