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

// Executes a LAN on one input: topological pass, control-module gating,
// execution-module computation, pass-through, prompt assembly, malformed
// output repair, and trace capture.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanforge/errors.hpp"
#include "lanforge/gateway.hpp"
#include "lanforge/lan.hpp"

namespace lanforge {

using Json = nlohmann::json;

inline constexpr int kDefaultRepairBudget = 3;

/// One backend exchange as seen by the trace layer.
struct LlmCall {
    std::string tag;
    std::size_t prompt_bytes = 0;
    std::string response;

    friend bool operator==(const LlmCall&, const LlmCall&) = default;
};

struct AgentRunRecord {
    std::string agent;
    NamedValues inputs;
    std::optional<std::string> cm_prompt;
    std::optional<std::string> cm_thought;
    bool activated = false;
    std::optional<std::string> em_prompt;
    std::optional<std::string> em_thought;
    NamedValues output;  // what the output module forwards
    std::vector<LlmCall> calls;

    /// The value this agent produced, if it was activated.
    const std::string* own_output() const;

    friend bool operator==(const AgentRunRecord&, const AgentRunRecord&) = default;
};

struct RunTrace {
    Lan lan_snapshot;
    std::string external_input;
    std::vector<AgentRunRecord> records;  // topological order
    std::string final_output;

    const AgentRunRecord* record(std::string_view agent) const;
    std::set<std::string> activated() const;
    std::size_t llm_calls() const;

    friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

Json to_json(const RunTrace& trace);
RunTrace trace_from_json(const Json& j);

struct RunOptions {
    int repair_budget = kDefaultRepairBudget;
    double cm_temperature = kDecisionTemperature;
    double em_temperature = kGenerationTemperature;
    int max_tokens = 2048;
    std::optional<CancelToken> cancel;
};

/// Raised when a run is cancelled; carries the records completed so far.
class ExecutionAborted : public Error {
public:
    explicit ExecutionAborted(RunTrace partial)
        : Error("LAN execution aborted"), partial_(std::move(partial)) {}
    const RunTrace& partial_trace() const noexcept { return partial_; }

private:
    RunTrace partial_;
};

// ---------------------------------------------------------------------------
// Response templates and repair

enum class FieldKind { string, boolean, object, array, any };

struct TemplateField {
    std::string name;
    FieldKind kind = FieldKind::string;
    std::string comment;      // rendered as a "//" line above the field
    std::string placeholder;  // rendered value, e.g. "..." or <true or false>
    bool required = true;
    /// Extra check on a present value; returns an error message or nullopt.
    std::function<std::optional<std::string>(const Json&)> check;
};

struct ResponseTemplate {
    std::vector<TemplateField> fields;

    /// Commented JSON skeleton shown to the model.
    std::string render() const;
    /// Error message when `value` does not conform, nullopt otherwise.
    std::optional<std::string> violation(const Json& value) const;
    const TemplateField* field(std::string_view name) const;
};

/// Strict parse: surrounding whitespace and a single markdown code fence are
/// tolerated, anything else must be one JSON object.
std::optional<Json> parse_strict(std::string_view raw);

struct RepairContext {
    std::string tag;  // tag of the original request; repairs use "repair:" + tag
    double temperature = kDecisionTemperature;
    int max_tokens = 2048;
    std::optional<CancelToken> cancel;
    std::vector<LlmCall>* calls = nullptr;  // repair exchanges are appended here
};

std::string build_repair_prompt(std::string_view raw, const ResponseTemplate& tmpl,
                                std::string_view problem);

/// Returns the first conforming value among `raw` and up to budget - 1
/// repair answers. Throws FormatError with every raw attempt otherwise.
Json parse_or_reformat(const std::string& raw, const ResponseTemplate& tmpl, Backend& backend,
                       int budget, const RepairContext& context = {});

// ---------------------------------------------------------------------------
// Prompts

const ResponseTemplate& cm_template();
const ResponseTemplate& em_template();

/// The inputs section body: the external input, then each upstream output with
/// the producing agent's subtask.
std::string render_inputs(const NamedValues& inputs, const Lan& lan);
/// One example's input lines: "(from the network) ..." / "(from "X") ...".
std::string render_example_inputs(const NamedValues& inputs);
std::string render_example_result(const ExampleResult& result);

std::string build_cm_prompt(const Agent& agent, const NamedValues& inputs, const Lan& lan);
std::string build_em_prompt(const Agent& agent, const NamedValues& inputs, const Lan& lan);

// ---------------------------------------------------------------------------
// Execution

struct ActivationDecision {
    bool activated = false;
    std::optional<std::string> thought;
    std::optional<std::string> prompt;  // absent when no model call was needed
    std::vector<LlmCall> calls;
};

/// Disabled CMs activate unconditionally and an inactive required predecessor
/// deactivates; neither consults the model.
ActivationDecision decide_activation(const Agent& agent, const NamedValues& inputs,
                                     const std::map<std::string, bool>& predecessors_activated,
                                     const Lan& lan, Backend& backend, const RunOptions& options = {});

struct ExecutionResult {
    std::string output;
    std::string thought;
    std::string prompt;
    std::vector<LlmCall> calls;
};

ExecutionResult execute_agent(const Agent& agent, const NamedValues& inputs, const Lan& lan,
                              Backend& backend, const RunOptions& options = {});

/// Merges the external input with the outputs of the given predecessors.
/// Entries are ordered by their producer's position in `order`.
NamedValues gather_inputs(const std::string& external_input,
                          const std::vector<const NamedValues*>& predecessor_outputs,
                          const std::vector<std::string>& order);

/// Runs every agent once in topological order. Throws ValidationError for an
/// unsaveable LAN and ExecutionAborted when cancelled.
RunTrace run_lan(const Lan& lan, const std::string& external_input, Backend& backend,
                 const RunOptions& options = {});

/// Output of the last activated agent in topological order, or the external
/// input when nothing activated.
std::string final_output_of(const std::vector<AgentRunRecord>& records,
                            const std::string& external_input);

}  // namespace lanforge
