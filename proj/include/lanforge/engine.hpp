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

// Training a LAN from a few (input, ground truth) examples: initialization,
// the four diagnosis steps, the five update strategies, and the bookkeeping
// that keeps previously satisfied examples stable.

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lanforge/gateway.hpp"
#include "lanforge/lan.hpp"
#include "lanforge/runtime.hpp"

namespace lanforge {

struct TrainingExample {
    std::string id;
    std::string input;
    std::string ground_truth;

    friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

/// A satisfied training example with the trace of its satisfying run. The
/// trace is kept in step with structural updates.
struct HistoryEntry {
    TrainingExample example;
    RunTrace trace;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

// ---------------------------------------------------------------------------
// Step reports

struct GapReport {
    std::string gap;
    std::string sub_task;

    friend bool operator==(const GapReport&, const GapReport&) = default;
};

enum class CauseType { missing_agent, wrongly_activated, poor_performance };

struct CauseReport {
    CauseType reason_type = CauseType::poor_performance;
    std::optional<std::string> agent_name;  // absent iff missing_agent
    std::string reason_content;

    friend bool operator==(const CauseReport&, const CauseReport&) = default;
};

enum class AgentCauseType { not_activated, lacks_knowledge, needs_split, needs_inputs };

struct AgentCauseReport {
    AgentCauseType reason_type = AgentCauseType::lacks_knowledge;
    std::string reason_content;

    friend bool operator==(const AgentCauseReport&, const AgentCauseReport&) = default;
};

enum class Strategy { AddAgent, SplitAgent, AddCmKnowledge, AddEmKnowledge, AddInputs };
enum class SplitMode { sequential, parallel };

/// An agent proposed by a plan. Knowledge is given as plain text; texts equal
/// to an existing item of a split agent keep that item's metadata.
struct AgentSpec {
    std::string name;
    std::string subtask_description;
    std::string output_description;
    std::optional<bool> cm_enabled;  // default: enabled
    std::vector<std::string> required_predecessors;
    std::vector<std::string> cm_knowledge;
    std::vector<std::string> em_knowledge;

    friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

struct AddAgentParams {
    AgentSpec agent;
    std::vector<Edge> edges;  // each edge touches the new agent
    friend bool operator==(const AddAgentParams&, const AddAgentParams&) = default;
};

struct SplitAgentParams {
    std::string agent;
    SplitMode mode = SplitMode::sequential;
    std::vector<AgentSpec> agents;  // execution order for sequential splits
    std::vector<Edge> edges;        // among new agents; empty = chain (sequential)
    friend bool operator==(const SplitAgentParams&, const SplitAgentParams&) = default;
};

struct AddKnowledgeParams {
    std::string agent;
    std::string knowledge;
    friend bool operator==(const AddKnowledgeParams&, const AddKnowledgeParams&) = default;
};

struct AddInputsParams {
    std::string agent;
    std::vector<std::string> sources;
    friend bool operator==(const AddInputsParams&, const AddInputsParams&) = default;
};

using StrategyParameters =
    std::variant<AddAgentParams, SplitAgentParams, AddKnowledgeParams, AddInputsParams>;

struct StrategyPlan {
    Strategy strategy = Strategy::AddEmKnowledge;
    StrategyParameters parameters;
    friend bool operator==(const StrategyPlan&, const StrategyPlan&) = default;
};

std::string_view to_string(CauseType t);
std::string_view to_string(AgentCauseType t);
std::string_view to_string(Strategy s);
std::string_view to_string(SplitMode m);
/// Accepts canonical names, display labels ("Lack of agents",
/// "Poor performance", ...) and case/spacing variants.
std::optional<CauseType> parse_cause_type(std::string_view text);
std::optional<AgentCauseType> parse_agent_cause_type(std::string_view text);
std::optional<Strategy> parse_strategy(std::string_view text);

Json to_json(const GapReport& r);
Json to_json(const CauseReport& r);
Json to_json(const AgentCauseReport& r);
/// {"parameters": {...}}
Json to_json(const StrategyPlan& p);
Json to_json(const AgentSpec& s);
Json to_json(const TrainingExample& e);
TrainingExample training_example_from_json(const Json& j);

GapReport gap_from_json(const Json& j);
/// Throws UnknownReasonType.
CauseReport cause_from_json(const Json& j);
AgentCauseReport agent_cause_from_json(const Json& j);
/// Parses the step-4 document for a known strategy. `default_agent` fills a
/// missing target. Throws PlanValidationError on malformed parameters.
StrategyPlan plan_from_json(Strategy strategy, const Json& j,
                            const std::optional<std::string>& default_agent = std::nullopt);

// ---------------------------------------------------------------------------
// Routing

enum class Step { gap, cause, agent_cause, params, apply, done };
std::string_view to_string(Step s);
std::optional<Step> parse_step(std::string_view text);

struct Route {
    Step next;
    std::optional<Strategy> strategy;
};

/// missing_agent -> params/AddAgent; wrongly_activated -> params/AddCmKnowledge;
/// poor_performance -> agent_cause.
Route route_after_cause(CauseType cause);
Strategy strategy_for(AgentCauseType cause);

// ---------------------------------------------------------------------------
// Options

using Clock = std::function<std::string()>;
/// Current UTC time as ISO-8601.
std::string system_clock_now();
/// A clock that always returns the same instant, for reproducible runs.
Clock fixed_clock(std::string instant = "1970-01-01T00:00:00Z");

inline constexpr int kDefaultIterationCap = 8;

struct EngineOptions {
    int iteration_cap = kDefaultIterationCap;
    RunOptions run;
    Clock clock = system_clock_now;
    /// Receives warnings such as skipped consistency examples.
    std::function<void(const std::string&)> warn;
};

// ---------------------------------------------------------------------------
// Initialization, satisfaction, success recording

/// Single agent named after the task with its CM disabled. Throws
/// ValidationError for an empty task description.
Lan init_lan(const std::string& task_description, const std::string& input_description,
             const std::string& output_description, const Clock& clock = system_clock_now);

/// Agent name derived from free text: ASCII punctuation dropped, at most six
/// words, never empty and never the reserved input label.
std::string agent_name_from_task(const std::string& task_description);

std::string normalize_whitespace(std::string_view text);

struct SatisfactionResult {
    bool satisfied = false;
    std::optional<std::string> thought;
    std::vector<LlmCall> calls;
};

/// Whitespace-normalized exact match short-circuits; otherwise the model
/// judges the output against the ground truth.
SatisfactionResult check_satisfaction(const RunTrace& trace, const TrainingExample& example,
                                      Backend& backend, const EngineOptions& options = {});

std::string build_judge_prompt(const RunTrace& trace, const TrainingExample& example);

/// Appends CM examples for model-made decisions and EM examples for activated
/// agents, skipping agents that already hold an example from `provenance`.
Lan record_success(Lan lan, const RunTrace& trace, const std::string& provenance);

// ---------------------------------------------------------------------------
// Descriptions

std::string render_lan_description(const Lan& lan, const RunTrace& trace);
std::string render_agent_description(const Agent& agent, const RunTrace& trace);

// ---------------------------------------------------------------------------
// Strategies

/// Violations of a plan against a LAN; empty when it can be applied.
std::vector<std::string> validate_plan(const Lan& lan, const StrategyPlan& plan);

/// Structural effect of a plan without any history bookkeeping. Throws
/// PlanValidationError.
Lan apply_plan_structure(const Lan& lan, const StrategyPlan& plan, const Clock& clock);

struct ApplyResult {
    Lan lan;
    std::vector<HistoryEntry> history;  // traces re-derived for the new LAN
    std::vector<std::string> warnings;
    std::vector<LlmCall> calls;
};

/// Applies a validated plan and the example bookkeeping that keeps every
/// history entry's activation set and final output unchanged.
ApplyResult apply_strategy(const Lan& lan, const StrategyPlan& plan,
                           const std::vector<HistoryEntry>& history, Backend& backend,
                           const EngineOptions& options = {});

/// Decision for an agent during trace re-derivation.
struct SimulatedDecision {
    bool activated = false;
    std::string output;
};
using DecisionHook =
    std::function<std::optional<SimulatedDecision>(const Agent&, const NamedValues& inputs)>;

/// Re-derives `old` for `lan` without calling a model: agents present in the
/// old trace keep their decision and output, others ask `hook` and default to
/// inactive.
RunTrace simulate_trace(const Lan& lan, const RunTrace& old, const DecisionHook& hook = {});

}  // namespace lanforge
