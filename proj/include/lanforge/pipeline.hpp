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

// The supervised update pipeline. Each step's result waits for confirmation;
// a supervisor may instead retry the step with an edited result (placeholders
// "<\?\?\?>" are completed by the model) and/or a natural-language hint.

#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lanforge/engine.hpp"

namespace lanforge {

inline constexpr std::string_view kPlaceholder = "<\?\?\?>";

enum class PipelineStatus { awaiting_confirmation, computing, satisfied, aborted };
std::string_view to_string(PipelineStatus s);

struct IterationLogEntry {
    int iteration = 0;
    std::optional<GapReport> gap;
    std::optional<CauseReport> cause;
    std::optional<AgentCauseReport> agent_cause;
    std::optional<StrategyPlan> plan;
    bool satisfied_after = false;
};

struct PipelineState {
    TrainingExample example;
    int iteration = 1;
    RunTrace last_trace;
    Step current_step = Step::gap;
    PipelineStatus status = PipelineStatus::computing;

    std::optional<GapReport> gap;
    std::optional<CauseReport> cause;
    std::optional<AgentCauseReport> agent_cause;
    std::optional<Strategy> strategy;
    std::optional<StrategyPlan> plan;

    /// Prompt that produced the current step's result.
    std::string step_prompt;
    /// Set when the current step failed and needs an intervention.
    std::optional<std::string> error;
    std::string error_kind;
    /// The LAN was edited by hand after the current step was computed.
    bool stale = false;

    std::vector<IterationLogEntry> log;

    /// Not persisted: the exception behind `error`, for callers that rethrow.
    std::exception_ptr failure;

    /// The current step's result document, if any.
    std::optional<Json> step_result() const;
};

Json to_json(const PipelineState& state);
PipelineState pipeline_state_from_json(const Json& j);

/// Raised when an operation does not fit the pipeline's current state.
class PipelineStateError : public Error {
public:
    using Error::Error;
};

struct Intervention {
    std::optional<Json> edited_document;
    std::optional<std::string> hint_text;
};

// ---------------------------------------------------------------------------
// Step prompts and templates

ResponseTemplate step_template(Step step, const PipelineState& state);
/// Full prompt for a step; `guidance` becomes a user-guidance section.
std::string build_step_prompt(Step step, const PipelineState& state,
                              const std::optional<std::string>& guidance = std::nullopt);

struct StepCall {
    std::string prompt;
    Json result;
    std::vector<LlmCall> calls;
};

GapReport step1_find_gap(PipelineState& state, Backend& backend, const EngineOptions& options = {},
                         const std::optional<std::string>& guidance = std::nullopt);
CauseReport step2_classify_cause(PipelineState& state, Backend& backend,
                                 const EngineOptions& options = {},
                                 const std::optional<std::string>& guidance = std::nullopt);
AgentCauseReport step3_agent_cause(PipelineState& state, Backend& backend,
                                   const EngineOptions& options = {},
                                   const std::optional<std::string>& guidance = std::nullopt);
StrategyPlan step4_compute_params(PipelineState& state, Backend& backend,
                                  const EngineOptions& options = {},
                                  const std::optional<std::string>& guidance = std::nullopt);

/// Deep-merges `edit` over `base`. Keys outside the step's template raise
/// MergeError.
Json merge_step_document(Step step, const PipelineState& state, const Json& base, const Json& edit);
bool contains_placeholder(const Json& value);

/// Recomputes the step paused at `step` from the intervention and stores the
/// validated result in `state`. Returns the result document.
Json apply_intervention(PipelineState& state, Step step, const Intervention& intervention,
                        Backend& backend, const EngineOptions& options = {});

// ---------------------------------------------------------------------------
// Driving the pipeline

/// Mutable context the pipeline operates on.
struct PipelineContext {
    Lan& lan;
    std::vector<HistoryEntry>& history;
    Backend& backend;
    const EngineOptions& options;
};

struct PipelineOutcome {
    bool lan_changed = false;
    std::vector<RunTrace> runs;
    std::vector<std::string> warnings;
};

/// Runs the LAN on the example; records success or computes step 1.
PipelineOutcome pipeline_start(PipelineState& state, const TrainingExample& example,
                               PipelineContext ctx);
/// Accepts the current step's result and computes the next one. Confirming the
/// parameter step applies the strategy, reruns, and either finishes or opens
/// the next iteration.
PipelineOutcome pipeline_confirm(PipelineState& state, PipelineContext ctx);
/// Recomputes the current step from an intervention. An empty intervention
/// recomputes it unchanged. A stale state is rerun from step 1.
PipelineOutcome pipeline_retry(PipelineState& state, const Intervention& intervention,
                               PipelineContext ctx);
void pipeline_abort(PipelineState& state);
/// Marks the pending result stale after a manual LAN edit.
void pipeline_invalidate(PipelineState& state);
bool pipeline_finished(const PipelineState& state);

enum class SupervisionPolicy { auto_confirm, interactive };
std::optional<SupervisionPolicy> parse_policy(std::string_view text);
std::string_view to_string(SupervisionPolicy p);

struct SupervisorAction {
    enum class Kind { confirm, retry, abort } kind = Kind::confirm;
    Intervention intervention;
};
using Supervisor = std::function<SupervisorAction(const PipelineState&)>;

struct TrainResult {
    Lan lan;
    std::vector<HistoryEntry> history;
    PipelineState state;
    int strategies_applied = 0;
    std::vector<RunTrace> runs;
    std::vector<std::string> warnings;
};

/// Trains on one example until it is satisfied. Under auto_confirm any step
/// error aborts by rethrowing it; under interactive the supervisor is asked at
/// every pause (a null supervisor always confirms). Throws
/// IterationCapReached when the cap is exhausted.
TrainResult train_example(Lan lan, std::vector<HistoryEntry> history, const TrainingExample& example,
                          Backend& backend, SupervisionPolicy policy,
                          const EngineOptions& options = {}, const Supervisor& supervisor = {});

}  // namespace lanforge
