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

#include <algorithm>

#include "lanforge/pipeline.hpp"

namespace lanforge {
namespace {

template <class T, class F>
Json optional_json(const std::optional<T>& v, F&& f) {
    return v ? f(*v) : Json(nullptr);
}

Json plan_json(const StrategyPlan& p) {
    Json j = to_json(p);
    j["strategy"] = to_string(p.strategy);
    return j;
}

StrategyPlan plan_from_state_json(const Json& j) {
    auto s = parse_strategy(j.at("strategy").get<std::string>());
    if (!s) throw ParseError("/plan/strategy", "unknown strategy");
    return plan_from_json(*s, j);
}

Json log_json(const IterationLogEntry& e) {
    return {{"iteration", e.iteration},
            {"gap", optional_json(e.gap, [](const auto& v) { return to_json(v); })},
            {"cause", optional_json(e.cause, [](const auto& v) { return to_json(v); })},
            {"agent_cause", optional_json(e.agent_cause, [](const auto& v) { return to_json(v); })},
            {"plan", optional_json(e.plan, plan_json)},
            {"satisfied_after", e.satisfied_after}};
}

template <class T, class F>
std::optional<T> read_optional(const Json& j, const char* key, F&& f) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return f(*it);
}

void reset_steps(PipelineState& state) {
    state.gap.reset();
    state.cause.reset();
    state.agent_cause.reset();
    state.strategy.reset();
    state.plan.reset();
    state.step_prompt.clear();
    state.error.reset();
    state.error_kind.clear();
    state.failure = nullptr;
}

std::string error_kind_of(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const FormatError&) {
        return "FormatError";
    } catch (const RejectedStepError&) {
        return "RejectedStepError";
    } catch (const UnknownReasonType&) {
        return "UnknownReasonType";
    } catch (const PlanValidationError&) {
        return "PlanValidationError";
    } catch (const MergeError&) {
        return "MergeError";
    } catch (...) {
        return "Error";
    }
}

// Runs `work` for the current step; step-level failures pause the pipeline
// for an intervention instead of escaping.
template <class F>
void guarded(PipelineState& state, F&& work) {
    state.status = PipelineStatus::computing;
    state.error.reset();
    state.error_kind.clear();
    state.failure = nullptr;
    try {
        work();
    } catch (const FormatError& e) {
        state.error = e.what();
        state.failure = std::current_exception();
    } catch (const RejectedStepError& e) {
        state.error = e.what();
        state.failure = std::current_exception();
    } catch (const UnknownReasonType& e) {
        state.error = e.what();
        state.failure = std::current_exception();
    } catch (const PlanValidationError& e) {
        state.error = e.what();
        state.failure = std::current_exception();
    } catch (const MergeError& e) {
        state.error = e.what();
        state.failure = std::current_exception();
    } catch (...) {
        state.status = PipelineStatus::awaiting_confirmation;
        throw;
    }
    if (state.failure) state.error_kind = error_kind_of(state.failure);
    state.status = PipelineStatus::awaiting_confirmation;
}

void compute_step(PipelineState& state, PipelineContext& ctx,
                  const std::optional<std::string>& guidance = std::nullopt) {
    guarded(state, [&] {
        switch (state.current_step) {
            case Step::gap: step1_find_gap(state, ctx.backend, ctx.options, guidance); break;
            case Step::cause: step2_classify_cause(state, ctx.backend, ctx.options, guidance); break;
            case Step::agent_cause: step3_agent_cause(state, ctx.backend, ctx.options, guidance); break;
            case Step::params: step4_compute_params(state, ctx.backend, ctx.options, guidance); break;
            default: break;
        }
    });
}

void remember(std::vector<HistoryEntry>& history, HistoryEntry entry) {
    auto it = std::find_if(history.begin(), history.end(), [&](const HistoryEntry& h) {
        return h.example.id == entry.example.id;
    });
    if (it != history.end())
        *it = std::move(entry);
    else
        history.push_back(std::move(entry));
}

// Runs the LAN on the example. On success the examples are recorded and the
// pipeline finishes; returns whether it did.
bool run_and_judge(PipelineState& state, PipelineContext& ctx, PipelineOutcome& outcome) {
    state.status = PipelineStatus::computing;
    auto trace = run_lan(ctx.lan, state.example.input, ctx.backend, ctx.options.run);
    outcome.runs.push_back(trace);
    state.last_trace = trace;
    state.stale = false;
    reset_steps(state);
    auto verdict = check_satisfaction(trace, state.example, ctx.backend, ctx.options);
    if (verdict.satisfied) {
        Lan updated = record_success(ctx.lan, trace, state.example.id);
        if (!(updated == ctx.lan)) outcome.lan_changed = true;
        ctx.lan = std::move(updated);
        trace.lan_snapshot = ctx.lan;
        remember(ctx.history, {state.example, std::move(trace)});
        state.current_step = Step::done;
        state.status = PipelineStatus::satisfied;
        return true;
    }
    state.current_step = Step::gap;
    return false;
}

void restart(PipelineState& state, PipelineContext& ctx, PipelineOutcome& outcome,
             const std::optional<std::string>& guidance = std::nullopt) {
    if (!run_and_judge(state, ctx, outcome)) compute_step(state, ctx, guidance);
}

void require_open(const PipelineState& state) {
    if (state.status == PipelineStatus::satisfied || state.status == PipelineStatus::aborted)
        throw PipelineStateError("the pipeline has finished");
    if (state.status == PipelineStatus::computing)
        throw PipelineStateError("a step is being computed");
}

}  // namespace

std::string_view to_string(PipelineStatus s) {
    switch (s) {
        case PipelineStatus::awaiting_confirmation: return "awaiting_confirmation";
        case PipelineStatus::computing: return "computing";
        case PipelineStatus::satisfied: return "satisfied";
        case PipelineStatus::aborted: return "aborted";
    }
    return "?";
}

Json to_json(const PipelineState& s) {
    Json log = Json::array();
    for (const auto& e : s.log) log.push_back(log_json(e));
    return {{"example", to_json(s.example)},
            {"iteration", s.iteration},
            {"last_trace", to_json(s.last_trace)},
            {"current_step", to_string(s.current_step)},
            {"status", to_string(s.status)},
            {"gap", optional_json(s.gap, [](const auto& v) { return to_json(v); })},
            {"cause", optional_json(s.cause, [](const auto& v) { return to_json(v); })},
            {"agent_cause", optional_json(s.agent_cause, [](const auto& v) { return to_json(v); })},
            {"strategy", optional_json(s.strategy, [](Strategy v) { return Json(to_string(v)); })},
            {"plan", optional_json(s.plan, plan_json)},
            {"step_result", s.step_result() ? *s.step_result() : Json(nullptr)},
            {"step_prompt", s.step_prompt},
            {"error", s.error ? Json(*s.error) : Json(nullptr)},
            {"error_kind", s.error_kind},
            {"stale", s.stale},
            {"log", std::move(log)}};
}

PipelineState pipeline_state_from_json(const Json& j) {
    try {
        PipelineState s;
        s.example = training_example_from_json(j.at("example"));
        s.iteration = j.at("iteration").get<int>();
        s.last_trace = trace_from_json(j.at("last_trace"));
        auto step = parse_step(j.at("current_step").get<std::string>());
        if (!step) throw ParseError("/current_step", "unknown step");
        s.current_step = *step;
        auto status = j.at("status").get<std::string>();
        if (status == "awaiting_confirmation")
            s.status = PipelineStatus::awaiting_confirmation;
        else if (status == "satisfied")
            s.status = PipelineStatus::satisfied;
        else if (status == "aborted")
            s.status = PipelineStatus::aborted;
        else
            // A step interrupted by a restart is recomputed on the next retry.
            s.status = PipelineStatus::awaiting_confirmation;
        s.gap = read_optional<GapReport>(j, "gap", gap_from_json);
        s.cause = read_optional<CauseReport>(j, "cause", cause_from_json);
        s.agent_cause = read_optional<AgentCauseReport>(j, "agent_cause", agent_cause_from_json);
        s.strategy = read_optional<Strategy>(j, "strategy", [](const Json& v) {
            auto parsed = parse_strategy(v.get<std::string>());
            if (!parsed) throw ParseError("/strategy", "unknown strategy");
            return *parsed;
        });
        s.plan = read_optional<StrategyPlan>(j, "plan", plan_from_state_json);
        s.step_prompt = j.value("step_prompt", "");
        if (auto it = j.find("error"); it != j.end() && it->is_string()) s.error = it->get<std::string>();
        s.error_kind = j.value("error_kind", "");
        s.stale = j.value("stale", false);
        if (status == "computing") s.error = s.error.value_or("interrupted while computing");
        for (const auto& e : j.value("log", Json::array())) {
            IterationLogEntry entry;
            entry.iteration = e.at("iteration").get<int>();
            entry.gap = read_optional<GapReport>(e, "gap", gap_from_json);
            entry.cause = read_optional<CauseReport>(e, "cause", cause_from_json);
            entry.agent_cause = read_optional<AgentCauseReport>(e, "agent_cause", agent_cause_from_json);
            entry.plan = read_optional<StrategyPlan>(e, "plan", plan_from_state_json);
            entry.satisfied_after = e.value("satisfied_after", false);
            s.log.push_back(std::move(entry));
        }
        return s;
    } catch (const Json::exception& e) {
        throw ParseError("pipeline", e.what());
    }
}

PipelineOutcome pipeline_start(PipelineState& state, const TrainingExample& example,
                               PipelineContext ctx) {
    if (example.input.empty() || example.ground_truth.empty())
        throw ValidationError("training example needs a non-empty input and ground truth");
    state = PipelineState{};
    state.example = example;
    PipelineOutcome outcome;
    restart(state, ctx, outcome);
    return outcome;
}

PipelineOutcome pipeline_confirm(PipelineState& state, PipelineContext ctx) {
    require_open(state);
    if (state.error) throw PipelineStateError("the current step failed; retry it first");
    PipelineOutcome outcome;
    if (state.stale) {
        restart(state, ctx, outcome);
        return outcome;
    }
    switch (state.current_step) {
        case Step::gap:
            state.current_step = Step::cause;
            compute_step(state, ctx);
            break;
        case Step::cause: {
            auto route = route_after_cause(state.cause->reason_type);
            state.current_step = route.next;
            compute_step(state, ctx);
            break;
        }
        case Step::agent_cause:
            state.current_step = Step::params;
            compute_step(state, ctx);
            break;
        case Step::params: {
            state.current_step = Step::apply;
            state.status = PipelineStatus::computing;
            IterationLogEntry entry{state.iteration, state.gap, state.cause, state.agent_cause,
                                    state.plan, false};
            ApplyResult applied;
            try {
                applied = apply_strategy(ctx.lan, *state.plan, ctx.history, ctx.backend, ctx.options);
            } catch (const PlanValidationError&) {
                // The LAN no longer accepts the plan; let the user fix it.
                state.current_step = Step::params;
                guarded(state, [] { throw; });
                break;
            } catch (...) {
                state.current_step = Step::params;
                state.status = PipelineStatus::awaiting_confirmation;
                throw;
            }
            ctx.lan = std::move(applied.lan);
            ctx.history = std::move(applied.history);
            outcome.lan_changed = true;
            outcome.warnings = std::move(applied.warnings);

            state.log.push_back(entry);
            if (run_and_judge(state, ctx, outcome)) {
                state.log.back().satisfied_after = true;
            } else if (state.iteration >= ctx.options.iteration_cap) {
                state.current_step = Step::done;
                state.status = PipelineStatus::aborted;
                state.error_kind = "IterationCapReached";
                state.error = IterationCapReached(ctx.options.iteration_cap).what();
                state.failure = std::make_exception_ptr(IterationCapReached(ctx.options.iteration_cap));
            } else {
                ++state.iteration;
                compute_step(state, ctx);
            }
            break;
        }
        default: throw PipelineStateError("nothing to confirm");
    }
    return outcome;
}

PipelineOutcome pipeline_retry(PipelineState& state, const Intervention& intervention,
                               PipelineContext ctx) {
    require_open(state);
    PipelineOutcome outcome;
    if (state.stale) {
        restart(state, ctx, outcome, intervention.hint_text);
        return outcome;
    }
    if (!intervention.edited_document && !intervention.hint_text) {
        compute_step(state, ctx);
        return outcome;
    }
    guarded(state, [&] {
        apply_intervention(state, state.current_step, intervention, ctx.backend, ctx.options);
    });
    return outcome;
}

void pipeline_abort(PipelineState& state) {
    if (state.status == PipelineStatus::satisfied) throw PipelineStateError("the pipeline has finished");
    state.status = PipelineStatus::aborted;
    state.current_step = Step::done;
}

void pipeline_invalidate(PipelineState& state) {
    if (!pipeline_finished(state)) state.stale = true;
}

bool pipeline_finished(const PipelineState& state) {
    return state.status == PipelineStatus::satisfied || state.status == PipelineStatus::aborted;
}

std::optional<SupervisionPolicy> parse_policy(std::string_view text) {
    if (text == "auto_confirm" || text == "auto") return SupervisionPolicy::auto_confirm;
    if (text == "interactive") return SupervisionPolicy::interactive;
    return std::nullopt;
}

std::string_view to_string(SupervisionPolicy p) {
    return p == SupervisionPolicy::auto_confirm ? "auto_confirm" : "interactive";
}

TrainResult train_example(Lan lan, std::vector<HistoryEntry> history, const TrainingExample& example,
                          Backend& backend, SupervisionPolicy policy, const EngineOptions& options,
                          const Supervisor& supervisor) {
    TrainResult result;
    result.lan = std::move(lan);
    result.history = std::move(history);
    PipelineContext ctx{result.lan, result.history, backend, options};
    auto absorb = [&](PipelineOutcome o) {
        for (auto& r : o.runs) result.runs.push_back(std::move(r));
        for (auto& w : o.warnings) result.warnings.push_back(std::move(w));
    };

    absorb(pipeline_start(result.state, example, ctx));
    while (!pipeline_finished(result.state)) {
        if (result.state.error && (policy == SupervisionPolicy::auto_confirm || !supervisor))
            std::rethrow_exception(result.state.failure);
        SupervisorAction action;
        if (policy == SupervisionPolicy::interactive && supervisor) action = supervisor(result.state);
        switch (action.kind) {
            case SupervisorAction::Kind::confirm:
                absorb(pipeline_confirm(result.state, ctx));
                break;
            case SupervisorAction::Kind::retry:
                absorb(pipeline_retry(result.state, action.intervention, ctx));
                break;
            case SupervisorAction::Kind::abort: pipeline_abort(result.state); break;
        }
    }
    result.strategies_applied = static_cast<int>(result.state.log.size());
    if (result.state.error_kind == "IterationCapReached") throw IterationCapReached(options.iteration_cap);
    return result;
}

}  // namespace lanforge
