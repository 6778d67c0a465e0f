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

#include "lanforge/diff.hpp"
#include "lanforge/serialize.hpp"
#include "lanforge/service.hpp"
#include "lanforge/validate.hpp"

namespace lanforge {
namespace {

struct HttpError {
    int status;
    std::string code;
    std::string message;
    Json violations = Json::array();
};

[[noreturn]] void fail(int status, std::string code, std::string message, Json violations = Json::array()) {
    throw HttpError{status, std::move(code), std::move(message), std::move(violations)};
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : path) {
        if (c == '/') {
            if (!current.empty()) parts.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) parts.push_back(std::move(current));
    return parts;
}

Json ok(Json body = Json::object()) {
    body["api_version"] = kApiVersion;
    return body;
}

std::string text_field(const Json& body, const char* key, bool required = true) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        if (required) fail(400, "bad_request", std::string("missing field \"") + key + "\"");
        return {};
    }
    if (!it->is_string()) fail(400, "bad_request", std::string("field \"") + key + "\" must be a string");
    return it->get<std::string>();
}

std::vector<std::string> text_list(const Json& body, const char* key) {
    const auto& v = body.at(key);
    if (!v.is_array()) fail(400, "bad_request", std::string("field \"") + key + "\" must be a list");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string())
            fail(400, "bad_request", std::string("field \"") + key + "\" must contain strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

void check_saveable(const Lan& lan) {
    Json violations = Json::array();
    for (const auto& v : validate_lan(lan)) violations.push_back(to_json(v));
    if (!violations.empty()) fail(422, "invalid_lan", "the LAN cannot be saved", std::move(violations));
    for (const auto& p : structural_problems(lan))
        violations.push_back({{"type", "StructuralProblem"}, {"message", p}});
    if (!violations.empty()) fail(422, "malformed_lan", "the LAN is malformed", std::move(violations));
}

// Keeps metadata of items whose text is unchanged.
std::vector<KnowledgeItem> replace_knowledge(const std::vector<KnowledgeItem>& old,
                                             const std::vector<std::string>& texts, const Clock& clock) {
    std::vector<KnowledgeItem> out;
    std::vector<bool> used(old.size(), false);
    for (const auto& t : texts) {
        bool found = false;
        for (std::size_t i = 0; i < old.size(); ++i) {
            if (!used[i] && old[i].text == t) {
                used[i] = true;
                out.push_back(old[i]);
                found = true;
                break;
            }
        }
        if (!found) out.push_back({t, Origin::user, clock()});
    }
    return out;
}

void rename_agent(Lan& lan, const std::string& from, const std::string& to) {
    for (auto& a : lan.agents) {
        if (a.name == from) a.name = to;
        for (auto& r : a.control.required_predecessors)
            if (r == from) r = to;
    }
    for (auto& e : lan.edges) {
        if (e.source == from) e.source = to;
        if (e.target == from) e.target = to;
    }
}

Json revision_summary(const LanRevision& r) {
    return {{"revision", r.revision},
            {"cause", to_string(r.cause)},
            {"parent", r.parent ? Json(*r.parent) : Json(nullptr)}};
}

Json session_summary(const Session& s) {
    Json examples = Json::array();
    for (const auto& e : s.examples) examples.push_back(to_json(e));
    return {{"id", s.id},
            {"revision", s.revisions.back().revision},
            {"lan", lan_to_json(s.lan())},
            {"examples", std::move(examples)},
            {"policy", to_string(s.policy)},
            {"pipeline", s.pipeline ? Json(to_string(s.pipeline->status)) : Json(nullptr)}};
}

TrainingExample example_from_body(const Json& j, const Session& s) {
    if (!j.is_object()) fail(400, "bad_request", "an example must be an object");
    TrainingExample e;
    e.id = text_field(j, "id", false);
    e.input = text_field(j, "input");
    e.ground_truth = text_field(j, "ground_truth");
    if (e.input.empty() || e.ground_truth.empty())
        fail(422, "invalid_example", "an example needs a non-empty input and ground truth");
    auto taken = [&](const std::string& id) {
        return std::any_of(s.examples.begin(), s.examples.end(),
                           [&](const TrainingExample& x) { return x.id == id; });
    };
    if (e.id.empty())
        for (std::size_t n = s.examples.size() + 1; e.id.empty() || taken(e.id); ++n)
            e.id = "ex" + std::to_string(n);
    else if (taken(e.id))
        fail(409, "duplicate_example", "an example with id \"" + e.id + "\" already exists");
    return e;
}

int parse_int(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    fail(400, "bad_request", std::string("invalid ") + what + " \"" + text + "\"");
}

}  // namespace

Json error_body(std::string_view code, std::string_view message, Json violations) {
    return {{"api_version", kApiVersion},
            {"code", code},
            {"message", message},
            {"violations", std::move(violations)}};
}

int EventBus::subscribe(std::string session, Listener listener) {
    std::lock_guard lock(mu_);
    int token = next_++;
    subs_[token] = {std::move(session), std::move(listener)};
    return token;
}

void EventBus::unsubscribe(int token) {
    std::lock_guard lock(mu_);
    subs_.erase(token);
}

void EventBus::publish(std::string type, std::string session, Json data) {
    std::vector<Listener> targets;
    Event event;
    {
        std::lock_guard lock(mu_);
        event = {++seq_, std::move(type), std::move(session), std::move(data)};
        for (const auto& [token, sub] : subs_)
            if (sub.session.empty() || sub.session == event.session) targets.push_back(sub.listener);
    }
    for (const auto& listener : targets) listener(event);
}

Service::Service(SessionStore& store, BackendPtr backend, EngineOptions options)
    : store_(store), backend_(std::move(backend)), options_(std::move(options)) {}

std::vector<std::string> Service::warnings() const {
    std::lock_guard lock(mu_);
    return warnings_;
}

Service::SlotPtr Service::slot(const std::string& id) {
    std::lock_guard lock(mu_);
    if (auto it = slots_.find(id); it != slots_.end()) return it->second;
    if (!store_.exists(id)) fail(404, "not_found", "no session \"" + id + "\"");
    auto loaded = store_.load(id);
    for (auto& w : loaded.warnings) warnings_.push_back(std::move(w));
    auto s = std::make_shared<Slot>();
    s->session = std::move(loaded.session);
    slots_[id] = s;
    return s;
}

Service::SlotPtr Service::create_session(const Json& body) {
    auto task = text_field(body, "task_description");
    auto input = text_field(body, "input_description", false);
    auto output = text_field(body, "output_description", false);
    Lan lan = init_lan(task, input, output, options_.clock);
    auto s = std::make_shared<Slot>();
    {
        std::lock_guard lock(mu_);
        s->session.id = store_.next_id();
        s->session.revisions.push_back({0, RevisionCause::init, std::nullopt, std::move(lan)});
        store_.save(s->session);
        slots_[s->session.id] = s;
    }
    return s;
}

ApiResponse Service::handle(std::string_view method, std::string_view path, const std::string& body,
                            const std::map<std::string, std::string>& query) {
    try {
        Json j = Json::object();
        if (body.find_first_not_of(" \t\r\n") != std::string::npos) j = parse_json(body);
        if (!j.is_object()) fail(400, "bad_request", "the request body must be a JSON object");
        if (auto v = j.find("api_version"); v != j.end() && *v != kApiVersion)
            fail(400, "unsupported_api_version", "api_version must be 1");
        return route(method, split_path(path), j, query);
    } catch (const HttpError& e) {
        return {e.status, error_body(e.code, e.message, e.violations)};
    } catch (const ParseError& e) {
        return {400, error_body("bad_request", e.what())};
    } catch (const SchemaVersionError& e) {
        return {400, error_body("unsupported_schema_version", e.what())};
    } catch (const PipelineStateError& e) {
        return {409, error_body("conflict", e.what())};
    } catch (const PlanValidationError& e) {
        return {422, error_body("invalid_plan", e.what(), e.violations())};
    } catch (const MergeError& e) {
        return {422, error_body("invalid_intervention", e.what())};
    } catch (const ValidationError& e) {
        return {422, error_body("invalid", e.what())};
    } catch (const ReplayMismatchError& e) {
        return {502, error_body("replay_mismatch", e.what())};
    } catch (const OracleExhaustedError& e) {
        return {502, error_body("backend_exhausted", e.what())};
    } catch (const ConfigError& e) {
        return {503, error_body("backend_unavailable", e.what())};
    } catch (const StorageError& e) {
        return {500, error_body("storage", e.what())};
    } catch (const ExecutionAborted& e) {
        return {409, error_body("aborted", e.what())};
    } catch (const Json::exception& e) {
        return {400, error_body("bad_request", e.what())};
    } catch (const std::exception& e) {
        return {500, error_body("internal", e.what())};
    }
}

ApiResponse Service::route(std::string_view method, const std::vector<std::string>& parts,
                           const Json& body, const std::map<std::string, std::string>& query) {
    if (parts.empty() || parts[0] != "sessions") fail(404, "not_found", "unknown endpoint");
    if (parts.size() == 1) {
        if (method == "GET") return {200, ok({{"sessions", store_.list()}})};
        if (method == "POST") {
            auto s = create_session(body);
            std::lock_guard lock(s->mu);
            events_.publish("lan_changed", s->session.id, {{"revision", 0}, {"cause", "init"}});
            return {201, ok({{"session", session_summary(s->session)}})};
        }
        fail(405, "method_not_allowed", "unsupported method");
    }
    return session_route(method, parts, body, query);
}

ApiResponse Service::session_route(std::string_view method, const std::vector<std::string>& parts,
                                   const Json& body, const std::map<std::string, std::string>& query) {
    auto s = slot(parts[1]);
    const std::string sub = parts.size() > 2 ? parts[2] : "";
    const bool read = method == "GET";

    // Requests for one session are serialized; edits are refused outright
    // while a long computation holds the session.
    bool long_running = method == "POST" && (sub == "run" || sub == "pipeline");
    if (!read && s->busy.load()) fail(409, "busy", "the session is computing; try again later");
    std::unique_lock lock(s->mu);
    struct BusyFlag {
        Slot* slot = nullptr;
        ~BusyFlag() {
            if (slot) slot->busy = false;
        }
    } busy_flag;
    if (long_running) {
        if (s->busy.exchange(true)) fail(409, "busy", "the session is computing; try again later");
        busy_flag.slot = s.get();
    }

    Session& session = s->session;
    auto recorder = std::make_shared<RecordingBackend>(
        backend_, [this, id = session.id](const Exchange& e) { store_.append_transcript(id, e); });

    auto commit = [&](const Lan& lan, RevisionCause cause) {
        if (lan == session.lan()) return false;
        int parent = session.revisions.back().revision;
        session.revisions.push_back({parent + 1, cause, parent, lan});
        if (cause == RevisionCause::manual_edit && session.pipeline) pipeline_invalidate(*session.pipeline);
        store_.save(session);
        events_.publish("lan_changed", session.id, {{"revision", parent + 1}, {"cause", to_string(cause)}});
        return true;
    };
    auto lan_body = [&] {
        return ok({{"revision", session.revisions.back().revision}, {"lan", lan_to_json(session.lan())}});
    };
    auto edit = [&](auto&& mutate) {
        Lan lan = session.lan();
        mutate(lan);
        check_saveable(lan);
        commit(lan, RevisionCause::manual_edit);
        return ApiResponse{200, lan_body()};
    };
    auto pipeline_body = [&] {
        return ok({{"pipeline", session.pipeline ? to_json(*session.pipeline) : Json(nullptr)}});
    };
    // Runs a pipeline operation on copies so a failing backend leaves the
    // session untouched.
    auto drive = [&](auto&& op) {
        Lan lan = session.lan();
        auto history = session.history;
        PipelineState state = session.pipeline.value_or(PipelineState{});
        PipelineContext ctx{lan, history, *recorder, options_};
        std::vector<Json> transitions;
        op(state, ctx, transitions);
        session.pipeline = state;
        session.history = std::move(history);
        if (!commit(lan, RevisionCause::strategy)) store_.save(session);
        for (auto& t : transitions) events_.publish("pipeline", session.id, std::move(t));
        return ApiResponse{200, pipeline_body()};
    };
    auto auto_advance = [&](PipelineState& state, PipelineContext& ctx, std::vector<Json>& transitions) {
        while (session.policy == SupervisionPolicy::auto_confirm && !pipeline_finished(state) &&
               !state.error) {
            pipeline_confirm(state, ctx);
            transitions.push_back(to_json(state));
        }
    };

    if (sub.empty()) {
        if (read) return {200, ok({{"session", session_summary(session)}})};
        fail(405, "method_not_allowed", "unsupported method");
    }

    if (sub == "lan") {
        if (parts.size() == 3) {
            if (read) return {200, lan_body()};
            if (method == "PUT") {
                const Json& doc = body.contains("lan") ? body["lan"] : body;
                Lan lan = lan_from_json(doc);
                return edit([&](Lan& l) { l = std::move(lan); });
            }
        } else if (parts[3] == "agents") {
            if (parts.size() == 4 && method == "POST") {
                Agent agent;
                if (body.contains("agent")) {
                    agent = agent_from_json(body["agent"], "/agent");
                } else {
                    agent = default_new_agent();
                    agent.name = text_field(body, "name");
                    if (body.contains("subtask_description"))
                        agent.execution.subtask_description = text_field(body, "subtask_description");
                    if (body.contains("output_description"))
                        agent.execution.output_description = text_field(body, "output_description");
                    if (body.contains("cm_enabled")) agent.control.enabled = body["cm_enabled"].get<bool>();
                }
                auto r = edit([&](Lan& l) { l.agents.push_back(agent); });
                r.status = 201;
                return r;
            }
            if (parts.size() == 5) {
                const std::string& name = parts[4];
                if (!session.lan().find_agent(name)) fail(404, "not_found", "no agent \"" + name + "\"");
                if (method == "DELETE") return edit([&](Lan& l) { l.remove_agent(name); });
                if (method == "PATCH")
                    return edit([&](Lan& l) {
                        Agent& a = *l.find_agent(name);
                        if (body.contains("subtask_description"))
                            a.execution.subtask_description = text_field(body, "subtask_description");
                        if (body.contains("output_description"))
                            a.execution.output_description = text_field(body, "output_description");
                        if (body.contains("cm_enabled")) a.control.enabled = body["cm_enabled"].get<bool>();
                        if (body.contains("required_predecessors"))
                            a.control.required_predecessors = text_list(body, "required_predecessors");
                        if (body.contains("cm_knowledge"))
                            a.control.knowledge = replace_knowledge(
                                a.control.knowledge, text_list(body, "cm_knowledge"), options_.clock);
                        if (body.contains("em_knowledge"))
                            a.execution.knowledge = replace_knowledge(
                                a.execution.knowledge, text_list(body, "em_knowledge"), options_.clock);
                        if (body.contains("name")) rename_agent(l, name, text_field(body, "name"));
                    });
            }
        } else if (parts[3] == "edges" && parts.size() == 4) {
            auto field = [&](const char* key) {
                if (auto it = query.find(key); it != query.end() && !body.contains(key)) return it->second;
                return text_field(body, key);
            };
            Edge e{field("source"), field("target")};
            if (method == "POST") {
                auto r = edit([&](Lan& l) { l.edges.push_back(e); });
                r.status = 201;
                return r;
            }
            if (method == "DELETE") {
                if (!session.lan().has_edge(e.source, e.target))
                    fail(404, "not_found", "no edge \"" + e.source + "\" -> \"" + e.target + "\"");
                return edit([&](Lan& l) { l.remove_edge(e.source, e.target); });
            }
        }
        fail(404, "not_found", "unknown endpoint");
    }

    if (sub == "run" && method == "POST" && parts.size() == 3) {
        auto input = text_field(body, "input");
        auto trace = run_lan(session.lan(), input, *recorder, options_.run);
        int n = store_.save_trace(session, trace);
        store_.save(session);
        Json t = to_json(trace);
        events_.publish("run_finished", session.id,
                        {{"trace_id", n}, {"final_output", trace.final_output}});
        return {200, ok({{"trace_id", n}, {"trace", std::move(t)}})};
    }

    if (sub == "traces" && read && parts.size() == 4) {
        auto trace = store_.load_trace(session.id, parse_int(parts[3], "trace id"));
        if (!trace) fail(404, "not_found", "no trace " + parts[3]);
        return {200, ok({{"trace", to_json(*trace)}})};
    }

    if (sub == "examples" && parts.size() == 3) {
        auto list = [&] {
            Json arr = Json::array();
            for (const auto& e : session.examples) arr.push_back(to_json(e));
            return arr;
        };
        if (read) return {200, ok({{"examples", list()}})};
        if (method == "POST") {
            Json added = Json::array();
            if (body.contains("examples")) {
                if (!body["examples"].is_array()) fail(400, "bad_request", "examples must be a list");
                for (const auto& e : body["examples"]) {
                    session.examples.push_back(example_from_body(e, session));
                    added.push_back(to_json(session.examples.back()));
                }
            } else {
                session.examples.push_back(example_from_body(body, session));
                added.push_back(to_json(session.examples.back()));
            }
            store_.save(session);
            return {201, ok({{"examples", std::move(added)}})};
        }
    }

    if (sub == "pipeline") {
        const std::string action = parts.size() > 3 ? parts[3] : "";
        if (read && action.empty()) return {200, pipeline_body()};
        if (method != "POST" || parts.size() != 4) fail(404, "not_found", "unknown endpoint");
        if (action == "start") {
            if (session.pipeline && !pipeline_finished(*session.pipeline))
                fail(409, "pipeline_active", "a pipeline is already running; abort it first");
            TrainingExample example;
            if (body.contains("example")) {
                example = example_from_body(body["example"], session);
                session.examples.push_back(example);
            } else {
                auto id = text_field(body, "example_id");
                auto it = std::find_if(session.examples.begin(), session.examples.end(),
                                       [&](const TrainingExample& e) { return e.id == id; });
                if (it == session.examples.end()) fail(404, "not_found", "no example \"" + id + "\"");
                example = *it;
            }
            if (body.contains("policy")) {
                auto p = parse_policy(text_field(body, "policy"));
                if (!p) fail(400, "bad_request", "policy must be auto_confirm or interactive");
                session.policy = *p;
            }
            return drive([&](PipelineState& state, PipelineContext& ctx, std::vector<Json>& transitions) {
                pipeline_start(state, example, ctx);
                transitions.push_back(to_json(state));
                auto_advance(state, ctx, transitions);
            });
        }
        if (!session.pipeline) fail(409, "no_pipeline", "no pipeline has been started");
        if (action == "confirm")
            return drive([&](PipelineState& state, PipelineContext& ctx, std::vector<Json>& transitions) {
                pipeline_confirm(state, ctx);
                transitions.push_back(to_json(state));
                auto_advance(state, ctx, transitions);
            });
        if (action == "retry") {
            Intervention iv;
            if (auto it = body.find("edited_document"); it != body.end() && !it->is_null())
                iv.edited_document = *it;
            for (const char* key : {"hint_text", "hint"})
                if (auto it = body.find(key); it != body.end() && it->is_string())
                    iv.hint_text = it->get<std::string>();
            return drive([&](PipelineState& state, PipelineContext& ctx, std::vector<Json>& transitions) {
                pipeline_retry(state, iv, ctx);
                transitions.push_back(to_json(state));
                auto_advance(state, ctx, transitions);
            });
        }
        if (action == "abort")
            return drive([&](PipelineState& state, PipelineContext&, std::vector<Json>& transitions) {
                if (pipeline_finished(state)) throw PipelineStateError("the pipeline has finished");
                pipeline_abort(state);
                transitions.push_back(to_json(state));
            });
        fail(404, "not_found", "unknown endpoint");
    }

    if (sub == "revisions" && read) {
        if (parts.size() == 3) {
            Json arr = Json::array();
            for (const auto& r : session.revisions) arr.push_back(revision_summary(r));
            return {200, ok({{"revisions", std::move(arr)}})};
        }
        if (parts.size() == 4) {
            int n = parse_int(parts[3], "revision");
            if (n < 0 || n >= static_cast<int>(session.revisions.size()))
                fail(404, "not_found", "no revision " + parts[3]);
            return {200, ok({{"revision", to_json(session.revisions[static_cast<std::size_t>(n)])}})};
        }
    }

    if (sub == "diff" && read && parts.size() == 3) {
        auto pick = [&](const char* key, int fallback) {
            auto it = query.find(key);
            int n = it == query.end() ? fallback : parse_int(it->second, key);
            if (n < 0 || n >= static_cast<int>(session.revisions.size()))
                fail(404, "not_found", "no revision " + std::to_string(n));
            return n;
        };
        int head = session.revisions.back().revision;
        int from = pick("from", head), to = pick("to", head);
        const Lan& a = session.revisions[static_cast<std::size_t>(from)].lan;
        const Lan& b = session.revisions[static_cast<std::size_t>(to)].lan;
        Json ops = Json::array();
        for (const auto& op : lan_edit_script(a, b))
            ops.push_back({{"op", describe(op)}, {"cost", edit_cost(op)}});
        return {200, ok({{"from", from}, {"to", to}, {"script", std::move(ops)}, {"lmd", lmd(a, b)}})};
    }

    fail(404, "not_found", "unknown endpoint");
}

}  // namespace lanforge
