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

// lanforge: headless driver for sessions, runs, training and evaluation.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "lanforge/diff.hpp"
#include "lanforge/serialize.hpp"
#include "lanforge/service.hpp"
#include "lanforge/validate.hpp"

using namespace lanforge;

namespace {

enum Exit {
    kOk = 0,
    kViolations = 1,
    kUsage = 2,
    kRequestFailed = 3,
    kIterationCap = 4,
    kBackend = 5,
    kStorage = 6,
};

struct CliFailure {
    int code;
    std::string message;
};

int exit_for_status(int status) {
    switch (status) {
        case 422: return kViolations;
        case 400:
        case 404:
        case 405: return kUsage;
        case 409: return kRequestFailed;
        case 502:
        case 503: return kBackend;
        default: return kStorage;
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliFailure{kUsage, "cannot read " + path};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string url_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

/// Defers building the HTTP backend until a completion is needed, so
/// commands that never call a model work without configuration.
class LazyHttpBackend : public Backend {
public:
    CompletionResponse complete(const CompletionRequest& request) override {
        if (!inner_) inner_ = std::make_unique<HttpBackend>(HttpBackendConfig::from_env());
        return inner_->complete(request);
    }
    std::string id() const override { return "http"; }

private:
    std::unique_ptr<HttpBackend> inner_;
};

class Client {
public:
    virtual ~Client() = default;
    virtual ApiResponse call(const std::string& method, const std::string& path, const Json& body = nullptr,
                             const std::map<std::string, std::string>& query = {}) = 0;

    Json expect(const std::string& method, const std::string& path, const Json& body = nullptr,
                const std::map<std::string, std::string>& query = {}) {
        auto r = call(method, path, body, query);
        if (r.status >= 400) {
            std::string msg = r.body.value("message", "request failed");
            for (const auto& v : r.body.value("violations", Json::array()))
                msg += "\n  - " + (v.is_string() ? v.get<std::string>() : v.value("message", v.dump()));
            throw CliFailure{exit_for_status(r.status), msg};
        }
        return r.body;
    }
};

class LocalClient : public Client {
public:
    LocalClient(const std::string& data_dir, BackendPtr backend, EngineOptions options)
        : store_(data_dir), service_(store_, std::move(backend), std::move(options)) {}

    ApiResponse call(const std::string& method, const std::string& path, const Json& body,
                     const std::map<std::string, std::string>& query) override {
        auto r = service_.handle(method, path, body.is_null() ? "" : body.dump(), query);
        for (const auto& w : service_.warnings())
            if (seen_warnings_.insert(w).second) std::cerr << "warning: " << w << "\n";
        return r;
    }

private:
    SessionStore store_;
    Service service_;
    std::set<std::string> seen_warnings_;
};

class RemoteClient : public Client {
public:
    explicit RemoteClient(const std::string& url) : client_(url) {
        client_.set_read_timeout(3600, 0);
    }

    ApiResponse call(const std::string& method, const std::string& path, const Json& body,
                     const std::map<std::string, std::string>& query) override {
        std::string target = path;
        char sep = '?';
        for (const auto& [k, v] : query) {
            target += sep + url_encode(k) + "=" + url_encode(v);
            sep = '&';
        }
        std::string payload = body.is_null() ? "" : body.dump();
        httplib::Result res;
        if (method == "GET")
            res = client_.Get(target);
        else if (method == "POST")
            res = client_.Post(target, payload, "application/json");
        else if (method == "PUT")
            res = client_.Put(target, payload, "application/json");
        else if (method == "PATCH")
            res = client_.Patch(target, payload, "application/json");
        else
            res = client_.Delete(target, payload, "application/json");
        if (!res) throw CliFailure{kBackend, "cannot reach the service: " + httplib::to_string(res.error())};
        ApiResponse r;
        r.status = res->status;
        r.body = Json::parse(res->body, nullptr, false);
        if (r.body.is_discarded()) r.body = error_body("bad_response", res->body);
        return r;
    }

private:
    httplib::Client client_;
};

std::vector<Json> read_examples(const std::string& path) {
    Json doc;
    try {
        doc = parse_json(read_text(path));
    } catch (const ParseError& e) {
        throw CliFailure{kUsage, path + ": " + e.what()};
    }
    if (doc.is_object() && doc.contains("examples")) doc = doc["examples"];
    if (!doc.is_array()) throw CliFailure{kUsage, path + ": expected a JSON array of examples"};
    std::vector<Json> out;
    for (const auto& e : doc) {
        if (!e.is_object() || !e.contains("input") || !e.contains("ground_truth"))
            throw CliFailure{kUsage, path + ": every example needs input and ground_truth"};
        out.push_back(e);
    }
    return out;
}

std::string session_path(const std::string& id) { return "/sessions/" + url_encode(id); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lanforge: build and train networks of LLM agents"};
    app.require_subcommand(1);

    bool local = false, json_out = false;
    std::string url, data_dir, replay, record;
    app.add_flag("--local", local, "operate on the local store instead of a service");
    app.add_option("--url", url, "service URL (default $LANFORGE_URL or http://127.0.0.1:8080)");
    app.add_option("--data", data_dir, "local store directory (default $LANFORGE_DATA_DIR)");
    app.add_flag("--json", json_out, "machine-readable output");
    app.add_option("--replay", replay, "serve completions from a recorded transcript (local)");
    app.add_option("--record", record, "record completions into a transcript (local)");

    std::string task, input_desc, output_desc;
    auto* init = app.add_subcommand("init", "create a session with a one-agent LAN");
    init->add_option("--task", task, "task description")->required();
    init->add_option("--input", input_desc, "description of the network input");
    init->add_option("--output", output_desc, "description of the network output");

    std::string session, input, trace_file;
    auto* run = app.add_subcommand("run", "run the session's LAN on one input");
    run->add_option("--session", session)->required();
    run->add_option("--input", input)->required();
    run->add_option("--trace", trace_file, "write the run trace to this file");

    std::string examples_file, policy = "auto_confirm";
    auto* train = app.add_subcommand("train", "train the LAN on examples");
    train->add_option("--session", session)->required();
    train->add_option("--examples", examples_file)->required();
    train->add_option("--policy", policy)->check(CLI::IsMember({"auto_confirm", "interactive"}));

    std::string judge = "exact";
    auto* eval = app.add_subcommand("eval", "score the LAN on test examples");
    eval->add_option("--session", session)->required();
    eval->add_option("--examples", examples_file)->required();
    eval->add_option("--judge", judge)->check(CLI::IsMember({"exact", "llm"}));

    int from = -1, to = -1;
    auto* diff = app.add_subcommand("diff", "edit script between two revisions");
    diff->add_option("--session", session)->required();
    diff->add_option("--from", from)->required();
    diff->add_option("--to", to)->required();

    std::string lan_file;
    auto* validate = app.add_subcommand("validate", "check a LAN document");
    validate->add_option("file", lan_file)->required();

    auto* show = app.add_subcommand("show", "print the session's current LAN");
    show->add_option("--session", session)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit cleanly; every other parse failure is a usage error.
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (validate->parsed()) {
            Lan lan;
            try {
                lan = deserialize_lan(read_text(lan_file));
            } catch (const Error& e) {
                throw CliFailure{kUsage, lan_file + ": " + e.what()};
            }
            auto violations = validate_lan(lan);
            auto problems = structural_problems(lan);
            if (json_out) {
                Json v = Json::array();
                for (const auto& x : violations) v.push_back(to_json(x));
                for (const auto& p : problems) v.push_back({{"type", "StructuralProblem"}, {"message", p}});
                std::cout << Json{{"valid", v.empty()}, {"violations", v}}.dump(2) << "\n";
            } else {
                for (const auto& x : violations) std::cout << describe(x) << "\n";
                for (const auto& p : problems) std::cout << p << "\n";
                if (violations.empty() && problems.empty()) std::cout << "valid\n";
            }
            return violations.empty() && problems.empty() ? kOk : kViolations;
        }

        if (!local && (!replay.empty() || !record.empty()))
            throw CliFailure{kUsage, "--replay and --record need --local"};
        if (!replay.empty() && !record.empty())
            throw CliFailure{kUsage, "--replay and --record are exclusive"};

        BackendPtr backend;
        std::shared_ptr<RecordingBackend> recorder;
        std::shared_ptr<ReplayBackend> replayer;
        EngineOptions options;
        if (!replay.empty()) {
            try {
                replayer = std::make_shared<ReplayBackend>(Transcript::load(replay));
            } catch (const Error& e) {
                throw CliFailure{kUsage, e.what()};
            }
            backend = replayer;
            options.clock = fixed_clock();
        } else {
            backend = std::make_shared<LazyHttpBackend>();
            if (!record.empty()) {
                recorder = std::make_shared<RecordingBackend>(backend);
                backend = recorder;
            }
        }

        std::unique_ptr<Client> client;
        if (local) {
            if (data_dir.empty()) {
                const char* env = std::getenv("LANFORGE_DATA_DIR");
                data_dir = env && *env ? env : "lanforge-data";
            }
            client = std::make_unique<LocalClient>(data_dir, backend, options);
        } else {
            if (url.empty()) {
                const char* env = std::getenv("LANFORGE_URL");
                url = env && *env ? env : "http://127.0.0.1:8080";
            }
            client = std::make_unique<RemoteClient>(url);
        }
        auto save_recording = [&] {
            if (recorder) recorder->transcript().save(record);
        };

        if (init->parsed()) {
            auto r = client->expect("POST", "/sessions",
                                    {{"task_description", task},
                                     {"input_description", input_desc},
                                     {"output_description", output_desc}});
            if (json_out)
                std::cout << r["session"].dump(2) << "\n";
            else
                std::cout << r["session"]["id"].get<std::string>() << "\n";
            return kOk;
        }

        if (show->parsed()) {
            auto r = client->expect("GET", session_path(session) + "/lan");
            std::cout << (json_out ? r.dump(2) : r["lan"].dump(2)) << "\n";
            return kOk;
        }

        if (run->parsed()) {
            auto r = client->expect("POST", session_path(session) + "/run", {{"input", input}});
            save_recording();
            if (!trace_file.empty()) {
                std::ofstream out(trace_file, std::ios::binary);
                out << r["trace"].dump(2) << "\n";
                if (!out) throw CliFailure{kStorage, "cannot write " + trace_file};
            }
            if (json_out)
                std::cout << r["trace"].dump(2) << "\n";
            else
                std::cout << r["trace"]["final_output"].get<std::string>() << "\n";
            return kOk;
        }

        if (train->parsed()) {
            Json report = Json::array();
            int exit_code = kOk;
            for (const auto& e : read_examples(examples_file)) {
                auto added = client->expect("POST", session_path(session) + "/examples", e);
                auto id = added["examples"][0]["id"].get<std::string>();
                auto r = client->expect("POST", session_path(session) + "/pipeline/start",
                                        {{"example_id", id}, {"policy", policy}});
                save_recording();
                const auto& state = r["pipeline"];
                auto status = state["status"].get<std::string>();
                Json line{{"example", id},
                          {"status", status},
                          {"strategies", state["log"].size()},
                          {"error", state["error"]}};
                report.push_back(line);
                if (!json_out) {
                    std::cout << id << ": " << status << " after " << state["log"].size() << " update(s)";
                    if (state["error"].is_string()) std::cout << " (" << state["error"].get<std::string>() << ")";
                    std::cout << "\n";
                }
                if (state["error_kind"] == "IterationCapReached") {
                    exit_code = kIterationCap;
                    break;
                }
                if (state["error"].is_string()) {
                    exit_code = kRequestFailed;
                    break;
                }
                if (status != "satisfied") break;  // interactive: left paused for supervision
            }
            if (replayer && !replayer->exhausted())
                std::cerr << "warning: the transcript has unused exchanges\n";
            auto lan = client->expect("GET", session_path(session) + "/lan");
            if (json_out) std::cout << Json{{"examples", report}, {"revision", lan["revision"]}}.dump(2) << "\n";
            return exit_code;
        }

        if (eval->parsed()) {
            auto examples = read_examples(examples_file);
            Json results = Json::array();
            int passed = 0;
            for (std::size_t i = 0; i < examples.size(); ++i) {
                const auto& e = examples[i];
                auto r = client->expect("POST", session_path(session) + "/run", {{"input", e["input"]}});
                auto trace = trace_from_json(r["trace"]);
                TrainingExample ex{e.value("id", "test" + std::to_string(i + 1)), e["input"].get<std::string>(),
                                   e["ground_truth"].get<std::string>()};
                bool pass;
                if (judge == "exact")
                    pass = normalize_whitespace(trace.final_output) == normalize_whitespace(ex.ground_truth);
                else
                    pass = check_satisfaction(trace, ex, *backend, options).satisfied;
                passed += pass ? 1 : 0;
                results.push_back({{"example", ex.id}, {"pass", pass}, {"output", trace.final_output}});
                if (!json_out) std::cout << ex.id << ": " << (pass ? "pass" : "fail") << "\n";
            }
            save_recording();
            double mean = examples.empty() ? 0.0 : static_cast<double>(passed) / examples.size();
            if (json_out)
                std::cout << Json{{"judge", judge}, {"results", results}, {"mean_score", mean}}.dump(2) << "\n";
            else
                std::cout << "mean score: " << mean << (judge == "llm" ? " (model-judged)" : "") << "\n";
            return kOk;
        }

        if (diff->parsed()) {
            auto r = client->expect("GET", session_path(session) + "/diff",
                                    nullptr, {{"from", std::to_string(from)}, {"to", std::to_string(to)}});
            if (json_out) {
                std::cout << r.dump(2) << "\n";
            } else {
                for (const auto& op : r["script"])
                    std::cout << op["op"].get<std::string>() << "  [" << op["cost"] << "]\n";
                std::cout << "LMD: " << r["lmd"] << "\n";
            }
            return kOk;
        }
    } catch (const CliFailure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBackend;
    } catch (const StorageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStorage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRequestFailed;
    }
    return kOk;
}
