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
#include <fstream>
#include <sstream>

#include "lanforge/serialize.hpp"
#include "lanforge/store.hpp"

namespace fs = std::filesystem;

namespace lanforge {
namespace {

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json history_json(const std::vector<HistoryEntry>& history) {
    Json arr = Json::array();
    for (const auto& h : history) arr.push_back({{"example", to_json(h.example)}, {"trace", to_json(h.trace)}});
    return arr;
}

void quarantine(const fs::path& path, std::vector<std::string>& warnings, const std::string& why) {
    auto target = path;
    target += ".corrupt";
    std::error_code ec;
    fs::rename(path, target, ec);
    warnings.push_back(path.string() + ": " + why + "; moved to " + target.filename().string());
}

}  // namespace

std::string_view to_string(RevisionCause c) {
    switch (c) {
        case RevisionCause::init: return "init";
        case RevisionCause::strategy: return "strategy";
        case RevisionCause::manual_edit: return "manual_edit";
    }
    return "?";
}

std::optional<RevisionCause> parse_revision_cause(std::string_view text) {
    if (text == "init") return RevisionCause::init;
    if (text == "strategy") return RevisionCause::strategy;
    if (text == "manual_edit") return RevisionCause::manual_edit;
    return std::nullopt;
}

Json to_json(const LanRevision& r) {
    return {{"revision", r.revision},
            {"cause", to_string(r.cause)},
            {"parent", r.parent ? Json(*r.parent) : Json(nullptr)},
            {"lan", lan_to_json(r.lan)}};
}

LanRevision revision_from_json(const Json& j) {
    try {
        LanRevision r;
        r.revision = j.at("revision").get<int>();
        auto cause = parse_revision_cause(j.at("cause").get<std::string>());
        if (!cause) throw ParseError("/cause", "unknown revision cause");
        r.cause = *cause;
        if (auto it = j.find("parent"); it != j.end() && !it->is_null()) r.parent = it->get<int>();
        r.lan = lan_from_json(j.at("lan"));
        return r;
    } catch (const Json::exception& e) {
        throw ParseError("revision", e.what());
    }
}

bool operator==(const Session& a, const Session& b) {
    auto pipeline = [](const Session& s) { return s.pipeline ? to_json(*s.pipeline) : Json(nullptr); };
    return a.id == b.id && a.revisions == b.revisions && a.examples == b.examples &&
           a.history == b.history && a.policy == b.policy && a.traces == b.traces &&
           pipeline(a) == pipeline(b);
}

Json session_document(const Session& s) {
    Json examples = Json::array();
    for (const auto& e : s.examples) examples.push_back(to_json(e));
    return {{"api_version", kApiVersion},
            {"id", s.id},
            {"head", s.revisions.empty() ? 0 : s.revisions.back().revision},
            {"policy", to_string(s.policy)},
            {"examples", std::move(examples)},
            {"history", history_json(s.history)},
            {"pipeline", s.pipeline ? to_json(*s.pipeline) : Json(nullptr)},
            {"traces", s.traces}};
}

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "sessions", ec);
    if (ec) throw StorageError(root_.string(), "cannot create store: " + ec.message());
}

fs::path SessionStore::dir(const std::string& id) const { return root_ / "sessions" / id; }

std::vector<std::string> SessionStore::list() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root_ / "sessions"))
        if (entry.is_directory()) ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return ids;
}

bool SessionStore::exists(const std::string& id) const {
    return !id.empty() && id.find('/') == std::string::npos && id != "." && id != ".." &&
           fs::is_directory(dir(id));
}

std::string SessionStore::next_id() const {
    for (int n = 1;; ++n) {
        auto id = "s" + std::to_string(n);
        if (!fs::exists(dir(id))) return id;
    }
}

void SessionStore::write_file(const fs::path& path, const std::string& content) const {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw StorageError(path.parent_path().string(), ec.message());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError(tmp.string(), "cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw StorageError(tmp.string(), "write failed");
    }
    if (fault_) fault_(path);
    fs::rename(tmp, path, ec);
    if (ec) throw StorageError(path.string(), "rename failed: " + ec.message());
}

void SessionStore::save(const Session& session) const {
    const auto d = dir(session.id);
    for (const auto& r : session.revisions) {
        auto path = d / "revisions" / (std::to_string(r.revision) + ".json");
        auto text = dump(to_json(r));
        if (read_file(path) != text) write_file(path, text);
    }
    write_file(d / "session.json", dump(session_document(session)));
}

LoadResult SessionStore::load(const std::string& id) const {
    if (!exists(id)) throw StorageError(dir(id).string(), "no such session");
    LoadResult result;
    auto& s = result.session;
    s.id = id;
    const auto d = dir(id);

    std::optional<Json> doc;
    if (auto text = read_file(d / "session.json")) {
        try {
            doc = parse_json(*text);
            if (!doc->is_object()) throw ParseError("", "expected an object");
            if (doc->value("api_version", 0) != kApiVersion)
                throw ParseError("/api_version", "unsupported api version");
        } catch (const Error& e) {
            doc.reset();
            quarantine(d / "session.json", result.warnings, e.what());
        }
    }
    std::optional<int> head;
    if (doc) head = doc->value("head", 0);

    for (int n = 0;; ++n) {
        auto path = d / "revisions" / (std::to_string(n) + ".json");
        if (!fs::exists(path)) break;
        if (head && n > *head) {
            result.warnings.push_back(path.string() + ": revision was never committed; ignored");
            break;
        }
        try {
            auto r = revision_from_json(parse_json(*read_file(path)));
            if (r.revision != n) throw ParseError("/revision", "does not match the file name");
            s.revisions.push_back(std::move(r));
        } catch (const Error& e) {
            quarantine(path, result.warnings, e.what());
            break;
        }
    }
    if (s.revisions.empty()) throw StorageError(d.string(), "session has no readable revision");

    if (doc) {
        try {
            if (auto p = parse_policy(doc->value("policy", "interactive"))) s.policy = *p;
            for (const auto& e : doc->value("examples", Json::array()))
                s.examples.push_back(training_example_from_json(e));
            for (const auto& h : doc->value("history", Json::array()))
                s.history.push_back({training_example_from_json(h.at("example")),
                                     trace_from_json(h.at("trace"))});
            if (auto it = doc->find("pipeline"); it != doc->end() && !it->is_null())
                s.pipeline = pipeline_state_from_json(*it);
            s.traces = doc->value("traces", 0);
        } catch (const std::exception& e) {
            s.examples.clear();
            s.history.clear();
            s.pipeline.reset();
            quarantine(d / "session.json", result.warnings, e.what());
        }
    } else {
        result.warnings.push_back(id + ": session document missing; restored from revisions only");
    }
    return result;
}

int SessionStore::save_trace(Session& session, const RunTrace& trace) const {
    int n = session.traces + 1;
    write_file(dir(session.id) / "traces" / (std::to_string(n) + ".json"), dump(to_json(trace)));
    session.traces = n;
    return n;
}

std::optional<RunTrace> SessionStore::load_trace(const std::string& id, int n) const {
    auto text = read_file(dir(id) / "traces" / (std::to_string(n) + ".json"));
    if (!text) return std::nullopt;
    return trace_from_json(parse_json(*text));
}

fs::path SessionStore::transcript_path(const std::string& id) const { return dir(id) / "transcript.jsonl"; }

void SessionStore::append_transcript(const std::string& id, const Exchange& exchange) const {
    Transcript t;
    t.exchanges.push_back(exchange);
    auto existing = read_file(transcript_path(id)).value_or("");
    write_file(transcript_path(id), existing + t.to_jsonl());
}

}  // namespace lanforge
