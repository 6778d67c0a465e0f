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

// Durable session storage: one directory per session holding the session
// document, one canonical LAN document per revision, run traces and the model
// transcript. Every file is written to a temporary name and renamed.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lanforge/pipeline.hpp"

namespace lanforge {

inline constexpr int kApiVersion = 1;

enum class RevisionCause { init, strategy, manual_edit };
std::string_view to_string(RevisionCause c);
std::optional<RevisionCause> parse_revision_cause(std::string_view text);

struct LanRevision {
    int revision = 0;
    RevisionCause cause = RevisionCause::init;
    std::optional<int> parent;
    Lan lan;

    friend bool operator==(const LanRevision&, const LanRevision&) = default;
};

Json to_json(const LanRevision& r);
LanRevision revision_from_json(const Json& j);

struct Session {
    std::string id;
    std::vector<LanRevision> revisions;  // linear; revisions[i].revision == i
    std::vector<TrainingExample> examples;
    std::vector<HistoryEntry> history;
    std::optional<PipelineState> pipeline;
    SupervisionPolicy policy = SupervisionPolicy::interactive;
    int traces = 0;  // number of stored run traces

    const Lan& lan() const { return revisions.back().lan; }

    /// Equality of the persisted parts.
    friend bool operator==(const Session& a, const Session& b);
};

Json session_document(const Session& s);

struct LoadResult {
    Session session;
    std::vector<std::string> warnings;
};

class SessionStore {
public:
    /// Called with the final path after the temporary file is complete and
    /// before it is renamed into place. Throwing simulates a crash.
    using FaultHook = std::function<void(const std::filesystem::path&)>;

    explicit SessionStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::vector<std::string> list() const;
    bool exists(const std::string& id) const;
    /// A fresh id: "s1", "s2", ...
    std::string next_id() const;

    /// Writes the session document and any revision not yet on disk.
    void save(const Session& session) const;
    /// Corrupted files are renamed to "<name>.corrupt" and reported as
    /// warnings. Throws StorageError when nothing usable remains.
    LoadResult load(const std::string& id) const;

    /// Stores a trace as traces/<n>.json and returns n.
    int save_trace(Session& session, const RunTrace& trace) const;
    std::optional<RunTrace> load_trace(const std::string& id, int n) const;
    void append_transcript(const std::string& id, const Exchange& exchange) const;
    std::filesystem::path transcript_path(const std::string& id) const;

    void set_fault_hook(FaultHook hook) { fault_ = std::move(hook); }

    /// Atomic replace of `path` with `content`.
    void write_file(const std::filesystem::path& path, const std::string& content) const;

private:
    std::filesystem::path dir(const std::string& id) const;
    std::filesystem::path root_;
    FaultHook fault_;
};

}  // namespace lanforge
