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

// Shared test machinery: random LAN generators, independent reference
// implementations used as oracles, scripted reply builders and a scratch
// directory helper.

#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lanforge/engine.hpp"
#include "lanforge/serialize.hpp"

namespace lanforge::testing {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Replies

std::string cm_reply(bool result, const std::string& thought = "ok");
std::string em_reply(const std::string& result, const std::string& thought = "ok");
std::string judge_reply(bool result);

/// Agent name carried by a "cm:X" / "em:X" tag, or empty.
std::string tag_agent(const std::string& tag, const std::string& prefix);

// ---------------------------------------------------------------------------
// Generators

struct GenOptions {
    int max_agents = 10;
    double edge_probability = 0.35;
    bool rich_contents = true;  // knowledge, examples, unicode text
};

/// A valid DAG-shaped LAN with unique names and random contents.
Lan random_lan(Rng& rng, const GenOptions& options = {});
std::string random_text(Rng& rng, std::size_t max_len, bool allow_empty = false);

// ---------------------------------------------------------------------------
// Reference implementations

/// Lexicographically smallest topological order by insertion index. Uses
/// permutation enumeration for small graphs and a naive rescan otherwise.
std::vector<std::string> reference_topological_order(const Lan& lan);

/// Cycles as sets of agent names, via transitive closure.
std::set<std::set<std::string>> reference_cycles(const Lan& lan);

/// Independent interpreter for scripted decisions: `decisions[name]` is what
/// the model would answer for the CM, outputs are "out:<name>".
struct ReferenceRun {
    std::set<std::string> activated;
    std::map<std::string, std::map<std::string, std::string>> inputs;  // agent -> label -> value
    std::string final_output;
    std::size_t llm_calls = 0;
};
ReferenceRun reference_run(const Lan& lan, const std::string& external_input,
                           const std::map<std::string, bool>& decisions);

// ---------------------------------------------------------------------------
// Consistency-respecting oracle

/// Answers CM/EM prompts from the module examples of the LAN returned by
/// `lan()` whenever every entry of an example appears in the prompt's inputs
/// section; the largest (then latest) matching example wins. Anything else
/// goes to `fallback`.
class ConsistentOracle {
public:
    using Responder = std::function<std::string(const CompletionRequest&)>;

    ConsistentOracle(std::function<const Lan*()> lan, Responder fallback);
    std::string operator()(const CompletionRequest& request) const;

private:
    std::function<const Lan*()> lan_;
    Responder fallback_;
};

// ---------------------------------------------------------------------------
// Files

/// Fresh directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// Directory holding committed fixtures.
std::filesystem::path fixture_dir();
/// True when fixtures should be rewritten instead of compared.
bool regenerate_fixtures();

/// Compares `actual` with the committed fixture, or rewrites it when
/// regenerating. Returns true on match.
bool matches_golden(const std::string& name, const std::string& actual);

}  // namespace lanforge::testing
