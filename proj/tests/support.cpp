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

#include "support.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lanforge/runtime.hpp"

namespace lanforge::testing {

std::string cm_reply(bool result, const std::string& thought) {
    return Json{{"thought", thought}, {"result", result}}.dump();
}

std::string em_reply(const std::string& result, const std::string& thought) {
    return Json{{"thought", thought}, {"result", result}}.dump();
}

std::string judge_reply(bool result) { return Json{{"thought", "compared"}, {"result", result}}.dump(); }

std::string tag_agent(const std::string& tag, const std::string& prefix) {
    return tag.rfind(prefix, 0) == 0 ? tag.substr(prefix.size()) : std::string();
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kWords = {
    "Literal", "Rhyming", "Polisher", "Translator", "Refiner", "Structure", "Spoken",
    "Literary", "Judge",  "Summary", "Critic",     "Planner", "Writer",    "Checker",
    "vers",    "chanson", "régle",   "数据",        "über",    "naïve",     "Ωmega"};

std::string pick(Rng& rng, const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

KnowledgeItem random_knowledge(Rng& rng) {
    return {random_text(rng, 40), coin(rng, 0.5) ? Origin::user : Origin::pipeline,
            "2026-01-0" + std::to_string(1 + rng() % 9) + "T00:00:00Z"};
}

}  // namespace

std::string random_text(Rng& rng, std::size_t max_len, bool allow_empty) {
    static const std::vector<std::string> pieces = {
        "a", "b", "the", " ", " ", "night", "l'heure", "\"q\"", "\n", "é", "中文", "\\", "{", "}", "42", "\t"};
    std::size_t len = std::uniform_int_distribution<std::size_t>(allow_empty ? 0 : 1, max_len)(rng);
    std::string out;
    while (out.size() < len) out += pick(rng, pieces);
    if (!allow_empty && normalize_whitespace(out).empty()) out += "x";
    return out;
}

Lan random_lan(Rng& rng, const GenOptions& options) {
    Lan lan;
    lan.task_description = options.rich_contents ? random_text(rng, 30) : "task";
    lan.input_description = options.rich_contents ? random_text(rng, 20, true) : "";
    lan.output_description = options.rich_contents ? random_text(rng, 20, true) : "";
    int n = std::uniform_int_distribution<int>(1, options.max_agents)(rng);
    for (int i = 0; i < n; ++i) {
        Agent a;
        a.name = pick(rng, kWords) + " " + std::to_string(i);
        a.execution.subtask_description = options.rich_contents ? random_text(rng, 30) : "do " + a.name;
        a.execution.output_description = options.rich_contents ? random_text(rng, 20) : "text";
        a.control.enabled = coin(rng, 0.7);
        lan.agents.push_back(std::move(a));
    }
    // Edges only go forward in a hidden order, so the graph is acyclic while
    // insertion order stays unrelated to topology.
    std::vector<int> hidden(n);
    std::iota(hidden.begin(), hidden.end(), 0);
    std::shuffle(hidden.begin(), hidden.end(), rng);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (coin(rng, options.edge_probability))
                lan.edges.push_back({lan.agents[hidden[i]].name, lan.agents[hidden[j]].name});
    std::shuffle(lan.edges.begin(), lan.edges.end(), rng);

    for (auto& a : lan.agents) {
        for (const auto& p : lan.predecessors(a.name))
            if (coin(rng, 0.3)) a.control.required_predecessors.push_back(p);
        if (!options.rich_contents) continue;
        int k = rng() % 3;
        for (int i = 0; i < k; ++i) a.control.knowledge.push_back(random_knowledge(rng));
        k = rng() % 3;
        for (int i = 0; i < k; ++i) a.execution.knowledge.push_back(random_knowledge(rng));
        k = rng() % 3;
        for (int i = 0; i < k; ++i) {
            NamedValues in{{std::string(kExternalInputLabel), random_text(rng, 20)}};
            for (const auto& p : lan.predecessors(a.name))
                if (coin(rng, 0.5)) in.add(p, random_text(rng, 20));
            if (coin(rng, 0.5))
                a.control.examples.push_back({in, coin(rng, 0.5), "ex" + std::to_string(i)});
            else
                a.execution.examples.push_back({in, random_text(rng, 20), "ex" + std::to_string(i)});
        }
    }
    return lan;
}

// ---------------------------------------------------------------------------

namespace {

bool respects_edges(const Lan& lan, const std::vector<std::size_t>& perm) {
    std::vector<std::size_t> pos(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) pos[perm[i]] = i;
    for (const auto& e : lan.edges)
        if (pos[*lan.index_of(e.source)] >= pos[*lan.index_of(e.target)]) return false;
    return true;
}

}  // namespace

std::vector<std::string> reference_topological_order(const Lan& lan) {
    std::size_t n = lan.agents.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> chosen;
    if (n <= 7) {
        // next_permutation walks in lexicographic order, so the first valid
        // permutation is the smallest one.
        do {
            if (respects_edges(lan, perm)) {
                chosen = perm;
                break;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        std::vector<bool> placed(n, false);
        while (chosen.size() < n) {
            bool progressed = false;
            for (std::size_t i = 0; i < n && !progressed; ++i) {
                if (placed[i]) continue;
                bool ready = true;
                for (const auto& e : lan.edges)
                    if (e.target == lan.agents[i].name && !placed[*lan.index_of(e.source)]) ready = false;
                if (ready) {
                    placed[i] = true;
                    chosen.push_back(i);
                    progressed = true;
                }
            }
            if (!progressed) break;
        }
    }
    std::vector<std::string> out;
    for (auto i : chosen) out.push_back(lan.agents[i].name);
    return out;
}

std::set<std::set<std::string>> reference_cycles(const Lan& lan) {
    std::size_t n = lan.agents.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (const auto& e : lan.edges) {
        auto s = lan.index_of(e.source), t = lan.index_of(e.target);
        if (s && t) reach[*s][*t] = true;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    std::set<std::set<std::string>> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!reach[i][i]) continue;
        std::set<std::string> component;
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i][j] && reach[j][i]) component.insert(lan.agents[j].name);
        out.insert(component);
    }
    return out;
}

ReferenceRun reference_run(const Lan& lan, const std::string& external_input,
                           const std::map<std::string, bool>& decisions) {
    ReferenceRun r;
    std::map<std::string, std::map<std::string, std::string>> outputs;
    std::optional<std::string> last;
    for (const auto& name : reference_topological_order(lan)) {
        const Agent& agent = *lan.find_agent(name);
        std::map<std::string, std::string> in{{std::string(kExternalInputLabel), external_input}};
        for (const auto& e : lan.edges)
            if (e.target == name)
                for (const auto& [k, v] : outputs[e.source]) in[k] = v;
        r.inputs[name] = in;
        bool active;
        if (!agent.control.enabled) {
            active = true;
        } else {
            bool blocked = false;
            for (const auto& p : agent.control.required_predecessors)
                if (!r.activated.count(p)) blocked = true;
            if (blocked) {
                active = false;
            } else {
                ++r.llm_calls;
                active = decisions.at(name);
            }
        }
        auto out = in;
        if (active) {
            ++r.llm_calls;
            r.activated.insert(name);
            out[name] = "out:" + name;
            last = out[name];
        }
        outputs[name] = out;
    }
    r.final_output = last ? *last : external_input;
    return r;
}

// ---------------------------------------------------------------------------

ConsistentOracle::ConsistentOracle(std::function<const Lan*()> lan, Responder fallback)
    : lan_(std::move(lan)), fallback_(std::move(fallback)) {}

std::string ConsistentOracle::operator()(const CompletionRequest& request) const {
    std::string cm = tag_agent(request.tag, "cm:");
    std::string em = tag_agent(request.tag, "em:");
    const Lan* lan = lan_();
    if (lan && (!cm.empty() || !em.empty())) {
        const Agent* agent = lan->find_agent(cm.empty() ? em : cm);
        if (agent) {
            const auto& examples = cm.empty() ? agent->execution.examples : agent->control.examples;
            const Example* best = nullptr;
            for (const auto& ex : examples) {
                bool all = true;
                for (const auto& [label, value] : ex.inputs) {
                    NamedValues one{{label, value}};
                    if (request.prompt.find(render_inputs(one, *lan)) == std::string::npos) {
                        all = false;
                        break;
                    }
                }
                if (all && (!best || ex.inputs.size() >= best->inputs.size())) best = &ex;
            }
            if (best) {
                if (const bool* b = std::get_if<bool>(&best->result)) return cm_reply(*b, "from example");
                return em_reply(std::get<std::string>(best->result), "from example");
            }
        }
    }
    return fallback_(request);
}

// ---------------------------------------------------------------------------

TempDir::TempDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "lanforge-test-XXXXXX").string();
    if (!mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::filesystem::path fixture_dir() { return LANFORGE_FIXTURE_DIR; }

bool regenerate_fixtures() {
    const char* v = std::getenv("LANFORGE_REGENERATE_FIXTURES");
    return v && std::string(v) == "1";
}

bool matches_golden(const std::string& name, const std::string& actual) {
    auto path = fixture_dir() / name;
    if (regenerate_fixtures()) {
        write_file(path, actual);
        return true;
    }
    return std::filesystem::exists(path) && read_file(path) == actual;
}

}  // namespace lanforge::testing
