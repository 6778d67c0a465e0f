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

#include "lanforge/gateway.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lanforge/errors.hpp"

namespace lanforge {

using Json = nlohmann::json;

void CancelToken::check() const {
    if (cancelled()) throw AbortedError();
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

namespace {

void require_prompt(const CompletionRequest& r) {
    if (r.prompt.empty()) throw ValidationError("completion request has an empty prompt");
    if (r.cancel) r.cancel->check();
}

// First differing line between two prompts, for mismatch reports.
std::string prompt_diff(const std::string& expected, const std::string& actual) {
    std::istringstream a(expected), b(actual);
    std::string la, lb;
    for (int line = 1;; ++line) {
        bool ha = static_cast<bool>(std::getline(a, la));
        bool hb = static_cast<bool>(std::getline(b, lb));
        if (!ha && !hb) return "prompts differ only in trailing bytes";
        if (!ha || !hb || la != lb) {
            return "line " + std::to_string(line) + ":\n- " + (ha ? la : "<end of prompt>") +
                   "\n+ " + (hb ? lb : "<end of prompt>");
        }
    }
}

}  // namespace

std::string Transcript::fingerprint() const {
    std::string joined;
    for (const auto& e : exchanges) joined += e.prompt_sha256 + "\n";
    return sha256_hex(joined);
}

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& e : exchanges) {
        Json j{{"prompt_sha256", e.prompt_sha256},
               {"prompt", e.prompt},
               {"response", e.response},
               {"tag", e.tag}};
        out += j.dump() + "\n";
    }
    return out;
}

Transcript Transcript::from_jsonl(std::string_view text) {
    Transcript t;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
            Exchange e;
            e.prompt = j.at("prompt").get<std::string>();
            e.response = j.at("response").get<std::string>();
            e.tag = j.value("tag", "");
            e.prompt_sha256 = j.value("prompt_sha256", sha256_hex(e.prompt));
            if (e.prompt_sha256 != sha256_hex(e.prompt))
                throw ParseError("line " + std::to_string(line_no), "prompt_sha256 does not match prompt");
            t.exchanges.push_back(std::move(e));
        } catch (const Json::exception& ex) {
            throw ParseError("line " + std::to_string(line_no), ex.what());
        }
    }
    return t;
}

void Transcript::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw StorageError(path, "cannot open for writing");
    f << to_jsonl();
    if (!f) throw StorageError(path, "write failed");
}

Transcript Transcript::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw StorageError(path, "cannot open transcript");
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_jsonl(ss.str());
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> script)
    : queue_(script.begin(), script.end()) {}

ScriptedBackend::ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

void ScriptedBackend::push(std::string text) {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(text));
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    require_prompt(request);
    std::unique_lock lock(mu_);
    requests_.push_back(request);
    if (!queue_.empty()) {
        auto text = std::move(queue_.front());
        queue_.pop_front();
        return {std::move(text), std::chrono::milliseconds{0}, id()};
    }
    if (!responder_) throw OracleExhaustedError(requests_.size() - 1);
    auto responder = responder_;
    lock.unlock();
    return {responder(request), std::chrono::milliseconds{0}, id()};
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return requests_.size();
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

std::vector<CompletionRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

RecordingBackend::RecordingBackend(BackendPtr inner, Sink sink)
    : inner_(std::move(inner)), sink_(std::move(sink)) {
    if (!inner_) throw ConfigError("recording backend needs an inner backend");
}

CompletionResponse RecordingBackend::complete(const CompletionRequest& request) {
    auto response = inner_->complete(request);
    Exchange e{sha256_hex(request.prompt), request.prompt, response.text, request.tag};
    std::lock_guard lock(mu_);
    transcript_.exchanges.push_back(e);
    if (sink_) sink_(e);
    return response;
}

std::string RecordingBackend::id() const { return "record(" + inner_->id() + ")"; }

Transcript RecordingBackend::transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
}

ReplayBackend::ReplayBackend(Transcript transcript) : transcript_(std::move(transcript)) {}

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
    require_prompt(request);
    std::lock_guard lock(mu_);
    const std::size_t index = next_ + 1;
    if (next_ >= transcript_.exchanges.size())
        throw ReplayMismatchError(index, "transcript has only " +
                                             std::to_string(transcript_.exchanges.size()) +
                                             " exchanges; request tag '" + request.tag + "'");
    const auto& recorded = transcript_.exchanges[next_];
    if (sha256_hex(request.prompt) != recorded.prompt_sha256)
        throw ReplayMismatchError(index, "tag '" + request.tag + "' (recorded '" + recorded.tag +
                                             "')\n" + prompt_diff(recorded.prompt, request.prompt));
    ++next_;
    return {recorded.response, std::chrono::milliseconds{0}, id()};
}

std::size_t ReplayBackend::position() const {
    std::lock_guard lock(mu_);
    return next_;
}

bool ReplayBackend::exhausted() const {
    std::lock_guard lock(mu_);
    return next_ >= transcript_.exchanges.size();
}

std::chrono::milliseconds RetryPolicy::delay(int attempt) const {
    double ms = static_cast<double>(base.count());
    for (int i = 0; i < attempt && ms < static_cast<double>(cap.count()); ++i) ms *= factor;
    ms = std::min(ms, static_cast<double>(cap.count()));
    return std::chrono::milliseconds{static_cast<long long>(ms)};
}

HttpBackendConfig HttpBackendConfig::from_env() {
    auto env = [](const char* name) {
        const char* v = std::getenv(name);
        return std::string(v ? v : "");
    };
    HttpBackendConfig c;
    c.url = env("LANFORGE_LLM_URL");
    c.key = env("LANFORGE_LLM_KEY");
    c.model = env("LANFORGE_LLM_MODEL");
    if (c.url.empty()) throw ConfigError("LANFORGE_LLM_URL is not set; no completion backend configured");
    if (c.model.empty()) c.model = "gpt-4-0613";
    if (auto limit = env("LANFORGE_LLM_MAX_PROMPT_BYTES"); !limit.empty()) {
        try {
            c.max_prompt_bytes = std::stoull(limit);
        } catch (const std::exception&) {
            throw ConfigError("LANFORGE_LLM_MAX_PROMPT_BYTES must be a byte count: " + limit);
        }
    }
    return c;
}

}  // namespace lanforge
