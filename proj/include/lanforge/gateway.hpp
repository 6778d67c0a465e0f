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

// Text-completion backends: a remote HTTP provider, a scripted oracle, and a
// record/replay transcript layer.

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lanforge {

/// Shared cancellation flag. Copies observe the same state.
class CancelToken {
public:
    CancelToken() : flag_(std::make_shared<std::atomic<bool>>(false)) {}
    void cancel() noexcept { flag_->store(true); }
    bool cancelled() const noexcept { return flag_->load(); }
    /// Throws AbortedError once cancelled.
    void check() const;

private:
    std::shared_ptr<std::atomic<bool>> flag_;
};

inline constexpr double kDecisionTemperature = 0.0;
inline constexpr double kGenerationTemperature = 0.7;

struct CompletionRequest {
    std::string prompt;
    double temperature = kDecisionTemperature;
    int max_tokens = 2048;
    std::string tag;  // e.g. "cm:Rhyming Polisher", "step:1"
    std::optional<CancelToken> cancel;
};

struct CompletionResponse {
    std::string text;
    std::chrono::milliseconds latency{0};
    std::string backend_id;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Throws ValidationError on an empty prompt, AbortedError on cancellation.
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string id() const = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

struct Exchange {
    std::string prompt_sha256;
    std::string prompt;
    std::string response;
    std::string tag;
};

class Transcript {
public:
    std::vector<Exchange> exchanges;

    /// Hash over the ordered prompt hashes.
    std::string fingerprint() const;

    /// JSON lines, one exchange per line.
    std::string to_jsonl() const;
    static Transcript from_jsonl(std::string_view text);
    void save(const std::string& path) const;
    static Transcript load(const std::string& path);
};

/// Serves pre-written completions. With a responder it computes each
/// completion from the request instead; a queued text always wins.
class ScriptedBackend : public Backend {
public:
    using Responder = std::function<std::string(const CompletionRequest&)>;

    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<std::string> script);
    explicit ScriptedBackend(Responder responder);

    void push(std::string text);
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "scripted"; }

    std::size_t calls() const;
    std::size_t remaining() const;
    /// Every request served so far.
    std::vector<CompletionRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::deque<std::string> queue_;
    Responder responder_;
    std::vector<CompletionRequest> requests_;
};

/// Wraps a backend and appends every exchange to a transcript. An optional
/// sink observes each exchange as it completes (e.g. to append to a file).
class RecordingBackend : public Backend {
public:
    using Sink = std::function<void(const Exchange&)>;

    explicit RecordingBackend(BackendPtr inner, Sink sink = {});
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override;
    Transcript transcript() const;

private:
    BackendPtr inner_;
    Sink sink_;
    mutable std::mutex mu_;
    Transcript transcript_;
};

/// Serves recorded responses in order and fails loudly on the first prompt
/// whose fingerprint differs from the recording. Never touches the network.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(Transcript transcript);
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "replay"; }
    std::size_t position() const;
    bool exhausted() const;

private:
    mutable std::mutex mu_;
    Transcript transcript_;
    std::size_t next_ = 0;
};

struct RetryPolicy {
    std::chrono::milliseconds base{1000};
    double factor = 2.0;
    std::chrono::milliseconds cap{60000};
    /// 0 retries forever.
    int max_attempts = 0;

    /// Delay before retry number `attempt` (0-based).
    std::chrono::milliseconds delay(int attempt) const;
};

struct HttpBackendConfig {
    std::string url;    // full endpoint, e.g. https://host/v1/chat/completions
    std::string key;    // bearer token, may be empty
    std::string model;
    RetryPolicy retry;
    std::chrono::seconds timeout{300};
    /// 0 means unlimited; otherwise longer prompts raise PromptTooLongError.
    std::size_t max_prompt_bytes = 0;

    /// Reads LANFORGE_LLM_URL / _KEY / _MODEL. Throws ConfigError without a URL.
    static HttpBackendConfig from_env();
};

/// Chat-completions style JSON provider. Transport failures, 429 and 5xx are
/// retried with exponential backoff until success or cancellation.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override;

private:
    HttpBackendConfig config_;
};

}  // namespace lanforge
