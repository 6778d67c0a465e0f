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

#include <httplib.h>

#include <thread>

#include <nlohmann/json.hpp>

#include "lanforge/errors.hpp"
#include "lanforge/gateway.hpp"

namespace lanforge {
namespace {

using Json = nlohmann::json;

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("LLM URL must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

void interruptible_sleep(std::chrono::milliseconds total, const std::optional<CancelToken>& cancel) {
    using namespace std::chrono;
    const auto deadline = steady_clock::now() + total;
    while (steady_clock::now() < deadline) {
        if (cancel) cancel->check();
        std::this_thread::sleep_for(std::min<milliseconds>(
            milliseconds{50}, duration_cast<milliseconds>(deadline - steady_clock::now())));
    }
    if (cancel) cancel->check();
}

std::string extract_text(const Json& body) {
    const auto& choice = body.at("choices").at(0);
    if (auto m = choice.find("message"); m != choice.end()) return m->at("content").get<std::string>();
    return choice.at("text").get<std::string>();
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw ConfigError("no completion backend URL configured");
    split_url(config_.url);
}

std::string HttpBackend::id() const { return "http:" + config_.model; }

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    if (request.prompt.empty()) throw ValidationError("completion request has an empty prompt");
    if (config_.max_prompt_bytes && request.prompt.size() > config_.max_prompt_bytes)
        throw PromptTooLongError(request.prompt.size(), config_.max_prompt_bytes);

    const auto endpoint = split_url(config_.url);
    Json payload{{"model", config_.model},
                 {"messages", Json::array({{{"role", "user"}, {"content", request.prompt}}})},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    const std::string body = payload.dump();

    httplib::Headers headers;
    if (!config_.key.empty()) headers.emplace("Authorization", "Bearer " + config_.key);

    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 0;; ++attempt) {
        if (request.cancel) request.cancel->check();
        httplib::Client client(endpoint.origin);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        auto res = client.Post(endpoint.path, headers, body, "application/json");

        std::string failure;
        if (!res) {
            failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            failure = "provider returned HTTP " + std::to_string(res->status);
        } else if (res->status >= 400) {
            throw Error("provider rejected request with HTTP " + std::to_string(res->status) + ": " +
                        res->body);
        } else {
            try {
                auto text = extract_text(Json::parse(res->body));
                return {std::move(text),
                        std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started),
                        id()};
            } catch (const Json::exception& e) {
                // Truncated or partial bodies are treated like a broken connection.
                failure = std::string("incomplete provider response: ") + e.what();
            }
        }
        if (config_.retry.max_attempts > 0 && attempt + 1 >= config_.retry.max_attempts)
            throw Error("giving up after " + std::to_string(attempt + 1) + " attempts: " + failure);
        interruptible_sleep(config_.retry.delay(attempt), request.cancel);
    }
}

}  // namespace lanforge
