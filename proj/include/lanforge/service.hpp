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

// The session service: a transport-independent API router over the session
// store, shared by the HTTP server and the CLI's local mode.

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "lanforge/store.hpp"

namespace lanforge {

struct ApiResponse {
    int status = 200;
    Json body;
};

struct Event {
    long seq = 0;
    std::string type;  // "lan_changed", "run_finished", "pipeline"
    std::string session;
    Json data;
};

/// Fan-out of session events. Listeners run on the publishing thread.
class EventBus {
public:
    using Listener = std::function<void(const Event&)>;

    /// An empty session id receives every session's events.
    int subscribe(std::string session, Listener listener);
    void unsubscribe(int token);
    void publish(std::string type, std::string session, Json data);

private:
    struct Subscription {
        std::string session;
        Listener listener;
    };
    std::mutex mu_;
    std::map<int, Subscription> subs_;
    int next_ = 1;
    long seq_ = 0;
};

class Service {
public:
    Service(SessionStore& store, BackendPtr backend, EngineOptions options = {});

    ApiResponse handle(std::string_view method, std::string_view path, const std::string& body,
                       const std::map<std::string, std::string>& query = {});

    EventBus& events() noexcept { return events_; }
    /// Warnings raised while loading sessions from disk.
    std::vector<std::string> warnings() const;

private:
    struct Slot {
        std::mutex mu;
        std::atomic<bool> busy{false};
        Session session;
    };
    using SlotPtr = std::shared_ptr<Slot>;

    SlotPtr slot(const std::string& id);
    SlotPtr create_session(const Json& body);
    ApiResponse route(std::string_view method, const std::vector<std::string>& parts,
                      const Json& body, const std::map<std::string, std::string>& query);
    ApiResponse session_route(std::string_view method, const std::vector<std::string>& parts,
                              const Json& body, const std::map<std::string, std::string>& query);

    SessionStore& store_;
    BackendPtr backend_;
    EngineOptions options_;
    EventBus events_;
    mutable std::mutex mu_;
    std::map<std::string, SlotPtr> slots_;
    std::vector<std::string> warnings_;
};

/// Error body: {"api_version", "code", "message", "violations"}.
Json error_body(std::string_view code, std::string_view message, Json violations = Json::array());

}  // namespace lanforge
