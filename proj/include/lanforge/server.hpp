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

// HTTP transport for the session service, with a server-sent event stream
// per session and an optional static mount for the browser console.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "lanforge/service.hpp"

namespace lanforge {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> console_dir;
};

/// Parses LANFORGE_BIND_ADDR ("host:port", "host" or ":port").
ServerOptions server_options_from_env();

class HttpServer {
public:
    HttpServer(Service& service, ServerOptions options);
    ~HttpServer();

    /// Binds the socket; returns the bound port. Throws ConfigError.
    int bind();
    /// Serves until stop() is called.
    void listen();
    /// Blocks until listen() is accepting; stop() before that point is lost.
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace lanforge
