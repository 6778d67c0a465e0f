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

// lanforge-server: the session service over HTTP.

#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "lanforge/server.hpp"

using namespace lanforge;

namespace {
HttpServer* g_server = nullptr;
void on_signal(int) {
    if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lanforge-server: HTTP service for LAN sessions"};
    std::string data_dir, bind_addr, console, replay;
    app.add_option("--data", data_dir, "store directory (default $LANFORGE_DATA_DIR)");
    app.add_option("--bind", bind_addr, "host:port (default $LANFORGE_BIND_ADDR or 127.0.0.1:8080)");
    app.add_option("--console", console, "directory served under /console");
    app.add_option("--replay", replay, "serve completions from a recorded transcript");
    CLI11_PARSE(app, argc, argv);

    try {
        if (!bind_addr.empty()) setenv("LANFORGE_BIND_ADDR", bind_addr.c_str(), 1);
        auto options = server_options_from_env();
        if (!console.empty()) options.console_dir = console;
        if (data_dir.empty()) {
            const char* env = std::getenv("LANFORGE_DATA_DIR");
            data_dir = env && *env ? env : "lanforge-data";
        }

        EngineOptions engine;
        BackendPtr backend;
        if (!replay.empty()) {
            backend = std::make_shared<ReplayBackend>(Transcript::load(replay));
            engine.clock = fixed_clock();
        } else {
            backend = std::make_shared<HttpBackend>(HttpBackendConfig::from_env());
        }

        SessionStore store(data_dir);
        Service service(store, backend, engine);
        HttpServer server(service, options);
        int port = server.bind();
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "listening on " << options.host << ":" << port << std::endl;
        server.listen();
        for (const auto& w : service.warnings()) std::cerr << "warning: " << w << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
