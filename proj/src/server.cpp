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

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>

#include <httplib.h>

#include "lanforge/server.hpp"

namespace lanforge {
namespace {

std::string sse_frame(const Event& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

// Buffers a session's events for one streaming connection.
struct EventQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> frames;
};

}  // namespace

ServerOptions server_options_from_env() {
    ServerOptions o;
    const char* addr = std::getenv("LANFORGE_BIND_ADDR");
    if (!addr || !*addr) return o;
    std::string text = addr;
    auto colon = text.rfind(':');
    if (colon == std::string::npos) {
        o.host = text;
        return o;
    }
    if (colon > 0) o.host = text.substr(0, colon);
    try {
        o.port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("LANFORGE_BIND_ADDR has an invalid port: " + text);
    }
    return o;
}

struct HttpServer::Impl {
    Service& service;
    ServerOptions options;
    httplib::Server server;
    std::atomic<bool> stopping{false};

    Impl(Service& s, ServerOptions o) : service(s), options(std::move(o)) {}

    void dispatch(const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query[k] = v;
        auto r = service.handle(req.method, req.path, req.body, query);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    }

    void events(const httplib::Request& req, httplib::Response& res) {
        auto id = req.matches[1].str();
        auto probe = service.handle("GET", "/sessions/" + id, "");
        if (probe.status != 200) {
            res.status = probe.status;
            res.set_content(probe.body.dump(), "application/json");
            return;
        }
        auto queue = std::make_shared<EventQueue>();
        int token = service.events().subscribe(id, [queue](const Event& e) {
            std::lock_guard lock(queue->mu);
            queue->frames.push_back(sse_frame(e));
            queue->cv.notify_all();
        });
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, queue](std::size_t, httplib::DataSink& sink) {
                std::unique_lock lock(queue->mu);
                queue->cv.wait_for(lock, std::chrono::seconds(1),
                                   [&] { return !queue->frames.empty() || stopping.load(); });
                if (stopping) {
                    sink.done();
                    return true;
                }
                if (queue->frames.empty()) {
                    // Keeps the connection observable so dead clients are noticed.
                    static const std::string ping = ": ping\n\n";
                    return sink.write(ping.data(), ping.size());
                }
                while (!queue->frames.empty()) {
                    auto frame = std::move(queue->frames.front());
                    queue->frames.pop_front();
                    if (!sink.write(frame.data(), frame.size())) return false;
                }
                return true;
            },
            [this, token](bool) { service.events().unsubscribe(token); });
    }
};

HttpServer::HttpServer(Service& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
    auto& srv = impl_->server;
    auto* impl = impl_.get();
    srv.Get(R"(/sessions/([^/]+)/events)",
            [impl](const httplib::Request& req, httplib::Response& res) { impl->events(req, res); });
    if (impl_->options.console_dir) {
        if (!srv.set_mount_point("/console", impl_->options.console_dir->string()))
            throw ConfigError("console directory not found: " + impl_->options.console_dir->string());
    }
    auto handler = [impl](const httplib::Request& req, httplib::Response& res) { impl->dispatch(req, res); };
    srv.Get(R"(/sessions.*)", handler);
    srv.Post(R"(/sessions.*)", handler);
    srv.Put(R"(/sessions.*)", handler);
    srv.Patch(R"(/sessions.*)", handler);
    srv.Delete(R"(/sessions.*)", handler);
    srv.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    auto& o = impl_->options;
    int port = o.port == 0 ? impl_->server.bind_to_any_port(o.host) : o.port;
    if (o.port != 0 && !impl_->server.bind_to_port(o.host, o.port)) port = -1;
    if (port < 0) throw ConfigError("cannot bind " + o.host + ":" + std::to_string(o.port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
    if (!impl_) return;
    impl_->stopping = true;
    impl_->server.stop();
}

}  // namespace lanforge
