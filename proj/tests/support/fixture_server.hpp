// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <arpa/inet.h>
#include <httplib.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#ifdef PREFMT_FIXTURE_C_API
#include "prefmt/prefmt.h"
#else
#include "prefmt/textmetrics.hpp"
#endif

namespace prefmt::testing {

// In-process scorer speaking the /v1/score protocol.
//   constant      every item scores `constant`
//   echo          every item scores std::stod(mt)
//   chrf-proxy    chrF(mt, ref) computed server-side
//   fail-status   replies `status` with {"error": ...}
//   malformed     replies 200 with a body that is not the protocol
//   short         replies one score fewer than requested
// Requests above `batch_limit` items get 400.
inline double proxy_chrf(const std::string& mt, const std::string& ref) {
#ifdef PREFMT_FIXTURE_C_API
  double v = 0.0;
  if (pmt_chrf(mt.c_str(), ref.c_str(), &v) != PMT_OK) throw std::runtime_error(pmt_last_error());
  return v;
#else
  return chrf(mt, ref).value;
#endif
}

class FixtureServer {
 public:
  enum class Mode { kConstant, kEcho, kChrfProxy, kFailStatus, kMalformed, kShort };

  explicit FixtureServer(Mode mode, double constant = 0.5, int status = 500, size_t batch_limit = 256)
      : mode_(mode), constant_(constant), status_(status), batch_limit_(batch_limit) {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
    server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("fixture server: bind failed");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FixtureServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  FixtureServer(const FixtureServer&) = delete;
  FixtureServer& operator=(const FixtureServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }

  std::vector<size_t> batch_sizes() const {
    std::lock_guard<std::mutex> lock(mu_);
    return batch_sizes_;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("items") || !body["items"].is_array()) {
      res.status = 400;
      res.set_content(R"({"error":"malformed request"})", "application/json");
      return;
    }
    const auto& items = body["items"];
    {
      std::lock_guard<std::mutex> lock(mu_);
      batch_sizes_.push_back(items.size());
    }
    if (items.size() > batch_limit_) {
      res.status = 400;
      res.set_content(R"({"error":"batch exceeds limit of )" + std::to_string(batch_limit_) + R"( items"})",
                      "application/json");
      return;
    }
    nlohmann::json scores = nlohmann::json::array();
    switch (mode_) {
      case Mode::kConstant:
        for (size_t i = 0; i < items.size(); ++i) scores.push_back(constant_);
        break;
      case Mode::kEcho:
        for (const auto& it : items) scores.push_back(std::stod(it["mt"].get<std::string>()));
        break;
      case Mode::kChrfProxy:
        for (const auto& it : items) {
          const std::string ref = it["ref"].is_string() ? it["ref"].get<std::string>() : std::string();
          scores.push_back(proxy_chrf(it["mt"].get<std::string>(), ref));
        }
        break;
      case Mode::kFailStatus:
        res.status = status_;
        res.set_content(R"({"error":"fixture failure"})", "application/json");
        return;
      case Mode::kMalformed:
        res.set_content("<html>not json</html>", "text/html");
        return;
      case Mode::kShort:
        for (size_t i = 0; i + 1 < items.size(); ++i) scores.push_back(constant_);
        break;
    }
    res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
  }

  Mode mode_;
  double constant_;
  int status_;
  size_t batch_limit_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
  mutable std::mutex mu_;
  std::vector<size_t> batch_sizes_;
};

// A port nothing listens on: bind, note the port, close.
// A loopback port with nothing listening: bound, read back, then closed.
inline int unused_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof(addr);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd);
    throw std::runtime_error("cannot reserve a port");
  }
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace prefmt::testing
