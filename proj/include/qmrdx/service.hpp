#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "qmrdx/network.hpp"
#include "qmrdx/session.hpp"

namespace httplib {
class Server;
}

namespace qmrdx {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  bool cors = false;
  std::filesystem::path static_dir;      // empty: no static route
  std::filesystem::path transcript_dir;  // empty: no persistence
  SessionConfig defaults;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

/// "host:port" or ":port"; throws std::invalid_argument.
std::pair<std::string, int> parse_addr(std::string_view addr);

/// JSON view of a session: evidence, step, posterior, suggestion or
/// diagnosis. Advances the session's pending decision if needed.
std::string session_state_json(Session& s, const std::string& id);

/// Session store and request handling, independent of the transport.
class ServiceApp {
 public:
  ServiceApp(const QmrNetwork& net, ServiceOptions opts);

  /// `path` excludes the query string. Never throws.
  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body);

  std::size_t session_count() const;

 private:
  struct Entry {
    std::mutex mu;
    std::chrono::system_clock::time_point created_at;
    std::unique_ptr<Session> session;
  };

  ApiResponse create(const std::string& body);
  ApiResponse with_session(const std::string& id, const std::string& action,
                           const std::string& body);
  std::shared_ptr<Entry> find(const std::string& id) const;
  std::string new_id();
  void persist(const std::string& id, const Session& s) const;

  const QmrNetwork* net_;
  ServiceOptions opts_;
  mutable std::shared_mutex store_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t counter_ = 0;
  std::uint64_t salt_ = 0;
};

/// Wires `app` into an httplib server (routes, CORS, static files).
void mount_routes(httplib::Server& server, ServiceApp& app, const ServiceOptions& opts);

/// Blocks until the server stops. Returns false if binding failed.
bool run_service(const QmrNetwork& net, const ServiceOptions& opts);

}  // namespace qmrdx
