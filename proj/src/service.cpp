#include "qmrdx/service.hpp"

#include <cstdio>
#include <fstream>
#include <random>

#include "httplib.h"
#include "json.hpp"
#include "qmrdx/random.hpp"

namespace qmrdx {

using json = nlohmann::ordered_json;

namespace {

struct ApiError {
  int status;
  std::string message;
};

ApiResponse error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

int status_for(SessionError::Kind kind) {
  switch (kind) {
    case SessionError::Kind::NotActive:
    case SessionError::Kind::AlreadyObserved:
    case SessionError::Kind::BudgetExhausted:
      return 409;
    case SessionError::Kind::UnknownFinding:
    case SessionError::Kind::InvalidEvidence:
      return 422;
  }
  return 422;
}

json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw ApiError{422, "request body must be a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw ApiError{422, std::string("malformed JSON: ") + e.what()};
  }
}

SessionConfig parse_config(const json& j, SessionConfig cfg) {
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw ApiError{422, "config must be an object"};
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "max_steps") cfg.max_steps = v.get<int>();
      else if (key == "threshold" || key == "utility_threshold") cfg.utility_threshold = v.get<double>();
      else if (key == "depth") cfg.lookahead.depth = v.get<int>();
      else if (key == "utility") cfg.lookahead.kind = parse_utility_kind(v.get<std::string>());
      else if (key == "top_k") cfg.top_k = v.get<std::size_t>();
      else throw ApiError{422, "unknown config key \"" + key + "\""};
    }
    cfg.validate();
  } catch (const json::exception& e) {
    throw ApiError{422, std::string("bad config: ") + e.what()};
  } catch (const std::invalid_argument& e) {
    throw ApiError{422, e.what()};
  }
  return cfg;
}

FindingId resolve_finding(const QmrNetwork& net, const json& j) {
  if (j.is_number_unsigned()) {
    const auto id = j.get<std::uint64_t>();
    if (id >= net.num_findings()) throw ApiError{422, "finding id out of range"};
    return static_cast<FindingId>(id);
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (const auto id = net.find_finding(name)) return *id;
    throw ApiError{422, "unknown finding \"" + name + "\""};
  }
  throw ApiError{422, "finding must be a name or an id"};
}

std::optional<bool> parse_value(const json& body) {
  if (!body.contains("value")) throw ApiError{422, "missing \"value\""};
  const auto& v = body["value"];
  if (v.is_null()) return std::nullopt;
  if (v.is_boolean()) return v.get<bool>();
  throw ApiError{422, "value must be true, false or null"};
}

// {"positive": [...], "negative": [...]} or ["+Name", "-Name", ...]
Evidence parse_evidence(const QmrNetwork& net, const json& j) {
  if (j.is_null()) return {};
  std::vector<FindingId> pos, neg;
  if (j.is_array()) {
    for (const auto& item : j) {
      if (!item.is_string()) throw ApiError{422, "initial evidence entries must be strings"};
      const auto s = item.get<std::string>();
      if (s.size() < 2 || (s[0] != '+' && s[0] != '-')) {
        throw ApiError{422, "initial evidence entry \"" + s + "\" must start with + or -"};
      }
      (s[0] == '+' ? pos : neg).push_back(resolve_finding(net, json(s.substr(1))));
    }
  } else if (j.is_object()) {
    for (const auto& [key, list] : j.items()) {
      if (key != "positive" && key != "negative") {
        throw ApiError{422, "unknown initial evidence key \"" + key + "\""};
      }
      if (!list.is_array()) throw ApiError{422, key + " must be a list"};
      for (const auto& f : list) (key == "positive" ? pos : neg).push_back(resolve_finding(net, f));
    }
  } else {
    throw ApiError{422, "initial_evidence must be a list or an object"};
  }
  try {
    return Evidence::from(std::move(pos), std::move(neg));
  } catch (const std::invalid_argument& e) {
    throw ApiError{422, e.what()};
  }
}

json ranking_json(const QmrNetwork& net, const std::vector<RankedDisease>& ranking) {
  json out = json::array();
  for (const auto& r : ranking) {
    out.push_back({{"disease", net.disease(r.disease).name}, {"id", r.disease}, {"prob", r.prob}});
  }
  return out;
}

json names(const QmrNetwork& net, const std::vector<FindingId>& ids) {
  json out = json::array();
  for (auto f : ids) out.push_back(net.finding(f).name);
  return out;
}

}  // namespace

std::pair<std::string, int> parse_addr(std::string_view addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("address must be host:port");
  std::string host(addr.substr(0, colon));
  if (host.empty()) host = "127.0.0.1";
  int port = 0;
  const auto digits = addr.substr(colon + 1);
  if (digits.empty() || digits.size() > 5 ||
      digits.find_first_not_of("0123456789") != std::string_view::npos) {
    throw std::invalid_argument("bad port in \"" + std::string(addr) + "\"");
  }
  port = std::stoi(std::string(digits));
  if (port > 65535) throw std::invalid_argument("port out of range");
  return {host, port};
}

std::string session_state_json(Session& s, const std::string& id) {
  const auto& net = s.network();
  json j;
  j["session_id"] = id;
  j["status"] = s.status() == SessionStatus::Active ? "active" : "diagnosed";
  j["step"] = s.step();
  j["max_steps"] = s.config().max_steps;
  j["config"] = {{"max_steps", s.config().max_steps},
                 {"threshold", s.config().utility_threshold},
                 {"depth", s.config().lookahead.depth},
                 {"utility", to_string(s.config().lookahead.kind)},
                 {"top_k", s.config().top_k}};
  j["evidence"] = {{"positive", names(net, s.evidence().positive())},
                   {"negative", names(net, s.evidence().negative())}};
  j["skipped"] = names(net, s.skipped());

  const auto post = s.current_posterior();
  j["posterior"] = ranking_json(net, top_k(post, net.num_diseases()));
  j["degenerate"] = post.degenerate;

  j["suggestion"] = nullptr;
  j["stop_reason"] = nullptr;
  if (s.status() == SessionStatus::Active) {
    const auto d = s.next_suggestion();
    if (const auto* sug = std::get_if<Suggest>(&d)) {
      j["decision"] = "suggest";
      j["suggestion"] = {{"finding", net.finding(sug->finding).name},
                         {"id", sug->finding},
                         {"utility", sug->utility}};
    } else {
      j["decision"] = "diagnose";
      j["stop_reason"] = to_string(std::get<Diagnose>(d).reason);
    }
    j["diagnosis"] = nullptr;
  } else {
    const auto& diag = *s.diagnosis();
    j["decision"] = "diagnosed";
    j["stop_reason"] = to_string(diag.reason);
    j["diagnosis"] = ranking_json(net, diag.ranking);
  }

  json transcript = json::array();
  for (const auto& e : s.transcript()) transcript.push_back(json::parse(to_json_line(net, e)));
  j["transcript"] = std::move(transcript);
  return j.dump();
}

ServiceApp::ServiceApp(const QmrNetwork& net, ServiceOptions opts) : net_(&net), opts_(std::move(opts)) {
  opts_.defaults.validate();
  salt_ = std::random_device{}();
  salt_ = (salt_ << 32) ^ std::random_device{}();
}

std::size_t ServiceApp::session_count() const {
  std::shared_lock lock(store_mu_);
  return sessions_.size();
}

std::string ServiceApp::new_id() {
  // caller holds the store lock
  ++counter_;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08llx%016llx", static_cast<unsigned long long>(counter_),
                static_cast<unsigned long long>(splitmix64(salt_ + counter_)));
  return buf;
}

std::shared_ptr<ServiceApp::Entry> ServiceApp::find(const std::string& id) const {
  std::shared_lock lock(store_mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void ServiceApp::persist(const std::string& id, const Session& s) const {
  if (opts_.transcript_dir.empty()) return;
  std::ofstream out(opts_.transcript_dir / (id + ".jsonl"), std::ios::trunc);
  out << to_jsonl(*net_, s.transcript());
}

ApiResponse ServiceApp::create(const std::string& body) {
  const auto j = parse_body(body);
  for (const auto& [key, v] : j.items()) {
    if (key != "config" && key != "initial_evidence") {
      throw ApiError{422, "unknown field \"" + key + "\""};
    }
  }
  const auto cfg = parse_config(j.value("config", json()), opts_.defaults);
  const auto ev = parse_evidence(*net_, j.value("initial_evidence", json()));

  auto entry = std::make_shared<Entry>();
  entry->created_at = std::chrono::system_clock::now();
  entry->session = std::make_unique<Session>(*net_, cfg, ev);
  std::string id;
  {
    std::unique_lock lock(store_mu_);
    id = new_id();
    sessions_.emplace(id, entry);
  }
  std::lock_guard guard(entry->mu);
  auto state = session_state_json(*entry->session, id);
  persist(id, *entry->session);
  return {201, std::move(state)};
}

ApiResponse ServiceApp::with_session(const std::string& id, const std::string& action,
                                     const std::string& body) {
  const auto entry = find(id);
  if (!entry) return error_response(404, "no session \"" + id + "\"");
  std::lock_guard guard(entry->mu);
  auto& s = *entry->session;
  if (action == "answer" || action == "override") {
    const auto j = parse_body(body);
    if (!j.contains("finding")) throw ApiError{422, "missing \"finding\""};
    const auto f = resolve_finding(*net_, j["finding"]);
    const auto value = parse_value(j);
    if (action == "answer") s.answer(f, value);
    else s.override_finding(f, value);
  } else if (action == "diagnose") {
    s.finalize();
  }
  auto state = session_state_json(s, id);
  persist(id, s);
  return {200, std::move(state)};
}

ApiResponse ServiceApp::handle(const std::string& method, const std::string& path,
                               const std::string& body) {
  try {
    if (path == "/sessions") {
      if (method != "POST") return error_response(405, "method not allowed");
      return create(body);
    }
    if (path == "/network/findings" || path == "/network/diseases") {
      if (method != "GET") return error_response(405, "method not allowed");
      json out = json::array();
      if (path == "/network/findings") {
        for (FindingId f = 0; f < net_->num_findings(); ++f) {
          out.push_back({{"id", f}, {"name", net_->finding(f).name}});
        }
      } else {
        for (DiseaseId d = 0; d < net_->num_diseases(); ++d) {
          out.push_back({{"id", d}, {"name", net_->disease(d).name}, {"prior", net_->disease(d).prior}});
        }
      }
      return {200, out.dump()};
    }
    const std::string prefix = "/sessions/";
    if (path.rfind(prefix, 0) == 0) {
      const auto rest = path.substr(prefix.size());
      const auto slash = rest.find('/');
      const auto id = rest.substr(0, slash);
      const auto action = slash == std::string::npos ? std::string() : rest.substr(slash + 1);
      if (id.empty()) return error_response(404, "not found");
      if (action.empty()) {
        if (method != "GET") return error_response(405, "method not allowed");
      } else if (action == "answer" || action == "override" || action == "diagnose") {
        if (method != "POST") return error_response(405, "method not allowed");
      } else {
        return error_response(404, "not found");
      }
      return with_session(id, action, body);
    }
    return error_response(404, "not found");
  } catch (const ApiError& e) {
    return error_response(e.status, e.message);
  } catch (const SessionError& e) {
    return error_response(status_for(e.kind()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

void mount_routes(httplib::Server& server, ServiceApp& app, const ServiceOptions& opts) {
  auto forward = [&app](const httplib::Request& req, httplib::Response& res) {
    const auto r = app.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Post("/sessions", forward);
  server.Get(R"(/sessions/([^/]+))", forward);
  server.Post(R"(/sessions/([^/]+)/(answer|override|diagnose))", forward);
  server.Get("/network/findings", forward);
  server.Get("/network/diseases", forward);

  if (opts.cors) {
    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }
  if (!opts.static_dir.empty()) server.set_mount_point("/", opts.static_dir.string());
}

bool run_service(const QmrNetwork& net, const ServiceOptions& opts) {
  ServiceApp app(net, opts);
  httplib::Server server;
  mount_routes(server, app, opts);
  return server.listen(opts.host, opts.port);
}

}  // namespace qmrdx
