#pragma once

#include <stdexcept>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "hyperclean/oversight.hpp"

namespace hyperclean {

/// JSON-over-HTTP front end for an OversightService.
class OversightHttp {
 public:
  explicit OversightHttp(OversightService& svc) : svc_(svc) { routes(); }

  ~OversightHttp() { stop(); }

  /// Binds (port 0 picks a free one) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port))
      throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  httplib::Server& server() { return server_; }

 private:
  static std::string actor_of(const httplib::Request& req) {
    const std::string a = req.get_header_value("X-Actor");
    return a.empty() ? "anonymous" : a;
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const not_found_error& e) {
      reply(res, 404, {{"error", e.what()}});
    } catch (const conflict_error& e) {
      reply(res, 409, {{"error", e.what()}});
    } catch (const validation_error& e) {
      reply(res, 422, {{"error", e.what()}});
    } catch (const nlohmann::json::exception& e) {
      reply(res, 422, {{"error", std::string("malformed body: ") + e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw validation_error("body must be an object");
    return j;
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type, X-Actor"}});
    server_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"status", "ok"}});
    });

    server_.Post("/cases", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        const char* key = body.contains("actual_input") ? "actual_input" : "input";
        if (!body.contains(key) || !body[key].is_array())
          throw validation_error("body needs an 'input' array");
        for (const auto& v : body[key])
          if (!v.is_number()) throw validation_error("input components must be numbers");
        const std::string id = svc_.ingest_case(body[key].get<InputVec>(), actor_of(req));
        reply(res, 201, case_to_json(svc_.get_case(id)));
      });
    });

    server_.Get("/cases", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        CaseFilter filter;
        if (req.has_param("flagged")) {
          const std::string f = req.get_param_value("flagged");
          if (f != "true" && f != "false") throw validation_error("flagged must be true or false");
          filter.flagged_only = f == "true";
        }
        if (req.has_param("status")) filter.status = req.get_param_value("status");
        if (req.has_param("page")) {
          const std::string p = req.get_param_value("page");
          if (p.empty() || p.find_first_not_of("0123456789") != std::string::npos)
            throw validation_error("page must be a non-negative integer");
          filter.page = std::stoull(p);
        }
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& c : svc_.list_cases(filter)) rows.push_back(case_summary_json(c));
        reply(res, 200,
              {{"page", filter.page}, {"page_size", svc_.config().page_size}, {"cases", rows}});
      });
    });

    server_.Get(R"(/cases/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, case_to_json(svc_.get_case(req.matches[1]))); });
    });

    server_.Post(R"(/cases/([^/]+)/analyze)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   guarded(res, [&] {
                     const std::string id = req.matches[1];
                     if (req.get_param_value("async") == "true") {
                       svc_.submit_analysis(id, actor_of(req));
                       reply(res, 202, {{"id", id}, {"status", "queued"}});
                       return;
                     }
                     svc_.analyze_case(id, actor_of(req));
                     reply(res, 200, case_to_json(svc_.get_case(id)));
                   });
                 });

    server_.Post(R"(/cases/([^/]+)/decision)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   guarded(res, [&] {
                     const std::string id = req.matches[1];
                     svc_.get_case(id);
                     const auto body = parse_body(req);
                     if (!body.contains("action") || !body["action"].is_string())
                       throw validation_error("body needs an 'action'");
                     const std::string rationale =
                         body.contains("rationale") && body["rationale"].is_string()
                             ? body["rationale"].get<std::string>()
                             : "";
                     reply(res, 200,
                           case_to_json(svc_.record_decision(id, body["action"].get<std::string>(),
                                                             rationale, actor_of(req))));
                   });
                 });

    server_.Get("/audit", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& e : svc_.audit()) rows.push_back(audit_to_json(e));
        reply(res, 200, {{"entries", rows}});
      });
    });
  }

  OversightService& svc_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace hyperclean
