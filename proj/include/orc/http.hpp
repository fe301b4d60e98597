#pragma once

// HTTP front end for service::Service.

#include <string>

#include <httplib.h>

#include "log.hpp"
#include "service.hpp"

namespace orc::service {

/// Routes every /v1 request to `svc`. The server does not own `svc`.
inline void mount(httplib::Server& server, Service& svc) {
  auto forward = [&svc](const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    Response out = svc.handle(r);
    res.status = out.status;
    if (!out.body.is_null()) res.set_content(out.body.dump(), "application/json");
    log::debug(req.method + " " + req.path + " -> " + std::to_string(out.status));
  };
  server.Get(R"(/v1/.*)", forward);
  server.Post(R"(/v1/.*)", forward);
  server.Delete(R"(/v1/.*)", forward);
}

/// Serves until the process is stopped; false if the port cannot be bound.
inline bool serve(Service& svc, const std::string& host, int port) {
  httplib::Server server;
  mount(server, svc);
  log::info("listening on " + host + ":" + std::to_string(port));
  return server.listen(host, port);
}

}  // namespace orc::service
