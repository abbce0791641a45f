#include "stubs.hpp"

#include <httplib.h>
#include <json.hpp>

namespace cpgvd::testing {

std::string ScriptedService::post(const std::string& json_body) {
  Reply r;
  {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t i = std::min(requests_.size(), script_.size() - 1);
    requests_.push_back(json_body);
    r = script_.at(i);
  }
  if (r.unavailable) throw ServiceUnavailable("scripted outage", r.retry_after);
  return r.body;
}

std::vector<std::string> ScriptedService::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

std::size_t ScriptedService::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_.size();
}

std::string queries_body(const std::vector<std::string>& queries) {
  nlohmann::json j;
  j["queries"] = queries;
  return j.dump();
}

std::shared_ptr<ScriptedService> fault_injecting_query_service(int failures, Fault kind,
                                                              const std::vector<std::string>& good) {
  std::string bad;
  switch (kind) {
    case Fault::Syntax:
      bad = queries_body({"val sink = cpg.call.name(\"memcpy\"", "sink.reachableByFlows(cpg.parameter)"});
      break;
    case Fault::UnknownApi:
      bad = queries_body({"val sink = cpg.call.nameRegex(\"memcpy\")", "sink.reachableByFlows(cpg.parameter)"});
      break;
    case Fault::TypeMisuse:
      bad = queries_body({"val sink = cpg.call.argument.typeFullName(\"float\")",
                          "sink.reachableByFlows(cpg.parameter)"});
      break;
    case Fault::Malformed:
      bad = R"x({"answer": "Here are some queries: cpg.call.name(\"memcpy\")"})x";
      break;
  }
  std::vector<ScriptedService::Reply> script;
  for (int i = 0; i < failures; ++i) script.push_back({bad});
  script.push_back({queries_body(good)});
  return std::make_shared<ScriptedService>(std::move(script));
}

StubHttpServer::StubHttpServer(Handler handler) : server_(std::make_unique<httplib::Server>()) {
  server_->Post(R"(/.*)", [handler](const httplib::Request& req, httplib::Response& res) { handler(req, res); });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("stub server could not bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

StubHttpServer::~StubHttpServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string StubHttpServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

}  // namespace cpgvd::testing
