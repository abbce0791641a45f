#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cpgvd/service.hpp"

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace cpgvd::testing {

/// Replies from a fixed script, one entry per request; the last entry
/// repeats once the script runs out. Records every request body.
class ScriptedService : public ModelTransport {
 public:
  struct Reply {
    std::string body;
    bool unavailable = false;
    double retry_after = 0;
  };

  explicit ScriptedService(std::vector<Reply> script) : script_(std::move(script)) {}
  std::string post(const std::string& json_body) override;

  std::vector<std::string> requests() const;
  std::size_t calls() const;

 private:
  std::vector<Reply> script_;
  mutable std::mutex mu_;
  std::vector<std::string> requests_;
};

/// {"queries": [...]}
std::string queries_body(const std::vector<std::string>& queries);

enum class Fault { Syntax, UnknownApi, TypeMisuse, Malformed };

/// `failures` faulty answers of the given kind, then `good` forever.
std::shared_ptr<ScriptedService> fault_injecting_query_service(int failures, Fault kind,
                                                              const std::vector<std::string>& good);

/// An HTTP server on 127.0.0.1 with one POST handler at any path.
class StubHttpServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
  explicit StubHttpServer(Handler handler);
  ~StubHttpServer();
  int port() const { return port_; }
  std::string url(const std::string& path = "/v1") const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace cpgvd::testing
