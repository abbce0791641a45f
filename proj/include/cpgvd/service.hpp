#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cpgvd {

/// The model service refused or could not be reached. retry_after is the
/// server's Retry-After hint in seconds (0 when absent).
class ServiceUnavailable : public std::runtime_error {
 public:
  ServiceUnavailable(const std::string& what, double retry_after)
      : std::runtime_error(what), retry_after_(retry_after) {}
  double retry_after() const { return retry_after_; }

 private:
  double retry_after_;
};

/// The service answered, but not in the agreed response shape.
class MalformedModelOutput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One JSON request, one JSON response. Tests substitute in-process stubs.
class ModelTransport {
 public:
  virtual ~ModelTransport() = default;
  virtual std::string post(const std::string& json_body) = 0;
};

struct HttpOptions {
  double timeout_seconds = 120;
  int max_retries = 2;          // extra tries after 429/503
  double max_wait_seconds = 30;  // cap on a single Retry-After sleep
};

/// POSTs to an http:// URL with an optional bearer token.
class HttpTransport : public ModelTransport {
 public:
  HttpTransport(std::string url, std::string token, HttpOptions options = {});
  std::string post(const std::string& json_body) override;

 private:
  std::string base_;
  std::string path_;
  std::string token_;
  HttpOptions options_;
};

/// Endpoint from an environment variable (CPGVD_QUERY_ENDPOINT,
/// CPGVD_SCORER_ENDPOINT) with CPGVD_API_TOKEN as credential. Returns null
/// when the variable is unset or empty.
std::shared_ptr<ModelTransport> transport_from_env(const char* endpoint_var);

/// Reads <share>/prompts/<name>.txt. The share directory is CPGVD_SHARE_DIR
/// from the environment, else the build-time location.
std::string load_prompt_template(std::string_view name);

/// Replaces every {{key}} with its value; unknown keys are left alone.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

}  // namespace cpgvd
