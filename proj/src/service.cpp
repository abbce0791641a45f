#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "cpgvd/service.hpp"

#ifndef CPGVD_SHARE_DIR
#define CPGVD_SHARE_DIR "share"
#endif

namespace cpgvd {

HttpTransport::HttpTransport(std::string url, std::string token, HttpOptions options)
    : token_(std::move(token)), options_(options) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0)
    throw std::invalid_argument("endpoint must be an http:// URL: " + url);
  auto slash = url.find('/', scheme.size());
  if (slash == std::string::npos) {
    base_ = url;
    path_ = "/";
  } else {
    base_ = url.substr(0, slash);
    path_ = url.substr(slash);
  }
}

std::string HttpTransport::post(const std::string& json_body) {
  httplib::Client cli(base_);
  auto secs = std::chrono::duration<double>(options_.timeout_seconds);
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
  cli.set_connection_timeout(std::chrono::seconds(10));
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  for (int attempt = 0;; ++attempt) {
    auto res = cli.Post(path_, headers, json_body, "application/json");
    if (!res)
      throw ServiceUnavailable("cannot reach " + base_ + ": " + httplib::to_string(res.error()), 0);
    if (res->status == 200) return res->body;
    if (res->status == 429 || res->status == 503) {
      double wait = 0;
      if (res->has_header("Retry-After")) wait = std::atof(res->get_header_value("Retry-After").c_str());
      if (attempt >= options_.max_retries)
        throw ServiceUnavailable("service busy (HTTP " + std::to_string(res->status) + ")", wait);
      std::this_thread::sleep_for(
          std::chrono::duration<double>(std::min(wait, options_.max_wait_seconds)));
      continue;
    }
    if (res->status >= 500)
      throw ServiceUnavailable("service error (HTTP " + std::to_string(res->status) + ")", 0);
    throw std::runtime_error("service rejected request (HTTP " + std::to_string(res->status) +
                             "): " + res->body.substr(0, 200));
  }
}

std::shared_ptr<ModelTransport> transport_from_env(const char* endpoint_var) {
  const char* url = std::getenv(endpoint_var);
  if (!url || !*url) return nullptr;
  const char* token = std::getenv("CPGVD_API_TOKEN");
  return std::make_shared<HttpTransport>(url, token ? token : "");
}

std::string load_prompt_template(std::string_view name) {
  const char* env = std::getenv("CPGVD_SHARE_DIR");
  std::string dir = (env && *env) ? env : CPGVD_SHARE_DIR;
  std::string path = dir + "/prompts/" + std::string(name) + ".txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("prompt template not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) break;
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(i, open - i));
    auto it = vars.find(std::string(tmpl.substr(open + 2, close - open - 2)));
    if (it != vars.end()) out += it->second;
    else out.append(tmpl.substr(open, close + 2 - open));
    i = close + 2;
  }
  out.append(tmpl.substr(i));
  return out;
}

}  // namespace cpgvd
