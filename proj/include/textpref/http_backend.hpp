#pragma once

#include <string>

#include <httplib.h>

#include "textpref/judge.hpp"

namespace textpref {

/// Chat-completions-style HTTP backend. Sends
///   POST <base_url>/chat/completions
///   {"model", "messages":[{"role":"user","content":...}],
///    "temperature", "max_tokens"}
/// and reads choices[0].message.content. A fresh connection per request
/// keeps this safe under the harness's thread fan-out.
class HttpBackend : public JudgeBackend {
 public:
  explicit HttpBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw ValidationError("judge: endpoint base_url is empty");
    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos)
      throw ValidationError("judge: base_url must start with http:// or https://");
    const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      host_ = cfg_.base_url;
    } else {
      host_ = cfg_.base_url.substr(0, path_start);
      path_prefix_ = cfg_.base_url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/')
        path_prefix_.pop_back();
    }
  }

  BackendResult complete(const PromptItem& item) override {
    httplib::Client client(host_);
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (!cfg_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    json body;
    body["model"] = cfg_.model_name;
    body["messages"] = json::array({{{"role", "user"}, {"content", item.prompt}}});
    body["temperature"] = cfg_.temperature;
    body["max_tokens"] = cfg_.max_tokens;

    const auto res = client.Post(path_prefix_ + "/chat/completions", headers,
                                 body.dump(), "application/json");
    if (!res)
      return {false, "transport error: " + httplib::to_string(res.error())};
    if (res->status != 200)
      return {false, "HTTP " + std::to_string(res->status) + ": " + res->body};
    try {
      const json reply = json::parse(res->body);
      return {true, reply.at("choices").at(0).at("message").at("content")
                        .get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
      return {false, std::string("malformed completion response: ") + e.what()};
    }
  }

 private:
  EndpointConfig cfg_;
  std::string host_;
  std::string path_prefix_;
};

}  // namespace textpref
