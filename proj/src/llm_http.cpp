#include <httplib.h>

#include <json.hpp>

#include "textbook/error.hpp"
#include "textbook/llm.hpp"

namespace textbook::llm {

HttpGateway::HttpGateway(HttpGatewayConfig config) : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::invalid_argument, "LLM_BASE_URL must include a scheme");
  const std::size_t path_begin = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_begin);
  path_prefix_ = path_begin == std::string::npos ? std::string() : url.substr(path_begin);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

Completion HttpGateway::complete(const CompletionRequest& request, const DeltaSink& sink) {
  validate(request);
  nlohmann::json body;
  body["model"] = config_.model;
  body["max_tokens"] = request.max_output_tokens;
  body["temperature"] = request.temperature;
  body["stream"] = request.stream;
  body["messages"] = nlohmann::json::array();
  for (const ChatMessage& m : request.messages) {
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }

  httplib::Client client(scheme_host_port_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Request req;
  req.method = "POST";
  req.path = path_prefix_ + "/chat/completions";
  req.body = body.dump();
  req.set_header("Content-Type", "application/json");
  req.set_header("Accept", request.stream ? "text/event-stream" : "application/json");
  if (!config_.api_key.empty()) req.set_header("Authorization", "Bearer " + config_.api_key);

  Completion result;
  bool saw_finish = false;
  int status = 0;
  std::string raw;
  SseDecoder decoder;
  req.response_handler = [&](const httplib::Response& res) {
    status = res.status;
    return true;
  };
  req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
    if (status != 200 || !request.stream) {
      if (raw.size() < (1u << 20)) raw.append(data, len);
      return true;
    }
    for (auto& ev : decoder.feed(std::string_view(data, len))) {
      if (!ev.text.empty()) {
        result.text += ev.text;
        if (sink) sink({ev.text, false, std::nullopt});
      }
      if (ev.finish_reason) {
        result.finish_reason = *ev.finish_reason;
        saw_finish = true;
      }
    }
    return true;
  };

  const auto fail = [&](auto&& error) {
    if (sink) sink({"", true, FinishReason::error});
    throw error;
  };

  const auto started = std::chrono::steady_clock::now();
  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  const bool ok = client.send(req, res, err);
  if (!ok) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= config_.timeout * 9 / 10);
    if (timed_out) fail(Error(Errc::timeout, "provider timed out after " + std::to_string(config_.timeout.count()) + " ms"));
    fail(Error(Errc::provider_unreachable, "provider unreachable: " + httplib::to_string(err)));
  }
  if (status != 200) fail(ProviderError(status, raw.substr(0, 200)));

  if (!request.stream) {
    const auto json = nlohmann::json::parse(raw, nullptr, false);
    if (json.is_discarded() || !json.contains("choices") || json["choices"].empty()) {
      fail(ProviderError(status, "unparseable completion body: " + raw.substr(0, 200)));
    }
    const auto& choice = json["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content") && choice["message"]["content"].is_string()) {
      result.text = choice["message"]["content"].get<std::string>();
    }
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      result.finish_reason = choice["finish_reason"] == "length" ? FinishReason::length : FinishReason::stop;
    }
    if (sink && !result.text.empty()) sink({result.text, false, std::nullopt});
  } else if (!saw_finish) {
    result.finish_reason = FinishReason::stop;
  }
  if (sink) sink({"", true, result.finish_reason});
  return result;
}

}  // namespace textbook::llm
