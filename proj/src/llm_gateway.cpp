#include <cstdlib>
#include <json.hpp>

#include "textbook/error.hpp"
#include "textbook/llm.hpp"
#include "textbook/unicode.hpp"

namespace textbook::llm {

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::optional<Role> parse_role(std::string_view s) noexcept {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  return std::nullopt;
}

std::string_view to_string(FinishReason r) noexcept {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

std::size_t count_tokens(std::string_view text) noexcept {
  const std::size_t words = unicode::split_words(text).size();
  return (words * 4 + 2) / 3;
}

void validate(const CompletionRequest& request) {
  if (request.max_output_tokens <= 0) throw Error(Errc::invalid_argument, "max_output_tokens must be positive");
  if (request.temperature < 0.0) throw Error(Errc::invalid_argument, "temperature must be non-negative");
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    const ChatMessage& m = request.messages[i];
    if (m.role == Role::system && i != 0) throw Error(Errc::invalid_argument, "system message must come first");
    if (m.role != Role::assistant && unicode::trim(m.content).empty()) {
      throw Error(Errc::invalid_argument, "system and user messages must not be empty");
    }
  }
}

std::vector<SseDecoder::Event> SseDecoder::feed(std::string_view bytes) {
  buffer_.append(bytes);
  std::vector<Event> events;
  while (true) {
    // Events end with a blank line; tolerate CRLF framing.
    std::size_t end = buffer_.find("\n\n");
    std::size_t sep = 2;
    const std::size_t crlf = buffer_.find("\r\n\r\n");
    if (crlf != std::string::npos && (end == std::string::npos || crlf < end)) {
      end = crlf;
      sep = 4;
    }
    if (end == std::string::npos) break;
    const std::string block = buffer_.substr(0, end);
    buffer_.erase(0, end + sep);

    std::string data;
    std::size_t pos = 0;
    while (pos <= block.size()) {
      std::size_t nl = block.find('\n', pos);
      if (nl == std::string::npos) nl = block.size();
      std::string line = block.substr(pos, nl - pos);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.rfind("data:", 0) == 0) {
        std::string_view v = std::string_view(line).substr(5);
        if (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        if (!data.empty()) data.push_back('\n');
        data += v;
      }
      pos = nl + 1;
    }
    if (data.empty()) continue;
    if (data == "[DONE]") {
      events.push_back({"", std::nullopt, true});
      continue;
    }
    const auto json = nlohmann::json::parse(data, nullptr, false);
    if (json.is_discarded() || !json.contains("choices") || !json["choices"].is_array() || json["choices"].empty()) {
      continue;
    }
    const auto& choice = json["choices"][0];
    Event ev;
    if (choice.contains("delta") && choice["delta"].contains("content") && choice["delta"]["content"].is_string()) {
      ev.text = choice["delta"]["content"].get<std::string>();
    }
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      const std::string fr = choice["finish_reason"].get<std::string>();
      ev.finish_reason = fr == "length" ? FinishReason::length : FinishReason::stop;
    }
    events.push_back(std::move(ev));
  }
  return events;
}

bool env_truthy(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr) return false;
  const std::string s = v;
  return !(s.empty() || s == "0" || s == "false" || s == "False" || s == "FALSE" || s == "no" || s == "off");
}

GatewayConfig gateway_config_from_env() {
  GatewayConfig config;
  config.mock = env_truthy("MOCK_LLM");
  if (const char* v = std::getenv("LLM_BASE_URL"); v && *v) config.http.base_url = v;
  if (const char* v = std::getenv("LLM_API_KEY"); v && *v) config.http.api_key = v;
  if (const char* v = std::getenv("LLM_MODEL"); v && *v) config.http.model = v;
  if (const char* v = std::getenv("LLM_TIMEOUT_SECS"); v && *v) {
    const double secs = std::strtod(v, nullptr);
    if (secs > 0) config.http.timeout = std::chrono::milliseconds(static_cast<long long>(secs * 1000.0));
  }
  return config;
}

std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config) {
  if (config.mock) return std::make_shared<MockGateway>();
  return std::make_shared<HttpGateway>(config.http);
}

}  // namespace textbook::llm
