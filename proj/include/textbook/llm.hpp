#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace textbook::llm {

enum class Role { system, user, assistant };
enum class FinishReason { stop, length, error };

std::string_view to_string(Role r) noexcept;
std::optional<Role> parse_role(std::string_view s) noexcept;
std::string_view to_string(FinishReason r) noexcept;

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  int max_output_tokens = 512;
  double temperature = 0.2;
  bool stream = true;
};

struct CompletionDelta {
  std::string text_fragment;
  bool is_final = false;
  std::optional<FinishReason> finish_reason;  // set only on the final delta
};

using DeltaSink = std::function<void(const CompletionDelta&)>;

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
};

// Approximate budget accounting: whitespace-delimited words x 4/3, rounded up.
std::size_t count_tokens(std::string_view text) noexcept;

// Throws Error(invalid_argument) when a system or user message is empty or a
// system message is not the first message.
void validate(const CompletionRequest& request);

// One seam to a chat-completion model. Implementations are shareable across
// threads; every complete() call is independent.
//
// complete() emits at least one delta and exactly one final delta. On failure
// it emits a final delta with FinishReason::error and then throws
// Error(provider_unreachable | provider_error | timeout).
class Gateway {
 public:
  virtual ~Gateway() = default;

  virtual Completion complete(const CompletionRequest& request, const DeltaSink& sink) = 0;

  // True for the scripted mock: callers may add MOCK: directives to prompts.
  virtual bool scripted() const noexcept { return false; }
};

// Deterministic scripted model. Directives are read from the last user
// message:
//   MOCK:ECHO <x>   reply <x> (the rest of the message, trimmed)
//   MOCK:HISTORY    reply "HISTORY <n>", n = non-system messages before it
//   MOCK:SUMMARY    first sentence of each context block, in order
//   MOCK:QUIZ <n>   n "Q: ...\nA: ..." pairs; question i is the first 8 words
//                   of context block i (cycling), the answer its first sentence
//   otherwise       "ANSWER: " + first 20 words of the first context block,
//                   then "\nREFS: <id>,<id>" naming the first two blocks
// Context blocks are "[[chunk:<id>]]\n<text>" sections of any message. The
// reply streams one word per delta; a reply longer than max_output_tokens
// words is cut there with FinishReason::length.
class MockGateway : public Gateway {
 public:
  Completion complete(const CompletionRequest& request, const DeltaSink& sink) override;
  bool scripted() const noexcept override { return true; }

  // The reply before truncation.
  static std::string script(const CompletionRequest& request);
};

struct HttpGatewayConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::string model = "gpt-4o";
  std::chrono::milliseconds timeout{60000};
};

// Chat-completions over HTTP: POST {base_url}/chat/completions, with
// server-sent events when request.stream is set.
class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(HttpGatewayConfig config);

  Completion complete(const CompletionRequest& request, const DeltaSink& sink) override;

  const HttpGatewayConfig& config() const noexcept { return config_; }

 private:
  HttpGatewayConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// Incremental parser for a chat-completions SSE body.
class SseDecoder {
 public:
  struct Event {
    std::string text;
    std::optional<FinishReason> finish_reason;
    bool done = false;
  };

  std::vector<Event> feed(std::string_view bytes);

 private:
  std::string buffer_;
};

struct GatewayConfig {
  bool mock = false;
  HttpGatewayConfig http;
};

// Reads LLM_BASE_URL, LLM_API_KEY, LLM_MODEL, LLM_TIMEOUT_SECS and MOCK_LLM.
GatewayConfig gateway_config_from_env();
std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config);

bool env_truthy(const char* name);

}  // namespace textbook::llm
