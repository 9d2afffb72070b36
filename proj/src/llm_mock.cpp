#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iterator>

#include "textbook/llm.hpp"
#include "textbook/unicode.hpp"

namespace textbook::llm {

namespace {

struct ContextBlock {
  std::string id;
  std::string text;
};

std::vector<ContextBlock> context_blocks(const CompletionRequest& request) {
  static constexpr std::string_view kOpen = "[[chunk:";
  std::vector<ContextBlock> blocks;
  for (const ChatMessage& m : request.messages) {
    const std::string& s = m.content;
    std::size_t pos = s.find(kOpen);
    while (pos != std::string::npos) {
      const std::size_t id_begin = pos + kOpen.size();
      const std::size_t id_end = s.find("]]", id_begin);
      if (id_end == std::string::npos) break;
      std::size_t text_begin = id_end + 2;
      if (text_begin < s.size() && s[text_begin] == '\n') ++text_begin;
      const std::size_t next = s.find(std::string("\n\n") + std::string(kOpen), text_begin);
      const std::size_t text_end = next == std::string::npos ? s.size() : next;
      blocks.push_back({s.substr(id_begin, id_end - id_begin),
                        std::string(unicode::trim(std::string_view(s).substr(text_begin, text_end - text_begin)))});
      pos = next == std::string::npos ? std::string::npos : next + 2;
    }
  }
  return blocks;
}

std::string first_words(std::string_view text, std::size_t n) {
  std::string out;
  const auto words = unicode::split_words(text);
  for (std::size_t i = 0; i < std::min(n, words.size()); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

std::string MockGateway::script(const CompletionRequest& request) {
  const auto last_user = std::find_if(request.messages.rbegin(), request.messages.rend(),
                                      [](const ChatMessage& m) { return m.role == Role::user; });
  const std::string prompt = last_user == request.messages.rend() ? std::string() : last_user->content;
  const auto blocks = context_blocks(request);

  std::size_t best = std::string::npos;
  std::string directive;
  for (const char* d : {"MOCK:ECHO", "MOCK:HISTORY", "MOCK:SUMMARY", "MOCK:QUIZ"}) {
    const std::size_t at = prompt.find(d);
    if (at != std::string::npos && at < best) {
      best = at;
      directive = d;
    }
  }

  if (directive == "MOCK:ECHO") {
    return std::string(unicode::trim(std::string_view(prompt).substr(best + 9)));
  }
  if (directive == "MOCK:HISTORY") {
    const auto end = last_user == request.messages.rend() ? request.messages.end() : std::prev(last_user.base());
    const auto n = std::count_if(request.messages.begin(), end,
                                 [](const ChatMessage& m) { return m.role != Role::system; });
    return "HISTORY " + std::to_string(n);
  }
  if (directive == "MOCK:SUMMARY") {
    std::string out;
    for (const auto& b : blocks) {
      const std::string s = unicode::first_sentence(b.text);
      if (s.empty()) continue;
      if (!out.empty()) out.push_back(' ');
      out += s;
    }
    return out;
  }
  if (directive == "MOCK:QUIZ") {
    const char* digits = prompt.c_str() + best + 9;
    long n = std::strtol(digits, nullptr, 10);
    if (n <= 0) n = 1;
    std::string out;
    if (blocks.empty()) return out;
    for (long i = 0; i < n; ++i) {
      const auto& b = blocks[static_cast<std::size_t>(i) % blocks.size()];
      if (i) out += "\n\n";
      out += "Q: " + first_words(b.text, 8) + "\nA: " + unicode::first_sentence(b.text);
    }
    return out;
  }
  if (blocks.empty()) return "ANSWER: I have no context for this question.";
  std::string out = "ANSWER: " + first_words(blocks.front().text, 20) + "\nREFS: " + blocks.front().id;
  if (blocks.size() > 1) out += "," + blocks[1].id;
  return out;
}

Completion MockGateway::complete(const CompletionRequest& request, const DeltaSink& sink) {
  validate(request);
  const std::string reply = script(request);

  // Piece i is the whitespace before word i plus the word itself.
  std::vector<std::string> pieces;
  std::size_t i = 0;
  while (i < reply.size()) {
    std::size_t j = i;
    while (j < reply.size() && std::isspace(static_cast<unsigned char>(reply[j]))) ++j;
    while (j < reply.size() && !std::isspace(static_cast<unsigned char>(reply[j]))) ++j;
    pieces.push_back(reply.substr(i, j - i));
    i = j;
  }
  if (!pieces.empty() && unicode::trim(pieces.back()).empty() && pieces.size() > 1) {
    pieces[pieces.size() - 2] += pieces.back();
    pieces.pop_back();
  }

  Completion result;
  const auto limit = static_cast<std::size_t>(request.max_output_tokens);
  if (pieces.size() > limit) {
    pieces.resize(limit);
    result.finish_reason = FinishReason::length;
  }
  for (const std::string& p : pieces) {
    result.text += p;
    if (sink) sink({p, false, std::nullopt});
  }
  if (sink) sink({"", true, result.finish_reason});
  return result;
}

}  // namespace textbook::llm
