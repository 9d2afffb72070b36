#include "textbook/orchestrator.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <unordered_set>

#include "textbook/error.hpp"
#include "textbook/tokenizer.hpp"
#include "textbook/unicode.hpp"
#include "textbook/util.hpp"

namespace textbook {

namespace {

constexpr std::string_view kTrailerMarker = "REFS:";

std::size_t prompt_tokens(const std::vector<llm::ChatMessage>& messages) {
  std::size_t total = 0;
  for (const auto& m : messages) total += llm::count_tokens(m.content);
  return total;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string random_id(std::string_view prefix) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id(prefix);
  std::uint64_t v = rng();
  for (int i = 0; i < 16; ++i) {
    id.push_back(kHex[v & 0xF]);
    v >>= 4;
  }
  return id;
}

}  // namespace

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::chat: return "chat";
    case ActionKind::summarize: return "summarize";
    case ActionKind::explain: return "explain";
    case ActionKind::quiz_generate: return "quiz_generate";
  }
  return "chat";
}

std::optional<ActionKind> parse_action_kind(std::string_view s) noexcept {
  if (s == "chat") return ActionKind::chat;
  if (s == "summarize") return ActionKind::summarize;
  if (s == "explain") return ActionKind::explain;
  if (s == "quiz_generate") return ActionKind::quiz_generate;
  return std::nullopt;
}

std::string render_context_block(const Chunk& chunk) {
  return "[[chunk:" + chunk.id.str() + "]]\n" + unicode::encode_utf8(chunk.text);
}

llm::CompletionRequest assemble_prompt(const AgentAction& action, const std::vector<RetrievedChunk>& retrieved,
                                       const LearnerProfile& profile, const std::vector<llm::ChatMessage>& history,
                                       const std::optional<std::string>& selection_text, const PromptConfig& config) {
  std::string system(kPersona);
  system += "\n";
  system += kGroundingDirective;
  std::vector<std::string> interests;
  for (const auto& i : profile.interests) {
    const auto t = unicode::trim(i);
    if (!t.empty()) interests.emplace_back(t);
  }
  if (!interests.empty()) {
    system += "\n";
    system += kPersonalizationPrefix;
    for (std::size_t i = 0; i < interests.size(); ++i) system += (i ? ", " : "") + interests[i];
  }

  std::vector<llm::ChatMessage> tail;
  switch (action.kind) {
    case ActionKind::chat: {
      if (!action.query || unicode::trim(*action.query).empty()) throw Error(Errc::query_missing, "chat requires a query");
      const std::size_t start = history.size() > config.history_window ? history.size() - config.history_window : 0;
      for (std::size_t i = start; i < history.size(); ++i) {
        if (history[i].role == llm::Role::system) continue;
        tail.push_back(history[i]);
      }
      tail.push_back({llm::Role::user, *action.query});
      break;
    }
    case ActionKind::summarize:
    case ActionKind::explain: {
      if (!selection_text || unicode::trim(*selection_text).empty()) {
        throw Error(Errc::selection_missing, std::string(to_string(action.kind)) + " requires a selection");
      }
      const std::string_view instruction =
          action.kind == ActionKind::summarize ? kSummarizeInstruction : kExplainInstruction;
      tail.push_back({llm::Role::user, std::string(instruction) + "\n" + *selection_text});
      break;
    }
    case ActionKind::quiz_generate: {
      std::string ask =
          "Write three quiz questions with answers about the context. Use the format:\nQ: <question>\nA: <answer>\n"
          "Separate pairs with a blank line.";
      if (action.query && !unicode::trim(*action.query).empty()) ask += "\nFocus on: " + *action.query;
      tail.push_back({llm::Role::user, ask});
      break;
    }
  }

  const auto build = [&](std::size_t blocks) {
    llm::CompletionRequest req;
    req.max_output_tokens = config.max_output_tokens;
    req.temperature = config.temperature;
    req.stream = true;
    std::string content = system;
    if (blocks > 0) {
      content += "\n\nContext:";
      for (std::size_t i = 0; i < blocks; ++i) content += "\n\n" + render_context_block(retrieved[i].chunk);
    }
    req.messages.push_back({llm::Role::system, std::move(content)});
    req.messages.insert(req.messages.end(), tail.begin(), tail.end());
    return req;
  };

  // Token counts round up per message, so test each prefix directly.
  std::size_t blocks = 0;
  while (blocks < retrieved.size() && prompt_tokens(build(blocks + 1).messages) <= config.token_budget) ++blocks;
  return build(blocks);
}

std::optional<std::vector<std::string>> parse_refs_trailer(std::string_view text) {
  std::string_view body = unicode::trim(text);
  while (!body.empty() && body.back() == '.') body.remove_suffix(1);
  std::vector<std::string> ids;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) ids.push_back(std::move(current));
    current.clear();
  };
  for (char c : body) {
    if (c == ',' || is_space(c)) {
      flush();
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':') {
      current.push_back(c);
    } else {
      return std::nullopt;
    }
  }
  flush();
  if (ids.empty()) return std::nullopt;
  return ids;
}

std::string TrailerFilter::feed(std::string_view fragment) {
  held_.append(fragment);
  if (in_trailer_) return {};
  const std::size_t marker = held_.find(kTrailerMarker);
  std::size_t cut = held_.size();
  if (marker != std::string::npos) {
    in_trailer_ = true;
    cut = marker;
  } else {
    // Keep back any suffix that could still grow into the marker.
    for (std::size_t k = std::min(kTrailerMarker.size() - 1, held_.size()); k > 0; --k) {
      if (std::string_view(held_).substr(held_.size() - k) == kTrailerMarker.substr(0, k)) {
        cut = held_.size() - k;
        break;
      }
    }
  }
  while (cut > 0 && is_space(held_[cut - 1])) --cut;
  std::string out = held_.substr(0, cut);
  held_.erase(0, cut);
  return out;
}

TrailerFilter::Finish TrailerFilter::finish() {
  Finish f;
  if (in_trailer_) {
    const std::size_t marker = held_.find(kTrailerMarker);
    if (auto ids = parse_refs_trailer(std::string_view(held_).substr(marker + kTrailerMarker.size()))) {
      f.ids = std::move(ids);
      held_.clear();
      return f;
    }
  }
  f.release = std::move(held_);
  held_.clear();
  return f;
}

std::u32string clip_at_token_boundary(std::u32string_view text, std::size_t limit) {
  if (text.size() <= limit) return std::u32string(text);
  std::size_t cut = 0;
  for (const Token& t : tokenize(text)) {
    if (t.span.end > limit) break;
    cut = t.span.end;
  }
  if (cut == 0) cut = limit;
  return std::u32string(text.substr(0, cut));
}

ReferenceSummaryMode reference_summary_mode_from_env() {
  const char* v = std::getenv("REF_SUMMARY");
  if (v != nullptr && std::string_view(v) == "llm") return ReferenceSummaryMode::llm;
  return ReferenceSummaryMode::extractive;
}

Orchestrator::Orchestrator(std::shared_ptr<llm::Gateway> gateway, AnswerConfig config)
    : gateway_(std::move(gateway)), config_(config) {
  if (!gateway_) throw Error(Errc::invalid_argument, "orchestrator needs a gateway");
}

std::string Orchestrator::summarize_reference(const Chunk& chunk) const {
  const std::string text = unicode::encode_utf8(chunk.text);
  if (config_.summary_mode == ReferenceSummaryMode::llm) {
    llm::CompletionRequest req;
    req.messages.push_back({llm::Role::user, "Summarize in one sentence: " + text});
    req.max_output_tokens = 80;
    req.temperature = config_.prompt.temperature;
    req.stream = false;
    try {
      const auto done = gateway_->complete(req, nullptr);
      const auto summary = unicode::trim(done.text);
      if (!summary.empty()) return std::string(summary);
    } catch (const Error&) {
      // Fall through to the extractive summary.
    }
  }
  return unicode::first_sentence(text);
}

Answer Orchestrator::answer(const AgentAction& action, const DocumentContext& context, const LearnerProfile& profile,
                            const std::vector<llm::ChatMessage>& history, const llm::DeltaSink& sink,
                            std::string answer_id) const {
  if (!context.index.built()) throw Error(Errc::not_indexed, "document is not indexed");

  Answer answer;
  answer.answer_id = answer_id.empty() ? random_id("a") : std::move(answer_id);
  answer.created_at = utc_timestamp();

  std::optional<std::string> selection_text;
  std::string query;
  switch (action.kind) {
    case ActionKind::chat:
      if (!action.query || unicode::trim(*action.query).empty()) throw Error(Errc::query_missing, "chat requires a query");
      query = *action.query;
      break;
    case ActionKind::summarize:
    case ActionKind::explain:
      if (!action.selection) throw Error(Errc::selection_missing, "action requires a selection");
      selection_text = unicode::encode_utf8(context.locator.layout().slice(*action.selection));
      query = *selection_text;
      break;
    case ActionKind::quiz_generate:
      query = action.query.value_or(std::string());
      if (action.selection) query += " " + unicode::encode_utf8(context.locator.layout().slice(*action.selection));
      break;
  }

  std::vector<RetrievedChunk> retrieved;
  for (const ScoredChunk& hit : context.index.search(query.empty() ? std::string(" ") : query, config_.k)) {
    const std::size_t ordinal = hit.chunk_id.ordinal();
    if (ordinal >= context.chunks.size()) continue;
    retrieved.push_back({context.chunks[ordinal], hit.score});
  }
  if (action.kind == ActionKind::quiz_generate && retrieved.empty()) {
    for (std::size_t i = 0; i < std::min(config_.k, context.chunks.size()); ++i) retrieved.push_back({context.chunks[i], 0.0});
  }

  const auto emit = [&](std::string_view text) {
    if (text.empty()) return;
    answer.text += text;
    if (sink) sink({std::string(text), false, std::nullopt});
  };

  if (action.kind == ActionKind::chat && retrieved.empty()) {
    emit(kNoContextAnswer);
    if (sink) sink({"", true, llm::FinishReason::stop});
    return answer;
  }

  const llm::CompletionRequest request =
      assemble_prompt(action, retrieved, profile, history, selection_text, config_.prompt);
  const std::size_t included = [&] {
    std::size_t n = 0;
    const std::string& system = request.messages.front().content;
    for (std::size_t pos = system.find("[[chunk:"); pos != std::string::npos; pos = system.find("[[chunk:", pos + 1)) ++n;
    return std::min(n, retrieved.size());
  }();
  if (action.kind == ActionKind::chat && included == 0) {
    emit(kNoContextAnswer);
    if (sink) sink({"", true, llm::FinishReason::stop});
    return answer;
  }

  TrailerFilter filter;
  try {
    const llm::Completion done = gateway_->complete(request, [&](const llm::CompletionDelta& delta) {
      if (!delta.is_final) emit(filter.feed(delta.text_fragment));
    });
    answer.finish_reason = done.finish_reason;
  } catch (const Error& e) {
    emit(filter.finish().release);
    answer.finish_reason = llm::FinishReason::error;
    answer.error = e.what();
    if (sink) sink({"", true, llm::FinishReason::error});
    return answer;
  }
  TrailerFilter::Finish tail = filter.finish();
  emit(tail.release);
  if (sink) sink({"", true, answer.finish_reason});

  std::vector<const RetrievedChunk*> chosen;
  if (tail.ids) {
    std::unordered_set<std::string> seen;
    bool all_known = true;
    for (const std::string& id : *tail.ids) {
      if (!seen.insert(id).second) continue;
      const auto it = std::find_if(retrieved.begin(), retrieved.begin() + static_cast<std::ptrdiff_t>(included),
                                   [&](const RetrievedChunk& r) { return r.chunk.id.str() == id; });
      if (it == retrieved.begin() + static_cast<std::ptrdiff_t>(included)) {
        all_known = false;
        break;
      }
      chosen.push_back(&*it);
    }
    if (!all_known) chosen.clear();
  }
  if (chosen.empty()) {
    for (std::size_t i = 0; i < std::min(config_.fallback_references, retrieved.size()); ++i) chosen.push_back(&retrieved[i]);
  }

  for (const RetrievedChunk* r : chosen) {
    Reference ref;
    ref.chunk_id = r->chunk.id;
    const std::u32string verbatim = clip_at_token_boundary(r->chunk.text, config_.verbatim_limit);
    ref.verbatim = unicode::encode_utf8(verbatim);
    ref.summary = summarize_reference(r->chunk);
    ref.score = r->score;
    try {
      ref.spans = context.locator.locate(std::u32string_view(verbatim), config_.locate_threshold).spans;
    } catch (const Error&) {
      // A reference without tokens cannot be highlighted.
    }
    answer.references.push_back(std::move(ref));
  }
  return answer;
}

}  // namespace textbook
