#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "textbook/ingest.hpp"
#include "textbook/llm.hpp"
#include "textbook/locator.hpp"
#include "textbook/retrieval.hpp"

namespace textbook {

struct LearnerProfile {
  std::string learner_id;
  std::vector<std::string> interests;
  std::optional<std::string> display_name;
};

enum class ActionKind { chat, summarize, explain, quiz_generate };

std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> parse_action_kind(std::string_view s) noexcept;

struct AgentAction {
  ActionKind kind = ActionKind::chat;
  std::optional<DocSpan> selection;  // summarize, explain
  std::optional<std::string> query;  // chat
};

struct Reference {
  ChunkId chunk_id;
  std::string verbatim;
  std::string summary;
  double score = 0.0;
  std::vector<HighlightSpan> spans;
};

struct Answer {
  std::string answer_id;
  std::string text;
  std::vector<Reference> references;
  llm::FinishReason finish_reason = llm::FinishReason::stop;
  std::string created_at;
  std::string error;  // set when finish_reason == error
};

struct RetrievedChunk {
  Chunk chunk;
  double score = 0.0;
};

struct PromptConfig {
  std::size_t token_budget = 6000;
  std::size_t history_window = 10;
  int max_output_tokens = 512;
  double temperature = 0.2;
};

inline constexpr std::string_view kPersona =
    "You are a teaching assistant embedded in this textbook. Help the learner understand the reading.";
inline constexpr std::string_view kGroundingDirective =
    "Answer only from the provided context; end with `REFS: <id,...>` listing the context blocks you used.";
inline constexpr std::string_view kPersonalizationPrefix = "When explaining concepts, use analogies drawn from: ";
inline constexpr std::string_view kSummarizeInstruction = "Summarize the following passage concisely:";
inline constexpr std::string_view kExplainInstruction = "Explain the following passage in simpler terms:";
inline constexpr std::string_view kNoContextAnswer = "I couldn't find this in the reading.";

std::string render_context_block(const Chunk& chunk);

// Builds the completion request for an action. Context blocks go at the end
// of the system message in rank order; the lowest-ranked blocks are dropped
// whole until the summed count_tokens of all messages fits the budget.
// Throws Error(selection_missing) or Error(query_missing).
llm::CompletionRequest assemble_prompt(const AgentAction& action, const std::vector<RetrievedChunk>& retrieved,
                                       const LearnerProfile& profile, const std::vector<llm::ChatMessage>& history,
                                       const std::optional<std::string>& selection_text,
                                       const PromptConfig& config = {});

// Streaming filter that withholds a trailing "REFS: id,id" line from the
// sink. Text reaches the sink in order; the withheld part is either parsed as
// a trailer or released by finish().
class TrailerFilter {
 public:
  std::string feed(std::string_view fragment);

  struct Finish {
    std::string release;                         // text still owed to the sink
    std::optional<std::vector<std::string>> ids;  // parsed trailer ids
  };
  Finish finish();

 private:
  std::string held_;
  bool in_trailer_ = false;
};

// Parses "REFS: a,b" (after the marker). nullopt when it is not a trailer.
std::optional<std::vector<std::string>> parse_refs_trailer(std::string_view text);

// Clip to at most `limit` characters, ending at a token boundary.
std::u32string clip_at_token_boundary(std::u32string_view text, std::size_t limit);

enum class ReferenceSummaryMode { extractive, llm };

struct AnswerConfig {
  PromptConfig prompt;
  std::size_t k = 5;
  std::size_t fallback_references = 3;
  std::size_t verbatim_limit = 400;
  double locate_threshold = kDefaultLocateThreshold;
  ReferenceSummaryMode summary_mode = ReferenceSummaryMode::extractive;
};

// Reads REF_SUMMARY (llm | extractive).
ReferenceSummaryMode reference_summary_mode_from_env();

// Everything answer() needs about one ingested document.
struct DocumentContext {
  const ExtractedDocument& doc;
  const std::vector<Chunk>& chunks;  // indexed by chunk ordinal
  const Bm25Index& index;
  const DocumentLocator& locator;
};

class Orchestrator {
 public:
  Orchestrator(std::shared_ptr<llm::Gateway> gateway, AnswerConfig config = {});

  // Retrieves, prompts, streams the visible answer text to `sink` (never the
  // REFS trailer) and attaches located references. Gateway failures come back
  // as an Answer with finish_reason == error. Throws Error(not_indexed) and
  // the assemble_prompt errors.
  Answer answer(const AgentAction& action, const DocumentContext& context, const LearnerProfile& profile,
                const std::vector<llm::ChatMessage>& history, const llm::DeltaSink& sink,
                std::string answer_id = {}) const;

  const AnswerConfig& config() const noexcept { return config_; }
  llm::Gateway& gateway() const noexcept { return *gateway_; }

 private:
  std::string summarize_reference(const Chunk& chunk) const;

  std::shared_ptr<llm::Gateway> gateway_;
  AnswerConfig config_;
};

}  // namespace textbook
