#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "textbook/ingest.hpp"
#include "textbook/llm.hpp"
#include "textbook/locator.hpp"
#include "textbook/orchestrator.hpp"
#include "textbook/quiz.hpp"
#include "textbook/retrieval.hpp"
#include "textbook/storage.hpp"

namespace textbook {

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  std::optional<std::uint64_t> rng_seed;
  std::size_t max_upload_bytes = 50u * 1024u * 1024u;
  std::size_t chunk_size = kDefaultChunkSize;
  std::size_t chunk_overlap = kDefaultChunkOverlap;
  AnswerConfig answer;
  quiz::QuizConfig quiz;
  int ingest_delay_ms = 0;  // pause before publishing, for crash tests
};

// Reads DATA_DIR, RNG_SEED, REF_SUMMARY and TEXTBOOK_INGEST_DELAY_MS.
ServiceConfig service_config_from_env();

struct Selection {
  int page = 1;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct CardAnswer {
  int box = 1;
  std::string answer_key;
  quiz::QuizCard card;
};

inline constexpr std::size_t kMaxInterests = 20;
inline constexpr std::size_t kMaxInterestLength = 64;

// Everything the HTTP layer does, without HTTP. Safe for concurrent use:
// documents are immutable once loaded, each session and each (learner,
// document, section) quiz state has its own lock, and every file write is an
// atomic replace.
class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<llm::Gateway> gateway);

  const ServiceConfig& config() const noexcept { return config_; }
  const Storage& storage() const noexcept { return storage_; }

  // Throws Error(payload_too_large | malformed_pdf | no_text_layer).
  DocumentManifest ingest(std::string_view pdf_bytes);
  std::vector<DocumentManifest> list_documents() const;
  DocumentManifest document(std::string_view doc_id) const;
  PageText page(std::string_view doc_id, int page_number) const;

  Session create_session(std::string_view learner_id, std::string_view doc_id);
  std::optional<Session> session(std::string_view session_id) const;

  // Validation happens before any delta reaches the sink, so a caller can
  // still choose an error status when these throw.
  void check_chat(std::string_view session_id, std::string_view query) const;
  Answer chat(std::string_view session_id, std::string_view query, const llm::DeltaSink& sink);

  // Single-page selections only. Throws Error(invalid_argument) when the
  // selection is out of bounds or empty, Error(not_found) for the document.
  DocSpan resolve_selection(std::string_view doc_id, const Selection& selection) const;
  Answer act(std::string_view doc_id, ActionKind kind, const Selection& selection, std::string_view learner_id,
             const llm::DeltaSink& sink);

  // Throws Error(not_found) for an unknown section, Error(generation_failed).
  quiz::QuizCard next_card(std::string_view doc_id, std::string_view learner_id, std::string_view section_label);
  // Throws Error(unknown_card).
  CardAnswer answer_card(std::string_view card_id, std::string_view learner_id, quiz::Result result);

  // Throws Error(invalid_argument) when the interests are out of bounds.
  void put_profile(LearnerProfile profile);
  std::optional<LearnerProfile> profile(std::string_view learner_id) const;

 private:
  struct LoadedDocument {
    StoredDocument stored;
    Bm25Index index;
    std::unique_ptr<DocumentLocator> locator;
  };

  std::shared_ptr<const LoadedDocument> load(std::string_view doc_id) const;
  std::shared_ptr<std::mutex> lock_for(const std::string& key) const;
  std::string next_id(std::string_view prefix);
  std::uint64_t quiz_seed(std::string_view learner_id, std::string_view doc_id, std::string_view section_label);
  LearnerProfile profile_or_default(std::string_view learner_id) const;

  ServiceConfig config_;
  std::shared_ptr<llm::Gateway> gateway_;
  Orchestrator orchestrator_;
  Storage storage_;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const LoadedDocument>, std::less<>> cache_;
  mutable std::mutex locks_mutex_;
  mutable std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::mutex id_mutex_;
  std::mt19937_64 id_rng_;
};

}  // namespace textbook
