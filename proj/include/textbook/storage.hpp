#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "textbook/ingest.hpp"
#include "textbook/llm.hpp"
#include "textbook/orchestrator.hpp"
#include "textbook/quiz.hpp"
#include "textbook/retrieval.hpp"

namespace textbook {

// Writes to a sibling temp file, fsyncs it and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Throws Error(not_found) or Error(io_error).
std::string read_file(const std::filesystem::path& path);

// Maps a client-supplied id to a safe file name. Ids that are already safe
// map to themselves; others get a digest suffix to stay distinct.
std::string safe_file_name(std::string_view id);

struct DocumentManifest {
  std::string doc_id;
  std::string title;
  int pages = 0;
  std::string created_at;
  std::vector<SectionRange> sections;
  std::size_t chunk_count = 0;
  std::size_t chunk_size = 0;
  std::size_t chunk_overlap = 0;
};

struct StoredDocument {
  DocumentManifest manifest;
  ExtractedDocument doc;
  std::vector<Chunk> chunks;
  IndexStats stats;
};

struct Session {
  std::string session_id;
  std::string learner_id;
  std::string doc_id;
  std::vector<llm::ChatMessage> history;
  std::string created_at;
};

// File layout under one root:
//   docs/<doc_id>/{manifest.json, pages.jsonl, chunks.jsonl, index.json}
//   sessions/<session_id>.meta.json and sessions/<session_id>.jsonl
//   quiz/<learner_id>/<doc_id>/<section>.json
//   profiles/<learner_id>.json
// Documents are staged under docs/.staging-* and renamed into place, so a
// directory without the leading dot is always complete.
class Storage {
 public:
  explicit Storage(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Removes staging and trash directories left by an interrupted process.
  void recover();

  // `staging_delay_ms` pauses between writing and publishing (tests only).
  void publish_document(const StoredDocument& stored, int staging_delay_ms = 0);
  std::vector<std::string> list_documents() const;
  bool has_document(std::string_view doc_id) const;
  DocumentManifest load_manifest(std::string_view doc_id) const;
  StoredDocument load_document(std::string_view doc_id) const;

  void save_session(const Session& session);
  std::optional<Session> load_session(std::string_view session_id) const;

  std::filesystem::path quiz_path(std::string_view learner_id, std::string_view doc_id,
                                  std::string_view section_label) const;
  std::optional<quiz::SectionQuizState> load_quiz_state(std::string_view learner_id, std::string_view doc_id,
                                                        std::string_view section_label) const;
  void save_quiz_state(std::string_view learner_id, const quiz::SectionQuizState& state);

  void save_profile(const LearnerProfile& profile);
  std::optional<LearnerProfile> load_profile(std::string_view learner_id) const;

 private:
  std::filesystem::path doc_dir(std::string_view doc_id) const;

  std::filesystem::path root_;
};

}  // namespace textbook
