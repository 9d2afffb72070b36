#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "textbook/ingest.hpp"

namespace textbook {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Corpus statistics, exactly what is persisted to index.json.
struct IndexStats {
  struct ChunkTerms {
    ChunkId chunk_id;
    std::size_t doc_len = 0;  // token count
    std::map<std::string, std::uint32_t> terms;
  };

  std::size_t doc_count = 0;
  double avg_doc_len = 0.0;
  std::map<std::string, std::uint32_t> doc_freq;
  std::vector<ChunkTerms> term_freq;  // ascending chunk_id
};

struct ScoredChunk {
  ChunkId chunk_id;
  double score = 0.0;
  int rank = 0;  // 1-based
};

// Throws Error(empty_corpus).
IndexStats build_index(const std::vector<Chunk>& chunks);

// Immutable once constructed; safe for concurrent searches.
class Bm25Index {
 public:
  Bm25Index() = default;
  explicit Bm25Index(IndexStats stats, Bm25Params params = {});

  bool built() const noexcept { return built_; }
  const IndexStats& stats() const noexcept { return stats_; }
  const Bm25Params& params() const noexcept { return params_; }

  double idf(std::string_view term) const;

  // Top-k by (score desc, chunk_id asc); zero scores are never returned.
  // Throws Error(index_not_built) or Error(invalid_argument) when k == 0.
  std::vector<ScoredChunk> search(std::string_view query, std::size_t k) const;

 private:
  struct Posting {
    std::uint32_t chunk_index;
    std::uint32_t tf;
  };

  IndexStats stats_;
  Bm25Params params_;
  bool built_ = false;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<double> length_norm_;
};

inline std::vector<ScoredChunk> search(const Bm25Index& index, std::string_view query, std::size_t k) {
  return index.search(query, k);
}

}  // namespace textbook
