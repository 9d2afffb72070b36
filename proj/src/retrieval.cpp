#include "textbook/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "textbook/error.hpp"
#include "textbook/kernels.hpp"
#include "textbook/tokenizer.hpp"

namespace textbook {

IndexStats build_index(const std::vector<Chunk>& chunks) {
  if (chunks.empty()) throw Error(Errc::empty_corpus, "cannot index an empty corpus");
  IndexStats stats;
  stats.doc_count = chunks.size();
  std::size_t total_tokens = 0;
  for (const Chunk& c : chunks) {
    IndexStats::ChunkTerms entry;
    entry.chunk_id = c.id;
    for (Token& t : tokenize(std::u32string_view(c.text))) {
      ++entry.terms[std::move(t.text)];
      ++entry.doc_len;
    }
    for (const auto& [term, tf] : entry.terms) ++stats.doc_freq[term];
    total_tokens += entry.doc_len;
    stats.term_freq.push_back(std::move(entry));
  }
  std::sort(stats.term_freq.begin(), stats.term_freq.end(),
            [](const auto& a, const auto& b) { return a.chunk_id < b.chunk_id; });
  stats.avg_doc_len = static_cast<double>(total_tokens) / static_cast<double>(stats.doc_count);
  return stats;
}

Bm25Index::Bm25Index(IndexStats stats, Bm25Params params)
    : stats_(std::move(stats)), params_(params), built_(stats_.doc_count > 0) {
  if (stats_.doc_count != stats_.term_freq.size()) {
    throw Error(Errc::invalid_argument, "index stats: doc_count does not match term_freq entries");
  }
  // An all-punctuation corpus has no tokens; any positive average keeps the
  // length normalization finite and no term can match anyway.
  const double avg = stats_.avg_doc_len > 0.0 ? stats_.avg_doc_len : 1.0;
  length_norm_.reserve(stats_.term_freq.size());
  for (std::uint32_t i = 0; i < stats_.term_freq.size(); ++i) {
    const auto& entry = stats_.term_freq[i];
    const double len = static_cast<double>(entry.doc_len);
    length_norm_.push_back(params_.k1 * (1.0 - params_.b + params_.b * len / avg));
    for (const auto& [term, tf] : entry.terms) postings_[term].push_back({i, tf});
  }
}

double Bm25Index::idf(std::string_view term) const {
  const auto it = stats_.doc_freq.find(std::string(term));
  const double df = it == stats_.doc_freq.end() ? 0.0 : static_cast<double>(it->second);
  const double n = static_cast<double>(stats_.doc_count);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredChunk> Bm25Index::search(std::string_view query, std::size_t k) const {
  if (!built_) throw Error(Errc::index_not_built, "index has not been built");
  if (k == 0) throw Error(Errc::invalid_argument, "k must be positive");

  const std::size_t n = stats_.term_freq.size();
  std::vector<double> scores(n, 0.0);
  std::vector<double> tf(n, 0.0);
  const auto accumulate = kernels::bm25_accumulate_for(kernels::active_isa());
  const double k1_plus_1 = params_.k1 + 1.0;

  for (const Token& token : tokenize(query)) {
    const auto it = postings_.find(token.text);
    if (it == postings_.end()) continue;
    for (const Posting& p : it->second) tf[p.chunk_index] = static_cast<double>(p.tf);
    accumulate(tf.data(), length_norm_.data(), idf(token.text), k1_plus_1, scores.data(), n);
    for (const Posting& p : it->second) tf[p.chunk_index] = 0.0;
  }

  std::vector<std::uint32_t> hits;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (scores[i] > 0.0) hits.push_back(i);
  }
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return stats_.term_freq[a].chunk_id < stats_.term_freq[b].chunk_id;
  };
  const std::size_t take = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(), better);

  std::vector<ScoredChunk> out;
  out.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    out.push_back({stats_.term_freq[hits[r]].chunk_id, scores[hits[r]], static_cast<int>(r) + 1});
  }
  return out;
}

}  // namespace textbook
