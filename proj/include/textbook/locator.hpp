#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textbook/ingest.hpp"
#include "textbook/tokenizer.hpp"

namespace textbook {

enum class MatchMethod { exact, fuzzy };

std::string_view to_string(MatchMethod m) noexcept;

struct HighlightSpan {
  int page = 1;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive, <= page char_count
  double confidence = 0.0;
  MatchMethod method = MatchMethod::exact;

  friend bool operator==(const HighlightSpan&, const HighlightSpan&) = default;
};

struct LocateResult {
  std::vector<HighlightSpan> spans;  // sorted by (page, start)
  bool located = false;
};

// Case-folded text with whitespace runs collapsed to one space and both ends
// trimmed. offset_map[i] is the source index of normalized character i; a
// collapsed space maps to the first character of its run.
struct NormalizedText {
  std::u32string text;
  std::vector<std::size_t> offset_map;
};

NormalizedText normalize(std::u32string_view text);

inline constexpr double kDefaultLocateThreshold = 0.5;

// Precomputed normalized text and tokens of one document, reusable across
// many locate() calls. Immutable after construction.
class DocumentLocator {
 public:
  explicit DocumentLocator(const ExtractedDocument& doc);

  // Exact search on normalized text first, then a sliding token window scored
  // by multiset Jaccard similarity. Throws Error(empty_needle).
  LocateResult locate(std::u32string_view needle, double tau = kDefaultLocateThreshold) const;
  LocateResult locate(std::string_view needle_utf8, double tau = kDefaultLocateThreshold) const;

  const NormalizedText& normalized() const noexcept { return normalized_; }
  const TextLayout& layout() const noexcept { return layout_; }

  // Original (page, offset) of a normalized index.
  DocPosition original_position(std::size_t normalized_index) const;

 private:
  std::vector<HighlightSpan> split_by_page(std::size_t begin, std::size_t end, double confidence,
                                           MatchMethod method) const;

  TextLayout layout_;
  NormalizedText normalized_;
  TokenStream tokens_;
  std::vector<std::uint32_t> token_ids_;
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
};

LocateResult locate(const ExtractedDocument& doc, std::string_view needle, double tau = kDefaultLocateThreshold);

}  // namespace textbook
