#include "textbook/locator.hpp"

#include <algorithm>
#include <functional>

#include "textbook/error.hpp"
#include "textbook/unicode.hpp"

namespace textbook {

std::string_view to_string(MatchMethod m) noexcept { return m == MatchMethod::exact ? "exact" : "fuzzy"; }

NormalizedText normalize(std::u32string_view text) {
  NormalizedText out;
  out.text.reserve(text.size());
  out.offset_map.reserve(text.size());
  std::size_t pending_space = std::u32string_view::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (unicode::is_space(c)) {
      if (pending_space == std::u32string_view::npos && !out.text.empty()) pending_space = i;
      continue;
    }
    if (pending_space != std::u32string_view::npos) {
      out.text.push_back(U' ');
      out.offset_map.push_back(pending_space);
      pending_space = std::u32string_view::npos;
    }
    out.text.push_back(unicode::fold_case(c));
    out.offset_map.push_back(i);
  }
  return out;
}

DocumentLocator::DocumentLocator(const ExtractedDocument& doc)
    : layout_(doc), normalized_(normalize(layout_.text())), tokens_(tokenize(std::u32string_view(layout_.text()))) {
  token_ids_.reserve(tokens_.size());
  for (const Token& t : tokens_) {
    const auto [it, inserted] = vocabulary_.try_emplace(t.text, static_cast<std::uint32_t>(vocabulary_.size()));
    token_ids_.push_back(it->second);
  }
}

DocPosition DocumentLocator::original_position(std::size_t normalized_index) const {
  return layout_.to_position(normalized_.offset_map.at(normalized_index));
}

std::vector<HighlightSpan> DocumentLocator::split_by_page(std::size_t begin, std::size_t end, double confidence,
                                                          MatchMethod method) const {
  std::vector<HighlightSpan> spans;
  for (int page = layout_.to_position(begin).page; page <= layout_.page_count(); ++page) {
    const std::size_t page_begin = layout_.page_start(page);
    if (page_begin >= end) break;
    const std::size_t page_end = page_begin + layout_.page_length(page);
    const std::size_t s = std::max(begin, page_begin);
    const std::size_t e = std::min(end, page_end);
    if (s < e) spans.push_back({page, s - page_begin, e - page_begin, confidence, method});
  }
  return spans;
}

LocateResult DocumentLocator::locate(std::u32string_view needle, double tau) const {
  const TokenStream needle_tokens = tokenize(needle);
  if (needle_tokens.empty()) throw Error(Errc::empty_needle, "needle has no tokens");

  LocateResult result;
  const NormalizedText norm_needle = normalize(needle);
  const std::u32string& hay = normalized_.text;
  const auto found = std::search(hay.begin(), hay.end(),
                                 std::boyer_moore_horspool_searcher(norm_needle.text.begin(), norm_needle.text.end()));
  if (found != hay.end()) {
    const auto a = static_cast<std::size_t>(found - hay.begin());
    const std::size_t b = a + norm_needle.text.size();
    result.spans = split_by_page(normalized_.offset_map[a], normalized_.offset_map[b - 1] + 1, 1.0, MatchMethod::exact);
    result.located = !result.spans.empty();
    return result;
  }

  if (tokens_.empty()) return result;
  // Needle tokens absent from the document get ids past the vocabulary; they
  // never match but still count towards the union.
  std::unordered_map<std::string, std::uint32_t> extra;
  std::vector<std::uint32_t> need(vocabulary_.size() + needle_tokens.size(), 0);
  for (const Token& t : needle_tokens) {
    std::uint32_t id;
    if (auto it = vocabulary_.find(t.text); it != vocabulary_.end()) {
      id = it->second;
    } else {
      id = extra.try_emplace(t.text, static_cast<std::uint32_t>(vocabulary_.size() + extra.size())).first->second;
    }
    ++need[id];
  }
  const std::size_t m = needle_tokens.size();
  const std::size_t width = std::min(m, tokens_.size());
  std::vector<std::uint32_t> window(need.size(), 0);
  std::size_t inter = 0;
  const auto add = [&](std::uint32_t id) {
    if (window[id] < need[id]) ++inter;
    ++window[id];
  };
  const auto remove = [&](std::uint32_t id) {
    --window[id];
    if (window[id] < need[id]) --inter;
  };
  for (std::size_t i = 0; i < width; ++i) add(token_ids_[i]);
  std::size_t best_inter = inter;
  std::size_t best_start = 0;
  for (std::size_t s = 1; s + width <= tokens_.size(); ++s) {
    remove(token_ids_[s - 1]);
    add(token_ids_[s + width - 1]);
    // Width and needle size are fixed, so Jaccard grows with the intersection.
    if (inter > best_inter) {
      best_inter = inter;
      best_start = s;
    }
  }
  const double score = static_cast<double>(best_inter) / static_cast<double>(width + m - best_inter);
  if (best_inter == 0 || score < tau) return result;
  const std::size_t begin = tokens_[best_start].span.start;
  const std::size_t end = tokens_[best_start + width - 1].span.end;
  result.spans = split_by_page(begin, end, score, MatchMethod::fuzzy);
  result.located = !result.spans.empty();
  return result;
}

LocateResult DocumentLocator::locate(std::string_view needle_utf8, double tau) const {
  return locate(std::u32string_view(unicode::decode_utf8(needle_utf8)), tau);
}

LocateResult locate(const ExtractedDocument& doc, std::string_view needle, double tau) {
  return DocumentLocator(doc).locate(needle, tau);
}

}  // namespace textbook
