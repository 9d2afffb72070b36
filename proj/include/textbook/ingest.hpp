#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace textbook {

struct PageText {
  int page_number = 0;  // 1-based
  std::u32string text;  // lines joined with '\n'

  std::size_t char_count() const noexcept { return text.size(); }
};

struct SectionRange {
  std::string label;
  int start_page = 0;
  int end_page = 0;  // inclusive

  friend bool operator==(const SectionRange&, const SectionRange&) = default;
};

struct ExtractedDocument {
  std::string doc_id;
  std::string title;
  std::vector<PageText> pages;
  std::string created_at;
  std::vector<SectionRange> section_map;
};

// A character boundary inside the document. `offset` may equal the page's
// char_count, which addresses the position just past its last character.
struct DocPosition {
  int page = 1;
  std::size_t offset = 0;

  friend bool operator==(const DocPosition&, const DocPosition&) = default;
};

struct DocSpan {
  int start_page = 1;
  std::size_t start_offset = 0;
  int end_page = 1;
  std::size_t end_offset = 0;

  friend bool operator==(const DocSpan&, const DocSpan&) = default;
};

class ChunkId {
 public:
  constexpr ChunkId() = default;
  constexpr explicit ChunkId(std::uint32_t ordinal) : ordinal_(ordinal) {}

  constexpr std::uint32_t ordinal() const noexcept { return ordinal_; }
  std::string str() const { return "c" + std::to_string(ordinal_); }
  static std::optional<ChunkId> parse(std::string_view text);

  friend constexpr auto operator<=>(ChunkId, ChunkId) = default;

 private:
  std::uint32_t ordinal_ = 0;
};

struct Chunk {
  ChunkId id;
  std::string doc_id;
  DocSpan span;
  std::u32string text;
  std::size_t token_count = 0;
};

// Page-concatenated view of a document: pages joined by a single '\n' that
// belongs to neither page. Global offsets index into that string.
class TextLayout {
 public:
  explicit TextLayout(const ExtractedDocument& doc);

  const std::u32string& text() const noexcept { return text_; }
  std::size_t size() const noexcept { return text_.size(); }
  std::size_t page_start(int page) const;
  std::size_t page_length(int page) const;
  int page_count() const noexcept { return static_cast<int>(starts_.size()); }

  // Largest page whose start is <= global; offsets may land on a separator.
  DocPosition to_position(std::size_t global) const;
  std::size_t to_global(DocPosition pos) const;
  DocSpan to_span(std::size_t begin, std::size_t end) const;
  std::u32string slice(const DocSpan& span) const;

 private:
  std::u32string text_;
  std::vector<std::size_t> starts_;
  std::vector<std::size_t> lengths_;
};

// Throws Error(malformed_pdf | no_text_layer).
ExtractedDocument extract(std::string_view pdf_bytes);

std::u32string slice(const ExtractedDocument& doc, const DocSpan& span);

inline constexpr std::size_t kDefaultChunkSize = 1000;
inline constexpr std::size_t kDefaultChunkOverlap = 200;

// Fixed windows of `size` characters every `size - overlap` characters over
// the page-concatenated text. Throws Error(empty_document) or
// Error(invalid_argument).
std::vector<Chunk> chunk(const ExtractedDocument& doc, std::size_t size = kDefaultChunkSize,
                         std::size_t overlap = kDefaultChunkOverlap);

}  // namespace textbook
