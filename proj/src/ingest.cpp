#include "textbook/ingest.hpp"

#include <algorithm>
#include <charconv>

#include "textbook/error.hpp"
#include "textbook/pdf.hpp"
#include "textbook/tokenizer.hpp"
#include "textbook/util.hpp"

namespace textbook {

std::optional<ChunkId> ChunkId::parse(std::string_view text) {
  if (text.size() < 2 || text.front() != 'c') return std::nullopt;
  std::uint32_t value = 0;
  const char* begin = text.data() + 1;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return ChunkId(value);
}

TextLayout::TextLayout(const ExtractedDocument& doc) {
  starts_.reserve(doc.pages.size());
  lengths_.reserve(doc.pages.size());
  for (std::size_t i = 0; i < doc.pages.size(); ++i) {
    if (i > 0) text_.push_back(U'\n');
    starts_.push_back(text_.size());
    lengths_.push_back(doc.pages[i].text.size());
    text_ += doc.pages[i].text;
  }
}

std::size_t TextLayout::page_start(int page) const {
  if (page < 1 || page > page_count()) throw Error(Errc::invalid_argument, "page out of range");
  return starts_[static_cast<std::size_t>(page - 1)];
}

std::size_t TextLayout::page_length(int page) const {
  if (page < 1 || page > page_count()) throw Error(Errc::invalid_argument, "page out of range");
  return lengths_[static_cast<std::size_t>(page - 1)];
}

DocPosition TextLayout::to_position(std::size_t global) const {
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), global);
  const auto index = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - starts_.begin() - 1));
  return {static_cast<int>(index) + 1, global - starts_[index]};
}

std::size_t TextLayout::to_global(DocPosition pos) const { return page_start(pos.page) + pos.offset; }

DocSpan TextLayout::to_span(std::size_t begin, std::size_t end) const {
  const DocPosition b = to_position(begin);
  const DocPosition e = to_position(end);
  return {b.page, b.offset, e.page, e.offset};
}

std::u32string TextLayout::slice(const DocSpan& span) const {
  const std::size_t begin = to_global({span.start_page, span.start_offset});
  const std::size_t end = to_global({span.end_page, span.end_offset});
  if (end < begin || end > text_.size()) throw Error(Errc::invalid_argument, "span out of range");
  return text_.substr(begin, end - begin);
}

std::u32string slice(const ExtractedDocument& doc, const DocSpan& span) { return TextLayout(doc).slice(span); }

ExtractedDocument extract(std::string_view pdf_bytes) {
  pdf::ParsedPdf parsed = pdf::read(pdf_bytes);

  ExtractedDocument doc;
  doc.doc_id = sha256_hex(pdf_bytes).substr(0, 16);
  doc.title = parsed.title;
  doc.created_at = utc_timestamp();
  std::size_t total = 0;
  for (std::size_t i = 0; i < parsed.pages.size(); ++i) {
    total += parsed.pages[i].size();
    doc.pages.push_back({static_cast<int>(i) + 1, std::move(parsed.pages[i])});
  }
  if (total == 0) {
    throw Error(Errc::no_text_layer, "document has no extractable text (scanned or image-only PDF)");
  }

  const int page_count = static_cast<int>(doc.pages.size());
  std::vector<pdf::OutlineEntry> outline = parsed.outline;
  std::stable_sort(outline.begin(), outline.end(),
                   [](const pdf::OutlineEntry& a, const pdf::OutlineEntry& b) { return a.page < b.page; });
  for (std::size_t i = 0; i < outline.size(); ++i) {
    const int start = std::clamp(outline[i].page, 1, page_count);
    int end = page_count;
    if (i + 1 < outline.size()) end = std::max(start, std::clamp(outline[i + 1].page, 1, page_count) - 1);
    doc.section_map.push_back({outline[i].title, start, end});
  }
  if (doc.section_map.empty()) {
    for (int p = 1; p <= page_count; ++p) doc.section_map.push_back({"Page " + std::to_string(p), p, p});
  }
  return doc;
}

std::vector<Chunk> chunk(const ExtractedDocument& doc, std::size_t size, std::size_t overlap) {
  if (size == 0) throw Error(Errc::invalid_argument, "chunk size must be positive");
  if (overlap >= size) throw Error(Errc::invalid_argument, "chunk overlap must be smaller than chunk size");
  const TextLayout layout(doc);
  std::size_t chars = 0;
  for (const auto& p : doc.pages) chars += p.text.size();
  if (chars == 0) throw Error(Errc::empty_document, "document has no characters");

  const std::size_t total = layout.size();
  const std::size_t stride = size - overlap;
  std::vector<Chunk> chunks;
  for (std::size_t begin = 0;; begin += stride) {
    const std::size_t end = std::min(begin + size, total);
    Chunk c;
    c.id = ChunkId(static_cast<std::uint32_t>(chunks.size()));
    c.doc_id = doc.doc_id;
    c.span = layout.to_span(begin, end);
    c.text = layout.text().substr(begin, end - begin);
    c.token_count = tokenize(std::u32string_view(c.text)).size();
    chunks.push_back(std::move(c));
    if (end == total) break;
  }
  return chunks;
}

}  // namespace textbook
