#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal PDF text-layer reader and a writer for plain-text documents. The
// reader understands classic and compressed cross-reference layouts (it scans
// for objects instead of trusting offsets), Flate/ASCIIHex/ASCII85 filters,
// simple and composite fonts with ToUnicode maps, form XObjects and the
// document outline. It does not decrypt and does not OCR.
namespace textbook::pdf {

struct OutlineEntry {
  std::string title;  // UTF-8
  int page = 0;       // 1-based
};

struct ParsedPdf {
  std::string title;                // /Info /Title, UTF-8, may be empty
  std::vector<std::u32string> pages;  // lines joined with '\n'
  std::vector<OutlineEntry> outline;  // top-level bookmarks that resolve to a page
};

// Throws Error(Errc::malformed_pdf) for anything that is not a readable PDF.
ParsedPdf read(std::string_view bytes);

struct WriterOptions {
  bool compress = true;
  double font_size = 11.0;
  double leading = 14.0;
  std::string title;
};

// Writes a Helvetica/WinAnsi document with one text line per entry. Characters
// outside WinAnsi are written as '?'.
std::string write_text_pdf(const std::vector<std::vector<std::string>>& pages,
                           const std::vector<OutlineEntry>& outline = {},
                           const WriterOptions& options = {});

// Greedy word wrap of `text` into pages of at most `lines_per_page` lines,
// each at most `line_width` bytes unless a single word is longer.
std::vector<std::vector<std::string>> layout_text(std::string_view text,
                                                  std::size_t line_width = 80,
                                                  std::size_t lines_per_page = 40);

}  // namespace textbook::pdf
