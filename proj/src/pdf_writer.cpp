#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "textbook/pdf.hpp"
#include "textbook/unicode.hpp"

namespace textbook::pdf {

namespace {

// Reverse of the WinAnsi 0x80..0x9F block.
int win_ansi_byte(char32_t cp) {
  if (cp < 0x80 || (cp >= 0xA0 && cp <= 0xFF)) return static_cast<int>(cp);
  static constexpr std::pair<char32_t, int> kHigh[] = {
      {0x20AC, 0x80}, {0x201A, 0x82}, {0x0192, 0x83}, {0x201E, 0x84}, {0x2026, 0x85}, {0x2020, 0x86},
      {0x2021, 0x87}, {0x02C6, 0x88}, {0x2030, 0x89}, {0x0160, 0x8A}, {0x2039, 0x8B}, {0x0152, 0x8C},
      {0x017D, 0x8E}, {0x2018, 0x91}, {0x2019, 0x92}, {0x201C, 0x93}, {0x201D, 0x94}, {0x2022, 0x95},
      {0x2013, 0x96}, {0x2014, 0x97}, {0x02DC, 0x98}, {0x2122, 0x99}, {0x0161, 0x9A}, {0x203A, 0x9B},
      {0x0153, 0x9C}, {0x017E, 0x9E}, {0x0178, 0x9F}};
  for (const auto& [u, b] : kHigh) {
    if (u == cp) return b;
  }
  return '?';
}

std::string literal_string(std::string_view utf8) {
  std::string out = "(";
  for (char32_t cp : unicode::decode_utf8(utf8)) {
    const int b = win_ansi_byte(cp);
    if (b == '(' || b == ')' || b == '\\') {
      out.push_back('\\');
      out.push_back(static_cast<char>(b));
    } else if (b < 0x20 || b >= 0x7F) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\%03o", b);
      out += buf;
    } else {
      out.push_back(static_cast<char>(b));
    }
  }
  out.push_back(')');
  return out;
}

// Text strings outside content streams (titles, bookmarks).
std::string text_string(std::string_view utf8) {
  bool ascii = true;
  for (char c : utf8) ascii = ascii && static_cast<unsigned char>(c) < 0x80;
  if (ascii) return literal_string(utf8);
  std::string out = "<FEFF";
  char buf[8];
  for (char32_t cp : unicode::decode_utf8(utf8)) {
    if (cp >= 0x10000) {
      const char32_t v = cp - 0x10000;
      std::snprintf(buf, sizeof(buf), "%04X", static_cast<unsigned>(0xD800 + (v >> 10)));
      out += buf;
      std::snprintf(buf, sizeof(buf), "%04X", static_cast<unsigned>(0xDC00 + (v & 0x3FF)));
    } else {
      std::snprintf(buf, sizeof(buf), "%04X", static_cast<unsigned>(cp));
    }
    out += buf;
  }
  out.push_back('>');
  return out;
}

std::string deflate(const std::string& data) {
  uLongf size = compressBound(static_cast<uLong>(data.size()));
  std::string out(size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &size, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uLong>(data.size()), 9) != Z_OK) {
    throw std::runtime_error("zlib compression failed");
  }
  out.resize(size);
  return out;
}

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::string write_text_pdf(const std::vector<std::vector<std::string>>& pages, const std::vector<OutlineEntry>& outline,
                           const WriterOptions& options) {
  // Object numbers: 1 catalog, 2 page tree, 3 font, 4 info, then page/content
  // pairs, then the outline root and its items.
  const int page_count = static_cast<int>(pages.size());
  const int first_page_obj = 5;
  const int outline_root = first_page_obj + 2 * page_count;
  const bool has_outline = !outline.empty();
  const int total = has_outline ? outline_root + 1 + static_cast<int>(outline.size()) : outline_root;

  std::vector<std::string> bodies(static_cast<std::size_t>(total));
  const auto page_obj = [&](int i) { return first_page_obj + 2 * i; };

  bodies[1] = "<< /Type /Catalog /Pages 2 0 R" +
              (has_outline ? " /Outlines " + std::to_string(outline_root) + " 0 R /PageMode /UseOutlines" : std::string()) +
              " >>";
  std::string kids;
  for (int i = 0; i < page_count; ++i) kids += (i ? " " : "") + std::to_string(page_obj(i)) + " 0 R";
  bodies[2] = "<< /Type /Pages /Kids [" + kids + "] /Count " + std::to_string(page_count) + " >>";
  bodies[3] = "<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>";
  bodies[4] = "<< /Producer (textbook)" + (options.title.empty() ? std::string() : " /Title " + text_string(options.title)) + " >>";

  for (int i = 0; i < page_count; ++i) {
    std::string content = "BT\n/F1 " + fmt_number(options.font_size) + " Tf\n" + fmt_number(options.leading) +
                          " TL\n72 750 Td\n";
    bool first = true;
    for (const auto& line : pages[static_cast<std::size_t>(i)]) {
      if (!first) content += "T*\n";
      first = false;
      content += literal_string(line) + " Tj\n";
    }
    content += "ET\n";
    std::string dict = "<< /Length ";
    std::string data = content;
    if (options.compress) {
      data = deflate(content);
      dict = "<< /Filter /FlateDecode /Length ";
    }
    bodies[static_cast<std::size_t>(page_obj(i))] =
        "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Resources << /Font << /F1 3 0 R >> >> /Contents " +
        std::to_string(page_obj(i) + 1) + " 0 R >>";
    bodies[static_cast<std::size_t>(page_obj(i) + 1)] =
        dict + std::to_string(data.size()) + " >>\nstream\n" + data + "\nendstream";
  }

  if (has_outline) {
    const int n = static_cast<int>(outline.size());
    bodies[static_cast<std::size_t>(outline_root)] = "<< /Type /Outlines /First " + std::to_string(outline_root + 1) +
                                                     " 0 R /Last " + std::to_string(outline_root + n) +
                                                     " 0 R /Count " + std::to_string(n) + " >>";
    for (int i = 0; i < n; ++i) {
      const auto& entry = outline[static_cast<std::size_t>(i)];
      const int target = std::clamp(entry.page, 1, std::max(1, page_count)) - 1;
      std::string item = "<< /Title " + text_string(entry.title) + " /Parent " + std::to_string(outline_root) + " 0 R";
      if (i > 0) item += " /Prev " + std::to_string(outline_root + i) + " 0 R";
      if (i + 1 < n) item += " /Next " + std::to_string(outline_root + i + 2) + " 0 R";
      item += " /Dest [" + std::to_string(page_obj(target)) + " 0 R /XYZ 0 792 0] >>";
      bodies[static_cast<std::size_t>(outline_root + 1 + i)] = item;
    }
  }

  std::string out = "%PDF-1.4\n%\xE2\xE3\xCF\xD3\n";
  std::vector<std::size_t> offsets(static_cast<std::size_t>(total), 0);
  for (int i = 1; i < total; ++i) {
    offsets[static_cast<std::size_t>(i)] = out.size();
    out += std::to_string(i) + " 0 obj\n" + bodies[static_cast<std::size_t>(i)] + "\nendobj\n";
  }
  const std::size_t xref = out.size();
  out += "xref\n0 " + std::to_string(total) + "\n0000000000 65535 f \n";
  char buf[32];
  for (int i = 1; i < total; ++i) {
    std::snprintf(buf, sizeof(buf), "%010zu 00000 n \n", offsets[static_cast<std::size_t>(i)]);
    out += buf;
  }
  out += "trailer\n<< /Size " + std::to_string(total) + " /Root 1 0 R /Info 4 0 R >>\nstartxref\n" +
         std::to_string(xref) + "\n%%EOF\n";
  return out;
}

std::vector<std::vector<std::string>> layout_text(std::string_view text, std::size_t line_width,
                                                  std::size_t lines_per_page) {
  std::vector<std::string> lines;
  std::string current;
  for (std::string_view word : unicode::split_words(text)) {
    if (!current.empty() && current.size() + 1 + word.size() > line_width) {
      lines.push_back(std::move(current));
      current.clear();
    }
    if (!current.empty()) current.push_back(' ');
    current += word;
  }
  if (!current.empty()) lines.push_back(std::move(current));

  std::vector<std::vector<std::string>> pages;
  for (std::size_t i = 0; i < lines.size(); i += lines_per_page) {
    const std::size_t end = std::min(lines.size(), i + lines_per_page);
    pages.emplace_back(lines.begin() + static_cast<std::ptrdiff_t>(i), lines.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (pages.empty()) pages.emplace_back();
  return pages;
}

}  // namespace textbook::pdf
