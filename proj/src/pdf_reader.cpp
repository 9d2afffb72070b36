#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "pdf_objects.hpp"
#include "textbook/error.hpp"
#include "textbook/pdf.hpp"
#include "textbook/unicode.hpp"

namespace textbook::pdf {

using namespace detail;

namespace {

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::malformed_pdf, "malformed PDF: " + why); }

// WinAnsiEncoding differs from Latin-1 only in 0x80..0x9F.
constexpr std::array<char32_t, 32> kWinAnsiHigh = {
    0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD, 0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};

constexpr std::array<char32_t, 128> kMacRomanHigh = {
    0x00C4, 0x00C5, 0x00C7, 0x00C9, 0x00D1, 0x00D6, 0x00DC, 0x00E1, 0x00E0, 0x00E2, 0x00E4, 0x00E3, 0x00E5,
    0x00E7, 0x00E9, 0x00E8, 0x00EA, 0x00EB, 0x00ED, 0x00EC, 0x00EE, 0x00EF, 0x00F1, 0x00F3, 0x00F2, 0x00F4,
    0x00F6, 0x00F5, 0x00FA, 0x00F9, 0x00FB, 0x00FC, 0x2020, 0x00B0, 0x00A2, 0x00A3, 0x00A7, 0x2022, 0x00B6,
    0x00DF, 0x00AE, 0x00A9, 0x2122, 0x00B4, 0x00A8, 0x2260, 0x00C6, 0x00D8, 0x221E, 0x00B1, 0x2264, 0x2265,
    0x00A5, 0x00B5, 0x2202, 0x2211, 0x220F, 0x03C0, 0x222B, 0x00AA, 0x00BA, 0x03A9, 0x00E6, 0x00F8, 0x00BF,
    0x00A1, 0x00AC, 0x221A, 0x0192, 0x2248, 0x2206, 0x00AB, 0x00BB, 0x2026, 0x00A0, 0x00C0, 0x00C3, 0x00D5,
    0x0152, 0x0153, 0x2013, 0x2014, 0x201C, 0x201D, 0x2018, 0x2019, 0x00F7, 0x25CA, 0x00FF, 0x0178, 0x2044,
    0x20AC, 0x2039, 0x203A, 0xFB01, 0xFB02, 0x2021, 0x00B7, 0x201A, 0x201E, 0x2030, 0x00C2, 0x00CA, 0x00C1,
    0x00CB, 0x00C8, 0x00CD, 0x00CE, 0x00CF, 0x00CC, 0x00D3, 0x00D4, 0xF8FF, 0x00D2, 0x00DA, 0x00DB, 0x00D9,
    0x0131, 0x02C6, 0x02DC, 0x00AF, 0x02D8, 0x02D9, 0x02DA, 0x00B8, 0x02DD, 0x02DB, 0x02C7};

char32_t win_ansi(unsigned char b) {
  if (b >= 0x80 && b < 0xA0) return kWinAnsiHigh[b - 0x80];
  return b;
}

// Glyph names that show up in /Differences arrays of text fonts.
const std::unordered_map<std::string, std::u32string>& glyph_names() {
  static const auto* table = [] {
    auto* m = new std::unordered_map<std::string, std::u32string>{
        {"space", U" "},          {"exclam", U"!"},          {"quotedbl", U"\""},     {"numbersign", U"#"},
        {"dollar", U"$"},         {"percent", U"%"},         {"ampersand", U"&"},     {"quotesingle", U"'"},
        {"parenleft", U"("},      {"parenright", U")"},      {"asterisk", U"*"},      {"plus", U"+"},
        {"comma", U","},          {"hyphen", U"-"},          {"period", U"."},        {"slash", U"/"},
        {"zero", U"0"},           {"one", U"1"},             {"two", U"2"},           {"three", U"3"},
        {"four", U"4"},           {"five", U"5"},            {"six", U"6"},           {"seven", U"7"},
        {"eight", U"8"},          {"nine", U"9"},            {"colon", U":"},         {"semicolon", U";"},
        {"less", U"<"},           {"equal", U"="},           {"greater", U">"},       {"question", U"?"},
        {"at", U"@"},             {"bracketleft", U"["},     {"backslash", U"\\"},    {"bracketright", U"]"},
        {"asciicircum", U"^"},    {"underscore", U"_"},      {"grave", U"`"},         {"braceleft", U"{"},
        {"bar", U"|"},            {"braceright", U"}"},      {"asciitilde", U"~"},    {"quoteleft", U"‘"},
        {"quoteright", U"’"}, {"quotedblleft", U"“"}, {"quotedblright", U"”"},
        {"endash", U"–"},    {"emdash", U"—"},     {"bullet", U"•"},   {"ellipsis", U"…"},
        {"fi", U"fi"},            {"fl", U"fl"},             {"ff", U"ff"},           {"ffi", U"ffi"},
        {"ffl", U"ffl"},          {"dagger", U"†"},     {"daggerdbl", U"‡"}, {"degree", U"°"},
        {"copyright", U"©"}, {"registered", U"®"}, {"trademark", U"™"}, {"minus", U"−"},
        {"multiply", U"×"},  {"divide", U"÷"},     {"periodcentered", U"·"},
        {"section", U"§"},   {"paragraph", U"¶"},  {"nbspace", U" "},  {"dotlessi", U"ı"},
        {"eacute", U"é"},    {"egrave", U"è"},     {"aacute", U"á"},   {"agrave", U"à"},
        {"udieresis", U"ü"}, {"odieresis", U"ö"},  {"adieresis", U"ä"}, {"germandbls", U"ß"},
        {"ccedilla", U"ç"},  {"ntilde", U"ñ"},
    };
    for (char c = 'A'; c <= 'Z'; ++c) (*m)[std::string(1, c)] = std::u32string(1, static_cast<char32_t>(c));
    for (char c = 'a'; c <= 'z'; ++c) (*m)[std::string(1, c)] = std::u32string(1, static_cast<char32_t>(c));
    return m;
  }();
  return *table;
}

std::u32string glyph_to_unicode(const std::string& name) {
  const auto& table = glyph_names();
  if (auto it = table.find(name); it != table.end()) return it->second;
  const auto parse_hex = [](std::string_view hex) -> std::optional<char32_t> {
    if (hex.empty() || hex.size() > 6) return std::nullopt;
    char32_t v = 0;
    for (char c : hex) {
      v <<= 4;
      if (c >= '0' && c <= '9') v |= c - '0';
      else if (c >= 'A' && c <= 'F') v |= c - 'A' + 10;
      else if (c >= 'a' && c <= 'f') v |= c - 'a' + 10;
      else return std::nullopt;
    }
    return v;
  };
  if (name.size() == 7 && name.starts_with("uni")) {
    if (auto v = parse_hex(std::string_view(name).substr(3))) return std::u32string(1, *v);
  }
  if (name.size() >= 5 && name.size() <= 7 && name[0] == 'u') {
    if (auto v = parse_hex(std::string_view(name).substr(1))) return std::u32string(1, *v);
  }
  return {};
}

std::u32string decode_utf16be(std::string_view bytes) {
  std::u32string out;
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
    char32_t u = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
    if (u >= 0xD800 && u < 0xDC00 && i + 3 < bytes.size()) {
      const char32_t lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) | static_cast<unsigned char>(bytes[i + 3]);
      if (lo >= 0xDC00 && lo < 0xE000) {
        u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    out.push_back(u);
  }
  return out;
}

// PDF "text string": UTF-16BE with BOM, UTF-8 with BOM, or PDFDocEncoding.
std::string decode_text_string(std::string_view bytes) {
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFE && static_cast<unsigned char>(bytes[1]) == 0xFF) {
    return unicode::encode_utf8(decode_utf16be(bytes.substr(2)));
  }
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xEF\xBB\xBF") return std::string(bytes.substr(3));
  std::u32string out;
  for (char c : bytes) out.push_back(win_ansi(static_cast<unsigned char>(c)));
  return unicode::encode_utf8(out);
}

struct Matrix {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  // this × other
  Matrix operator*(const Matrix& o) const {
    return {a * o.a + b * o.c,       a * o.b + b * o.d,       c * o.a + d * o.c,
            c * o.b + d * o.d,       e * o.a + f * o.c + o.e, e * o.b + f * o.d + o.f};
  }
  std::pair<double, double> apply(double x, double y) const { return {a * x + c * y + e, b * x + d * y + f}; }
};

Matrix translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }

struct Glyph {
  std::u32string text;
  double width = 0;  // glyph space, thousandths of an em
  bool is_word_space = false;
};

class Font {
 public:
  std::vector<Glyph> decode(std::string_view bytes) const {
    std::vector<Glyph> glyphs;
    std::size_t i = 0;
    while (i < bytes.size()) {
      std::uint32_t code = 0;
      std::size_t len = code_length_;
      if (i + len > bytes.size()) len = bytes.size() - i;
      for (std::size_t k = 0; k < len; ++k) code = (code << 8) | static_cast<unsigned char>(bytes[i + k]);
      i += len;
      Glyph g;
      if (auto it = to_unicode_.find(code); it != to_unicode_.end()) {
        g.text = it->second;
      } else if (code_length_ == 1) {
        g.text = simple_[code & 0xFF];
      }
      if (auto it = widths_.find(code); it != widths_.end()) {
        g.width = it->second;
      } else {
        g.width = default_width_;
      }
      g.is_word_space = code_length_ == 1 && code == 32;
      glyphs.push_back(std::move(g));
    }
    return glyphs;
  }

  std::size_t code_length_ = 1;
  std::unordered_map<std::uint32_t, std::u32string> to_unicode_;
  std::array<std::u32string, 256> simple_;
  std::unordered_map<std::uint32_t, double> widths_;
  double default_width_ = 500.0;
};

struct TextLine {
  std::u32string text;
};

class Document {
 public:
  explicit Document(std::string_view bytes) : bytes_(bytes) {}

  ParsedPdf parse();

 private:
  void scan_objects();
  void load_object_streams();
  const Object& resolve(const Object& o, int depth = 0) const;
  const Object* lookup(const Dict& d, std::string_view key) const;
  const Dict* lookup_dict(const Dict& d, std::string_view key) const;
  void find_trailer();
  void collect_pages(const Object& node, const Object* inherited_resources, std::set<int>& visited, int depth);
  std::u32string extract_page(const Dict& page, const Object* resources);
  void run_content(std::string_view content, const Dict* resources, const Matrix& base_ctm, int depth);
  std::shared_ptr<const Font> font_for(const Object& font_obj);
  std::optional<int> resolve_dest(const Object& dest, int depth = 0) const;
  std::optional<Object> named_dest(const std::string& name) const;
  std::optional<Object> name_tree_lookup(const Object& node, const std::string& key, int depth) const;
  std::vector<OutlineEntry> read_outline();

  std::string_view bytes_;
  std::unordered_map<int, Object> objects_;
  Dict trailer_;
  const Dict* root_ = nullptr;

  struct PageRef {
    const Dict* dict;
    const Object* resources;
    int object_number;
  };
  std::vector<PageRef> pages_;
  std::map<const void*, std::shared_ptr<const Font>> fonts_;

  // Per-page interpreter output.
  std::vector<TextLine> lines_;
  bool have_position_ = false;
  double line_y_ = 0;
  double end_x_ = 0;
  double last_size_ = 0;
};

const Object& Document::resolve(const Object& o, int depth) const {
  static const Object null_object{};
  if (const auto* r = o.as<Ref>()) {
    if (depth > 32) return null_object;
    auto it = objects_.find(r->num);
    if (it == objects_.end()) return null_object;
    return resolve(it->second, depth + 1);
  }
  return o;
}

const Object* Document::lookup(const Dict& d, std::string_view key) const {
  const Object* o = d.find(key);
  if (o == nullptr) return nullptr;
  const Object& r = resolve(*o);
  return r.is_null() ? nullptr : &r;
}

const Dict* Document::lookup_dict(const Dict& d, std::string_view key) const {
  const Object* o = lookup(d, key);
  return o ? o->dict() : nullptr;
}

bool preceded_by_boundary(std::string_view data, std::size_t pos) {
  return pos == 0 || is_whitespace(data[pos - 1]) || is_delimiter(data[pos - 1]);
}

void Document::scan_objects() {
  std::size_t search = 0;
  while (true) {
    const std::size_t at = bytes_.find("obj", search);
    if (at == std::string_view::npos) break;
    search = at + 3;
    if (at + 3 < bytes_.size() && !is_whitespace(bytes_[at + 3]) && !is_delimiter(bytes_[at + 3])) continue;
    // Walk back over "<num> <gen> ".
    std::size_t p = at;
    if (p == 0 || !is_whitespace(bytes_[p - 1])) continue;
    while (p > 0 && is_whitespace(bytes_[p - 1])) --p;
    const std::size_t gen_end = p;
    while (p > 0 && bytes_[p - 1] >= '0' && bytes_[p - 1] <= '9') --p;
    if (p == gen_end || p == 0 || !is_whitespace(bytes_[p - 1])) continue;
    while (p > 0 && is_whitespace(bytes_[p - 1])) --p;
    const std::size_t num_end = p;
    while (p > 0 && bytes_[p - 1] >= '0' && bytes_[p - 1] <= '9') --p;
    if (p == num_end || !preceded_by_boundary(bytes_, p)) continue;
    int num = 0;
    for (std::size_t k = p; k < num_end; ++k) num = num * 10 + (bytes_[k] - '0');

    Lexer lexer(bytes_, at + 3);
    Parser parser(lexer);
    std::string kw;
    Object obj = parser.parse(&kw);
    if (!kw.empty() && kw != "endobj") continue;
    if (const auto* dict = obj.as<Dict>()) {
      const std::size_t after_dict = lexer.pos();
      const Token t = lexer.next();
      if (t.kind == TokenKind::keyword && t.text == "stream") {
        std::size_t start = lexer.pos();
        if (start < bytes_.size() && bytes_[start] == '\r') ++start;
        if (start < bytes_.size() && bytes_[start] == '\n') ++start;
        std::optional<std::size_t> length;
        if (const Object* len = dict->find("Length")) {
          if (const auto* i = len->as<std::int64_t>(); i && *i >= 0 &&
                                                       start + static_cast<std::size_t>(*i) <= bytes_.size()) {
            Lexer check(bytes_, start + static_cast<std::size_t>(*i));
            const Token end = check.next();
            if (end.kind == TokenKind::keyword && end.text == "endstream") length = static_cast<std::size_t>(*i);
          }
        }
        if (!length) {
          const std::size_t end = bytes_.find("endstream", start);
          if (end == std::string_view::npos) continue;
          std::size_t e = end;
          if (e > start && bytes_[e - 1] == '\n') --e;
          if (e > start && bytes_[e - 1] == '\r') --e;
          length = e - start;
        }
        auto stream = std::make_shared<Stream>();
        stream->dict = *dict;
        stream->raw = std::string(bytes_.substr(start, *length));
        obj = Object{std::shared_ptr<const Stream>(std::move(stream))};
        search = start + *length;
      } else {
        lexer.seek(after_dict);
      }
    }
    objects_[num] = std::move(obj);
  }
}

void Document::load_object_streams() {
  std::vector<std::shared_ptr<const Stream>> streams;
  for (const auto& [num, obj] : objects_) {
    if (const auto* s = obj.as<std::shared_ptr<const Stream>>()) {
      const Object* type = (*s)->dict.find("Type");
      if (type && type->is_name("ObjStm")) streams.push_back(*s);
    }
  }
  for (const auto& s : streams) {
    const auto data = decode_stream(*s);
    if (!data) continue;
    const Object* n_obj = s->dict.find("N");
    const Object* first_obj = s->dict.find("First");
    if (!n_obj || !first_obj || !n_obj->number() || !first_obj->number()) continue;
    const auto n = static_cast<std::size_t>(*n_obj->number());
    const auto first = static_cast<std::size_t>(*first_obj->number());
    Lexer header(*data);
    std::vector<std::pair<int, std::size_t>> entries;
    for (std::size_t i = 0; i < n; ++i) {
      const Token a = header.next();
      const Token b = header.next();
      if (a.kind != TokenKind::integer || b.kind != TokenKind::integer) break;
      entries.emplace_back(static_cast<int>(a.integer), static_cast<std::size_t>(b.integer));
    }
    for (const auto& [num, offset] : entries) {
      if (objects_.count(num) || first + offset >= data->size()) continue;
      Lexer lexer(*data, first + offset);
      Parser parser(lexer);
      objects_[num] = parser.parse();
    }
  }
}

void Document::find_trailer() {
  // Classic trailers; later ones win because incremental updates append.
  std::size_t search = 0;
  while (true) {
    const std::size_t at = bytes_.find("trailer", search);
    if (at == std::string_view::npos) break;
    search = at + 7;
    Lexer lexer(bytes_, at + 7);
    Parser parser(lexer);
    Object t = parser.parse();
    if (const auto* d = t.as<Dict>()) {
      if (d->find("Root") || !trailer_.find("Root")) trailer_ = *d;
    }
  }
  if (!trailer_.find("Root")) {
    for (const auto& [num, obj] : objects_) {
      const Dict* d = obj.dict();
      if (d && obj.stream() && d->find("Type") && d->find("Type")->is_name("XRef") && d->find("Root")) {
        trailer_ = *d;
      }
    }
  }
  if (trailer_.find("Encrypt")) malformed("encrypted documents are not supported");
  if (const Object* root = trailer_.find("Root")) root_ = resolve(*root).dict();
  if (root_ == nullptr) {
    for (const auto& [num, obj] : objects_) {
      const Dict* d = obj.dict();
      if (d && d->find("Type") && d->find("Type")->is_name("Catalog")) {
        root_ = d;
        break;
      }
    }
  }
  if (root_ == nullptr) malformed("no document catalog");
}

void Document::collect_pages(const Object& node, const Object* inherited_resources, std::set<int>& visited,
                             int depth) {
  if (depth > 64) return;
  int object_number = -1;
  if (const auto* r = node.as<Ref>()) {
    if (!visited.insert(r->num).second) return;
    object_number = r->num;
  }
  const Dict* dict = resolve(node).dict();
  if (dict == nullptr) return;
  const Object* resources = dict->find("Resources") ? lookup(*dict, "Resources") : inherited_resources;
  const Object* type = lookup(*dict, "Type");
  const Object* kids = lookup(*dict, "Kids");
  const bool is_tree = (type && type->is_name("Pages")) || (!type && kids);
  if (is_tree) {
    if (kids == nullptr) return;
    if (const auto* arr = kids->as<Array>()) {
      for (const auto& kid : *arr) collect_pages(kid, resources, visited, depth + 1);
    }
    return;
  }
  pages_.push_back({dict, resources, object_number});
}

std::shared_ptr<const Font> Document::font_for(const Object& font_ref) {
  const Object& font_obj = resolve(font_ref);
  const Dict* fd = font_obj.dict();
  if (fd == nullptr) return nullptr;
  if (auto it = fonts_.find(fd); it != fonts_.end()) return it->second;

  auto font = std::make_shared<Font>();
  const Object* subtype = lookup(*fd, "Subtype");
  const bool composite = subtype && subtype->is_name("Type0");
  font->code_length_ = composite ? 2 : 1;

  // Simple-font base encoding.
  std::string base = "WinAnsiEncoding";
  const Dict* encoding_dict = nullptr;
  if (const Object* enc = lookup(*fd, "Encoding")) {
    if (const auto* n = enc->as<Name>()) base = n->value;
    encoding_dict = enc->dict();
    if (encoding_dict) {
      if (const Object* be = lookup(*encoding_dict, "BaseEncoding"); be && be->as<Name>()) base = be->as<Name>()->value;
    }
  }
  for (int c = 0; c < 256; ++c) {
    char32_t cp = static_cast<char32_t>(c);
    if (base == "MacRomanEncoding" && c >= 0x80) {
      cp = kMacRomanHigh[c - 0x80];
    } else if (base == "StandardEncoding" && (c == 0x27 || c == 0x60)) {
      cp = c == 0x27 ? 0x2019 : 0x2018;
    } else {
      cp = win_ansi(static_cast<unsigned char>(c));
    }
    if (c < 0x20 && c != '\t') cp = 0;
    font->simple_[c] = cp ? std::u32string(1, cp) : std::u32string();
  }
  if (encoding_dict) {
    if (const Object* diffs = lookup(*encoding_dict, "Differences")) {
      if (const auto* arr = diffs->as<Array>()) {
        int code = 0;
        for (const auto& item : *arr) {
          if (auto n = item.number()) {
            code = static_cast<int>(*n);
          } else if (const auto* name = item.as<Name>()) {
            if (code >= 0 && code < 256) font->simple_[code] = glyph_to_unicode(name->value);
            ++code;
          }
        }
      }
    }
  }

  // Widths.
  if (!composite) {
    const Object* first = lookup(*fd, "FirstChar");
    const Object* widths = lookup(*fd, "Widths");
    if (first && first->number() && widths && widths->as<Array>()) {
      auto code = static_cast<std::uint32_t>(*first->number());
      for (const auto& w : *widths->as<Array>()) {
        if (auto v = resolve(w).number()) font->widths_[code] = *v;
        ++code;
      }
    }
    if (const Object* desc = lookup(*fd, "FontDescriptor"); desc && desc->dict()) {
      if (const Object* mw = lookup(*desc->dict(), "MissingWidth"); mw && mw->number()) font->default_width_ = *mw->number();
    }
  } else if (const Object* descendants = lookup(*fd, "DescendantFonts"); descendants && descendants->as<Array>() &&
                                                                             !descendants->as<Array>()->empty()) {
    const Dict* cid = resolve(descendants->as<Array>()->front()).dict();
    if (cid) {
      font->default_width_ = 1000.0;
      if (const Object* dw = lookup(*cid, "DW"); dw && dw->number()) font->default_width_ = *dw->number();
      if (const Object* w = lookup(*cid, "W"); w && w->as<Array>()) {
        const Array& arr = *w->as<Array>();
        for (std::size_t i = 0; i < arr.size();) {
          const auto c0 = resolve(arr[i]).number();
          if (!c0 || i + 1 >= arr.size()) break;
          const Object& next = resolve(arr[i + 1]);
          if (const auto* list = next.as<Array>()) {
            auto code = static_cast<std::uint32_t>(*c0);
            for (const auto& v : *list) {
              if (auto n = resolve(v).number()) font->widths_[code] = *n;
              ++code;
            }
            i += 2;
          } else {
            if (i + 2 >= arr.size()) break;
            const auto c1 = next.number();
            const auto wv = resolve(arr[i + 2]).number();
            if (c1 && wv && *c1 - *c0 < 65536) {
              for (auto code = static_cast<std::uint32_t>(*c0); code <= static_cast<std::uint32_t>(*c1); ++code) {
                font->widths_[code] = *wv;
              }
            }
            i += 3;
          }
        }
      }
    }
  }

  // ToUnicode CMap.
  if (const Object* tu = lookup(*fd, "ToUnicode"); tu && tu->stream()) {
    if (auto data = decode_stream(*tu->stream())) {
      Lexer lexer(*data);
      std::vector<Token> pending;
      while (true) {
        Token t = lexer.next();
        if (t.kind == TokenKind::end) break;
        if (t.kind != TokenKind::keyword) {
          pending.push_back(std::move(t));
          continue;
        }
        const auto code_of = [](const std::string& s) {
          std::uint32_t v = 0;
          for (char c : s) v = (v << 8) | static_cast<unsigned char>(c);
          return v;
        };
        if (t.text == "begincodespacerange") {
          pending.clear();
        } else if (t.text == "endcodespacerange") {
          if (!pending.empty() && pending.front().kind == TokenKind::string && !pending.front().text.empty()) {
            font->code_length_ = pending.front().text.size();
          }
          pending.clear();
        } else if (t.text == "endbfchar") {
          for (std::size_t i = 0; i + 1 < pending.size(); i += 2) {
            if (pending[i].kind != TokenKind::string || pending[i + 1].kind != TokenKind::string) continue;
            font->to_unicode_[code_of(pending[i].text)] = decode_utf16be(pending[i + 1].text);
          }
          pending.clear();
        } else if (t.text == "endbfrange") {
          // Ranges come as lo hi dst, where dst is a string or an array.
          std::size_t i = 0;
          while (i + 2 < pending.size()) {
            if (pending[i].kind != TokenKind::string || pending[i + 1].kind != TokenKind::string) {
              ++i;
              continue;
            }
            const std::uint32_t lo = code_of(pending[i].text);
            const std::uint32_t hi = code_of(pending[i + 1].text);
            if (pending[i + 2].kind == TokenKind::string) {
              const std::u32string base_text = decode_utf16be(pending[i + 2].text);
              if (hi >= lo && hi - lo < 65536 && !base_text.empty()) {
                for (std::uint32_t c = lo; c <= hi; ++c) {
                  std::u32string s = base_text;
                  s.back() += c - lo;
                  font->to_unicode_[c] = std::move(s);
                }
              }
              i += 3;
            } else if (pending[i + 2].kind == TokenKind::array_open) {
              std::size_t j = i + 3;
              std::uint32_t c = lo;
              while (j < pending.size() && pending[j].kind != TokenKind::array_close) {
                if (pending[j].kind == TokenKind::string) font->to_unicode_[c++] = decode_utf16be(pending[j].text);
                ++j;
              }
              i = j + 1;
            } else {
              i += 3;
            }
          }
          pending.clear();
        } else if (t.text == "beginbfchar" || t.text == "beginbfrange") {
          pending.clear();
        }
      }
    }
  }

  fonts_.emplace(fd, font);
  return font;
}

std::u32string Document::extract_page(const Dict& page, const Object* resources) {
  lines_.clear();
  have_position_ = false;
  std::string content;
  if (const Object* contents = lookup(page, "Contents")) {
    const auto append = [&](const Object& o) {
      if (const Stream* s = resolve(o).stream()) {
        if (auto data = decode_stream(*s)) {
          content += *data;
          content.push_back('\n');
        }
      }
    };
    if (const auto* arr = contents->as<Array>()) {
      for (const auto& part : *arr) append(part);
    } else {
      append(*contents);
    }
  }
  run_content(content, resources ? resources->dict() : nullptr, Matrix{}, 0);

  std::u32string text;
  for (const auto& line : lines_) {
    std::u32string collapsed = unicode::collapse_whitespace(line.text);
    if (collapsed.empty()) continue;
    if (!text.empty()) text.push_back(U'\n');
    text += collapsed;
  }
  return text;
}

void Document::run_content(std::string_view content, const Dict* resources, const Matrix& base_ctm, int depth) {
  if (depth > 8) return;
  struct GraphicsState {
    Matrix ctm;
    std::shared_ptr<const Font> font;
    double font_size = 0;
    double char_spacing = 0;
    double word_spacing = 0;
    double scale = 1.0;
    double leading = 0;
    double rise = 0;
  };
  GraphicsState gs;
  gs.ctm = base_ctm;
  std::vector<GraphicsState> stack;
  Matrix tm;
  Matrix tlm;

  const Dict* font_resources = resources ? lookup_dict(*resources, "Font") : nullptr;
  const Dict* xobjects = resources ? lookup_dict(*resources, "XObject") : nullptr;

  const auto show = [&](const std::string& bytes) {
    if (!gs.font) return;
    const Matrix trm = tm * gs.ctm;
    const auto [x, y] = trm.apply(0, gs.rise);
    const double size = std::max(1e-6, gs.font_size * std::hypot(trm.c, trm.d));
    const double threshold_y = std::max(1.0, 0.4 * size);
    if (!have_position_ || std::abs(y - line_y_) > threshold_y) {
      lines_.push_back({});
      line_y_ = y;
    } else {
      const double gap = x - end_x_;
      if (gap > 0.15 * size || gap < -2.0 * size) lines_.back().text.push_back(U' ');
    }
    have_position_ = true;
    last_size_ = size;
    for (const Glyph& g : gs.font->decode(bytes)) {
      lines_.back().text += g.text;
      const double advance =
          ((g.width / 1000.0) * gs.font_size + gs.char_spacing + (g.is_word_space ? gs.word_spacing : 0.0)) * gs.scale;
      tm = translate(advance, 0) * tm;
    }
    end_x_ = (tm * gs.ctm).apply(0, gs.rise).first;
  };
  const auto next_line = [&](double tx, double ty) {
    tlm = translate(tx, ty) * tlm;
    tm = tlm;
  };

  Lexer lexer(content);
  Parser parser(lexer);
  std::vector<Object> operands;
  while (true) {
    std::string op;
    Object obj = parser.parse(&op);
    if (op.empty()) {
      if (lexer.pos() >= content.size() && obj.is_null()) {
        // The parser returns Null both for "null" and end of input.
        lexer.skip_whitespace();
        if (lexer.pos() >= content.size()) break;
      }
      operands.push_back(std::move(obj));
      continue;
    }
    const auto num = [&](std::size_t i) -> double {
      if (i >= operands.size()) return 0.0;
      return operands[i].number().value_or(0.0);
    };
    const std::size_t n = operands.size();
    // Operands are the last N pushed.
    const auto arg = [&](std::size_t k, std::size_t count) { return n >= count ? num(n - count + k) : 0.0; };

    if (op == "BI") {
      // Inline image: skip the dictionary and binary data.
      const std::size_t id = content.find("ID", lexer.pos());
      if (id == std::string_view::npos) break;
      std::size_t p = id + 3;
      while (p + 2 <= content.size()) {
        const std::size_t ei = content.find("EI", p);
        if (ei == std::string_view::npos) {
          p = content.size();
          break;
        }
        const bool before = ei > 0 && is_whitespace(content[ei - 1]);
        const bool after = ei + 2 >= content.size() || is_whitespace(content[ei + 2]);
        p = ei + 2;
        if (before && after) break;
      }
      lexer.seek(p);
    } else if (op == "q") {
      stack.push_back(gs);
    } else if (op == "Q") {
      if (!stack.empty()) {
        gs = stack.back();
        stack.pop_back();
      }
    } else if (op == "cm") {
      gs.ctm = Matrix{arg(0, 6), arg(1, 6), arg(2, 6), arg(3, 6), arg(4, 6), arg(5, 6)} * gs.ctm;
    } else if (op == "BT") {
      tm = Matrix{};
      tlm = Matrix{};
    } else if (op == "Tf") {
      gs.font_size = arg(1, 2);
      gs.font.reset();
      if (n >= 2 && font_resources) {
        if (const auto* name = operands[n - 2].as<Name>()) {
          if (const Object* f = font_resources->find(name->value)) gs.font = font_for(*f);
        }
      }
    } else if (op == "Tc") {
      gs.char_spacing = arg(0, 1);
    } else if (op == "Tw") {
      gs.word_spacing = arg(0, 1);
    } else if (op == "Tz") {
      gs.scale = arg(0, 1) / 100.0;
    } else if (op == "TL") {
      gs.leading = arg(0, 1);
    } else if (op == "Ts") {
      gs.rise = arg(0, 1);
    } else if (op == "Td") {
      next_line(arg(0, 2), arg(1, 2));
    } else if (op == "TD") {
      gs.leading = -arg(1, 2);
      next_line(arg(0, 2), arg(1, 2));
    } else if (op == "Tm") {
      tlm = Matrix{arg(0, 6), arg(1, 6), arg(2, 6), arg(3, 6), arg(4, 6), arg(5, 6)};
      tm = tlm;
    } else if (op == "T*") {
      next_line(0, -gs.leading);
    } else if (op == "Tj" || op == "'" || op == "\"") {
      if (op == "\"" && n >= 3) {
        gs.word_spacing = num(n - 3);
        gs.char_spacing = num(n - 2);
      }
      if (op != "Tj") next_line(0, -gs.leading);
      if (n >= 1) {
        if (const auto* s = operands[n - 1].as<String>()) show(s->bytes);
      }
    } else if (op == "TJ") {
      if (n >= 1) {
        if (const auto* arr = operands[n - 1].as<Array>()) {
          for (const auto& item : *arr) {
            if (const auto* s = item.as<String>()) {
              show(s->bytes);
            } else if (auto adj = item.number()) {
              tm = translate(-*adj / 1000.0 * gs.font_size * gs.scale, 0) * tm;
              // A kern of a fifth of an em or more reads as a word gap.
              if (*adj <= -200.0 && have_position_ && !lines_.empty()) lines_.back().text.push_back(U' ');
              if (gs.font) end_x_ = (tm * gs.ctm).apply(0, gs.rise).first;
            }
          }
        }
      }
    } else if (op == "Do") {
      if (n >= 1 && xobjects) {
        if (const auto* name = operands[n - 1].as<Name>()) {
          if (const Object* xo = lookup(*xobjects, name->value); xo && xo->stream()) {
            const Stream* s = xo->stream();
            const Object* st = s->dict.find("Subtype");
            if (st && resolve(*st).is_name("Form")) {
              Matrix form_matrix;
              if (const Object* m = lookup(s->dict, "Matrix"); m && m->as<Array>() && m->as<Array>()->size() == 6) {
                const Array& a = *m->as<Array>();
                form_matrix = {a[0].number().value_or(1), a[1].number().value_or(0), a[2].number().value_or(0),
                               a[3].number().value_or(1), a[4].number().value_or(0), a[5].number().value_or(0)};
              }
              const Dict* form_resources = lookup_dict(s->dict, "Resources");
              if (auto data = decode_stream(*s)) {
                run_content(*data, form_resources ? form_resources : resources, form_matrix * gs.ctm, depth + 1);
              }
            }
          }
        }
      }
    }
    operands.clear();
  }
}

std::optional<Object> Document::name_tree_lookup(const Object& node_ref, const std::string& key, int depth) const {
  if (depth > 32) return std::nullopt;
  const Dict* node = resolve(node_ref).dict();
  if (node == nullptr) return std::nullopt;
  if (const Object* names = lookup(*node, "Names"); names && names->as<Array>()) {
    const Array& arr = *names->as<Array>();
    for (std::size_t i = 0; i + 1 < arr.size(); i += 2) {
      const Object& k = resolve(arr[i]);
      if (const auto* s = k.as<String>(); s && s->bytes == key) return resolve(arr[i + 1]);
    }
  }
  if (const Object* kids = lookup(*node, "Kids"); kids && kids->as<Array>()) {
    for (const auto& kid : *kids->as<Array>()) {
      if (auto found = name_tree_lookup(kid, key, depth + 1)) return found;
    }
  }
  return std::nullopt;
}

std::optional<Object> Document::named_dest(const std::string& name) const {
  if (const Dict* dests = lookup_dict(*root_, "Dests")) {
    if (const Object* d = lookup(*dests, name)) return *d;
  }
  if (const Dict* names = lookup_dict(*root_, "Names")) {
    if (const Object* tree = names->find("Dests")) return name_tree_lookup(*tree, name, 0);
  }
  return std::nullopt;
}

std::optional<int> Document::resolve_dest(const Object& dest_ref, int depth) const {
  if (depth > 8) return std::nullopt;
  const Object& dest = resolve(dest_ref);
  if (const auto* arr = dest.as<Array>()) {
    if (arr->empty()) return std::nullopt;
    if (const auto* r = arr->front().as<Ref>()) {
      for (std::size_t i = 0; i < pages_.size(); ++i) {
        if (pages_[i].object_number == r->num) return static_cast<int>(i) + 1;
      }
      return std::nullopt;
    }
    if (const auto* i = arr->front().as<std::int64_t>()) {
      if (*i >= 0 && static_cast<std::size_t>(*i) < pages_.size()) return static_cast<int>(*i) + 1;
    }
    return std::nullopt;
  }
  if (const auto* d = dest.as<Dict>()) {
    if (const Object* inner = d->find("D")) return resolve_dest(*inner, depth + 1);
    return std::nullopt;
  }
  std::string key;
  if (const auto* s = dest.as<String>()) key = s->bytes;
  if (const auto* n = dest.as<Name>()) key = n->value;
  if (key.empty()) return std::nullopt;
  if (auto target = named_dest(key)) return resolve_dest(*target, depth + 1);
  return std::nullopt;
}

std::vector<OutlineEntry> Document::read_outline() {
  std::vector<OutlineEntry> out;
  const Dict* outlines = lookup_dict(*root_, "Outlines");
  if (outlines == nullptr) return out;
  const Object* item_ref = outlines->find("First");
  std::set<const Dict*> seen;
  while (item_ref != nullptr) {
    const Dict* item = resolve(*item_ref).dict();
    if (item == nullptr || !seen.insert(item).second || seen.size() > 10000) break;
    std::string title;
    if (const Object* t = lookup(*item, "Title"); t && t->as<String>()) title = decode_text_string(t->as<String>()->bytes);
    std::optional<int> page;
    if (const Object* dest = item->find("Dest")) {
      page = resolve_dest(*dest);
    } else if (const Dict* action = lookup_dict(*item, "A")) {
      const Object* s = lookup(*action, "S");
      if (s && s->is_name("GoTo")) {
        if (const Object* d = action->find("D")) page = resolve_dest(*d);
      }
    }
    const std::string label = unicode::collapse_whitespace(title);
    if (page && !label.empty()) out.push_back({label, *page});
    item_ref = item->find("Next");
  }
  return out;
}

ParsedPdf Document::parse() {
  if (bytes_.empty()) malformed("empty input");
  const std::size_t header = bytes_.substr(0, std::min<std::size_t>(bytes_.size(), 1024)).find("%PDF-");
  if (header == std::string_view::npos) malformed("missing %PDF header");

  scan_objects();
  if (objects_.empty()) malformed("no objects found");
  load_object_streams();
  find_trailer();

  const Object* pages_root = root_->find("Pages");
  if (pages_root == nullptr) malformed("catalog has no page tree");
  std::set<int> visited;
  collect_pages(*pages_root, nullptr, visited, 0);
  if (pages_.empty()) malformed("document has no pages");

  ParsedPdf result;
  result.pages.reserve(pages_.size());
  for (const auto& page : pages_) result.pages.push_back(extract_page(*page.dict, page.resources));
  result.outline = read_outline();
  if (const Object* info_ref = trailer_.find("Info")) {
    if (const Dict* info = resolve(*info_ref).dict()) {
      if (const Object* t = lookup(*info, "Title"); t && t->as<String>()) {
        result.title = unicode::collapse_whitespace(decode_text_string(t->as<String>()->bytes));
      }
    }
  }
  return result;
}

}  // namespace

ParsedPdf read(std::string_view bytes) {
  Document doc(bytes);
  return doc.parse();
}

}  // namespace textbook::pdf
