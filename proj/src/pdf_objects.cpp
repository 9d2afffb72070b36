#include "pdf_objects.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>

namespace textbook::pdf::detail {

const Object* Dict::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::optional<double> Object::number() const {
  if (const auto* i = as<std::int64_t>()) return static_cast<double>(*i);
  if (const auto* r = as<double>()) return *r;
  return std::nullopt;
}

const Dict* Object::dict() const {
  if (const auto* d = as<Dict>()) return d;
  if (const auto* s = as<std::shared_ptr<const Stream>>()) return &(*s)->dict;
  return nullptr;
}

const Stream* Object::stream() const {
  if (const auto* s = as<std::shared_ptr<const Stream>>()) return s->get();
  return nullptr;
}

bool Object::is_name(std::string_view n) const {
  const auto* nm = as<Name>();
  return nm != nullptr && nm->value == n;
}

bool is_whitespace(char c) noexcept {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
}

bool is_delimiter(char c) noexcept {
  switch (c) {
    case '(':
    case ')':
    case '<':
    case '>':
    case '[':
    case ']':
    case '{':
    case '}':
    case '/':
    case '%':
      return true;
    default:
      return false;
  }
}

namespace {

int hex_value(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

void Lexer::skip_whitespace() {
  while (pos_ < data_.size()) {
    const char c = data_[pos_];
    if (is_whitespace(c)) {
      ++pos_;
    } else if (c == '%') {
      while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
    } else {
      break;
    }
  }
}

std::string Lexer::read_literal_string() {
  // pos_ is just past the opening parenthesis.
  std::string out;
  int depth = 1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '(') {
      ++depth;
      out.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) break;
      out.push_back(c);
    } else if (c == '\\') {
      if (pos_ >= data_.size()) break;
      c = data_[pos_++];
      switch (c) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case '\r':
          if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
          break;
        case '\n':
          break;
        default:
          if (c >= '0' && c <= '7') {
            int value = c - '0';
            for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++k) {
              value = value * 8 + (data_[pos_++] - '0');
            }
            out.push_back(static_cast<char>(value & 0xFF));
          } else {
            out.push_back(c);
          }
      }
    } else if (c == '\r') {
      // End-of-line in a literal string is always a single newline.
      if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
      out.push_back('\n');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string Lexer::read_hex_string() {
  std::string out;
  int hi = -1;
  while (pos_ < data_.size()) {
    const char c = data_[pos_++];
    if (c == '>') break;
    const int v = hex_value(c);
    if (v < 0) continue;
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<char>(hi << 4));
  return out;
}

std::string Lexer::read_name() {
  std::string out;
  while (pos_ < data_.size()) {
    const char c = data_[pos_];
    if (is_whitespace(c) || is_delimiter(c)) break;
    ++pos_;
    if (c == '#' && pos_ + 1 < data_.size()) {
      const int h = hex_value(data_[pos_]);
      const int l = hex_value(data_[pos_ + 1]);
      if (h >= 0 && l >= 0) {
        out.push_back(static_cast<char>((h << 4) | l));
        pos_ += 2;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

Token Lexer::next() {
  skip_whitespace();
  Token tok;
  if (pos_ >= data_.size()) return tok;
  const char c = data_[pos_];
  switch (c) {
    case '[':
      ++pos_;
      tok.kind = TokenKind::array_open;
      return tok;
    case ']':
      ++pos_;
      tok.kind = TokenKind::array_close;
      return tok;
    case '(':
      ++pos_;
      tok.kind = TokenKind::string;
      tok.text = read_literal_string();
      return tok;
    case '/':
      ++pos_;
      tok.kind = TokenKind::name;
      tok.text = read_name();
      return tok;
    case '<':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
        pos_ += 2;
        tok.kind = TokenKind::dict_open;
        return tok;
      }
      ++pos_;
      tok.kind = TokenKind::string;
      tok.text = read_hex_string();
      return tok;
    case '>':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
        pos_ += 2;
        tok.kind = TokenKind::dict_close;
        return tok;
      }
      ++pos_;
      tok.kind = TokenKind::keyword;
      tok.text = ">";
      return tok;
    case '{':
    case '}':
    case ')':
      ++pos_;
      tok.kind = TokenKind::keyword;
      tok.text = std::string(1, c);
      return tok;
    default:
      break;
  }

  const std::size_t start = pos_;
  while (pos_ < data_.size() && !is_whitespace(data_[pos_]) && !is_delimiter(data_[pos_])) ++pos_;
  const std::string_view word = data_.substr(start, pos_ - start);

  const bool numeric_start = (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
  if (numeric_start) {
    bool is_real = false;
    bool valid = true;
    for (std::size_t i = 0; i < word.size(); ++i) {
      const char w = word[i];
      if (w == '.') {
        is_real = true;
      } else if ((w == '+' || w == '-') && i == 0) {
      } else if (w < '0' || w > '9') {
        valid = false;
      }
    }
    if (valid) {
      std::string_view digits = word;
      if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
      if (is_real) {
        tok.kind = TokenKind::real;
        tok.real = std::strtod(std::string(digits).c_str(), nullptr);
        return tok;
      }
      tok.kind = TokenKind::integer;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), tok.integer);
      if (ec != std::errc()) {
        tok.kind = TokenKind::real;
        tok.real = std::strtod(std::string(digits).c_str(), nullptr);
      }
      return tok;
    }
  }
  tok.kind = TokenKind::keyword;
  tok.text = std::string(word);
  if (tok.text.empty()) {
    // Stray byte that is neither token nor delimiter we understand.
    ++pos_;
    tok.text = std::string(1, c);
  }
  return tok;
}

Token Lexer::peek() {
  const std::size_t saved = pos_;
  Token tok = next();
  pos_ = saved;
  return tok;
}

Object Parser::parse(std::string* keyword, int depth) { return from_token(lexer_.next(), keyword, depth); }

Object Parser::from_token(Token tok, std::string* keyword, int depth) {
  constexpr int kMaxDepth = 64;
  switch (tok.kind) {
    case TokenKind::end:
      if (keyword) keyword->clear();
      return {};
    case TokenKind::integer: {
      // "num gen R" is an indirect reference.
      const std::size_t saved = lexer_.pos();
      const Token gen = lexer_.next();
      if (gen.kind == TokenKind::integer) {
        const Token r = lexer_.next();
        if (r.kind == TokenKind::keyword && r.text == "R") {
          return Object{Ref{static_cast<int>(tok.integer), static_cast<int>(gen.integer)}};
        }
      }
      lexer_.seek(saved);
      return Object{tok.integer};
    }
    case TokenKind::real:
      return Object{tok.real};
    case TokenKind::name:
      return Object{Name{std::move(tok.text)}};
    case TokenKind::string:
      return Object{String{std::move(tok.text)}};
    case TokenKind::array_open: {
      Array arr;
      if (depth > kMaxDepth) return Object{std::move(arr)};
      while (true) {
        Token t = lexer_.next();
        if (t.kind == TokenKind::array_close || t.kind == TokenKind::end) break;
        std::string kw;
        Object o = from_token(std::move(t), &kw, depth + 1);
        if (!kw.empty()) continue;
        arr.push_back(std::move(o));
      }
      return Object{std::move(arr)};
    }
    case TokenKind::dict_open: {
      Dict dict;
      if (depth > kMaxDepth) return Object{std::move(dict)};
      while (true) {
        Token key = lexer_.next();
        if (key.kind == TokenKind::dict_close || key.kind == TokenKind::end) break;
        if (key.kind != TokenKind::name) continue;
        Token vt = lexer_.next();
        if (vt.kind == TokenKind::dict_close) {
          dict.entries.emplace_back(std::move(key.text), Object{});
          break;
        }
        std::string kw;
        Object value = from_token(std::move(vt), &kw, depth + 1);
        dict.entries.emplace_back(std::move(key.text), std::move(value));
      }
      return Object{std::move(dict)};
    }
    case TokenKind::array_close:
    case TokenKind::dict_close:
      if (keyword) *keyword = tok.kind == TokenKind::array_close ? "]" : ">>";
      return {};
    case TokenKind::keyword:
      if (tok.text == "true") return Object{true};
      if (tok.text == "false") return Object{false};
      if (tok.text == "null") return {};
      if (keyword) *keyword = std::move(tok.text);
      return {};
  }
  return {};
}

std::optional<std::string> inflate(std::string_view data) {
  for (int window_bits : {15 + 32, -15}) {
    z_stream zs{};
    if (inflateInit2(&zs, window_bits) != Z_OK) return std::nullopt;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    std::string out;
    char buffer[64 * 1024];
    int rc = Z_OK;
    while (rc == Z_OK) {
      zs.next_out = reinterpret_cast<Bytef*>(buffer);
      zs.avail_out = sizeof(buffer);
      rc = ::inflate(&zs, Z_NO_FLUSH);
      out.append(buffer, sizeof(buffer) - zs.avail_out);
      if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;
    }
    inflateEnd(&zs);
    // Truncated streams are common in the wild; keep whatever decoded.
    if (rc == Z_STREAM_END || !out.empty()) return out;
  }
  return std::nullopt;
}

namespace {

std::optional<std::string> ascii_hex_decode(std::string_view data) {
  std::string out;
  int hi = -1;
  for (char c : data) {
    if (c == '>') break;
    const int v = hex_value(c);
    if (v < 0) continue;
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<char>(hi << 4));
  return out;
}

std::optional<std::string> ascii85_decode(std::string_view data) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  std::size_t i = 0;
  if (data.substr(0, 2) == "<~") i = 2;
  for (; i < data.size(); ++i) {
    const char c = data[i];
    if (c == '~') break;
    if (is_whitespace(c)) continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') return std::nullopt;
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int s = 3; s >= 0; --s) out.push_back(static_cast<char>((tuple >> (8 * s)) & 0xFF));
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int s = 3; s >= 5 - count; --s) out.push_back(static_cast<char>((tuple >> (8 * s)) & 0xFF));
  }
  return out;
}

// PNG row predictors (Predictor >= 10) as used by compressed xref/object streams.
std::optional<std::string> png_unpredict(const std::string& data, int columns, int colors, int bpc) {
  const int bpp = std::max(1, colors * bpc / 8);
  const std::size_t row_len = static_cast<std::size_t>((columns * colors * bpc + 7) / 8);
  std::string out;
  std::string prev(row_len, '\0');
  std::size_t pos = 0;
  while (pos + 1 + row_len <= data.size()) {
    const int type = static_cast<unsigned char>(data[pos]);
    std::string row = data.substr(pos + 1, row_len);
    for (std::size_t i = 0; i < row_len; ++i) {
      const int left = i >= static_cast<std::size_t>(bpp) ? static_cast<unsigned char>(row[i - bpp]) : 0;
      const int up = static_cast<unsigned char>(prev[i]);
      const int up_left = i >= static_cast<std::size_t>(bpp) ? static_cast<unsigned char>(prev[i - bpp]) : 0;
      int value = static_cast<unsigned char>(row[i]);
      switch (type) {
        case 1: value += left; break;
        case 2: value += up; break;
        case 3: value += (left + up) / 2; break;
        case 4: {
          const int p = left + up - up_left;
          const int pa = std::abs(p - left);
          const int pb = std::abs(p - up);
          const int pc = std::abs(p - up_left);
          value += (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : up_left);
          break;
        }
        default: break;
      }
      row[i] = static_cast<char>(value & 0xFF);
    }
    out += row;
    prev = std::move(row);
    pos += 1 + row_len;
  }
  return out;
}

}  // namespace

std::optional<std::string> decode_stream(const Stream& stream) {
  std::vector<std::string> filters;
  std::vector<const Dict*> params;
  if (const Object* f = stream.dict.find("Filter")) {
    if (const auto* n = f->as<Name>()) {
      filters.push_back(n->value);
    } else if (const auto* arr = f->as<Array>()) {
      for (const auto& o : *arr) {
        if (const auto* nn = o.as<Name>()) filters.push_back(nn->value);
      }
    }
  }
  if (const Object* p = stream.dict.find("DecodeParms")) {
    if (const auto* d = p->as<Dict>()) {
      params.push_back(d);
    } else if (const auto* arr = p->as<Array>()) {
      for (const auto& o : *arr) params.push_back(o.as<Dict>());
    }
  }

  std::string data = stream.raw;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const std::string& f = filters[i];
    std::optional<std::string> decoded;
    if (f == "FlateDecode" || f == "Fl") {
      decoded = inflate(data);
      const Dict* dp = i < params.size() ? params[i] : nullptr;
      if (decoded && dp != nullptr) {
        const auto get = [&](const char* key, int fallback) {
          const Object* o = dp->find(key);
          const auto v = o ? o->number() : std::nullopt;
          return v ? static_cast<int>(*v) : fallback;
        };
        if (get("Predictor", 1) >= 10) {
          decoded = png_unpredict(*decoded, get("Columns", 1), get("Colors", 1), get("BitsPerComponent", 8));
        }
      }
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      decoded = ascii_hex_decode(data);
    } else if (f == "ASCII85Decode" || f == "A85") {
      decoded = ascii85_decode(data);
    } else {
      return std::nullopt;
    }
    if (!decoded) return std::nullopt;
    data = std::move(*decoded);
  }
  return data;
}

}  // namespace textbook::pdf::detail
