#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace textbook::pdf::detail {

struct Object;

struct Null {};
struct Name {
  std::string value;
};
struct String {
  std::string bytes;
};
struct Ref {
  int num = 0;
  int gen = 0;
};
using Array = std::vector<Object>;

struct Dict {
  std::vector<std::pair<std::string, Object>> entries;

  const Object* find(std::string_view key) const;
};

struct Stream {
  Dict dict;
  std::string raw;
};

struct Object {
  std::variant<Null, bool, std::int64_t, double, Name, String, Array, Dict, Ref,
               std::shared_ptr<const Stream>>
      value;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&value);
  }
  bool is_null() const { return std::holds_alternative<Null>(value); }
  std::optional<double> number() const;
  const Dict* dict() const;  // also the dictionary of a stream
  const Stream* stream() const;
  bool is_name(std::string_view n) const;
};

enum class TokenKind {
  end,
  integer,
  real,
  name,
  string,
  array_open,
  array_close,
  dict_open,
  dict_close,
  keyword,
};

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;  // decoded string bytes, name, or keyword
  std::int64_t integer = 0;
  double real = 0.0;
};

bool is_whitespace(char c) noexcept;
bool is_delimiter(char c) noexcept;

class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  Token next();
  Token peek();
  std::size_t pos() const noexcept { return pos_; }
  void seek(std::size_t pos) noexcept { pos_ = pos; }
  std::string_view data() const noexcept { return data_; }
  void skip_whitespace();

 private:
  std::string read_literal_string();
  std::string read_hex_string();
  std::string read_name();

  std::string_view data_;
  std::size_t pos_;
};

// Parses one object from the lexer. Keywords other than true/false/null are
// returned through `keyword` when non-null and yield a Null object.
class Parser {
 public:
  explicit Parser(Lexer& lexer) : lexer_(lexer) {}

  Object parse(std::string* keyword = nullptr, int depth = 0);
  Object from_token(Token tok, std::string* keyword, int depth);

 private:
  Lexer& lexer_;
};

// Applies the stream's /Filter chain. Returns nullopt for unsupported filters.
std::optional<std::string> decode_stream(const Stream& stream);

std::optional<std::string> inflate(std::string_view data);

}  // namespace textbook::pdf::detail
