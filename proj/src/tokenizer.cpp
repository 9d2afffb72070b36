#include "textbook/tokenizer.hpp"

#include "textbook/unicode.hpp"

namespace textbook {

TokenStream tokenize(std::u32string_view text) {
  TokenStream tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!unicode::is_alnum(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string lowered;
    while (i < text.size() && unicode::is_alnum(text[i])) {
      unicode::append_utf8(lowered, unicode::to_lower(text[i]));
      ++i;
    }
    tokens.push_back({std::move(lowered), {start, i}});
  }
  return tokens;
}

TokenStream tokenize(std::string_view utf8) { return tokenize(unicode::decode_utf8(utf8)); }

}  // namespace textbook
