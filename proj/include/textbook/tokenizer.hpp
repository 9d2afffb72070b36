#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace textbook {

struct CharInterval {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  friend bool operator==(const CharInterval&, const CharInterval&) = default;
};

struct Token {
  std::string text;  // lowercased, UTF-8
  CharInterval span;  // in scalar values of the source text
};

using TokenStream = std::vector<Token>;

// Maximal runs of Unicode alphanumerics, lowercased. Everything else
// separates tokens. No stemming, no stopwords.
TokenStream tokenize(std::u32string_view text);
TokenStream tokenize(std::string_view utf8);

}  // namespace textbook
