#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Text is stored as UTF-8 at the edges (JSON, HTTP, files) and as UTF-32 where
// offsets matter: every span in the system counts Unicode scalar values.
namespace textbook::unicode {

// Invalid sequences and surrogates decode to U+FFFD.
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

// Number of scalar values in a UTF-8 string.
std::size_t length(std::string_view utf8);

bool is_alnum(char32_t cp) noexcept;
bool is_space(char32_t cp) noexcept;
char32_t to_lower(char32_t cp) noexcept;
char32_t fold_case(char32_t cp) noexcept;

// Collapses every whitespace run to one space and trims both ends.
std::u32string collapse_whitespace(std::u32string_view text);
std::string collapse_whitespace(std::string_view utf8);

// Whitespace-delimited words.
std::vector<std::string_view> split_words(std::string_view text);

// Text up to and including the first '.', '!' or '?' that is followed by
// whitespace or the end of input; the whole trimmed text when none exists.
std::string first_sentence(std::string_view text);

std::string_view trim(std::string_view text) noexcept;

}  // namespace textbook::unicode
