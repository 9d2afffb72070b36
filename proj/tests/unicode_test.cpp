#include <gtest/gtest.h>

#include <random>

#include "textbook/tokenizer.hpp"
#include "textbook/unicode.hpp"

namespace textbook {
namespace {

std::vector<std::string> texts(const TokenStream& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

TEST(Utf8, RoundTripsAllPlanes) {
  const std::u32string text = U"aé中\U0001F600z";
  const std::string utf8 = unicode::encode_utf8(text);
  EXPECT_EQ(utf8.size(), 1u + 2u + 3u + 4u + 1u);
  EXPECT_EQ(unicode::decode_utf8(utf8), text);
  EXPECT_EQ(unicode::length(utf8), 5u);
}

TEST(Utf8, InvalidBytesBecomeReplacementCharacters) {
  const std::u32string decoded = unicode::decode_utf8("a\xff" "b\xc3");
  EXPECT_EQ(decoded, U"a�b�");
}

TEST(Tokenizer, SplitsOnNonAlphanumerics) {
  const TokenStream tokens = tokenize(std::string_view("The Diamond Age!"));
  EXPECT_EQ(texts(tokens), (std::vector<std::string>{"the", "diamond", "age"}));
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[0].span, (CharInterval{0, 3}));
  EXPECT_EQ(tokens[1].span, (CharInterval{4, 11}));
  EXPECT_EQ(tokens[2].span, (CharInterval{12, 15}));
}

TEST(Tokenizer, EmptyText) { EXPECT_TRUE(tokenize(std::string_view("")).empty()); }

TEST(Tokenizer, HyphenSeparates) {
  EXPECT_EQ(texts(tokenize(std::string_view("GPT-4o"))), (std::vector<std::string>{"gpt", "4o"}));
}

TEST(Tokenizer, SpansCountScalarValuesNotBytes) {
  const TokenStream tokens = tokenize(std::string_view("Café Über naïve"));
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[0].text, "café");
  EXPECT_EQ(tokens[1].text, "über");
  EXPECT_EQ(tokens[1].span, (CharInterval{5, 9}));
  EXPECT_EQ(tokens[2].span, (CharInterval{10, 15}));
}

TEST(Tokenizer, SpansAreIncreasingAndCoverExactlyTheAlphanumerics) {
  std::mt19937_64 rng(7);
  const std::u32string alphabet = U"ab Z9é-\n.,中\t";
  for (int trial = 0; trial < 200; ++trial) {
    std::u32string text;
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int i = 0; i < 60; ++i) text.push_back(alphabet[pick(rng)]);
    const TokenStream tokens = tokenize(std::u32string_view(text));
    std::vector<bool> covered(text.size(), false);
    std::size_t last_end = 0;
    for (const auto& t : tokens) {
      ASSERT_LT(t.span.start, t.span.end);
      ASSERT_GE(t.span.start, last_end);
      last_end = t.span.end;
      for (std::size_t i = t.span.start; i < t.span.end; ++i) covered[i] = true;
      // Maximal runs: the neighbours are separators.
      if (t.span.start > 0) {
        EXPECT_FALSE(unicode::is_alnum(text[t.span.start - 1]));
      }
      if (t.span.end < text.size()) {
        EXPECT_FALSE(unicode::is_alnum(text[t.span.end]));
      }
    }
    for (std::size_t i = 0; i < text.size(); ++i) EXPECT_EQ(covered[i], unicode::is_alnum(text[i])) << i;
  }
}

TEST(Whitespace, CollapsesRunsAndTrims) {
  EXPECT_EQ(unicode::collapse_whitespace(std::string_view("  a \n\t b  c ")), "a b c");
  EXPECT_EQ(unicode::collapse_whitespace(std::string_view("")), "");
}

TEST(Sentences, FirstSentenceNeedsTrailingSpaceOrEnd) {
  EXPECT_EQ(unicode::first_sentence("Version 2.5 is out. More later."), "Version 2.5 is out.");
  EXPECT_EQ(unicode::first_sentence("  no terminator here "), "no terminator here");
  EXPECT_EQ(unicode::first_sentence("Really?! Yes."), "Really?!");
}

TEST(Words, SplitOnAsciiWhitespace) {
  const auto words = unicode::split_words(" one\ttwo\n three ");
  ASSERT_EQ(words.size(), 3u);
  EXPECT_EQ(words[2], "three");
}

}  // namespace
}  // namespace textbook
