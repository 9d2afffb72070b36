#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "textbook/error.hpp"
#include "textbook/ingest.hpp"
#include "textbook/unicode.hpp"

namespace textbook {
namespace {

ExtractedDocument doc_from(const std::vector<std::u32string>& pages) {
  ExtractedDocument doc;
  doc.doc_id = "0123456789abcdef";
  for (std::size_t i = 0; i < pages.size(); ++i) doc.pages.push_back({static_cast<int>(i + 1), pages[i]});
  return doc;
}

std::u32string random_chars(std::mt19937_64& rng, std::size_t n) {
  const std::u32string alphabet = U"abcdefghij klmnop\nqrstuvwxyzé中.";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::u32string out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(alphabet[pick(rng)]);
  return out;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::io_error;
}

TEST(Extract, SecondPageHelloWorld) {
  const std::string bytes = testing::make_pdf({{"Page one text."}, {"Hello world"}, {"Third."}});
  const ExtractedDocument doc = extract(bytes);
  ASSERT_EQ(doc.pages.size(), 3u);
  EXPECT_EQ(doc.pages[1].text, U"Hello world");
  EXPECT_EQ(doc.pages[1].char_count(), 11u);
  EXPECT_EQ(doc.pages[1].page_number, 2);
}

TEST(Extract, EmptyInputIsMalformed) {
  EXPECT_EQ(code_of([] { extract(""); }), Errc::malformed_pdf);
}

TEST(Extract, BlankPagesMeanNoTextLayer) {
  EXPECT_EQ(code_of([] { extract(testing::make_pdf({{}, {}})); }), Errc::no_text_layer);
}

TEST(Extract, RoundTripsGeneratedSourceText) {
  std::mt19937_64 rng(11);
  std::string source = testing::random_prose(rng, 400);
  source.resize(2000);
  const ExtractedDocument doc = extract(testing::make_pdf(pdf::layout_text(source, 70, 12)));
  EXPECT_GE(doc.pages.size(), 2u);
  std::string joined;
  for (const auto& p : doc.pages) joined += unicode::encode_utf8(p.text) + "\n";
  EXPECT_EQ(unicode::collapse_whitespace(std::string_view(joined)), unicode::collapse_whitespace(std::string_view(source)));
}

TEST(Extract, DeterministicApartFromTimestamp) {
  const std::string bytes = testing::make_pdf({{"one two"}, {"three"}}, {{"Start", 1}});
  ExtractedDocument a = extract(bytes);
  ExtractedDocument b = extract(bytes);
  EXPECT_EQ(a.doc_id, b.doc_id);
  EXPECT_EQ(a.title, b.title);
  EXPECT_EQ(a.section_map, b.section_map);
  ASSERT_EQ(a.pages.size(), b.pages.size());
  for (std::size_t i = 0; i < a.pages.size(); ++i) EXPECT_EQ(a.pages[i].text, b.pages[i].text);
}

TEST(Extract, SectionsDefaultToPages) {
  const ExtractedDocument doc = extract(testing::make_pdf({{"a"}, {"b"}}));
  ASSERT_EQ(doc.section_map.size(), 2u);
  EXPECT_EQ(doc.section_map[0], (SectionRange{"Page 1", 1, 1}));
  EXPECT_EQ(doc.section_map[1], (SectionRange{"Page 2", 2, 2}));
}

TEST(Extract, SectionsFollowTopLevelBookmarks) {
  const ExtractedDocument doc =
      extract(testing::make_pdf({{"a"}, {"b"}, {"c"}, {"d"}}, {{"Intro", 1}, {"Methods", 3}}));
  ASSERT_EQ(doc.section_map.size(), 2u);
  EXPECT_EQ(doc.section_map[0], (SectionRange{"Intro", 1, 2}));
  EXPECT_EQ(doc.section_map[1], (SectionRange{"Methods", 3, 4}));
}

TEST(Chunk, StrideRuleOnSinglePage) {
  const auto doc = doc_from({std::u32string(1000, U'x')});
  const auto chunks = chunk(doc, 400, 100);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].span, (DocSpan{1, 0, 1, 400}));
  EXPECT_EQ(chunks[1].span, (DocSpan{1, 300, 1, 700}));
  EXPECT_EQ(chunks[2].span, (DocSpan{1, 600, 1, 1000}));
  EXPECT_EQ(chunks[2].id.str(), "c2");
}

TEST(Chunk, ShortTextGivesOneChunk) {
  const auto doc = doc_from({std::u32string(50, U'y')});
  const auto chunks = chunk(doc, 400, 100);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].span, (DocSpan{1, 0, 1, 50}));
}

TEST(Chunk, RejectsBadParametersAndEmptyDocuments) {
  const auto doc = doc_from({U"abc"});
  EXPECT_EQ(code_of([&] { chunk(doc, 100, 100); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { chunk(doc, 0, 0); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { chunk(doc_from({U""}), 100, 10); }), Errc::empty_document);
}

TEST(Chunk, NonOverlappingPrefixesReconstructText) {
  std::mt19937_64 rng(3);
  const auto doc = doc_from({random_chars(rng, 10000)});
  const std::size_t size = 512, overlap = 128, stride = size - overlap;
  const auto chunks = chunk(doc, size, overlap);
  std::u32string rebuilt;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& t = chunks[i].text;
    rebuilt += i + 1 < chunks.size() ? t.substr(0, stride) : t;
  }
  EXPECT_EQ(rebuilt, doc.pages[0].text);
}

TEST(Chunk, SpansRoundTripAndOverlapAcrossPages) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::u32string> pages;
    std::uniform_int_distribution<std::size_t> len(0, 900);
    const int page_count = 1 + trial % 6;
    for (int p = 0; p < page_count; ++p) pages.push_back(random_chars(rng, len(rng)));
    pages.back() += U"end";
    const auto doc = doc_from(pages);
    const TextLayout layout(doc);
    std::uniform_int_distribution<std::size_t> size_pick(20, 700);
    const std::size_t size = size_pick(rng);
    const std::size_t overlap = std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
    const auto chunks = chunk(doc, size, overlap);

    std::vector<bool> covered(layout.size(), false);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const Chunk& c = chunks[i];
      EXPECT_EQ(slice(doc, c.span), c.text);
      const std::size_t begin = layout.to_global({c.span.start_page, c.span.start_offset});
      const std::size_t end = layout.to_global({c.span.end_page, c.span.end_offset});
      EXPECT_EQ(begin, i * (size - overlap));
      EXPECT_EQ(layout.text().substr(begin, end - begin), c.text);
      for (std::size_t g = begin; g < end; ++g) covered[g] = true;
      if (i + 1 < chunks.size()) {
        EXPECT_EQ(c.text.size(), size);
        const std::size_t next = layout.to_global({chunks[i + 1].span.start_page, chunks[i + 1].span.start_offset});
        EXPECT_EQ(end - next, overlap);
      } else {
        EXPECT_EQ(end, layout.size());
      }
    }
    EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }));
  }
}

TEST(Layout, PositionsMapBothWays) {
  const auto doc = doc_from({U"abc", U"", U"de"});
  const TextLayout layout(doc);
  EXPECT_EQ(layout.text(), U"abc\n\nde");
  EXPECT_EQ(layout.to_position(0), (DocPosition{1, 0}));
  EXPECT_EQ(layout.to_position(3), (DocPosition{1, 3}));
  EXPECT_EQ(layout.to_position(5), (DocPosition{3, 0}));
  EXPECT_EQ(layout.to_position(7), (DocPosition{3, 2}));
  for (std::size_t g = 0; g <= layout.size(); ++g) {
    const DocPosition pos = layout.to_position(g);
    EXPECT_LE(pos.offset, layout.page_length(pos.page));
    EXPECT_EQ(layout.to_global(pos), g);
  }
}

TEST(ChunkIdTest, ParsesItsOwnFormat) {
  EXPECT_EQ(ChunkId::parse("c42"), ChunkId(42));
  EXPECT_FALSE(ChunkId::parse("42").has_value());
  EXPECT_FALSE(ChunkId::parse("c").has_value());
  EXPECT_FALSE(ChunkId::parse("c4x").has_value());
}

}  // namespace
}  // namespace textbook
