#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "bm25_oracle.hpp"
#include "support.hpp"
#include "textbook/error.hpp"
#include "textbook/retrieval.hpp"
#include "textbook/unicode.hpp"

namespace textbook {
namespace {

std::vector<Chunk> make_chunks(const std::vector<std::string>& texts) {
  std::vector<Chunk> chunks;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Chunk c;
    c.id = ChunkId(static_cast<std::uint32_t>(i));
    c.doc_id = "d";
    c.text = unicode::decode_utf8(texts[i]);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<std::string> random_corpus(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::string> corpus;
  std::uniform_int_distribution<std::size_t> len(3, 60);
  for (std::size_t i = 0; i < n; ++i) corpus.push_back(testing::random_prose(rng, len(rng)));
  return corpus;
}

std::string random_query(std::mt19937_64& rng) {
  const auto& vocab = testing::vocabulary();
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> words(1, 5);
  std::string q;
  for (int i = words(rng); i > 0; --i) q += vocab[pick(rng)] + " ";
  if (rng() % 5 == 0) q += "unseenword";
  return q;
}

const std::vector<std::string> kAnimals = {"cats chase mice", "dogs chase cats", "mice eat cheese"};

TEST(BuildIndex, CountsTheSmallCorpus) {
  const IndexStats stats = build_index(make_chunks(kAnimals));
  EXPECT_EQ(stats.doc_count, 3u);
  EXPECT_EQ(stats.doc_freq.at("chase"), 2u);
  EXPECT_EQ(stats.doc_freq.at("cheese"), 1u);
  EXPECT_DOUBLE_EQ(stats.avg_doc_len, 3.0);
}

TEST(BuildIndex, RepeatedTermInOneChunk) {
  const IndexStats stats = build_index(make_chunks({"a a a"}));
  EXPECT_EQ(stats.term_freq.at(0).terms.at("a"), 3u);
  EXPECT_EQ(stats.doc_freq.at("a"), 1u);
}

TEST(BuildIndex, EmptyCorpusIsAnError) {
  try {
    build_index({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_corpus);
  }
}

TEST(BuildIndex, DocFreqMatchesBruteForceRecount) {
  std::mt19937_64 rng(21);
  const auto corpus = random_corpus(rng, 100);
  const IndexStats stats = build_index(make_chunks(corpus));
  std::map<std::string, std::uint32_t> expected;
  double total = 0;
  for (const auto& text : corpus) {
    const auto tokens = testing::ascii_tokens(text);
    total += static_cast<double>(tokens.size());
    for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) ++expected[t];
  }
  EXPECT_EQ(stats.doc_freq, expected);
  EXPECT_DOUBLE_EQ(stats.avg_doc_len, total / 100.0);
  for (const auto& [term, df] : stats.doc_freq) {
    EXPECT_GE(df, 1u);
    EXPECT_LE(df, stats.doc_count);
  }
}

TEST(Search, TiesBreakByChunkId) {
  const Bm25Index index(build_index(make_chunks(kAnimals)));
  const auto hits = index.search("cats", 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].chunk_id, ChunkId(0));
  EXPECT_EQ(hits[1].chunk_id, ChunkId(1));
  EXPECT_EQ(hits[0].score, hits[1].score);
  EXPECT_EQ(hits[0].rank, 1);
  EXPECT_EQ(hits[1].rank, 2);
}

TEST(Search, ZeroScoresAreExcluded) {
  const Bm25Index index(build_index(make_chunks(kAnimals)));
  EXPECT_TRUE(index.search("zebra", 5).empty());
  EXPECT_TRUE(index.search("", 5).empty());
  EXPECT_EQ(index.search("cheese", 10).size(), 1u);
}

TEST(Search, HandComputedScore) {
  const Bm25Index index(build_index(make_chunks(kAnimals)));
  // df(cheese)=1, N=3, every chunk has length 3 = avg, tf=1.
  const double idf = std::log(1 + (3 - 1 + 0.5) / (1 + 0.5));
  const double expected = idf * (1 * 2.2) / (1 + 1.2);
  const auto hits = index.search("cheese", 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_NEAR(hits[0].score, expected, 1e-12);
}

TEST(Search, UnbuiltIndexAndZeroK) {
  const Bm25Index empty;
  try {
    empty.search("x", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::index_not_built);
  }
  const Bm25Index index(build_index(make_chunks(kAnimals)));
  EXPECT_THROW(index.search("cats", 0), Error);
}

TEST(Search, MatchesFullScanOracle) {
  std::mt19937_64 rng(1234);
  const auto corpus = random_corpus(rng, 200);
  const Bm25Index index(build_index(make_chunks(corpus)));
  for (int q = 0; q < 50; ++q) {
    const std::string query = random_query(rng);
    const auto got = index.search(query, 10);
    const auto want = testing::oracle_search(corpus, query, 10);
    ASSERT_EQ(got.size(), want.size()) << query;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].chunk_id.ordinal(), want[i].chunk) << query << " rank " << i + 1;
      EXPECT_LE(std::abs(got[i].score - want[i].score), 1e-9 * std::abs(want[i].score)) << query;
    }
  }
}

TEST(Search, NovelChunkKeepsRankedIds) {
  // Holds exactly when the new chunk leaves avg_doc_len alone: every score of
  // a one-term query then scales by the same IDF ratio. With mixed lengths or
  // several terms the shifts differ per chunk and the order can change.
  std::mt19937_64 rng(77);
  std::vector<std::string> corpus;
  for (int i = 0; i < 60; ++i) corpus.push_back(testing::random_prose(rng, 20));
  const Bm25Index before(build_index(make_chunks(corpus)));
  std::string novel;
  for (int i = 0; i < 20; ++i) novel += "novel" + std::string(1, static_cast<char>('a' + i)) + " ";
  corpus.push_back(novel);
  const Bm25Index after(build_index(make_chunks(corpus)));
  EXPECT_EQ(before.stats().avg_doc_len, after.stats().avg_doc_len);
  for (const auto& term : testing::vocabulary()) {
    const auto a = before.search(term, 10);
    const auto b = after.search(term, 10);
    ASSERT_EQ(a.size(), b.size()) << term;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].chunk_id, b[i].chunk_id) << term;
  }
}

TEST(Search, DuplicatingAQueryTermNeverLowersScores) {
  std::mt19937_64 rng(5);
  const auto corpus = random_corpus(rng, 80);
  const Bm25Index index(build_index(make_chunks(corpus)));
  for (int q = 0; q < 30; ++q) {
    const std::string query = random_query(rng);
    const std::string doubled = query + " " + testing::ascii_tokens(query).front();
    std::map<std::uint32_t, double> base;
    for (const auto& h : index.search(query, corpus.size())) base[h.chunk_id.ordinal()] = h.score;
    std::map<std::uint32_t, double> more;
    for (const auto& h : index.search(doubled, corpus.size())) more[h.chunk_id.ordinal()] = h.score;
    for (const auto& [id, score] : base) EXPECT_GE(more[id], score);
  }
}

}  // namespace
}  // namespace textbook
