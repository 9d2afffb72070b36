#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fake_gateway.hpp"
#include "support.hpp"
#include "textbook/error.hpp"
#include "textbook/quiz.hpp"
#include "textbook/unicode.hpp"

namespace textbook::quiz {
namespace {

using testing::FakeGateway;

QuizCard card(std::string id, int box, std::uint64_t ordinal) {
  QuizCard c;
  c.card_id = std::move(id);
  c.question = "question " + c.card_id;
  c.answer_key = "answer";
  c.box = box;
  c.created_ordinal = ordinal;
  return c;
}

std::vector<Chunk> section_chunks(std::size_t n, std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::vector<Chunk> out;
  for (std::size_t i = 0; i < n; ++i) {
    Chunk c;
    c.id = ChunkId(static_cast<std::uint32_t>(i));
    c.text = unicode::decode_utf8(testing::random_prose(rng, 60));
    out.push_back(c);
  }
  return out;
}

TEST(Leitner, ResultNames) {
  EXPECT_EQ(to_string(Result::incorrect), "incorrect");
  EXPECT_EQ(parse_result("correct"), Result::correct);
  EXPECT_FALSE(parse_result("maybe").has_value());
}

TEST(Leitner, ConfigValidation) {
  QuizConfig bad;
  bad.box_weights = {1, 2};
  EXPECT_THROW(bad.validate(), Error);
  QuizConfig negative;
  negative.delta = -0.1;
  EXPECT_THROW(negative.validate(), Error);
  EXPECT_NO_THROW(QuizConfig{}.validate());
}

TEST(Leitner, NoveltyDecaysLinearlyToZero) {
  auto s = make_state("d", "Intro", 0, 1);
  EXPECT_EQ(p_novel(s), 1.0);  // empty pool
  s.cards.push_back(card("a", 1, 0));
  s.generated_count = 3;
  EXPECT_NEAR(p_novel(s), 0.7, 1e-12);
  s.generated_count = 10;
  EXPECT_EQ(p_novel(s), 0.0);
  s.generated_count = 14;
  EXPECT_EQ(p_novel(s), 0.0);
}

TEST(Leitner, MonteCarloBoxOneVersusBoxFive) {
  QuizConfig config;
  config.p0 = 0.0;
  auto s = make_state("d", "Intro", 0, 20240601, config);
  s.cards = {card("a", 1, 0), card("b", 5, 1)};
  FakeGateway gateway;
  ASSERT_EQ(p_novel(s), 0.0);
  int a = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) a += next_card(s, {}, gateway).card_id == "a";
  EXPECT_EQ(gateway.calls(), 0);
  EXPECT_NEAR(static_cast<double>(a) / draws, 16.0 / 17.0, 0.02);
}

TEST(Leitner, FrequenciesFollowBoxWeights) {
  QuizConfig config;
  config.p0 = 0.0;
  auto s = make_state("d", "Intro", 0, 99, config);
  for (int b = 1; b <= 5; ++b) s.cards.push_back(card("box" + std::to_string(b), b, static_cast<std::uint64_t>(b)));
  FakeGateway gateway;
  std::map<std::string, int> seen;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++seen[next_card(s, {}, gateway).card_id];
  // Oracle: weight / total weight.
  const double total = 16 + 8 + 4 + 2 + 1;
  const double weights[] = {16, 8, 4, 2, 1};
  for (int b = 1; b <= 5; ++b) {
    EXPECT_NEAR(seen["box" + std::to_string(b)] / static_cast<double>(draws), weights[b - 1] / total, 0.02) << b;
  }
  EXPECT_GT(seen["box1"], seen["box5"]);
}

TEST(Leitner, InverseCdfOrder) {
  auto s = make_state("d", "Intro", 0, 1);
  // Sorted order is x (box 1, seen 0), y (box 1, seen 2), z (box 2).
  s.cards = {card("z", 2, 0), card("y", 1, 1), card("x", 1, 2)};
  s.cards[1].seen_count = 2;
  // Weights 16, 16, 8 over 40.
  EXPECT_EQ(sample_existing(s, 0.0).card_id, "x");
  EXPECT_EQ(sample_existing(s, 0.39).card_id, "x");
  EXPECT_EQ(sample_existing(s, 0.41).card_id, "y");
  EXPECT_EQ(sample_existing(s, 0.81).card_id, "z");
  EXPECT_EQ(sample_existing(s, 0.999999).card_id, "z");
}

TEST(Leitner, DecayStopsGenerationAfterTenCalls) {
  auto s = make_state("d", "Intro", 0, 7);
  const auto chunks = section_chunks(12);
  FakeGateway gateway;  // mock replies, counted
  for (int i = 0; i < 600; ++i) next_card(s, chunks, gateway);
  EXPECT_EQ(gateway.calls(), 10);
  EXPECT_EQ(s.generated_count, 10u);
  EXPECT_EQ(s.cards.size(), 10u);
  EXPECT_EQ(p_novel(s), 0.0);
  for (int i = 0; i < 1000; ++i) next_card(s, chunks, gateway);
  EXPECT_EQ(gateway.calls(), 10);
}

TEST(Leitner, DecayCallCountMatchesCeilingForOtherRates) {
  for (const double delta : {0.25, 0.3, 0.5}) {
    QuizConfig config;
    config.delta = delta;
    auto s = make_state("d", "Intro", 0, 11, config);
    int n = 0;
    FakeGateway gateway([&](const auto&) { return "Q: question " + std::to_string(n++) + "?\nA: yes"; });
    for (int i = 0; i < 2000; ++i) next_card(s, section_chunks(2), gateway);
    EXPECT_EQ(gateway.calls(), static_cast<int>(std::ceil(1.0 / delta))) << delta;
  }
}

TEST(Leitner, PerfectLearnerReachesLastBoxInFourPasses) {
  auto s = make_state("d", "Intro", 0, 5);
  FakeGateway gateway;
  generate_cards(s, 4, section_chunks(4), gateway);
  ASSERT_EQ(s.cards.size(), 4u);
  int passes = 0;
  auto all_done = [&] {
    return std::all_of(s.cards.begin(), s.cards.end(), [](const QuizCard& c) { return c.box == 5; });
  };
  while (!all_done() && passes < 10) {
    std::vector<std::string> ids;
    for (const auto& c : s.cards) ids.push_back(c.card_id);
    for (const auto& id : ids) record_answer(s, id, Result::correct);
    ++passes;
  }
  EXPECT_TRUE(all_done());
  EXPECT_LE(passes, 4);
  // Further correct answers stay in the last box.
  EXPECT_EQ(record_answer(s, s.cards[0].card_id, Result::correct).box, 5);
}

TEST(Leitner, AnswerRules) {
  auto s = make_state("d", "Intro", 0, 5);
  s.cards = {card("a", 3, 0)};
  const auto wrong = record_answer(s, "a", Result::incorrect);
  EXPECT_EQ(wrong.box, 1);
  EXPECT_EQ(wrong.seen_count, 1u);
  EXPECT_EQ(wrong.last_result, Result::incorrect);
  EXPECT_EQ(record_answer(s, "a", Result::correct).box, 2);
  try {
    record_answer(s, "nope", Result::correct);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_card);
  }
  EXPECT_THROW(record_answer(s, "a", Result::none), Error);
}

TEST(Generation, ParsesPairsAndDropsMalformedBlocks) {
  const std::string reply =
      "Q: What is a cell?\nA: The unit of life.\n\n"
      "Q: Name an organelle.\nA: Mitochondrion\nand its role.\n\n"
      "A: answer before question\nQ: backwards\n\n"
      "Q: What stores energy?\nA: Glucose.";
  const auto pairs = parse_pairs(reply);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0].question, "What is a cell?");
  EXPECT_EQ(pairs[0].answer, "The unit of life.");
  EXPECT_EQ(pairs[1].answer, "Mitochondrion and its role.");
  EXPECT_EQ(pairs[2].question, "What stores energy?");
  EXPECT_TRUE(parse_pairs("no pairs here").empty());
}

TEST(Generation, MockQuizOverTwoChunks) {
  auto s = make_state("abc", "Cells", 2, 5);
  FakeGateway gateway;
  const auto cards = generate_cards(s, 2, section_chunks(2), gateway);
  ASSERT_EQ(cards.size(), 2u);
  EXPECT_EQ(cards[0].card_id, "q-abc-2-0");
  EXPECT_EQ(cards[1].card_id, "q-abc-2-1");
  for (const auto& c : cards) {
    EXPECT_EQ(c.box, 1);
    EXPECT_EQ(c.section_label, "Cells");
    EXPECT_FALSE(c.question.empty());
    EXPECT_FALSE(c.answer_key.empty());
  }
  EXPECT_EQ(s.generated_count, 2u);
  const auto req = gateway.requests().at(0);
  EXPECT_FALSE(req.stream);
  EXPECT_NE(req.messages.back().content.find("MOCK:QUIZ 2"), std::string::npos);
}

TEST(Generation, DuplicatesAreRejected) {
  auto s = make_state("d", "Intro", 0, 5);
  FakeGateway gateway([](const auto&) { return std::string("Q: Same   question?\nA: x\n\nQ: same QUESTION?\nA: y"); });
  const auto first = generate_cards(s, 2, section_chunks(1), gateway);
  EXPECT_EQ(first.size(), 1u);
  const auto second = generate_cards(s, 2, section_chunks(1), gateway);
  EXPECT_TRUE(second.empty());
  EXPECT_EQ(s.generated_count, 1u);
  EXPECT_EQ(gateway.requests().back().messages.back().content.find("MOCK:QUIZ"), std::string::npos);
}

TEST(Generation, FailuresBecomeGenerationFailed) {
  auto s = make_state("d", "Intro", 0, 5);
  FakeGateway failing;
  failing.set_failing(true);
  try {
    next_card(s, section_chunks(2), failing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::generation_failed);
  }
  FakeGateway chatter([](const auto&) { return std::string("I would rather not."); });
  EXPECT_THROW(generate_cards(s, 1, section_chunks(2), chatter), Error);
  EXPECT_THROW(generate_cards(s, 1, {}, chatter), Error);
}

TEST(Generation, FailureFallsBackToThePool) {
  auto s = make_state("d", "Intro", 0, 5);
  s.cards = {card("a", 1, 0)};
  FakeGateway failing;
  failing.set_failing(true);
  // p_novel is 1 with no generations yet, so every draw tries the gateway.
  EXPECT_EQ(next_card(s, section_chunks(2), failing).card_id, "a");
  EXPECT_EQ(failing.calls(), 1);
}

TEST(State, JsonRoundTripKeepsRngPosition) {
  auto s = make_state("d", "Intro", 1, 77);
  FakeGateway gateway;
  const auto chunks = section_chunks(6);
  for (int i = 0; i < 5; ++i) next_card(s, chunks, gateway);
  record_answer(s, s.cards[0].card_id, Result::correct);
  const std::string text = to_json(s);
  auto copy = state_from_json(text);
  EXPECT_EQ(to_json(copy), text);
  EXPECT_EQ(copy.cards, s.cards);
  EXPECT_EQ(copy.rng.draws(), s.rng.draws());
  // Both continue with the same draws.
  FakeGateway g1, g2;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(next_card(s, chunks, g1).card_id, next_card(copy, chunks, g2).card_id);
  EXPECT_THROW(state_from_json("{"), Error);
}

TEST(State, SeededRngReplays) {
  SeededRng a(42);
  for (int i = 0; i < 17; ++i) a.uniform();
  SeededRng b(42, 17);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  SeededRng c(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace textbook::quiz
