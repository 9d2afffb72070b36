#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "textbook/ingest.hpp"
#include "textbook/llm.hpp"

namespace textbook::quiz {

enum class Result { none, correct, incorrect };

std::string_view to_string(Result r) noexcept;
std::optional<Result> parse_result(std::string_view s) noexcept;

struct QuizConfig {
  double p0 = 1.0;
  double delta = 0.1;
  int boxes = 5;
  std::vector<double> box_weights{16, 8, 4, 2, 1};

  // Throws Error(invalid_argument).
  void validate() const;
};

struct QuizCard {
  std::string card_id;
  std::string doc_id;
  std::string section_label;
  std::string question;
  std::string answer_key;
  int box = 1;
  Result last_result = Result::none;
  std::uint32_t seen_count = 0;
  std::uint64_t created_ordinal = 0;

  friend bool operator==(const QuizCard&, const QuizCard&) = default;
};

// mt19937_64 that can be rebuilt from (seed, draws) after a reload.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0, std::uint64_t draws = 0);

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_;
  std::mt19937_64 engine_;
};

struct SectionQuizState {
  std::string doc_id;
  std::string section_label;
  int section_index = 0;
  std::vector<QuizCard> cards;
  std::uint64_t generated_count = 0;
  std::uint64_t next_ordinal = 0;
  SeededRng rng;
  QuizConfig config;
};

SectionQuizState make_state(std::string doc_id, std::string section_label, int section_index,
                            std::uint64_t rng_seed, QuizConfig config = {});

double p_novel(const SectionQuizState& state) noexcept;

// Inverse-CDF pick over cards ordered by (box, seen_count, created_ordinal),
// each weighted by box_weights[box - 1]. `u` is in [0, 1).
const QuizCard& sample_existing(const SectionQuizState& state, double u);

struct ParsedPair {
  std::string question;
  std::string answer;
};

// Splits a reply into blank-line separated "Q: ...\nA: ..." blocks. Blocks
// that do not have exactly one Q line followed by an answer are dropped.
std::vector<ParsedPair> parse_pairs(std::string_view reply);

std::string normalize_question(std::string_view question);

// Asks the gateway for m pairs over the section's chunks and adds the
// accepted, non-duplicate ones in box 1. Throws Error(generation_failed) when
// no pair parses or the gateway fails.
std::vector<QuizCard> generate_cards(SectionQuizState& state, int m, const std::vector<Chunk>& section_chunks,
                                     llm::Gateway& gateway);

// Draws u; below p_novel it generates one card, otherwise it samples the
// pool. A failed generation falls back to the pool when the pool has cards.
QuizCard next_card(SectionQuizState& state, const std::vector<Chunk>& section_chunks, llm::Gateway& gateway);

// Throws Error(unknown_card), or Error(invalid_argument) for Result::none.
QuizCard record_answer(SectionQuizState& state, std::string_view card_id, Result result);

std::string to_json(const SectionQuizState& state);
SectionQuizState state_from_json(std::string_view text);

}  // namespace textbook::quiz
