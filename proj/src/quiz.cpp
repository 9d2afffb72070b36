#include "textbook/quiz.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "textbook/error.hpp"
#include "textbook/unicode.hpp"

namespace textbook::quiz {

namespace {

using nlohmann::json;

constexpr std::size_t kContextChunks = 4;

std::string trim_copy(std::string_view s) { return std::string(unicode::trim(s)); }

bool starts_with_label(std::string_view line, char label) {
  return line.size() >= 2 && line[0] == label && line[1] == ':';
}

std::string build_card_id(const SectionQuizState& state, std::uint64_t ordinal) {
  return "q-" + state.doc_id + "-" + std::to_string(state.section_index) + "-" + std::to_string(ordinal);
}

}  // namespace

std::string_view to_string(Result r) noexcept {
  switch (r) {
    case Result::none: return "none";
    case Result::correct: return "correct";
    case Result::incorrect: return "incorrect";
  }
  return "none";
}

std::optional<Result> parse_result(std::string_view s) noexcept {
  if (s == "none") return Result::none;
  if (s == "correct") return Result::correct;
  if (s == "incorrect") return Result::incorrect;
  return std::nullopt;
}

void QuizConfig::validate() const {
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw Error(Errc::invalid_argument, "p0 must be in [0, 1]");
  if (!(delta > 0.0)) throw Error(Errc::invalid_argument, "delta must be positive");
  if (boxes < 2) throw Error(Errc::invalid_argument, "at least two boxes are required");
  if (box_weights.size() != static_cast<std::size_t>(boxes)) {
    throw Error(Errc::invalid_argument, "box_weights must have one entry per box");
  }
  for (std::size_t i = 0; i < box_weights.size(); ++i) {
    if (!(box_weights[i] > 0.0)) throw Error(Errc::invalid_argument, "box weights must be positive");
    if (i > 0 && !(box_weights[i] < box_weights[i - 1])) {
      throw Error(Errc::invalid_argument, "box weights must be strictly decreasing");
    }
  }
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t draws) : seed_(seed), draws_(draws), engine_(seed) {
  engine_.discard(draws);
}

double SeededRng::uniform() {
  ++draws_;
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

SectionQuizState make_state(std::string doc_id, std::string section_label, int section_index,
                            std::uint64_t rng_seed, QuizConfig config) {
  config.validate();
  SectionQuizState state;
  state.doc_id = std::move(doc_id);
  state.section_label = std::move(section_label);
  state.section_index = section_index;
  state.rng = SeededRng(rng_seed);
  state.config = std::move(config);
  return state;
}

double p_novel(const SectionQuizState& state) noexcept {
  if (state.cards.empty()) return 1.0;
  return std::max(0.0, state.config.p0 - static_cast<double>(state.generated_count) * state.config.delta);
}

const QuizCard& sample_existing(const SectionQuizState& state, double u) {
  if (state.cards.empty()) throw Error(Errc::generation_failed, "no cards to sample");
  std::vector<const QuizCard*> order;
  order.reserve(state.cards.size());
  for (const auto& c : state.cards) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const QuizCard* a, const QuizCard* b) {
    return std::tie(a->box, a->seen_count, a->created_ordinal) < std::tie(b->box, b->seen_count, b->created_ordinal);
  });
  const auto weight = [&](const QuizCard* c) { return state.config.box_weights[static_cast<std::size_t>(c->box - 1)]; };
  double total = 0.0;
  for (const auto* c : order) total += weight(c);
  const double target = u * total;
  double cumulative = 0.0;
  for (const auto* c : order) {
    cumulative += weight(c);
    if (target < cumulative) return *c;
  }
  return *order.back();
}

std::vector<ParsedPair> parse_pairs(std::string_view reply) {
  // Group non-blank lines into blocks.
  std::vector<std::vector<std::string>> blocks(1);
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    std::size_t eol = reply.find('\n', pos);
    if (eol == std::string_view::npos) eol = reply.size();
    std::string line = trim_copy(reply.substr(pos, eol - pos));
    if (line.empty()) {
      if (!blocks.back().empty()) blocks.emplace_back();
    } else {
      blocks.back().push_back(std::move(line));
    }
    pos = eol + 1;
  }

  std::vector<ParsedPair> pairs;
  for (const auto& block : blocks) {
    if (block.size() < 2 || !starts_with_label(block[0], 'Q') || !starts_with_label(block[1], 'A')) continue;
    ParsedPair pair{trim_copy(std::string_view(block[0]).substr(2)), trim_copy(std::string_view(block[1]).substr(2))};
    bool ok = !pair.question.empty() && !pair.answer.empty();
    // Continuation lines extend the answer; another label means a malformed block.
    for (std::size_t i = 2; ok && i < block.size(); ++i) {
      if (starts_with_label(block[i], 'Q') || starts_with_label(block[i], 'A')) {
        ok = false;
      } else {
        pair.answer += " " + block[i];
      }
    }
    if (ok) pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string normalize_question(std::string_view question) {
  std::u32string folded = unicode::collapse_whitespace(unicode::decode_utf8(question));
  for (auto& c : folded) c = unicode::fold_case(c);
  return std::string(unicode::trim(unicode::encode_utf8(folded)));
}

std::vector<QuizCard> generate_cards(SectionQuizState& state, int m, const std::vector<Chunk>& section_chunks,
                                     llm::Gateway& gateway) {
  if (m <= 0) throw Error(Errc::invalid_argument, "m must be positive");
  if (section_chunks.empty()) throw Error(Errc::generation_failed, "section has no text");

  // Rotate the window so successive generations see different passages.
  const std::size_t n = section_chunks.size();
  const std::size_t first = static_cast<std::size_t>(state.generated_count % n);
  std::string context;
  for (std::size_t i = 0; i < std::min(kContextChunks, n); ++i) {
    const Chunk& c = section_chunks[(first + i) % n];
    context += "\n\n[[chunk:" + c.id.str() + "]]\n" + unicode::encode_utf8(c.text);
  }

  llm::CompletionRequest request;
  request.messages.push_back({llm::Role::system,
                              "You write short quiz questions for a learner reading the section \"" +
                                  state.section_label + "\".\n\nContext:" + context});
  std::string ask = "Write exactly " + std::to_string(m) +
                    " question and answer pairs about the context. Use this format for each pair:\n"
                    "Q: <question>\nA: <answer>\nSeparate pairs with a blank line.";
  if (gateway.scripted()) ask += "\nMOCK:QUIZ " + std::to_string(m);
  request.messages.push_back({llm::Role::user, ask});
  request.stream = false;

  llm::Completion reply;
  try {
    reply = gateway.complete(request, nullptr);
  } catch (const Error& e) {
    throw Error(Errc::generation_failed, std::string("quiz generation failed: ") + e.what());
  }

  std::vector<ParsedPair> pairs = parse_pairs(reply.text);
  if (pairs.empty()) throw Error(Errc::generation_failed, "no question/answer pairs in the reply");
  if (pairs.size() > static_cast<std::size_t>(m)) pairs.resize(static_cast<std::size_t>(m));

  std::unordered_set<std::string> known;
  for (const auto& c : state.cards) known.insert(normalize_question(c.question));

  std::vector<QuizCard> accepted;
  for (auto& pair : pairs) {
    if (!known.insert(normalize_question(pair.question)).second) continue;
    QuizCard card;
    card.created_ordinal = state.next_ordinal++;
    card.card_id = build_card_id(state, card.created_ordinal);
    card.doc_id = state.doc_id;
    card.section_label = state.section_label;
    card.question = std::move(pair.question);
    card.answer_key = std::move(pair.answer);
    state.cards.push_back(card);
    accepted.push_back(std::move(card));
  }
  state.generated_count += accepted.size();
  return accepted;
}

QuizCard next_card(SectionQuizState& state, const std::vector<Chunk>& section_chunks, llm::Gateway& gateway) {
  const double u = state.rng.uniform();
  if (u < p_novel(state)) {
    try {
      auto fresh = generate_cards(state, 1, section_chunks, gateway);
      if (!fresh.empty()) return fresh.front();
    } catch (const Error& e) {
      if (e.code() != Errc::generation_failed || state.cards.empty()) throw;
    }
  }
  return sample_existing(state, state.rng.uniform());
}

QuizCard record_answer(SectionQuizState& state, std::string_view card_id, Result result) {
  if (result == Result::none) throw Error(Errc::invalid_argument, "result must be correct or incorrect");
  const auto it = std::find_if(state.cards.begin(), state.cards.end(),
                               [&](const QuizCard& c) { return c.card_id == card_id; });
  if (it == state.cards.end()) throw Error(Errc::unknown_card, "unknown card " + std::string(card_id));
  it->box = result == Result::incorrect ? 1 : std::min(it->box + 1, state.config.boxes);
  it->seen_count += 1;
  it->last_result = result;
  return *it;
}

std::string to_json(const SectionQuizState& state) {
  json cards = json::array();
  for (const auto& c : state.cards) {
    cards.push_back({{"card_id", c.card_id},
                     {"doc_id", c.doc_id},
                     {"section_label", c.section_label},
                     {"question", c.question},
                     {"answer_key", c.answer_key},
                     {"box", c.box},
                     {"last_result", to_string(c.last_result)},
                     {"seen_count", c.seen_count},
                     {"created_ordinal", c.created_ordinal}});
  }
  const json j = {{"doc_id", state.doc_id},
                  {"section_label", state.section_label},
                  {"section_index", state.section_index},
                  {"generated_count", state.generated_count},
                  {"next_ordinal", state.next_ordinal},
                  {"rng_seed", state.rng.seed()},
                  {"rng_draws", state.rng.draws()},
                  {"config",
                   {{"p0", state.config.p0},
                    {"delta", state.config.delta},
                    {"boxes", state.config.boxes},
                    {"box_weights", state.config.box_weights}}},
                  {"cards", cards}};
  return j.dump(2) + "\n";
}

SectionQuizState state_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    SectionQuizState state;
    state.doc_id = j.at("doc_id").get<std::string>();
    state.section_label = j.at("section_label").get<std::string>();
    state.section_index = j.at("section_index").get<int>();
    state.generated_count = j.at("generated_count").get<std::uint64_t>();
    state.next_ordinal = j.at("next_ordinal").get<std::uint64_t>();
    state.rng = SeededRng(j.at("rng_seed").get<std::uint64_t>(), j.at("rng_draws").get<std::uint64_t>());
    const json& cfg = j.at("config");
    state.config.p0 = cfg.at("p0").get<double>();
    state.config.delta = cfg.at("delta").get<double>();
    state.config.boxes = cfg.at("boxes").get<int>();
    state.config.box_weights = cfg.at("box_weights").get<std::vector<double>>();
    state.config.validate();
    for (const json& c : j.at("cards")) {
      QuizCard card;
      card.card_id = c.at("card_id").get<std::string>();
      card.doc_id = c.at("doc_id").get<std::string>();
      card.section_label = c.at("section_label").get<std::string>();
      card.question = c.at("question").get<std::string>();
      card.answer_key = c.at("answer_key").get<std::string>();
      card.box = c.at("box").get<int>();
      card.last_result = parse_result(c.at("last_result").get<std::string>()).value_or(Result::none);
      card.seen_count = c.at("seen_count").get<std::uint32_t>();
      card.created_ordinal = c.at("created_ordinal").get<std::uint64_t>();
      if (card.box < 1 || card.box > state.config.boxes) throw Error(Errc::io_error, "card box out of range");
      state.cards.push_back(std::move(card));
    }
    return state;
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, std::string("bad quiz state: ") + e.what());
  }
}

}  // namespace textbook::quiz
