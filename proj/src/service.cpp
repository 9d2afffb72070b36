#include "textbook/service.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "textbook/error.hpp"
#include "textbook/unicode.hpp"
#include "textbook/util.hpp"

namespace textbook {

namespace {

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<Chunk> chunks_for_section(const StoredDocument& stored, const SectionRange& section) {
  std::vector<Chunk> out;
  for (const auto& c : stored.chunks) {
    if (c.span.start_page <= section.end_page && c.span.end_page >= section.start_page) out.push_back(c);
  }
  return out;
}

}  // namespace

ServiceConfig service_config_from_env() {
  ServiceConfig config;
  if (const char* dir = std::getenv("DATA_DIR"); dir != nullptr && *dir != '\0') config.data_dir = dir;
  if (const char* seed = std::getenv("RNG_SEED"); seed != nullptr && *seed != '\0') {
    const auto v = parse_u64(seed);
    if (!v) throw Error(Errc::invalid_argument, "RNG_SEED must be a non-negative integer");
    config.rng_seed = *v;
  }
  if (const char* delay = std::getenv("TEXTBOOK_INGEST_DELAY_MS"); delay != nullptr) {
    config.ingest_delay_ms = std::atoi(delay);
  }
  config.answer.summary_mode = reference_summary_mode_from_env();
  return config;
}

Service::Service(ServiceConfig config, std::shared_ptr<llm::Gateway> gateway)
    : config_(std::move(config)),
      gateway_(std::move(gateway)),
      orchestrator_(gateway_, config_.answer),
      storage_(config_.data_dir) {
  config_.quiz.validate();
  storage_.recover();
  if (config_.rng_seed) {
    id_rng_.seed(stable_hash64("ids|" + std::to_string(*config_.rng_seed)));
  } else {
    id_rng_.seed(std::random_device{}());
  }
}

std::shared_ptr<std::mutex> Service::lock_for(const std::string& key) const {
  std::lock_guard<std::mutex> guard(locks_mutex_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

std::string Service::next_id(std::string_view prefix) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::uint64_t v;
  {
    std::lock_guard<std::mutex> guard(id_mutex_);
    v = id_rng_();
  }
  std::string id(prefix);
  for (int i = 0; i < 16; ++i, v >>= 4) id.push_back(kHex[v & 0xF]);
  return id;
}

std::uint64_t Service::quiz_seed(std::string_view learner_id, std::string_view doc_id, std::string_view section_label) {
  if (config_.rng_seed) {
    std::string key = std::to_string(*config_.rng_seed);
    key.append("|").append(learner_id).append("|").append(doc_id).append("|").append(section_label);
    return stable_hash64(key);
  }
  return (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
}

DocumentManifest Service::ingest(std::string_view pdf_bytes) {
  if (pdf_bytes.size() > config_.max_upload_bytes) {
    throw Error(Errc::payload_too_large, "upload exceeds " + std::to_string(config_.max_upload_bytes) + " bytes");
  }
  if (pdf_bytes.empty()) throw Error(Errc::malformed_pdf, "empty upload");

  StoredDocument stored;
  stored.doc = extract(pdf_bytes);
  stored.chunks = chunk(stored.doc, config_.chunk_size, config_.chunk_overlap);
  stored.stats = build_index(stored.chunks);
  auto& m = stored.manifest;
  m.doc_id = stored.doc.doc_id;
  m.title = stored.doc.title;
  m.pages = static_cast<int>(stored.doc.pages.size());
  m.created_at = stored.doc.created_at;
  m.sections = stored.doc.section_map;
  m.chunk_count = stored.chunks.size();
  m.chunk_size = config_.chunk_size;
  m.chunk_overlap = config_.chunk_overlap;

  const auto lock = lock_for("doc|" + m.doc_id);
  std::lock_guard<std::mutex> guard(*lock);
  storage_.publish_document(stored, config_.ingest_delay_ms);
  {
    std::lock_guard<std::mutex> cache_guard(cache_mutex_);
    cache_.erase(m.doc_id);
  }
  return m;
}

std::vector<DocumentManifest> Service::list_documents() const {
  std::vector<DocumentManifest> out;
  for (const auto& id : storage_.list_documents()) {
    try {
      out.push_back(storage_.load_manifest(id));
    } catch (const Error&) {
      // Replaced between listing and reading.
    }
  }
  return out;
}

DocumentManifest Service::document(std::string_view doc_id) const {
  if (!storage_.has_document(doc_id)) throw Error(Errc::not_found, "unknown document " + std::string(doc_id));
  return load(doc_id)->stored.manifest;
}

PageText Service::page(std::string_view doc_id, int page_number) const {
  const auto doc = load(doc_id);
  const auto& pages = doc->stored.doc.pages;
  if (page_number < 1 || page_number > static_cast<int>(pages.size())) {
    throw Error(Errc::not_found, "no page " + std::to_string(page_number));
  }
  return pages[static_cast<std::size_t>(page_number - 1)];
}

std::shared_ptr<const Service::LoadedDocument> Service::load(std::string_view doc_id) const {
  {
    std::lock_guard<std::mutex> guard(cache_mutex_);
    if (const auto it = cache_.find(doc_id); it != cache_.end()) return it->second;
  }
  if (!storage_.has_document(doc_id)) throw Error(Errc::not_found, "unknown document " + std::string(doc_id));
  auto loaded = std::make_shared<LoadedDocument>();
  loaded->stored = storage_.load_document(doc_id);
  loaded->index = Bm25Index(loaded->stored.stats);
  loaded->locator = std::make_unique<DocumentLocator>(loaded->stored.doc);
  std::lock_guard<std::mutex> guard(cache_mutex_);
  auto [it, inserted] = cache_.emplace(std::string(doc_id), std::move(loaded));
  return it->second;
}

Session Service::create_session(std::string_view learner_id, std::string_view doc_id) {
  if (unicode::trim(learner_id).empty()) throw Error(Errc::invalid_argument, "learner_id is required");
  if (!storage_.has_document(doc_id)) throw Error(Errc::not_found, "unknown document " + std::string(doc_id));
  Session s;
  s.session_id = next_id("s-");
  s.learner_id = std::string(learner_id);
  s.doc_id = std::string(doc_id);
  s.created_at = utc_timestamp();
  storage_.save_session(s);
  return s;
}

std::optional<Session> Service::session(std::string_view session_id) const {
  return storage_.load_session(session_id);
}

LearnerProfile Service::profile_or_default(std::string_view learner_id) const {
  if (learner_id.empty()) return {};
  if (auto p = storage_.load_profile(learner_id)) return *p;
  LearnerProfile p;
  p.learner_id = std::string(learner_id);
  return p;
}

void Service::check_chat(std::string_view session_id, std::string_view query) const {
  const auto s = session(session_id);
  if (!s) throw Error(Errc::not_found, "unknown session " + std::string(session_id));
  if (!storage_.has_document(s->doc_id)) throw Error(Errc::not_found, "unknown document " + s->doc_id);
  if (unicode::trim(query).empty()) throw Error(Errc::query_missing, "query is required");
}

Answer Service::chat(std::string_view session_id, std::string_view query, const llm::DeltaSink& sink) {
  check_chat(session_id, query);
  const auto lock = lock_for("session|" + std::string(session_id));
  std::lock_guard<std::mutex> guard(*lock);

  Session s = *session(session_id);
  const auto doc = load(s.doc_id);
  const DocumentContext context{doc->stored.doc, doc->stored.chunks, doc->index, *doc->locator};
  AgentAction action;
  action.kind = ActionKind::chat;
  action.query = std::string(query);
  Answer answer =
      orchestrator_.answer(action, context, profile_or_default(s.learner_id), s.history, sink, next_id("a-"));
  if (answer.finish_reason != llm::FinishReason::error) {
    s.history.push_back({llm::Role::user, std::string(query)});
    s.history.push_back({llm::Role::assistant, answer.text});
    storage_.save_session(s);
  }
  return answer;
}

DocSpan Service::resolve_selection(std::string_view doc_id, const Selection& selection) const {
  const auto doc = load(doc_id);
  const auto& pages = doc->stored.doc.pages;
  if (selection.page < 1 || selection.page > static_cast<int>(pages.size())) {
    throw Error(Errc::invalid_argument, "selection page out of range");
  }
  const auto& page = pages[static_cast<std::size_t>(selection.page - 1)];
  if (selection.start >= selection.end) throw Error(Errc::invalid_argument, "selection is empty");
  if (selection.end > page.char_count()) throw Error(Errc::invalid_argument, "selection runs past the page");
  const DocSpan span{selection.page, selection.start, selection.page, selection.end};
  const std::string text = unicode::encode_utf8(slice(doc->stored.doc, span));
  if (unicode::trim(text).empty()) throw Error(Errc::invalid_argument, "selection has no text");
  return span;
}

Answer Service::act(std::string_view doc_id, ActionKind kind, const Selection& selection,
                    std::string_view learner_id, const llm::DeltaSink& sink) {
  if (kind != ActionKind::summarize && kind != ActionKind::explain) {
    throw Error(Errc::invalid_argument, "action kind must be summarize or explain");
  }
  const DocSpan span = resolve_selection(doc_id, selection);
  const auto doc = load(doc_id);
  const DocumentContext context{doc->stored.doc, doc->stored.chunks, doc->index, *doc->locator};
  AgentAction action;
  action.kind = kind;
  action.selection = span;
  return orchestrator_.answer(action, context, profile_or_default(learner_id), {}, sink, next_id("a-"));
}

quiz::QuizCard Service::next_card(std::string_view doc_id, std::string_view learner_id,
                                  std::string_view section_label) {
  if (unicode::trim(learner_id).empty()) throw Error(Errc::invalid_argument, "learner_id is required");
  const auto doc = load(doc_id);
  const auto& sections = doc->stored.manifest.sections;
  const auto it = std::find_if(sections.begin(), sections.end(),
                               [&](const SectionRange& s) { return s.label == section_label; });
  if (it == sections.end()) throw Error(Errc::not_found, "unknown section " + std::string(section_label));
  const int index = static_cast<int>(it - sections.begin());

  const auto lock = lock_for("quiz|" + std::string(learner_id) + "|" + std::string(doc_id) + "|" + std::to_string(index));
  std::lock_guard<std::mutex> guard(*lock);
  auto state = storage_.load_quiz_state(learner_id, doc_id, section_label);
  if (!state) {
    state = quiz::make_state(std::string(doc_id), it->label, index, quiz_seed(learner_id, doc_id, it->label),
                             config_.quiz);
  }
  const auto chunks = chunks_for_section(doc->stored, *it);
  quiz::QuizCard card = quiz::next_card(*state, chunks, *gateway_);
  storage_.save_quiz_state(learner_id, *state);
  return card;
}

CardAnswer Service::answer_card(std::string_view card_id, std::string_view learner_id, quiz::Result result) {
  // q-<doc_id>-<section index>-<ordinal>
  const auto unknown = [&] { return Error(Errc::unknown_card, "unknown card " + std::string(card_id)); };
  if (card_id.rfind("q-", 0) != 0) throw unknown();
  const std::string_view rest = card_id.substr(2);
  const std::size_t first = rest.find('-');
  const std::size_t second = first == std::string_view::npos ? first : rest.find('-', first + 1);
  if (second == std::string_view::npos) throw unknown();
  const std::string doc_id(rest.substr(0, first));
  const auto index = parse_u64(rest.substr(first + 1, second - first - 1));
  if (!index || !storage_.has_document(doc_id)) throw unknown();
  const auto doc = load(doc_id);
  const auto& sections = doc->stored.manifest.sections;
  if (*index >= sections.size()) throw unknown();
  const std::string& label = sections[*index].label;

  const auto lock = lock_for("quiz|" + std::string(learner_id) + "|" + doc_id + "|" + std::to_string(*index));
  std::lock_guard<std::mutex> guard(*lock);
  auto state = storage_.load_quiz_state(learner_id, doc_id, label);
  if (!state) throw unknown();
  CardAnswer out;
  out.card = quiz::record_answer(*state, card_id, result);
  storage_.save_quiz_state(learner_id, *state);
  out.box = out.card.box;
  out.answer_key = out.card.answer_key;
  return out;
}

void Service::put_profile(LearnerProfile profile) {
  if (unicode::trim(profile.learner_id).empty()) throw Error(Errc::invalid_argument, "learner_id is required");
  if (profile.interests.size() > kMaxInterests) {
    throw Error(Errc::invalid_argument, "at most " + std::to_string(kMaxInterests) + " interests");
  }
  for (const auto& interest : profile.interests) {
    if (unicode::trim(interest).empty()) throw Error(Errc::invalid_argument, "interests must be non-empty");
    if (unicode::length(interest) > kMaxInterestLength) {
      throw Error(Errc::invalid_argument, "interests are limited to " + std::to_string(kMaxInterestLength) + " characters");
    }
  }
  const auto lock = lock_for("profile|" + profile.learner_id);
  std::lock_guard<std::mutex> guard(*lock);
  storage_.save_profile(profile);
}

std::optional<LearnerProfile> Service::profile(std::string_view learner_id) const {
  return storage_.load_profile(learner_id);
}

}  // namespace textbook
