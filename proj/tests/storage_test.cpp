#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "support.hpp"
#include "textbook/error.hpp"
#include "textbook/storage.hpp"
#include "textbook/unicode.hpp"

namespace textbook {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

StoredDocument sample_document(const std::string& doc_id = "0123456789abcdef") {
  std::mt19937_64 rng(8);
  StoredDocument s;
  s.doc.doc_id = doc_id;
  s.doc.title = "Cells: an introduction (é)";
  s.doc.created_at = "2026-01-02T03:04:05Z";
  for (int p = 1; p <= 3; ++p) s.doc.pages.push_back({p, unicode::decode_utf8(testing::random_prose(rng, 200) + " é")});
  s.doc.section_map = {{"Intro", 1, 1}, {"Body", 2, 3}};
  s.chunks = chunk(s.doc, 200, 40);
  s.stats = build_index(s.chunks);
  s.manifest = {doc_id, s.doc.title, 3, s.doc.created_at, s.doc.section_map, s.chunks.size(), 200, 40};
  return s;
}

std::set<std::string> entries(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out.insert(e.path().filename().string());
  return out;
}

TEST(Files, AtomicWriteReplacesWithoutLeftovers) {
  TempDir tmp;
  const fs::path target = tmp.path() / "a.json";
  write_file_atomic(target, "first");
  write_file_atomic(target, "second");
  EXPECT_EQ(read_file(target), "second");
  EXPECT_EQ(entries(tmp.path()), std::set<std::string>{"a.json"});
  try {
    read_file(tmp.path() / "missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_found);
  }
}

TEST(Files, ConcurrentAtomicWritesLeaveOneWholeValue) {
  TempDir tmp;
  const fs::path target = tmp.path() / "x";
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i) write_file_atomic(target, std::string(1000, static_cast<char>('a' + t)));
    });
  }
  for (auto& th : threads) th.join();
  const std::string v = read_file(target);
  ASSERT_EQ(v.size(), 1000u);
  EXPECT_EQ(v.find_first_not_of(v[0]), std::string::npos);
  EXPECT_EQ(entries(tmp.path()).size(), 1u);
}

TEST(Files, SafeFileNames) {
  EXPECT_EQ(safe_file_name("learner-1_a.b"), "learner-1_a.b");
  const std::string slash = safe_file_name("../etc/passwd");
  EXPECT_EQ(slash.find('/'), std::string::npos);
  EXPECT_NE(slash.front(), '.');
  EXPECT_NE(safe_file_name("a/b"), safe_file_name("a_b"));
  EXPECT_NE(safe_file_name(""), "");
  EXPECT_LE(safe_file_name(std::string(500, 'x')).size(), 80u + 13u);
  EXPECT_NE(safe_file_name(std::string(500, 'x')), safe_file_name(std::string(501, 'x')));
}

TEST(Documents, PublishAndLoadRoundTrip) {
  TempDir tmp;
  Storage storage(tmp.path());
  const auto s = sample_document();
  storage.publish_document(s);
  EXPECT_EQ(storage.list_documents(), std::vector<std::string>{s.doc.doc_id});
  EXPECT_TRUE(storage.has_document(s.doc.doc_id));
  const auto loaded = storage.load_document(s.doc.doc_id);
  EXPECT_EQ(loaded.manifest.title, s.doc.title);
  EXPECT_EQ(loaded.manifest.sections, s.doc.section_map);
  EXPECT_EQ(loaded.manifest.chunk_count, s.chunks.size());
  ASSERT_EQ(loaded.doc.pages.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(loaded.doc.pages[i].text, s.doc.pages[i].text);
  ASSERT_EQ(loaded.chunks.size(), s.chunks.size());
  for (std::size_t i = 0; i < s.chunks.size(); ++i) {
    EXPECT_EQ(loaded.chunks[i].id, s.chunks[i].id);
    EXPECT_EQ(loaded.chunks[i].span, s.chunks[i].span);
    EXPECT_EQ(loaded.chunks[i].text, s.chunks[i].text);
    EXPECT_EQ(loaded.chunks[i].token_count, s.chunks[i].token_count);
  }
  EXPECT_EQ(loaded.stats.doc_count, s.stats.doc_count);
  EXPECT_EQ(loaded.stats.avg_doc_len, s.stats.avg_doc_len);
  EXPECT_EQ(loaded.stats.doc_freq, s.stats.doc_freq);
  ASSERT_EQ(loaded.stats.term_freq.size(), s.stats.term_freq.size());
  for (std::size_t i = 0; i < s.stats.term_freq.size(); ++i) {
    EXPECT_EQ(loaded.stats.term_freq[i].terms, s.stats.term_freq[i].terms);
  }
}

TEST(Documents, RepublishReplaces) {
  TempDir tmp;
  Storage storage(tmp.path());
  auto s = sample_document();
  storage.publish_document(s);
  s.manifest.title = "Second";
  storage.publish_document(s);
  EXPECT_EQ(storage.load_manifest(s.doc.doc_id).title, "Second");
  EXPECT_EQ(entries(tmp.path() / "docs"), std::set<std::string>{s.doc.doc_id});
}

TEST(Documents, UnknownAndInvalidIdsAreNotFound) {
  TempDir tmp;
  Storage storage(tmp.path());
  for (const char* id : {"abcdef", "../docs", "ABC", ".staging-1"}) {
    EXPECT_FALSE(storage.has_document(id)) << id;
    try {
      storage.load_manifest(id);
      FAIL() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::not_found);
    }
  }
}

TEST(Documents, RecoverRemovesInterruptedWork) {
  TempDir tmp;
  {
    Storage storage(tmp.path());
    storage.publish_document(sample_document());
  }
  const fs::path docs = tmp.path() / "docs";
  fs::create_directories(docs / ".staging-123" );
  std::ofstream(docs / ".staging-123" / "pages.jsonl") << "{}";
  fs::create_directories(docs / ".trash-9");
  std::ofstream(tmp.path() / "sessions" / ".s-1.jsonl.tmp-1-2-3") << "partial";
  Storage storage(tmp.path());
  // Staged work is never listed, even before recovery.
  EXPECT_EQ(storage.list_documents().size(), 1u);
  storage.recover();
  EXPECT_EQ(entries(docs), std::set<std::string>{"0123456789abcdef"});
  EXPECT_TRUE(entries(tmp.path() / "sessions").empty());
}

TEST(Sessions, RoundTrip) {
  TempDir tmp;
  Storage storage(tmp.path());
  Session s{"s-1", "learner/1", "0123456789abcdef",
            {{llm::Role::user, "what?\nline two"}, {llm::Role::assistant, "ANSWER: this"}}, "2026-01-01T00:00:00Z"};
  storage.save_session(s);
  const auto loaded = storage.load_session("s-1");
  ASSERT_TRUE(loaded.has_value());
  EXPECT_EQ(loaded->learner_id, s.learner_id);
  EXPECT_EQ(loaded->doc_id, s.doc_id);
  EXPECT_EQ(loaded->history, s.history);
  EXPECT_EQ(loaded->created_at, s.created_at);
  EXPECT_FALSE(storage.load_session("s-2").has_value());
}

TEST(Quiz, StateIsStoredPerLearnerDocumentAndSection) {
  TempDir tmp;
  Storage storage(tmp.path());
  auto state = quiz::make_state("0123456789abcdef", "Chapter 1/Intro", 0, 4);
  quiz::QuizCard card;
  card.card_id = "q-0123456789abcdef-0-0";
  card.question = "Q?";
  card.answer_key = "A.";
  state.cards.push_back(card);
  storage.save_quiz_state("ana", state);
  const auto loaded = storage.load_quiz_state("ana", "0123456789abcdef", "Chapter 1/Intro");
  ASSERT_TRUE(loaded.has_value());
  EXPECT_EQ(loaded->cards, state.cards);
  EXPECT_FALSE(storage.load_quiz_state("bo", "0123456789abcdef", "Chapter 1/Intro").has_value());
  const fs::path path = storage.quiz_path("ana", "0123456789abcdef", "Chapter 1/Intro");
  EXPECT_TRUE(fs::exists(path));
  EXPECT_EQ(path.parent_path().parent_path().parent_path(), tmp.path() / "quiz");
}

TEST(Profiles, RoundTrip) {
  TempDir tmp;
  Storage storage(tmp.path());
  storage.save_profile({"ana", {"chess", "jazz"}, std::string("Ana")});
  const auto p = storage.load_profile("ana");
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->interests, (std::vector<std::string>{"chess", "jazz"}));
  EXPECT_EQ(p->display_name, "Ana");
  EXPECT_FALSE(storage.load_profile("bo").has_value());
}

}  // namespace
}  // namespace textbook
