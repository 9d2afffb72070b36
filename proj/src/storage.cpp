#include "textbook/storage.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "textbook/error.hpp"
#include "textbook/unicode.hpp"
#include "textbook/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace textbook {

namespace {

std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = std::random_device{}();
  return std::to_string(::getpid()) + "-" + std::to_string(salt % 1000000) + "-" + std::to_string(counter++);
}

void fsync_path(const fs::path& path, int flags) {
  const int fd = ::open(path.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

bool is_doc_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

json span_json(const DocSpan& s) {
  return {{"start_page", s.start_page}, {"start_offset", s.start_offset}, {"end_page", s.end_page},
          {"end_offset", s.end_offset}};
}

DocSpan span_from(const json& j) {
  return {j.at("start_page").get<int>(), j.at("start_offset").get<std::size_t>(), j.at("end_page").get<int>(),
          j.at("end_offset").get<std::size_t>()};
}

json manifest_json(const DocumentManifest& m) {
  json sections = json::array();
  for (const auto& s : m.sections) {
    sections.push_back({{"label", s.label}, {"start_page", s.start_page}, {"end_page", s.end_page}});
  }
  return {{"doc_id", m.doc_id},
          {"title", m.title},
          {"pages", m.pages},
          {"created_at", m.created_at},
          {"sections", sections},
          {"chunk_count", m.chunk_count},
          {"chunk_size", m.chunk_size},
          {"chunk_overlap", m.chunk_overlap}};
}

DocumentManifest manifest_from(const json& j) {
  DocumentManifest m;
  m.doc_id = j.at("doc_id").get<std::string>();
  m.title = j.at("title").get<std::string>();
  m.pages = j.at("pages").get<int>();
  m.created_at = j.at("created_at").get<std::string>();
  for (const json& s : j.at("sections")) {
    m.sections.push_back({s.at("label").get<std::string>(), s.at("start_page").get<int>(), s.at("end_page").get<int>()});
  }
  m.chunk_count = j.at("chunk_count").get<std::size_t>();
  m.chunk_size = j.at("chunk_size").get<std::size_t>();
  m.chunk_overlap = j.at("chunk_overlap").get<std::size_t>();
  return m;
}

json index_json(const IndexStats& stats) {
  json term_freq = json::array();
  for (const auto& ct : stats.term_freq) {
    term_freq.push_back({{"chunk_id", ct.chunk_id.str()}, {"doc_len", ct.doc_len}, {"terms", ct.terms}});
  }
  return {{"doc_count", stats.doc_count},
          {"avg_doc_len", stats.avg_doc_len},
          {"doc_freq", stats.doc_freq},
          {"term_freq", term_freq}};
}

IndexStats index_from(const json& j) {
  IndexStats stats;
  stats.doc_count = j.at("doc_count").get<std::size_t>();
  stats.avg_doc_len = j.at("avg_doc_len").get<double>();
  stats.doc_freq = j.at("doc_freq").get<std::map<std::string, std::uint32_t>>();
  for (const json& ct : j.at("term_freq")) {
    IndexStats::ChunkTerms terms;
    const auto id = ChunkId::parse(ct.at("chunk_id").get<std::string>());
    if (!id) throw Error(Errc::io_error, "bad chunk id in index.json");
    terms.chunk_id = *id;
    terms.doc_len = ct.at("doc_len").get<std::size_t>();
    terms.terms = ct.at("terms").get<std::map<std::string, std::uint32_t>>();
    stats.term_freq.push_back(std::move(terms));
  }
  return stats;
}

template <typename F>
void for_each_line(const std::string& text, F&& f) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    if (eol > pos) f(std::string_view(text).substr(pos, eol - pos));
    pos = eol + 1;
  }
}

json parse_json(const std::string& text, const fs::path& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, where.string() + ": " + e.what());
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp-" + unique_suffix());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(Errc::io_error, "cannot write " + tmp.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      fs::remove(tmp, ec);
      throw Error(Errc::io_error, "cannot write " + tmp.string() + ": " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::io_error, "cannot publish " + path.string());
  }
  fsync_path(path.parent_path(), O_RDONLY | O_DIRECTORY);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "no such file: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw Error(Errc::io_error, "cannot read " + path.string());
  return out.str();
}

std::string safe_file_name(std::string_view id) {
  std::string out;
  bool changed = id.empty();
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out.push_back(ok ? c : '_');
    changed |= !ok;
  }
  if (!out.empty() && out.front() == '.') {
    out.front() = '_';
    changed = true;
  }
  if (out.size() > 80) {
    out.resize(80);
    changed = true;
  }
  if (changed) out += "-" + sha256_hex(id).substr(0, 12);
  return out;
}

Storage::Storage(fs::path root) : root_(std::move(root)) {
  for (const char* sub : {"docs", "sessions", "quiz", "profiles"}) fs::create_directories(root_ / sub);
}

void Storage::recover() {
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / "docs", ec)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind(".staging-", 0) == 0 || name.rfind(".trash-", 0) == 0) fs::remove_all(entry.path(), ec);
  }
  // Stray temp files from interrupted atomic writes.
  std::vector<fs::path> stray;
  for (auto it = fs::recursive_directory_iterator(root_, ec); it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    const std::string name = it->path().filename().string();
    if (it->is_regular_file() && name.front() == '.' && name.find(".tmp-") != std::string::npos) {
      stray.push_back(it->path());
    }
  }
  for (const auto& p : stray) fs::remove(p, ec);
}

fs::path Storage::doc_dir(std::string_view doc_id) const {
  if (!is_doc_id(doc_id)) throw Error(Errc::not_found, "unknown document " + std::string(doc_id));
  return root_ / "docs" / std::string(doc_id);
}

void Storage::publish_document(const StoredDocument& stored, int staging_delay_ms) {
  const fs::path target = doc_dir(stored.manifest.doc_id);
  const fs::path staging = root_ / "docs" / (".staging-" + unique_suffix());
  std::error_code ec;
  try {
    fs::create_directories(staging);
    std::string pages;
    for (const auto& p : stored.doc.pages) {
      pages += json({{"page_number", p.page_number}, {"text", unicode::encode_utf8(p.text)}}).dump() + "\n";
    }
    std::string chunks;
    for (const auto& c : stored.chunks) {
      chunks += json({{"chunk_id", c.id.str()},
                      {"doc_id", c.doc_id},
                      {"span", span_json(c.span)},
                      {"text", unicode::encode_utf8(c.text)},
                      {"token_count", c.token_count}})
                    .dump() +
                "\n";
    }
    write_file_atomic(staging / "pages.jsonl", pages);
    write_file_atomic(staging / "chunks.jsonl", chunks);
    write_file_atomic(staging / "index.json", index_json(stored.stats).dump() + "\n");
    write_file_atomic(staging / "manifest.json", manifest_json(stored.manifest).dump(2) + "\n");
    if (staging_delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(staging_delay_ms));

    // Re-uploading identical bytes replaces the published copy.
    if (fs::exists(target)) {
      const fs::path trash = root_ / "docs" / (".trash-" + unique_suffix());
      fs::rename(target, trash);
      fs::rename(staging, target);
      fs::remove_all(trash, ec);
    } else {
      fs::rename(staging, target);
    }
    fsync_path(root_ / "docs", O_RDONLY | O_DIRECTORY);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging, ec);
    throw Error(Errc::io_error, e.what());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
}

std::vector<std::string> Storage::list_documents() const {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / "docs", ec)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || !is_doc_id(name)) continue;
    if (fs::exists(entry.path() / "manifest.json")) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool Storage::has_document(std::string_view doc_id) const {
  return is_doc_id(doc_id) && fs::exists(doc_dir(doc_id) / "manifest.json");
}

DocumentManifest Storage::load_manifest(std::string_view doc_id) const {
  const fs::path path = doc_dir(doc_id) / "manifest.json";
  try {
    return manifest_from(parse_json(read_file(path), path));
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, path.string() + ": " + e.what());
  }
}

StoredDocument Storage::load_document(std::string_view doc_id) const {
  const fs::path dir = doc_dir(doc_id);
  StoredDocument stored;
  stored.manifest = load_manifest(doc_id);
  try {
    stored.doc.doc_id = stored.manifest.doc_id;
    stored.doc.title = stored.manifest.title;
    stored.doc.created_at = stored.manifest.created_at;
    stored.doc.section_map = stored.manifest.sections;
    for_each_line(read_file(dir / "pages.jsonl"), [&](std::string_view line) {
      const json j = json::parse(line);
      stored.doc.pages.push_back({j.at("page_number").get<int>(), unicode::decode_utf8(j.at("text").get<std::string>())});
    });
    for_each_line(read_file(dir / "chunks.jsonl"), [&](std::string_view line) {
      const json j = json::parse(line);
      Chunk c;
      const auto id = ChunkId::parse(j.at("chunk_id").get<std::string>());
      if (!id) throw Error(Errc::io_error, "bad chunk id in chunks.jsonl");
      c.id = *id;
      c.doc_id = j.at("doc_id").get<std::string>();
      c.span = span_from(j.at("span"));
      c.text = unicode::decode_utf8(j.at("text").get<std::string>());
      c.token_count = j.at("token_count").get<std::size_t>();
      stored.chunks.push_back(std::move(c));
    });
    stored.stats = index_from(parse_json(read_file(dir / "index.json"), dir / "index.json"));
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, dir.string() + ": " + e.what());
  }
  return stored;
}

void Storage::save_session(const Session& session) {
  const std::string name = safe_file_name(session.session_id);
  const json meta = {{"session_id", session.session_id},
                     {"learner_id", session.learner_id},
                     {"doc_id", session.doc_id},
                     {"created_at", session.created_at}};
  std::string lines;
  for (const auto& m : session.history) {
    lines += json({{"role", llm::to_string(m.role)}, {"content", m.content}}).dump() + "\n";
  }
  write_file_atomic(root_ / "sessions" / (name + ".jsonl"), lines);
  write_file_atomic(root_ / "sessions" / (name + ".meta.json"), meta.dump(2) + "\n");
}

std::optional<Session> Storage::load_session(std::string_view session_id) const {
  const std::string name = safe_file_name(session_id);
  const fs::path meta_path = root_ / "sessions" / (name + ".meta.json");
  if (!fs::exists(meta_path)) return std::nullopt;
  try {
    const json meta = parse_json(read_file(meta_path), meta_path);
    Session s;
    s.session_id = meta.at("session_id").get<std::string>();
    s.learner_id = meta.at("learner_id").get<std::string>();
    s.doc_id = meta.at("doc_id").get<std::string>();
    s.created_at = meta.at("created_at").get<std::string>();
    const fs::path log = root_ / "sessions" / (name + ".jsonl");
    if (fs::exists(log)) {
      for_each_line(read_file(log), [&](std::string_view line) {
        const json j = json::parse(line);
        const auto role = llm::parse_role(j.at("role").get<std::string>());
        if (!role) throw Error(Errc::io_error, "bad role in " + log.string());
        s.history.push_back({*role, j.at("content").get<std::string>()});
      });
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, meta_path.string() + ": " + e.what());
  }
}

fs::path Storage::quiz_path(std::string_view learner_id, std::string_view doc_id, std::string_view section_label) const {
  return root_ / "quiz" / safe_file_name(learner_id) / safe_file_name(doc_id) /
         (safe_file_name(section_label) + ".json");
}

std::optional<quiz::SectionQuizState> Storage::load_quiz_state(std::string_view learner_id, std::string_view doc_id,
                                                               std::string_view section_label) const {
  const fs::path path = quiz_path(learner_id, doc_id, section_label);
  if (!fs::exists(path)) return std::nullopt;
  return quiz::state_from_json(read_file(path));
}

void Storage::save_quiz_state(std::string_view learner_id, const quiz::SectionQuizState& state) {
  write_file_atomic(quiz_path(learner_id, state.doc_id, state.section_label), quiz::to_json(state));
}

void Storage::save_profile(const LearnerProfile& profile) {
  json j = {{"learner_id", profile.learner_id}, {"interests", profile.interests}};
  if (profile.display_name) j["display_name"] = *profile.display_name;
  write_file_atomic(root_ / "profiles" / (safe_file_name(profile.learner_id) + ".json"), j.dump(2) + "\n");
}

std::optional<LearnerProfile> Storage::load_profile(std::string_view learner_id) const {
  const fs::path path = root_ / "profiles" / (safe_file_name(learner_id) + ".json");
  if (!fs::exists(path)) return std::nullopt;
  const json j = parse_json(read_file(path), path);
  try {
    LearnerProfile p;
    p.learner_id = j.at("learner_id").get<std::string>();
    p.interests = j.at("interests").get<std::vector<std::string>>();
    if (j.contains("display_name")) p.display_name = j.at("display_name").get<std::string>();
    return p;
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, path.string() + ": " + e.what());
  }
}

}  // namespace textbook
