#pragma once

#include <stdlib.h>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <random>
#include <string>
#include <vector>

#include "textbook/pdf.hpp"

namespace textbook::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "textbook-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    if (value != nullptr) {
      ::setenv(name, value, 1);
    } else {
      ::unsetenv(name);
    }
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_.c_str(), old_->c_str(), 1);
    } else {
      ::unsetenv(name_.c_str());
    }
  }

 private:
  std::string name_;
  std::optional<std::string> old_;
};

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w;
    const char* syllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "ze", "po", "du", "fe"};
    for (const char* a : syllables) {
      for (const char* b : syllables) w.push_back(std::string(a) + b);
    }
    return w;
  }();
  return words;
}

// Space separated words from a 144-word vocabulary, with a period every few words.
inline std::string random_prose(std::mt19937_64& rng, std::size_t words) {
  const auto& vocab = vocabulary();
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> sentence(6, 14);
  std::string out;
  int left = sentence(rng);
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += vocab[pick(rng)];
    if (--left == 0 || i + 1 == words) {
      out += '.';
      left = sentence(rng);
    }
  }
  return out;
}

inline std::string make_pdf(const std::vector<std::vector<std::string>>& pages,
                            const std::vector<pdf::OutlineEntry>& outline = {}, const std::string& title = "") {
  pdf::WriterOptions options;
  options.title = title;
  return pdf::write_text_pdf(pages, outline, options);
}

}  // namespace textbook::testing
