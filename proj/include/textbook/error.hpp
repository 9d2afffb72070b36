#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace textbook {

enum class Errc {
  malformed_pdf,
  no_text_layer,
  empty_document,
  empty_corpus,
  index_not_built,
  empty_needle,
  provider_unreachable,
  provider_error,
  timeout,
  selection_missing,
  query_missing,
  not_indexed,
  generation_failed,
  unknown_card,
  invalid_argument,
  not_found,
  io_error,
  payload_too_large,
};

std::string_view to_string(Errc code) noexcept;

// Every failure the library reports carries one of the codes above so that
// the HTTP layer can map it to a status without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Provider failures keep the upstream HTTP status for diagnostics.
class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body_excerpt)
      : Error(Errc::provider_error,
              "provider returned HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

}  // namespace textbook
