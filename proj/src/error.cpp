#include "textbook/error.hpp"

namespace textbook {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_pdf: return "MalformedPdf";
    case Errc::no_text_layer: return "NoTextLayer";
    case Errc::empty_document: return "EmptyDocument";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::index_not_built: return "IndexNotBuilt";
    case Errc::empty_needle: return "EmptyNeedle";
    case Errc::provider_unreachable: return "ProviderUnreachable";
    case Errc::provider_error: return "ProviderError";
    case Errc::timeout: return "Timeout";
    case Errc::selection_missing: return "SelectionMissing";
    case Errc::query_missing: return "QueryMissing";
    case Errc::not_indexed: return "NotIndexed";
    case Errc::generation_failed: return "GenerationFailed";
    case Errc::unknown_card: return "UnknownCard";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::not_found: return "NotFound";
    case Errc::io_error: return "IoError";
    case Errc::payload_too_large: return "PayloadTooLarge";
  }
  return "Unknown";
}

}  // namespace textbook
