#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "textbook/error.hpp"
#include "textbook/http_server.hpp"
#include "textbook/ingest.hpp"
#include "textbook/kernels.hpp"
#include "textbook/llm.hpp"
#include "textbook/locator.hpp"
#include "textbook/pdf.hpp"
#include "textbook/retrieval.hpp"
#include "textbook/service.hpp"
#include "textbook/unicode.hpp"

using namespace textbook;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::atoi(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Textbook reading assistant: PDF ingest, retrieval, grounded answers and quizzes"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  int port = env_int("PORT", 8080);
  std::string host = "0.0.0.0";
  std::string data_dir;
  std::string rng_seed;
  serve->add_option("--port", port, "Listen port (env PORT)");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--data-dir", data_dir, "Storage root (env DATA_DIR)");
  serve->add_option("--rng-seed", rng_seed, "Seed for ids and quiz sampling (env RNG_SEED)");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Print the text layer of a PDF as JSON");
  std::string pdf_path;
  extract_cmd->add_option("pdf", pdf_path, "PDF file")->required();

  // search
  auto* search_cmd = app.add_subcommand("search", "BM25 search over the chunks of a PDF");
  std::string query;
  std::size_t k = 5;
  search_cmd->add_option("pdf", pdf_path, "PDF file")->required();
  search_cmd->add_option("query", query, "Query text")->required();
  search_cmd->add_option("-k", k, "Number of results");

  // locate
  auto* locate_cmd = app.add_subcommand("locate", "Find a passage in a PDF and print its page spans");
  std::string needle;
  double tau = kDefaultLocateThreshold;
  locate_cmd->add_option("pdf", pdf_path, "PDF file")->required();
  locate_cmd->add_option("text", needle, "Passage to find")->required();
  locate_cmd->add_option("--tau", tau, "Fuzzy acceptance threshold");

  // make-pdf
  auto* make_pdf = app.add_subcommand("make-pdf", "Lay out a UTF-8 text file as a PDF (WinAnsi text)");
  std::string text_path, out_path, title;
  int line_width = 80, lines_per_page = 40;
  make_pdf->add_option("text", text_path, "Input text file")->required();
  make_pdf->add_option("-o,--output", out_path, "Output PDF")->required();
  make_pdf->add_option("--title", title, "Document title");
  make_pdf->add_option("--line-width", line_width, "Characters per line");
  make_pdf->add_option("--lines-per-page", lines_per_page, "Lines per page");

  auto* kernels_cmd = app.add_subcommand("kernels", "Show the scoring kernels available on this CPU");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      if (!data_dir.empty()) ::setenv("DATA_DIR", data_dir.c_str(), 1);
      if (!rng_seed.empty()) ::setenv("RNG_SEED", rng_seed.c_str(), 1);
      ServiceConfig config = service_config_from_env();
      auto gateway = llm::make_gateway(llm::gateway_config_from_env());
      Service service(config, gateway);
      std::cerr << "listening on " << host << ":" << port << " (data " << config.data_dir.string()
                << (gateway->scripted() ? ", mock model" : "") << ")\n";
      if (!serve_http(service, host, port)) {
        std::cerr << "cannot listen on port " << port << "\n";
        return 1;
      }
      return 0;
    }
    if (*extract_cmd) {
      const ExtractedDocument doc = extract(slurp(pdf_path));
      json pages = json::array();
      for (const auto& p : doc.pages) {
        pages.push_back({{"page_number", p.page_number}, {"char_count", p.char_count()}, {"text", unicode::encode_utf8(p.text)}});
      }
      json sections = json::array();
      for (const auto& s : doc.section_map) {
        sections.push_back({{"label", s.label}, {"start_page", s.start_page}, {"end_page", s.end_page}});
      }
      std::cout << json({{"doc_id", doc.doc_id}, {"title", doc.title}, {"sections", sections}, {"pages", pages}}).dump(2)
                << "\n";
      return 0;
    }
    if (*search_cmd) {
      const ExtractedDocument doc = extract(slurp(pdf_path));
      const auto chunks = chunk(doc);
      const Bm25Index index(build_index(chunks));
      for (const auto& hit : index.search(query, k)) {
        const Chunk& c = chunks[hit.chunk_id.ordinal()];
        std::cout << hit.rank << "\t" << hit.chunk_id.str() << "\t" << hit.score << "\tp" << c.span.start_page << "\t"
                  << unicode::encode_utf8(std::u32string_view(c.text).substr(0, 80)) << "\n";
      }
      return 0;
    }
    if (*locate_cmd) {
      const ExtractedDocument doc = extract(slurp(pdf_path));
      const auto result = locate(doc, needle, tau);
      if (!result.located) {
        std::cout << "not found\n";
        return 2;
      }
      for (const auto& s : result.spans) {
        std::cout << "page " << s.page << " [" << s.start << ", " << s.end << ") " << to_string(s.method) << " "
                  << s.confidence << "\n";
      }
      return 0;
    }
    if (*make_pdf) {
      const auto pages = pdf::layout_text(slurp(text_path), static_cast<std::size_t>(line_width),
                                          static_cast<std::size_t>(lines_per_page));
      pdf::WriterOptions options;
      options.title = title;
      std::ofstream out(out_path, std::ios::binary);
      out << pdf::write_text_pdf(pages, {}, options);
      if (!out) throw Error(Errc::io_error, "cannot write " + out_path);
      std::cout << pages.size() << " pages\n";
      return 0;
    }
    if (*kernels_cmd) {
      for (const auto isa : kernels::available_isas()) std::cout << kernels::to_string(isa) << "\n";
      std::cout << "active: " << kernels::to_string(kernels::active_isa()) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
