#include "textbook/http_server.hpp"

#include <httplib.h>

#include <json.hpp>

#include "textbook/error.hpp"
#include "textbook/unicode.hpp"

namespace textbook {

namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

json answer_object(const Answer& a) {
  json refs = json::array();
  for (const auto& r : a.references) {
    json spans = json::array();
    for (const auto& s : r.spans) {
      spans.push_back({{"page", s.page},
                       {"start", s.start},
                       {"end", s.end},
                       {"confidence", s.confidence},
                       {"method", to_string(s.method)}});
    }
    refs.push_back({{"chunk_id", r.chunk_id.str()},
                    {"verbatim", r.verbatim},
                    {"summary", r.summary},
                    {"score", r.score},
                    {"spans", spans}});
  }
  json j = {{"answer_id", a.answer_id},
            {"text", a.text},
            {"references", refs},
            {"finish_reason", llm::to_string(a.finish_reason)},
            {"created_at", a.created_at}};
  if (!a.error.empty()) j["error"] = a.error;
  return j;
}

json manifest_object(const DocumentManifest& m) {
  json sections = json::array();
  for (const auto& s : m.sections) {
    sections.push_back({{"label", s.label}, {"start_page", s.start_page}, {"end_page", s.end_page}});
  }
  return {{"doc_id", m.doc_id}, {"title", m.title}, {"pages", m.pages}, {"sections", sections},
          {"created_at", m.created_at}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

// Runs a handler and turns library errors into JSON error responses.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, http_status(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "InvalidArgument", std::string("bad JSON body: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "Internal", e.what());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) throw Error(Errc::invalid_argument, "request body is required");
  json j = json::parse(req.body);
  if (!j.is_object()) throw Error(Errc::invalid_argument, "request body must be a JSON object");
  return j;
}

std::string string_field(const json& body, const char* name, bool required = true) {
  const auto it = body.find(name);
  if (it == body.end() || it->is_null()) {
    if (required) throw Error(Errc::invalid_argument, std::string(name) + " is required");
    return {};
  }
  if (!it->is_string()) throw Error(Errc::invalid_argument, std::string(name) + " must be a string");
  return it->get<std::string>();
}

// Streams one answer as SSE. `run` receives a delta sink and returns the Answer.
template <typename Run>
void stream_answer(httplib::Response& res, Run run) {
  res.status = 200;
  res.set_header("Cache-Control", "no-cache");
  res.set_chunked_content_provider("text/event-stream", [run](std::size_t, httplib::DataSink& sink) {
    const auto write = [&](const std::string& frame) { sink.write(frame.data(), frame.size()); };
    try {
      const Answer answer = run([&](const llm::CompletionDelta& d) {
        if (!d.is_final && !d.text_fragment.empty()) write(sse_frame("delta", json({{"text", d.text_fragment}}).dump()));
      });
      if (answer.finish_reason == llm::FinishReason::error) {
        write(sse_frame("error", json({{"status", 502}, {"error", "ProviderError"}, {"message", answer.error},
                                       {"answer", answer_object(answer)}})
                                     .dump()));
      } else {
        write(sse_frame("answer", answer_json(answer)));
      }
    } catch (const Error& e) {
      write(sse_frame("error", json({{"status", http_status(e.code())}, {"error", to_string(e.code())},
                                     {"message", e.what()}})
                                   .dump()));
    } catch (const std::exception& e) {
      write(sse_frame("error", json({{"status", 500}, {"error", "Internal"}, {"message", e.what()}}).dump()));
    }
    sink.done();
    return true;
  });
}

}  // namespace

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_pdf:
    case Errc::no_text_layer:
    case Errc::empty_document:
    case Errc::empty_needle:
    case Errc::selection_missing:
    case Errc::query_missing:
    case Errc::invalid_argument:
      return 400;
    case Errc::not_found:
    case Errc::unknown_card:
      return 404;
    case Errc::not_indexed:
    case Errc::index_not_built:
    case Errc::empty_corpus:
      return 409;
    case Errc::payload_too_large:
      return 413;
    case Errc::provider_unreachable:
    case Errc::provider_error:
    case Errc::generation_failed:
      return 502;
    case Errc::timeout:
      return 504;
    case Errc::io_error:
      return 500;
  }
  return 500;
}

std::string answer_json(const Answer& answer) { return answer_object(answer).dump(); }

std::string card_json(const quiz::QuizCard& c) {
  return json({{"card_id", c.card_id},
               {"doc_id", c.doc_id},
               {"section_label", c.section_label},
               {"question", c.question},
               {"box", c.box},
               {"last_result", quiz::to_string(c.last_result)},
               {"seen_count", c.seen_count},
               {"created_ordinal", c.created_ordinal}})
      .dump();
}

std::string manifest_json(const DocumentManifest& manifest) { return manifest_object(manifest).dump(); }

std::string sse_frame(std::string_view event, std::string_view data) {
  std::string frame = "event: ";
  frame.append(event).append("\ndata: ").append(data).append("\n\n");
  return frame;
}

void register_routes(httplib::Server& server, Service& service) {
  // Multipart framing adds a little on top of the file itself.
  server.set_payload_max_length(service.config().max_upload_bytes + 1024 * 1024);
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 413 ? "PayloadTooLarge" : res.status == 404 ? "NotFound" : "Error";
    send_error(res, res.status, code, httplib::status_message(res.status));
  });

  server.Post("/documents", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string_view bytes = req.body;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("file")) throw Error(Errc::invalid_argument, "multipart field \"file\" is required");
        const auto& files = req.files;
        bytes = files.find("file")->second.content;
      }
      const DocumentManifest m = service.ingest(bytes);
      send_json(res, 201, manifest_object(m));
    });
  });

  server.Get("/documents", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json docs = json::array();
      for (const auto& m : service.list_documents()) docs.push_back(manifest_object(m));
      send_json(res, 200, {{"documents", docs}});
    });
  });

  server.Get(R"(/documents/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, manifest_object(service.document(req.matches[1].str()))); });
  });

  server.Get(R"(/documents/([^/]+)/pages/(\d+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string doc_id = req.matches[1].str();
      const std::string n = req.matches[2].str();
      if (n.size() > 9) throw Error(Errc::not_found, "no such page");
      const PageText page = service.page(doc_id, std::stoi(n));
      send_json(res, 200,
                {{"doc_id", doc_id},
                 {"page_number", page.page_number},
                 {"text", unicode::encode_utf8(page.text)},
                 {"char_count", page.char_count()}});
    });
  });

  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const Session s = service.create_session(string_field(body, "learner_id"), string_field(body, "doc_id"));
      send_json(res, 201, {{"session_id", s.session_id}});
    });
  });

  server.Post(R"(/sessions/([^/]+)/chat)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string session_id = req.matches[1].str();
      const json body = parse_body(req);
      const std::string query = string_field(body, "query", false);
      service.check_chat(session_id, query);
      stream_answer(res, [&service, session_id, query](const llm::DeltaSink& sink) {
        return service.chat(session_id, query, sink);
      });
    });
  });

  server.Post(R"(/documents/([^/]+)/actions)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string doc_id = req.matches[1].str();
      const json body = parse_body(req);
      const auto kind = parse_action_kind(string_field(body, "kind"));
      if (!kind || (*kind != ActionKind::summarize && *kind != ActionKind::explain)) {
        throw Error(Errc::invalid_argument, "kind must be summarize or explain");
      }
      const auto sel = body.find("selection");
      if (sel == body.end() || !sel->is_object()) throw Error(Errc::selection_missing, "selection is required");
      Selection selection;
      try {
        selection.page = sel->at("page").get<int>();
        const auto start = sel->at("start").get<std::int64_t>();
        const auto end = sel->at("end").get<std::int64_t>();
        if (start < 0 || end < 0) throw Error(Errc::invalid_argument, "selection offsets must be non-negative");
        selection.start = static_cast<std::size_t>(start);
        selection.end = static_cast<std::size_t>(end);
      } catch (const json::exception&) {
        throw Error(Errc::invalid_argument, "selection needs integer page, start and end");
      }
      const std::string learner_id = string_field(body, "learner_id", false);
      service.document(doc_id);
      service.resolve_selection(doc_id, selection);
      const ActionKind k = *kind;
      stream_answer(res, [&service, doc_id, k, selection, learner_id](const llm::DeltaSink& sink) {
        return service.act(doc_id, k, selection, learner_id, sink);
      });
    });
  });

  server.Post(R"(/documents/([^/]+)/quiz/next)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto card =
          service.next_card(req.matches[1].str(), string_field(body, "learner_id"), string_field(body, "section"));
      res.status = 200;
      res.set_content(card_json(card), kJson);
    });
  });

  server.Post(R"(/quiz/([^/]+)/answer)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto result = quiz::parse_result(string_field(body, "result"));
      if (!result || *result == quiz::Result::none) {
        throw Error(Errc::invalid_argument, "result must be correct or incorrect");
      }
      const CardAnswer a = service.answer_card(req.matches[1].str(), string_field(body, "learner_id"), *result);
      send_json(res, 200, {{"box", a.box}, {"answer_key", a.answer_key}});
    });
  });

  server.Put(R"(/profiles/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      LearnerProfile p;
      p.learner_id = req.matches[1].str();
      const auto interests = body.find("interests");
      if (interests == body.end() || !interests->is_array()) {
        throw Error(Errc::invalid_argument, "interests must be a list of strings");
      }
      for (const auto& i : *interests) {
        if (!i.is_string()) throw Error(Errc::invalid_argument, "interests must be a list of strings");
        p.interests.push_back(i.get<std::string>());
      }
      if (body.contains("display_name") && body["display_name"].is_string()) {
        p.display_name = body["display_name"].get<std::string>();
      }
      service.put_profile(std::move(p));
      res.status = 204;
    });
  });

  server.Get(R"(/profiles/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto p = service.profile(req.matches[1].str());
      if (!p) throw Error(Errc::not_found, "unknown learner");
      json j = {{"learner_id", p->learner_id}, {"interests", p->interests}};
      if (p->display_name) j["display_name"] = *p->display_name;
      send_json(res, 200, j);
    });
  });
}

bool serve_http(Service& service, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, service);
  return server.listen(host, port);
}

}  // namespace textbook
