#pragma once

#include <string>
#include <string_view>

#include "textbook/error.hpp"
#include "textbook/orchestrator.hpp"
#include "textbook/quiz.hpp"
#include "textbook/service.hpp"

namespace httplib {
class Server;
}

namespace textbook {

// HTTP status for an error code.
int http_status(Errc code) noexcept;

std::string answer_json(const Answer& answer);
// The card as served to the learner: no answer_key.
std::string card_json(const quiz::QuizCard& card);
std::string manifest_json(const DocumentManifest& manifest);

// "event: <name>\ndata: <json>\n\n"
std::string sse_frame(std::string_view event, std::string_view data);

void register_routes(httplib::Server& server, Service& service);

// Blocks until the server stops. Returns false if the port cannot be bound.
bool serve_http(Service& service, const std::string& host, int port);

}  // namespace textbook
