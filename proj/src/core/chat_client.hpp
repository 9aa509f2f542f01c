#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>

#include "core/raster.hpp"

namespace mmvm {

// Minimal chat-completion contract: one user turn with text and PNG image
// attachments, POSTed to `<base_url>/v1/chat/completions`.
struct ChatEndpoint {
  std::string base_url;  // e.g. "http://localhost:8000"
  std::string model;
  std::string api_key;   // sent as a bearer token when non-empty
  std::chrono::seconds timeout{120};
  int max_tokens = 512;
};

// Request body for the call, exposed for tests and transcript recording.
std::string build_chat_request(const ChatEndpoint& endpoint, std::string_view prompt, std::span<const Image> images);

// Extracts choices[0].message.content. Throws ParseError when absent.
std::string parse_chat_response(std::string_view body);

// Throws TransportError on connection failure or a non-2xx status, and
// ParseError when the body is not a chat completion.
std::string chat_complete(const ChatEndpoint& endpoint, std::string_view prompt, std::span<const Image> images);

std::string base64_encode(std::string_view bytes);

}  // namespace mmvm
