#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "core/chat_client.hpp"

#include <openssl/evp.h>

#include "core/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace mmvm {

using nlohmann::json;

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string build_chat_request(const ChatEndpoint& endpoint, std::string_view prompt, std::span<const Image> images) {
  json content = json::array();
  for (const auto& img : images) {
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(encode_png(img))}}}});
  }
  content.push_back({{"type", "text"}, {"text", std::string(prompt)}});
  json body = {{"model", endpoint.model},
               {"max_tokens", endpoint.max_tokens},
               {"temperature", 0},
               {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  return body.dump();
}

std::string parse_chat_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("chat response is not JSON: ") + e.what());
  }
  try {
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return a list of content parts.
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const json::exception&) {
    throw ParseError("chat response has no choices[0].message.content");
  }
}

std::string chat_complete(const ChatEndpoint& endpoint, std::string_view prompt, std::span<const Image> images) {
  httplib::Client client(endpoint.base_url);
  const auto secs = static_cast<time_t>(endpoint.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  auto res = client.Post("/v1/chat/completions", headers, build_chat_request(endpoint, prompt, images),
                         "application/json");
  if (!res) throw TransportError("chat request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status));
  }
  return parse_chat_response(res->body);
}

}  // namespace mmvm
