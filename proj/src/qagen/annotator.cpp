#include "qagen/annotator.hpp"

#include <fstream>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "json.hpp"

namespace mmvm::qagen {

using nlohmann::json;

TranscriptAnnotator::TranscriptAnnotator(const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) throw IoError("cannot open transcript " + transcript.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      responses_[{j.at("call").get<std::string>(), j.at("key").get<std::string>()}] =
          j.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(transcript.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string TranscriptAnnotator::lookup(const std::string& call, const std::string& key) const {
  const auto it = responses_.find({call, key});
  if (it == responses_.end()) throw TransportError("no recorded " + call + " response for " + key);
  return it->second;
}

std::string TranscriptAnnotator::describe(const DescribeRequest& request) { return lookup("describe", request.key); }

std::string TranscriptAnnotator::justify(const JustifyRequest& request) { return lookup("justify", request.key); }

RecordingAnnotator::RecordingAnnotator(AnnotatorClient& inner, std::filesystem::path transcript)
    : inner_(inner), transcript_(std::move(transcript)) {}

std::string RecordingAnnotator::describe(const DescribeRequest& request) {
  std::string r = inner_.describe(request);
  append("describe", request.key, r);
  return r;
}

std::string RecordingAnnotator::justify(const JustifyRequest& request) {
  std::string r = inner_.justify(request);
  append("justify", request.key, r);
  return r;
}

void RecordingAnnotator::append(const std::string& call, const std::string& key, const std::string& response) {
  std::lock_guard lock(mu_);
  std::ofstream out(transcript_, std::ios::app);
  if (!out) throw IoError("cannot append to transcript " + transcript_.string());
  out << json{{"call", call}, {"key", key}, {"response", response}}.dump() << '\n';
}

std::string HttpAnnotator::describe(const DescribeRequest& request) {
  return chat_complete(endpoint_, request.prompt_text, std::span(&request.image, 1));
}

std::string HttpAnnotator::justify(const JustifyRequest& request) {
  return chat_complete(endpoint_, request.prompt_text, request.images);
}

}  // namespace mmvm::qagen
