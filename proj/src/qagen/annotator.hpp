#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "core/chat_client.hpp"
#include "core/raster.hpp"

namespace mmvm::qagen {

struct DescribeRequest {
  std::string key;          // "<image_id>#<track_id>", stable across runs
  Image image;              // the image with only this object marked
  std::string prompt_text;  // rendered describe template
};

struct JustifyRequest {
  std::string key;             // question id
  std::vector<Image> images;   // edited query image and candidate image
  std::string prompt_text;     // rendered justify template (answer revealed)
};

// Reason annotator. Implementations throw TransportError for delivery
// failures (retried) and ParseError for unusable output (not retried).
class AnnotatorClient {
 public:
  virtual ~AnnotatorClient() = default;
  virtual std::string name() const = 0;
  virtual std::string describe(const DescribeRequest& request) = 0;
  virtual std::string justify(const JustifyRequest& request) = 0;
};

// Returns fixed strings; used for smoke runs and tests.
class FixedAnnotator final : public AnnotatorClient {
 public:
  FixedAnnotator(std::string description, std::string reason)
      : description_(std::move(description)), reason_(std::move(reason)) {}
  std::string name() const override { return "fixed"; }
  std::string describe(const DescribeRequest&) override { return description_; }
  std::string justify(const JustifyRequest&) override { return reason_; }

 private:
  std::string description_;
  std::string reason_;
};

// Replays responses recorded by RecordingAnnotator, keyed by (call, key).
// Transcript lines: {"call":"describe"|"justify","key":"...","response":"..."}.
class TranscriptAnnotator final : public AnnotatorClient {
 public:
  explicit TranscriptAnnotator(const std::filesystem::path& transcript);
  std::string name() const override { return "transcript"; }
  std::string describe(const DescribeRequest& request) override;
  std::string justify(const JustifyRequest& request) override;

 private:
  std::string lookup(const std::string& call, const std::string& key) const;
  std::map<std::pair<std::string, std::string>, std::string> responses_;
};

// Forwards to another client and appends each successful exchange to a transcript.
class RecordingAnnotator final : public AnnotatorClient {
 public:
  RecordingAnnotator(AnnotatorClient& inner, std::filesystem::path transcript);
  std::string name() const override { return inner_.name(); }
  std::string describe(const DescribeRequest& request) override;
  std::string justify(const JustifyRequest& request) override;

 private:
  void append(const std::string& call, const std::string& key, const std::string& response);
  AnnotatorClient& inner_;
  std::filesystem::path transcript_;
  std::mutex mu_;
};

// Chat-completion backed annotator.
class HttpAnnotator final : public AnnotatorClient {
 public:
  explicit HttpAnnotator(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string name() const override { return "http:" + endpoint_.model; }
  std::string describe(const DescribeRequest& request) override;
  std::string justify(const JustifyRequest& request) override;

 private:
  ChatEndpoint endpoint_;
};

}  // namespace mmvm::qagen
