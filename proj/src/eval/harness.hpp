#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/chat_client.hpp"
#include "core/manifest.hpp"
#include "core/resample.hpp"

namespace mmvm::eval {

struct ModelQuery {
  std::string question_id;
  std::string prompt;
  std::span<const Image> images;
  std::vector<std::string> labels;
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string name() const = 0;
  virtual bool supports_multi_image() const = 0;
  // Throws TransportError for retryable failures.
  virtual std::string answer(const ModelQuery& query) = 0;
};

// Answers every question correctly.
class OracleClient final : public ModelClient {
 public:
  explicit OracleClient(const DatasetManifest& manifest);
  std::string name() const override { return "oracle"; }
  bool supports_multi_image() const override { return true; }
  std::string answer(const ModelQuery& query) override;

 private:
  std::map<std::string, std::string> answers_;
};

// Uniform choice per question, seeded by (seed, question id).
class RandomClient final : public ModelClient {
 public:
  explicit RandomClient(std::uint64_t seed, bool multi_image = true) : seed_(seed), multi_(multi_image) {}
  std::string name() const override { return "random"; }
  bool supports_multi_image() const override { return multi_; }
  std::string answer(const ModelQuery& query) override;

 private:
  std::uint64_t seed_;
  bool multi_;
};

// Recorded responses, JSONL {"question_id", "response"}.
class ReplayClient final : public ModelClient {
 public:
  ReplayClient(std::string name, const std::string& jsonl);
  static ReplayClient from_file(const std::filesystem::path& path);
  std::string name() const override { return name_; }
  bool supports_multi_image() const override { return true; }
  std::string answer(const ModelQuery& query) override;

 private:
  std::string name_;
  std::map<std::string, std::string> responses_;
};

class HttpModelClient final : public ModelClient {
 public:
  HttpModelClient(ChatEndpoint endpoint, bool multi_image) : endpoint_(std::move(endpoint)), multi_(multi_image) {}
  std::string name() const override { return endpoint_.model; }
  bool supports_multi_image() const override { return multi_; }
  std::string answer(const ModelQuery& query) override;

 private:
  ChatEndpoint endpoint_;
  bool multi_;
};

struct PredictionEntry {
  std::string question_id;
  std::string raw_text;
  std::optional<std::string> extracted;
  double latency_ms = 0;
  int attempts = 0;
  std::optional<std::string> error;  // set when every attempt failed
};

struct PredictionLog {
  std::string model;
  std::string manifest_hash;
  std::vector<PredictionEntry> entries;
};

std::string serialize_log(const PredictionLog& log);  // JSONL, header line first
PredictionLog parse_log(std::string_view jsonl);
PredictionLog load_log(const std::filesystem::path& path);

// Prompt shown to models: the edited-image system text, the question and
// lettered options, and an instruction to answer with a letter.
std::string eval_prompt(const MatchingQuestion& q);

struct EvalConfig {
  int concurrency = 1;
  int max_attempts = 3;
  int backoff_base_ms = 200;
  int resize_long_edge = 0;
  bool record_latency = true;  // false writes 0 so logs are byte-reproducible
};

// Entries follow manifest order. When `loader` is empty, questions are sent
// without images.
PredictionLog run_eval(const DatasetManifest& manifest, ModelClient& client, const RasterLoader& loader,
                       const EvalConfig& config = {});

struct TypeScore {
  MatchType type;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::int64_t hundredths = 0;
  friend bool operator==(const TypeScore&, const TypeScore&) = default;
};

struct EvalReport {
  std::string model;
  std::string manifest_hash;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t unanswered = 0;
  std::int64_t overall_hundredths = 0;  // percent * 100
  std::vector<TypeScore> per_type;      // MatchType order, present types only
  const TypeScore* find(MatchType t) const noexcept;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// round_half_up(100 * correct / total, 2) as integer hundredths.
std::int64_t percent_hundredths(std::size_t correct, std::size_t total);
std::string format_hundredths(std::int64_t h);
std::int64_t parse_hundredths(std::string_view s);  // "42.65" -> 4265

// Throws InvalidArgument listing missing, unknown or duplicate ids.
EvalReport score(const DatasetManifest& manifest, const PredictionLog& log);

enum class ReportFormat { Table, Csv, Plot };
std::optional<ReportFormat> parse_report_format(std::string_view s) noexcept;

// Table and csv return text; plot returns PNG bytes.
std::string emit_report(const std::vector<EvalReport>& reports, ReportFormat format);
std::vector<EvalReport> parse_report_csv(std::string_view csv);

}  // namespace mmvm::eval
