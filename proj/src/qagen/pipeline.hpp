#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/manifest.hpp"
#include "core/resample.hpp"
#include "qagen/annotator.hpp"
#include "qagen/video.hpp"

namespace mmvm::qagen {

inline constexpr std::string_view kGeneratorName = "mmvm-qagen/1";

enum class AnnotationStatus { Ok, TransportFailed, ReasonInvalid };

std::string_view to_string(AnnotationStatus s) noexcept;

struct AnnotationOutcome {
  std::string question_id;
  AnnotationStatus status = AnnotationStatus::Ok;
  int attempts = 0;  // calls made for the failing step (or the justify step on success)
  std::string error;
};

struct AnnotationConfig {
  int max_attempts = 3;
  int backoff_base_ms = 200;  // delay before retry k is base * 2^(k-1)
  int concurrency = 1;
  std::size_t max_reason_chars = 4000;
};

struct AnnotationResult {
  std::vector<MatchingQuestion> questions;  // same order; reason set only on success
  std::vector<AnnotationOutcome> outcomes;  // one per question, same order
};

// Two-phase reasoning: describe the query and every candidate, then ask for
// a justification with the answer and those descriptions supplied.
AnnotationResult annotate_reasons(const std::vector<MatchingQuestion>& questions, const DatasetManifest& context,
                                  const RasterLoader& loader, AnnotatorClient& client,
                                  const AnnotationConfig& config = {});

std::string render_describe_prompt(int tag);
std::string render_justify_prompt(int query_tag, const std::string& query_info,
                                  const std::vector<std::pair<int, std::string>>& candidate_infos, int answer_tag);

struct GenerateConfig {
  double interval_seconds = 1.0;
  QuestionConfig questions;
  bool annotate = false;
  AnnotationConfig annotation;
};

// Hash of the settings that influence manifest content.
std::string config_hash(const GenerateConfig& config);

struct GenerationResult {
  DatasetManifest manifest;
  std::vector<AnnotationOutcome> failures;  // sidecar error report entries
};

// sample_pairs -> build_questions -> (optional) annotate_reasons -> manifest.
// `loader` and `annotator` are only used when config.annotate is set.
GenerationResult generate_dataset(const std::vector<VideoAnnotation>& videos, const GenerateConfig& config,
                                  std::uint64_t seed, const RasterLoader& loader = {},
                                  AnnotatorClient* annotator = nullptr);

// JSONL sidecar: one {"question_id","status","attempts","error"} per failure.
std::string serialize_failures(const std::vector<AnnotationOutcome>& failures);

}  // namespace mmvm::qagen
