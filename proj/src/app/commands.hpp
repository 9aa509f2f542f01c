#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

// Command implementations behind the C API. Each writes into its output
// location and returns a JSON summary of what it did.
namespace mmvm::app {

struct GenerateOptions {
  std::string source = "synthetic";  // "synthetic" or a YouTube-VIS style JSON path
  std::filesystem::path image_root;  // for JSON sources
  int synthetic_videos = 20;
  double source_fps = 5.0;
  double interval_seconds = 1.0;
  int option_cap = 0;
  int contour_thickness = 3;
  std::uint64_t seed = 0;
  std::string annotator = "none";  // none | fixed | transcript | http
  std::string annotator_arg;       // transcript path or base URL
  std::string annotator_model;
  std::string api_key;
  std::filesystem::path record_transcript;  // optional, wraps the annotator
  int concurrency = 1;
  int max_attempts = 3;
  int backoff_base_ms = 200;
  std::filesystem::path output_dir;
};
nlohmann::json run_generate(const GenerateOptions& o);

struct RenderOptions {
  std::filesystem::path manifest;
  std::filesystem::path image_root;
  std::filesystem::path output_dir;
  int resize_long_edge = 0;
  std::string question_id;  // empty = all
};
nlohmann::json run_render(const RenderOptions& o);

struct AugmentOptions {
  double crop_lo = 0.6;
  double crop_hi = 1.0;
  int resize_target = 224;
  double hflip_prob = 0.5;
  std::vector<int> rotations = {0, 90, 180, 270};
  double arbitrary_rotation_max = 0.0;
  int visibility_threshold = 16;
};

struct SimulateOptions {
  std::filesystem::path manifest;  // empty = synthetic shapes corpus
  std::filesystem::path image_root;
  int synthetic_images = 20;
  int count = 10;
  AugmentOptions augment;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
};
nlohmann::json run_simulate(const SimulateOptions& o);

struct PretrainOptions {
  int train_images = 200;
  int train_min_objects = 4;
  int train_max_objects = 8;
  int heldout_pairs = 100;
  int heldout_min_objects = 8;
  int heldout_max_objects = 12;
  AugmentOptions augment;
  int steps = 2000;
  int pairs_per_step = 1;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double temperature = 1.0;
  bool cosine = false;
  int hidden_dim = 128;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
};
nlohmann::json run_pretrain(const PretrainOptions& o);

struct FormatSftOptions {
  std::filesystem::path manifest;
  std::string mode = "mix";  // A | B | mix | both
  double p_variant_b = 0.5;
  std::uint64_t seed = 0;
  std::string image_prefix = "images/";
  std::filesystem::path output;
};
nlohmann::json run_format_sft(const FormatSftOptions& o);

struct EvaluateOptions {
  std::filesystem::path manifest;
  std::filesystem::path image_root;  // empty = no images sent
  std::string client = "oracle";     // oracle | random | replay | http
  std::string client_arg;            // replay path or base URL
  std::string model;
  std::string api_key;
  bool multi_image = true;
  int concurrency = 1;
  int max_attempts = 3;
  int backoff_base_ms = 200;
  int resize_long_edge = 0;
  bool record_latency = true;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
};
nlohmann::json run_evaluate(const EvaluateOptions& o);

struct ReportOptions {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> logs;
  std::string format = "table";
  std::filesystem::path output;
};
nlohmann::json run_report(const ReportOptions& o);

// Quick invariant checks; summary holds {"passed": bool, "checks": [...]}.
nlohmann::json run_selftest(std::uint64_t seed);

}  // namespace mmvm::app
