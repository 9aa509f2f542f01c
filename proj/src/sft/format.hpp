#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/manifest.hpp"

namespace mmvm::sft {

enum class Variant { EditedImages, ObjectTokens };

std::string_view to_string(Variant v) noexcept;  // "A_edited_images" / "B_object_tokens"
std::optional<Variant> parse_variant(std::string_view s) noexcept;

std::string_view system_text() noexcept;
std::string_view system_text_version() noexcept;

struct ObjectSlot {
  std::string placeholder;  // "<obj_k>"
  std::string name;         // "object-k"
  std::string image_id;
  std::string track_id;
  friend bool operator==(const ObjectSlot&, const ObjectSlot&) = default;
};

struct Turn {
  std::string from;  // "human" or "gpt"
  std::string value;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct InstructionRecord {
  std::string id;  // question id + "#A" or "#B"
  std::string question_id;
  Variant variant = Variant::EditedImages;
  std::vector<std::string> image_refs;
  std::string system_text;
  std::vector<ObjectSlot> object_slots;
  std::vector<Turn> conversation;
  friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

struct FormatOptions {
  std::string image_prefix = "images/";  // prepended to edited image file names
};

// Question text plus one "X. <option>" line per option.
std::string question_block(const MatchingQuestion& q);

// "Answer: X", followed by the reason on the next line when present.
std::string answer_text(const MatchingQuestion& q);

// Variant B needs every option to be a visual referral to an object present
// in `manifest`; throws InvalidArgument otherwise.
InstructionRecord format_record(const MatchingQuestion& q, Variant variant, const DatasetManifest& manifest,
                                const FormatOptions& options = {});

enum class Mode { A, B, Mix, Both };
std::optional<Mode> parse_mode(std::string_view s) noexcept;
std::string_view to_string(Mode m) noexcept;

// Variant of question i under Mix: Bernoulli(p_variant_b) drawn from
// derive_seed(seed, i).
Variant mixed_variant(double p_variant_b, std::uint64_t seed, std::size_t index);

// Records in question order; Both emits A then B for each question.
std::vector<InstructionRecord> format_dataset(const DatasetManifest& manifest, Mode mode, double p_variant_b,
                                              std::uint64_t seed, const FormatOptions& options = {});

std::string serialize_record(const InstructionRecord& record);  // one JSON line, no newline
InstructionRecord parse_record(std::string_view line);
std::string serialize_records(const std::vector<InstructionRecord>& records);  // JSONL

using EmbeddingProvider = std::function<std::vector<double>(const std::string& image_id, const std::string& track_id)>;
// Late binding of slot placeholders to embeddings.
std::map<std::string, std::vector<double>> bind_slots(const InstructionRecord& record,
                                                      const EmbeddingProvider& provider);

}  // namespace mmvm::sft
