#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/mask.hpp"
#include "core/raster.hpp"

namespace mmvm {

// Cue categories of benchmark items, plus one internal tag for generated
// training items, which carry no manually assigned category.
enum class MatchType : std::uint8_t { CL, SP, TM, SZ, RP, OO, BR, OM, SftUntyped };

inline constexpr std::array<MatchType, 8> kBenchmarkMatchTypes = {
    MatchType::CL, MatchType::SP, MatchType::TM, MatchType::SZ,
    MatchType::RP, MatchType::OO, MatchType::BR, MatchType::OM};

std::string_view to_string(MatchType t) noexcept;
std::optional<MatchType> parse_match_type(std::string_view code) noexcept;

enum class ReferringMode : std::uint8_t { VisualPrompt, TextPrompt };

std::string_view to_string(ReferringMode m) noexcept;
std::optional<ReferringMode> parse_referring_mode(std::string_view s) noexcept;

struct ImageRef {
  std::string id;
  int width = 0;
  int height = 0;
  std::string uri;
  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct SegmentedObject {
  std::string track_id;
  std::string frame_id;
  Mask mask;
  std::optional<std::string> category;
  friend bool operator==(const SegmentedObject&, const SegmentedObject&) = default;
};

struct VisualPromptSpec {
  int object_tag = 1;
  Rgb contour_color{};
  int contour_thickness = 3;
  Rgb tag_text_color = kWhite;
  Rgb tag_background_color{};
  friend bool operator==(const VisualPromptSpec&, const VisualPromptSpec&) = default;
};

inline constexpr int kDefaultContourThickness = 3;

VisualPromptSpec make_prompt_spec(int tag, Rgb color, int thickness = kDefaultContourThickness);

// How a question points at an object: a rendered contour+tag on a specific
// image object, or a free-text description.
struct ObjectReferral {
  ReferringMode mode = ReferringMode::VisualPrompt;
  std::string image_id;  // visual_prompt only
  std::string track_id;  // visual_prompt only
  std::optional<VisualPromptSpec> prompt;
  std::string text;  // text_prompt only
  friend bool operator==(const ObjectReferral&, const ObjectReferral&) = default;
};

struct AnswerOption {
  std::string label;
  ObjectReferral referral;
  friend bool operator==(const AnswerOption&, const AnswerOption&) = default;
};

struct MatchingQuestion {
  std::string id;
  std::vector<std::string> image_ids;
  std::optional<std::string> question_text;
  ObjectReferral query;
  std::vector<AnswerOption> options;
  std::string answer;
  std::vector<MatchType> match_types;  // kept sorted and unique
  std::optional<std::string> reason;
  friend bool operator==(const MatchingQuestion&, const MatchingQuestion&) = default;
};

// Option labels: A..Z, then AA, AB, ... (bijective base 26).
std::string option_label(std::size_t index);
std::optional<std::size_t> option_index(std::string_view label) noexcept;

// Text shown to a model for a question; falls back to the default wording.
std::string question_prompt_text(const MatchingQuestion& q);
// Display text of an option: the free-text description, or "object-<tag>".
std::string option_display_text(const AnswerOption& option);

}  // namespace mmvm
