#include "core/types.hpp"

namespace mmvm {
namespace {

constexpr std::array<std::string_view, 9> kMatchTypeCodes = {"CL", "SP", "TM", "SZ", "RP",
                                                             "OO", "BR", "OM", "SFT-untyped"};

}  // namespace

std::string_view to_string(MatchType t) noexcept { return kMatchTypeCodes[static_cast<std::size_t>(t)]; }

std::optional<MatchType> parse_match_type(std::string_view code) noexcept {
  for (std::size_t i = 0; i < kMatchTypeCodes.size(); ++i) {
    if (kMatchTypeCodes[i] == code) return static_cast<MatchType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ReferringMode m) noexcept {
  return m == ReferringMode::VisualPrompt ? "visual_prompt" : "text_prompt";
}

std::optional<ReferringMode> parse_referring_mode(std::string_view s) noexcept {
  if (s == "visual_prompt") return ReferringMode::VisualPrompt;
  if (s == "text_prompt") return ReferringMode::TextPrompt;
  return std::nullopt;
}

VisualPromptSpec make_prompt_spec(int tag, Rgb color, int thickness) {
  return VisualPromptSpec{tag, color, thickness, kWhite, color};
}

std::string option_label(std::size_t index) {
  std::string label;
  std::size_t n = index + 1;
  while (n > 0) {
    --n;
    label.insert(label.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  }
  return label;
}

std::optional<std::size_t> option_index(std::string_view label) noexcept {
  if (label.empty() || label.size() > 4) return std::nullopt;
  std::size_t n = 0;
  for (char c : label) {
    if (c < 'A' || c > 'Z') return std::nullopt;
    n = n * 26 + static_cast<std::size_t>(c - 'A' + 1);
  }
  return n - 1;
}

std::string question_prompt_text(const MatchingQuestion& q) {
  if (q.question_text && !q.question_text->empty()) return *q.question_text;
  if (q.query.mode == ReferringMode::TextPrompt) {
    return "Which object in the second image is the same instance as " + q.query.text + " in the first image?";
  }
  const int tag = q.query.prompt ? q.query.prompt->object_tag : 1;
  return "Which object in the second image is the same instance as the object marked " + std::to_string(tag) +
         " in the first image?";
}

std::string option_display_text(const AnswerOption& option) {
  if (option.referral.mode == ReferringMode::TextPrompt) return option.referral.text;
  const int tag = option.referral.prompt ? option.referral.prompt->object_tag : 0;
  return "object-" + std::to_string(tag);
}

}  // namespace mmvm
