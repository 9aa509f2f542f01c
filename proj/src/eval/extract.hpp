#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmvm::eval {

inline constexpr std::string_view kExtractorVersion = "extract.v1";

// Tiers, first with any candidate wins:
//   1. "Answer: X" (case-insensitive "answer", optional parentheses);
//   2. standalone uppercase label tokens, skipping "A"/"I" used as an
//      article or pronoun (followed by a lowercase word other than is/and/or);
//   3. whole-word, case-insensitive occurrence of an option's display text.
// Returns nullopt when the deciding tier has zero or several distinct labels.
std::optional<std::string> extract_choice(std::string_view text, const std::vector<std::string>& labels,
                                          const std::vector<std::string>& option_texts = {});

}  // namespace mmvm::eval
