#include "eval/extract.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "core/error.hpp"

namespace mmvm::eval {

namespace {

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool is_label(const std::vector<std::string>& labels, std::string_view s) {
  return std::find(labels.begin(), labels.end(), s) != labels.end();
}

std::optional<std::string> decide(const std::set<std::string>& found) {
  if (found.size() == 1) return *found.begin();
  return std::nullopt;
}

// Lowercase word starting at i after spaces, or empty.
std::string next_word(std::string_view text, std::size_t i) {
  while (i < text.size() && text[i] == ' ') ++i;
  std::string w;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) w.push_back(text[i++]);
  return w;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::optional<std::string> extract_choice(std::string_view text, const std::vector<std::string>& labels,
                                          const std::vector<std::string>& option_texts) {
  if (labels.empty()) throw InvalidArgument("no option labels");
  const std::string s(text);

  static const std::regex answer_re(R"(\b[Aa][Nn][Ss][Ww][Ee][Rr]\s*(?:[Ii][Ss]\s*)?[:：]\s*\(?\s*([A-Z]{1,2})\b)");
  std::set<std::string> found;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), answer_re); it != std::sregex_iterator(); ++it) {
    if (is_label(labels, (*it)[1].str())) found.insert((*it)[1].str());
  }
  if (!found.empty()) return decide(found);

  for (std::size_t i = 0; i < s.size();) {
    if (!std::isupper(static_cast<unsigned char>(s[i])) || (i > 0 && is_word(s[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word(s[j])) ++j;
    const std::string token = s.substr(i, j - i);
    const bool standalone = token.size() <= 2 && std::all_of(token.begin(), token.end(), [](char c) {
      return std::isupper(static_cast<unsigned char>(c)) != 0;
    });
    // "object-A" style compounds are not standalone.
    const bool joined = (i > 0 && s[i - 1] == '-') || (j < s.size() && s[j] == '-' && j + 1 < s.size() && is_word(s[j + 1]));
    if (standalone && !joined && is_label(labels, token)) {
      bool prose = false;
      if (token == "A" || token == "I") {
        const std::string w = next_word(s, j);
        prose = j < s.size() && s[j] == ' ' && !w.empty() && std::islower(static_cast<unsigned char>(w[0])) &&
                w != "is" && w != "and" && w != "or";
      }
      if (!prose) found.insert(token);
    }
    i = j;
  }
  if (!found.empty()) return decide(found);

  const std::string ls = lower(s);
  for (std::size_t k = 0; k < option_texts.size() && k < labels.size(); ++k) {
    const std::string needle = lower(option_texts[k]);
    if (needle.empty()) continue;
    for (std::size_t pos = ls.find(needle); pos != std::string::npos; pos = ls.find(needle, pos + 1)) {
      const std::size_t end = pos + needle.size();
      const bool left = pos == 0 || !is_word(ls[pos - 1]);
      const bool right = end == ls.size() || !is_word(ls[end]);
      if (left && right) {
        found.insert(labels[k]);
        break;
      }
    }
  }
  return decide(found);
}

}  // namespace mmvm::eval
