#include "concode/corpus/text.hpp"

#include <cctype>
#include <regex>

namespace concode::corpus {

namespace {

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower_or_digit(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c));
}
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> camel_split(std::string_view name) {
  std::vector<std::string> pieces;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) pieces.push_back(to_lower(current));
    current.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      flush();
      continue;
    }
    if (!current.empty() && is_upper(c)) {
      const char prev = current.back();
      const bool next_lower = i + 1 < name.size() && std::islower(static_cast<unsigned char>(name[i + 1]));
      // camelCase boundary, or the last capital of an acronym run (HTMLFile).
      if (is_lower_or_digit(prev) || (is_upper(prev) && next_lower)) flush();
    }
    current += c;
  }
  flush();
  return pieces;
}

std::vector<std::string> strip_doc(std::string_view doc) {
  std::string text(doc);

  static const std::regex kDelimiters(R"(/\*\*|\*/|/\*)");
  static const std::regex kLeadingStars(R"((^|\n)[ \t]*\*+)");
  text = std::regex_replace(text, kDelimiters, " ");
  text = std::regex_replace(text, kLeadingStars, "$1 ");

  static const std::regex kInheritDoc(R"(\{@inheritDoc\s*\})");
  static const std::regex kInlineTag(R"(\{@[A-Za-z]+\s*([^}]*)\})");
  text = std::regex_replace(text, kInheritDoc, " ");
  text = std::regex_replace(text, kInlineTag, " $1 ");

  static const std::regex kBlockTag(R"((^|\s)@[A-Za-z]+)");
  std::smatch m;
  if (std::regex_search(text, m, kBlockTag)) text = text.substr(0, static_cast<std::size_t>(m.position(0)));

  static const std::regex kHtmlTag(R"(<[^>]*>)");
  static const std::regex kEntity(R"(&[A-Za-z]+;)");
  text = std::regex_replace(text, kHtmlTag, " ");
  text = std::regex_replace(text, kEntity, " ");

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    const auto tokens = word_tokens(std::string_view(text.data() + i, j - i));
    out.insert(out.end(), tokens.begin(), tokens.end());
    i = j;
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view word) {
  auto pieces = camel_split(word);
  if (pieces.empty()) return {};
  std::vector<std::string> out{to_lower(word)};
  if (pieces.size() > 1) out.insert(out.end(), pieces.begin(), pieces.end());
  return out;
}

}  // namespace concode::corpus
