#include "concode/grammar/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace concode::grammar {

namespace {

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kKeywords = {
      "abstract", "assert",     "boolean",   "break",     "byte",
      "case",     "catch",      "char",      "class",     "const",
      "continue", "default",    "do",        "double",    "else",
      "enum",     "extends",    "final",     "finally",   "float",
      "for",      "goto",       "if",        "implements", "import",
      "instanceof", "int",      "interface", "long",      "native",
      "new",      "package",    "private",   "protected", "public",
      "return",   "short",      "static",    "strictfp",  "super",
      "switch",   "synchronized", "this",    "throw",     "throws",
      "transient", "try",       "void",      "volatile",  "while",
      "true",     "false",      "null"};
  return kKeywords;
}

// Longest match first.
constexpr std::array<std::string_view, 50> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&",
    "||",   "==",  "!=",  "<=",  ">=",  "+=", "-=", "*=", "/=", "%=",
    "&=",   "|=",  "^=",  "<<",  ">>",  "(",  ")",  "{",  "}",  "[",
    "]",    ";",   ",",   ".",   "@",   "=",  ">",  "<",  "!",  "~",
    "?",    ":",   "+",   "-",   "*",   "/",  "&",  "|",  "^",  "%"};

bool is_ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_part(unsigned char c) {
  return is_ident_start(c) || std::isdigit(c);
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      if (pos_ >= text_.size()) break;
      out.push_back(next());
    }
    return out;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const unsigned char c = text_[pos_];
      if (std::isspace(c)) {
        ++pos_;
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '/' && peek(1) == '*') {
        const std::size_t start = pos_;
        const auto end = text_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) {
          throw LexError("unterminated comment", start);
        }
        pos_ = end + 2;
      } else {
        break;
      }
    }
  }

  Token make(TokenKind kind, std::size_t start) const {
    return Token{kind, std::string(text_.substr(start, pos_ - start)), start,
                 pos_ - start};
  }

  Token next() {
    const std::size_t start = pos_;
    const unsigned char c = text_[pos_];
    if (is_ident_start(c)) return identifier(start);
    if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      return number(start);
    }
    if (c == '"') return quoted(start, '"', TokenKind::kStringLiteral);
    if (c == '\'') return quoted(start, '\'', TokenKind::kCharLiteral);
    for (std::string_view op : kOperators) {
      if (text_.substr(pos_, op.size()) == op) {
        pos_ += op.size();
        return make(TokenKind::kOperator, start);
      }
    }
    throw LexError(std::string("illegal character '") + static_cast<char>(c) + "'", start);
  }

  std::string_view scan_word() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_part(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  Token identifier(std::size_t start) {
    const std::string_view word = scan_word();
    if (keywords().count(word)) return make(TokenKind::kKeyword, start);
    if (std::isupper(static_cast<unsigned char>(word[0]))) {
      std::string merged(word);
      const std::size_t save = pos_;
      if (try_type_arguments(merged)) {
        Token t{TokenKind::kIdentifier, merged, start, pos_ - start};
        return t;
      }
      pos_ = save;
    }
    return make(TokenKind::kIdentifier, start);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  // Parses `<...>` after a capitalised name; appends normalised text to out.
  bool try_type_arguments(std::string& out) {
    skip_ws();
    if (peek() != '<') return false;
    ++pos_;
    out += '<';
    skip_ws();
    if (peek() == '>') {
      ++pos_;
      out += '>';
      return true;
    }
    while (true) {
      skip_ws();
      if (!type_argument(out)) return false;
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        out += ',';
        continue;
      }
      if (peek() == '>') {
        ++pos_;
        out += '>';
        return true;
      }
      return false;
    }
  }

  bool type_argument(std::string& out) {
    if (peek() == '?') {
      ++pos_;
      out += '?';
      skip_ws();
      if (!is_ident_start(peek())) return true;
      const std::size_t save = pos_;
      const std::string_view bound = scan_word();
      if (bound != "extends" && bound != "super") {
        pos_ = save;
        return true;
      }
      out += ' ';
      out += bound;
      out += ' ';
      skip_ws();
    }
    if (!is_ident_start(peek())) return false;
    std::string_view word = scan_word();
    const bool primitive = keywords().count(word) > 0;
    if (!primitive && !std::isupper(static_cast<unsigned char>(word[0]))) {
      // Lower-case qualified package prefix is allowed: java.util.List.
      out += word;
      while (peek() == '.') {
        ++pos_;
        out += '.';
        if (!is_ident_start(peek())) return false;
        word = scan_word();
        out += word;
        if (std::isupper(static_cast<unsigned char>(word[0]))) break;
      }
      if (!std::isupper(static_cast<unsigned char>(word[0]))) return false;
    } else {
      out += word;
    }
    if (!primitive) {
      const std::size_t save = pos_;
      std::string nested;
      if (!try_type_arguments(nested)) pos_ = save;
      else out += nested;
    }
    skip_ws();
    while (peek() == '[') {
      ++pos_;
      skip_ws();
      if (peek() != ']') return false;
      ++pos_;
      out += "[]";
      skip_ws();
    }
    return true;
  }

  Token number(std::size_t start) {
    bool is_float = false;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X' || peek(1) == 'b' || peek(1) == 'B')) {
      pos_ += 2;
      while (pos_ < text_.size() &&
             (std::isxdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
    } else {
      auto digits = [&] {
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          ++pos_;
        }
      };
      digits();
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        is_float = true;
        ++pos_;
        digits();
      } else if (peek() == '.' && !is_ident_start(peek(1)) && peek(1) != '.') {
        is_float = true;
        ++pos_;
      }
      if (peek() == 'e' || peek() == 'E') {
        const char sign = peek(1);
        const std::size_t skip = (sign == '+' || sign == '-') ? 2 : 1;
        if (std::isdigit(static_cast<unsigned char>(peek(skip)))) {
          is_float = true;
          pos_ += skip;
          digits();
        }
      }
    }
    const char suffix = peek();
    if (suffix == 'f' || suffix == 'F' || suffix == 'd' || suffix == 'D') {
      is_float = true;
      ++pos_;
    } else if (suffix == 'l' || suffix == 'L') {
      ++pos_;
    }
    return make(is_float ? TokenKind::kFloatLiteral : TokenKind::kIntLiteral, start);
  }

  Token quoted(std::size_t start, char quote, TokenKind kind) {
    ++pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (c == '\n') break;
      ++pos_;
      if (c == quote) return make(kind, start);
    }
    throw LexError(kind == TokenKind::kStringLiteral ? "unterminated string literal"
                                                     : "unterminated char literal",
                   start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_java_keyword(std::string_view word) { return keywords().count(word) > 0; }

std::vector<Token> tokenize_code(std::string_view text) { return Lexer(text).run(); }

TokenKind classify_token(std::string_view text) {
  try {
    const auto tokens = tokenize_code(text);
    if (tokens.size() == 1) return tokens.front().kind;
  } catch (const LexError&) {
  }
  return TokenKind::kIdentifier;
}

std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace concode::grammar
