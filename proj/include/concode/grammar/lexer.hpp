#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace concode::grammar {

enum class TokenKind {
  kIdentifier,
  kKeyword,
  kIntLiteral,
  kFloatLiteral,
  kCharLiteral,
  kStringLiteral,
  kOperator,
};

struct Token {
  TokenKind kind = TokenKind::kOperator;
  std::string text;
  // Byte span in the lexed source; zero for synthesized tokens.
  std::size_t offset = 0;
  std::size_t length = 0;
};

class LexError : public std::runtime_error {
 public:
  LexError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

bool is_java_keyword(std::string_view word);

// Lexes a Java-subset method declaration. Whitespace and comments are
// dropped. Generic type applications whose arguments are all capitalised type
// names (`List<String>`, `Map<K, V[]>`, `ArrayList<>`) collapse into one
// identifier token with internal whitespace removed.
std::vector<Token> tokenize_code(std::string_view text);

// Kind a bare token string would lex to (used for synthesized tokens).
TokenKind classify_token(std::string_view text);

std::vector<std::string> token_texts(const std::vector<Token>& tokens);
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace concode::grammar
