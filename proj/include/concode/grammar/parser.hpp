#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "concode/grammar/derivation.hpp"
#include "concode/grammar/grammar.hpp"
#include "concode/grammar/lexer.hpp"

namespace concode::grammar {

struct ParseOptions {
  std::size_t max_tokens = 150;
};

class ParseError : public std::runtime_error {
 public:
  enum class Reason { kNoParse, kTooLong };

  ParseError(Reason reason, const std::string& what, std::size_t furthest_token)
      : std::runtime_error(what), reason_(reason), furthest_token_(furthest_token) {}
  Reason reason() const { return reason_; }
  // Index of the first token the recognizer could not consume; equals the
  // input length when the input ended early.
  std::size_t furthest_token() const { return furthest_token_; }

 private:
  Reason reason_;
  std::size_t furthest_token_;
};

// Earley recognition followed by extraction of the preferred derivation: the
// one whose pre-order rule-id sequence is lexicographically smallest, i.e.
// the lowest rule id wins at every choice point.
Derivation parse(std::span<const Token> tokens, const Grammar& g, const ParseOptions& options = {});

}  // namespace concode::grammar
