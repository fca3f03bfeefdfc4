#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "concode/grammar/grammar.hpp"

namespace concode::grammar {

inline constexpr int kNoParent = -1;

// One rule application. Lexical rules (identifier/literal placeholders) carry
// the concrete terminal string in `lexeme`; structural rules leave it empty.
struct RuleChoice {
  RuleId rule = 0;
  std::string lexeme;

  friend bool operator==(const RuleChoice&, const RuleChoice&) = default;
};

struct DerivationStep {
  RuleId rule = 0;
  int parent = kNoParent;  // step whose rhs introduced the expanded nonterminal
  std::string lexeme;

  friend bool operator==(const DerivationStep&, const DerivationStep&) = default;
};

// Pre-order (depth-first, leftmost) sequence of rule applications.
class Derivation {
 public:
  Derivation() = default;
  explicit Derivation(std::vector<DerivationStep> steps) : steps_(std::move(steps)) {}

  const std::vector<DerivationStep>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  const DerivationStep& operator[](std::size_t i) const { return steps_[i]; }

  std::vector<RuleId> rule_ids() const;
  std::vector<RuleChoice> choices() const;

  friend bool operator==(const Derivation&, const Derivation&) = default;

 private:
  std::vector<DerivationStep> steps_;
};

class DerivationError : public std::runtime_error {
 public:
  DerivationError(const std::string& what, int step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Replays rule choices on a frontier stack starting at the start symbol and
// fills in parent pointers. Throws DerivationError on lhs mismatch, leftover
// frontier, rules after the frontier empties, or a lexical rule without a
// lexeme.
Derivation validate(std::span<const RuleChoice> choices, const Grammar& g);

// Terminal yield of the derivation tree, left to right. Placeholder terminals
// are replaced by step lexemes.
std::vector<std::string> realize(const Derivation& d, const Grammar& g);

// Token-kind-annotated yield, suitable to feed back into parse().
std::vector<Token> realize_tokens(const Derivation& d, const Grammar& g);

// Incremental frontier used by replay and by decoders.
class Frontier {
 public:
  struct Entry {
    SymbolId nonterminal;
    int parent_step;
  };

  explicit Frontier(const Grammar& g);

  bool empty() const { return stack_.empty(); }
  std::size_t size() const { return stack_.size(); }
  const Entry& top() const { return stack_.back(); }
  // Pops the top nonterminal and pushes the rule's rhs nonterminals
  // right-to-left, tagged with `step` as parent.
  void apply(const ProductionRule& rule, int step);

 private:
  std::vector<Entry> stack_;
};

}  // namespace concode::grammar
