#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "concode/grammar/derivation.hpp"
#include "concode/grammar/grammar.hpp"

namespace concode::inference {

// Recurrent state a scorer attaches to each decoded step.
struct ScorerState {
  virtual ~ScorerState() = default;
};
using StatePtr = std::shared_ptr<const ScorerState>;

struct StepContext {
  grammar::SymbolId nonterminal = 0;
  grammar::RuleId prev_rule = -1;    // -1 at the first step
  grammar::RuleId parent_rule = -1;  // -1 for the root
  const ScorerState* prev = nullptr;    // state of the previous step
  const ScorerState* parent = nullptr;  // state of the step that pushed `nonterminal`
};

// One way to expand the current nonterminal.
struct Expansion {
  grammar::RuleId rule = 0;
  std::string lexeme;  // empty for structural rules
  double logp = 0;
  int action = -1;     // output-table action, -1 for a pure copy
  int copy_slot = -1;  // best contributing copy position, -1 if none
};

struct ScoredStep {
  StatePtr state;
  std::vector<Expansion> expansions;
};

class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual ScoredStep score(const StepContext& ctx) const = 0;
};

// True when `text` lexes as exactly one token of the nonterminal's lexical
// class, so emitting it keeps the realized code re-lexable. Copy candidates
// that fail this (type slots such as `int` or `double[]`) are not offered.
bool lexeme_fits(const grammar::Grammar& g, grammar::SymbolId nonterminal, const std::string& text);

struct DecodeOptions {
  int beam_size = 3;
  int max_rules = 500;
  int max_tokens = 150;
  // Rank completed hypotheses by logp / steps instead of logp.
  bool length_normalize = false;
};

struct DecodeResult {
  std::vector<std::string> tokens;
  grammar::Derivation derivation;  // empty when truncated
  std::vector<Expansion> choices;  // one per step
  double logp = 0;
  bool truncated = false;
};

// Cheapest way to finish each nonterminal, minimizing (tokens, rules)
// lexicographically. Used to mask expansions that could not complete within
// the rule and token limits.
class CompletionCost {
 public:
  explicit CompletionCost(const grammar::Grammar& g);
  struct Cost {
    std::size_t tokens = 0;
    std::size_t rules = 0;
  };
  const Cost& of(grammar::SymbolId nonterminal) const { return cost_.at(nonterminal); }
  // Terminals a single application of the rule emits.
  std::size_t terminals(grammar::RuleId rule) const { return terminals_.at(static_cast<std::size_t>(rule)); }

 private:
  std::vector<Cost> cost_;
  std::vector<std::size_t> terminals_;
};

// Argmax decoding: one expansion per step, ties resolved by scorer order.
DecodeResult greedy_decode(const StepScorer& scorer, const grammar::Grammar& g, const DecodeOptions& options = {});

// Completed hypotheses, best first. A pass of width w expands each live
// hypothesis by its w best expansions and keeps the best w candidates;
// completed ones leave the beam, which shrinks until empty. Passes run for
// every width from 1 to beam_size and their completed sets are merged, so the
// best score never drops as the beam widens and beam_size 1 is greedy.
// Ties rank by earlier completion, then token order. If nothing completes,
// the best truncated hypothesis is returned alone with `truncated` set.
std::vector<DecodeResult> beam_decode(const StepScorer& scorer, const grammar::Grammar& g,
                                      const DecodeOptions& options = {});

}  // namespace concode::inference
