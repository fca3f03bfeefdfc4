#include "concode/grammar/sampler.hpp"

#include <algorithm>
#include <limits>

namespace concode::grammar {

namespace {

constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;

struct RuleStats {
  std::vector<std::size_t> nt_yield;    // minimal yield length per nonterminal
  std::vector<std::size_t> nt_height;   // minimal derivation height per nonterminal
  std::vector<std::size_t> rule_yield;
  std::vector<std::size_t> rule_height;
};

RuleStats compute_stats(const Grammar& g) {
  RuleStats s;
  s.nt_yield.assign(g.num_nonterminals(), kInf);
  s.nt_height.assign(g.num_nonterminals(), kInf);
  s.rule_yield.assign(g.num_rules(), kInf);
  s.rule_height.assign(g.num_rules(), kInf);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : g.rules()) {
      std::size_t yield = 0;
      std::size_t height = 1;
      for (const auto& sym : r.rhs) {
        if (sym.terminal) {
          ++yield;
          continue;
        }
        yield = std::min(kInf, yield + s.nt_yield[sym.id]);
        height = std::max(height, s.nt_height[sym.id] >= kInf ? kInf : s.nt_height[sym.id] + 1);
      }
      if (yield < s.rule_yield[r.id] || height < s.rule_height[r.id]) {
        s.rule_yield[r.id] = std::min(s.rule_yield[r.id], yield);
        s.rule_height[r.id] = std::min(s.rule_height[r.id], height);
        changed = true;
      }
      if (yield < s.nt_yield[r.lhs]) {
        s.nt_yield[r.lhs] = yield;
        changed = true;
      }
      if (height < s.nt_height[r.lhs]) {
        s.nt_height[r.lhs] = height;
        changed = true;
      }
    }
  }
  return s;
}

const std::vector<std::string>& pool_for(LexicalClass c, const SampleOptions& o) {
  switch (c) {
    case LexicalClass::kIdentifier: return o.identifiers;
    case LexicalClass::kInteger: return o.integers;
    case LexicalClass::kFloat: return o.floats;
    case LexicalClass::kCharacter: return o.chars;
    case LexicalClass::kString: return o.strings;
  }
  return o.identifiers;
}

}  // namespace

Derivation sample_derivation(const Grammar& g, std::mt19937_64& rng, const SampleOptions& options) {
  const RuleStats stats = compute_stats(g);
  if (stats.nt_yield[g.start_symbol()] > options.max_tokens) {
    throw std::invalid_argument("token budget below the grammar's minimal yield");
  }
  struct Pending {
    SymbolId nt;
    int depth;
    int parent;
  };
  std::vector<Pending> stack{{g.start_symbol(), 0, kNoParent}};
  std::size_t committed = stats.nt_yield[g.start_symbol()];
  std::vector<DerivationStep> steps;
  std::vector<RuleId> candidates;

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const auto rules = g.rules_for(p.nt);
    const std::size_t base = committed - stats.nt_yield[p.nt];
    candidates.clear();
    for (RuleId r : rules) {
      if (base + stats.rule_yield[r] > options.max_tokens) continue;
      if (p.depth >= options.max_depth && stats.rule_height[r] != stats.nt_height[p.nt]) continue;
      candidates.push_back(r);
    }
    if (candidates.empty()) {
      for (RuleId r : rules) {
        if (stats.rule_yield[r] == stats.nt_yield[p.nt]) candidates.push_back(r);
      }
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const RuleId chosen = candidates[pick(rng)];
    const auto& rule = g.rule(chosen);
    committed = base + stats.rule_yield[chosen];

    DerivationStep step{chosen, p.parent, {}};
    if (rule.is_lexical()) {
      const auto& pool = pool_for(*g.lexical_class(p.nt), options);
      std::uniform_int_distribution<std::size_t> pick_lexeme(0, pool.size() - 1);
      step.lexeme = pool[pick_lexeme(rng)];
    }
    const int index = static_cast<int>(steps.size());
    steps.push_back(std::move(step));
    for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it) {
      if (!it->terminal) stack.push_back({it->id, p.depth + 1, index});
    }
  }
  return Derivation(std::move(steps));
}

}  // namespace concode::grammar
