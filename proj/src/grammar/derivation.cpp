#include "concode/grammar/derivation.hpp"

namespace concode::grammar {

std::vector<RuleId> Derivation::rule_ids() const {
  std::vector<RuleId> out;
  out.reserve(steps_.size());
  for (const auto& s : steps_) out.push_back(s.rule);
  return out;
}

std::vector<RuleChoice> Derivation::choices() const {
  std::vector<RuleChoice> out;
  out.reserve(steps_.size());
  for (const auto& s : steps_) out.push_back({s.rule, s.lexeme});
  return out;
}

Frontier::Frontier(const Grammar& g) { stack_.push_back({g.start_symbol(), kNoParent}); }

void Frontier::apply(const ProductionRule& rule, int step) {
  stack_.pop_back();
  for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it) {
    if (!it->terminal) stack_.push_back({it->id, step});
  }
}

Derivation validate(std::span<const RuleChoice> choices, const Grammar& g) {
  Frontier frontier(g);
  std::vector<DerivationStep> steps;
  steps.reserve(choices.size());
  for (std::size_t t = 0; t < choices.size(); ++t) {
    const int step = static_cast<int>(t);
    if (frontier.empty()) throw DerivationError("rules remain after frontier emptied", step);
    const RuleId id = choices[t].rule;
    if (id < 0 || static_cast<std::size_t>(id) >= g.num_rules()) {
      throw DerivationError("rule id out of range", step);
    }
    const auto& rule = g.rule(id);
    const auto top = frontier.top();
    if (rule.lhs != top.nonterminal) {
      throw DerivationError("rule lhs " + g.nonterminal_name(rule.lhs) +
                                " does not match frontier " + g.nonterminal_name(top.nonterminal),
                            step);
    }
    if (rule.is_lexical() && choices[t].lexeme.empty()) {
      throw DerivationError("lexical rule without lexeme", step);
    }
    if (!rule.is_lexical() && !choices[t].lexeme.empty()) {
      throw DerivationError("structural rule with lexeme", step);
    }
    steps.push_back({id, top.parent_step, choices[t].lexeme});
    frontier.apply(rule, step);
  }
  if (!frontier.empty()) {
    throw DerivationError("frontier not empty at end of derivation", static_cast<int>(choices.size()));
  }
  return Derivation(std::move(steps));
}

namespace {

template <typename Emit>
void replay_yield(const Derivation& d, const Grammar& g, Emit&& emit) {
  // Full symbol stack so terminals interleave with expansions in order.
  std::vector<Symbol> stack{Symbol{false, g.start_symbol()}};
  std::size_t t = 0;
  while (!stack.empty()) {
    const Symbol s = stack.back();
    stack.pop_back();
    if (s.terminal) {
      emit(s.id, static_cast<const std::string*>(nullptr));
      continue;
    }
    if (t >= d.size()) throw DerivationError("derivation ends with pending nonterminals", static_cast<int>(t));
    const auto& step = d[t];
    if (step.rule < 0 || static_cast<std::size_t>(step.rule) >= g.num_rules()) {
      throw DerivationError("rule id out of range", static_cast<int>(t));
    }
    const auto& rule = g.rule(step.rule);
    if (rule.lhs != s.id) throw DerivationError("rule lhs does not match frontier", static_cast<int>(t));
    ++t;
    if (rule.is_lexical()) {
      emit(rule.rhs[0].id, &step.lexeme);
      continue;
    }
    for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it) stack.push_back(*it);
  }
  if (t != d.size()) throw DerivationError("rules remain after frontier emptied", static_cast<int>(t));
}

}  // namespace

std::vector<std::string> realize(const Derivation& d, const Grammar& g) {
  std::vector<std::string> out;
  replay_yield(d, g, [&](SymbolId terminal, const std::string* lexeme) {
    out.push_back(lexeme ? *lexeme : g.terminal_name(terminal));
  });
  return out;
}

std::vector<Token> realize_tokens(const Derivation& d, const Grammar& g) {
  std::vector<Token> out;
  replay_yield(d, g, [&](SymbolId terminal, const std::string* lexeme) {
    Token t;
    t.text = lexeme ? *lexeme : g.terminal_name(terminal);
    if (lexeme) {
      t.kind = token_kind_for(*g.placeholder_class(terminal));
    } else {
      t.kind = is_java_keyword(t.text) ? TokenKind::kKeyword : TokenKind::kOperator;
    }
    out.push_back(std::move(t));
  });
  return out;
}

}  // namespace concode::grammar
