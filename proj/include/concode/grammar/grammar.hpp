#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "concode/grammar/lexer.hpp"

namespace concode::grammar {

using SymbolId = int;
using RuleId = int;

// Terminal symbols carry the flag; ids index separate nonterminal and
// terminal tables.
struct Symbol {
  bool terminal = false;
  SymbolId id = 0;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

enum class RuleKind { kStructural, kIdentifierTerminal, kLiteralTerminal };

// Token class an identifier nonterminal accepts. Each flagged nonterminal owns
// exactly one placeholder rule `X -> <class>`; the concrete terminal string
// travels with the derivation step as its lexeme.
enum class LexicalClass { kIdentifier, kInteger, kFloat, kCharacter, kString };

struct ProductionRule {
  RuleId id = 0;
  SymbolId lhs = 0;
  std::vector<Symbol> rhs;
  RuleKind kind = RuleKind::kStructural;

  bool is_lexical() const { return kind != RuleKind::kStructural; }
};

class GrammarError : public std::runtime_error {
 public:
  GrammarError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class Grammar {
 public:
  // Parses the grammar text format:
  //   # comment
  //   start: MemberDeclaration
  //   identifier_nt: Identifier            (class defaults to identifier)
  //   identifier_nt: IntegerLiteral int    (identifier|int|float|char|string)
  //   Lhs -> Sym 'terminal' Sym
  // Throws GrammarError with the offending line number.
  static Grammar load(std::string_view text);
  static Grammar load_file(const std::string& path);

  const std::vector<ProductionRule>& rules() const { return rules_; }
  const ProductionRule& rule(RuleId id) const { return rules_.at(static_cast<std::size_t>(id)); }
  std::size_t num_rules() const { return rules_.size(); }
  std::size_t num_nonterminals() const { return nonterminals_.size(); }
  std::size_t num_terminals() const { return terminals_.size(); }

  SymbolId start_symbol() const { return start_; }
  const std::string& nonterminal_name(SymbolId id) const { return nonterminals_.at(id); }
  const std::string& terminal_name(SymbolId id) const { return terminals_.at(id); }
  std::optional<SymbolId> find_nonterminal(std::string_view name) const;
  std::optional<RuleId> find_rule(SymbolId lhs, const std::vector<Symbol>& rhs) const;

  // Rule ids with the given lhs, ascending.
  std::span<const RuleId> rules_for(SymbolId nonterminal) const {
    return rules_by_lhs_.at(static_cast<std::size_t>(nonterminal));
  }

  bool is_identifier_nt(SymbolId nonterminal) const {
    return lexical_class_.at(nonterminal).has_value();
  }
  std::optional<LexicalClass> lexical_class(SymbolId nonterminal) const {
    return lexical_class_.at(nonterminal);
  }
  // Identifier-class nonterminals are the only copy targets.
  bool is_copyable_nt(SymbolId nonterminal) const {
    return lexical_class_.at(nonterminal) == LexicalClass::kIdentifier;
  }
  std::vector<SymbolId> identifier_nonterminals() const;

  // True when the terminal accepts the token: quoted terminals match keyword
  // and operator text exactly, placeholder terminals match their lexical kind.
  bool terminal_matches(SymbolId terminal, const Token& token) const;
  bool is_placeholder_terminal(SymbolId terminal) const {
    return placeholder_class_.at(terminal).has_value();
  }
  std::optional<LexicalClass> placeholder_class(SymbolId terminal) const {
    return placeholder_class_.at(terminal);
  }

  std::string rule_to_string(RuleId id) const;
  std::string symbol_name(const Symbol& s) const {
    return s.terminal ? terminals_.at(s.id) : nonterminals_.at(s.id);
  }

  // Nonterminals that can derive the empty string.
  const std::vector<bool>& nullable() const { return nullable_; }

  // Throws GrammarError if any structural invariant is violated.
  void check_invariants() const;

 private:
  Grammar() = default;
  SymbolId intern_nonterminal(const std::string& name);
  SymbolId intern_terminal(const std::string& name);
  void finalize();

  std::vector<std::string> nonterminals_;
  std::vector<std::string> terminals_;
  std::unordered_map<std::string, SymbolId> nonterminal_index_;
  std::unordered_map<std::string, SymbolId> terminal_index_;
  std::vector<ProductionRule> rules_;
  std::vector<std::vector<RuleId>> rules_by_lhs_;
  std::vector<std::optional<LexicalClass>> lexical_class_;
  std::vector<std::optional<LexicalClass>> placeholder_class_;
  std::vector<bool> nullable_;
  SymbolId start_ = 0;
};

std::string_view lexical_class_name(LexicalClass c);
std::string placeholder_terminal(LexicalClass c);
TokenKind token_kind_for(LexicalClass c);

}  // namespace concode::grammar
