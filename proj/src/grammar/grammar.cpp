#include "concode/grammar/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace concode::grammar {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing `#` comment that is not inside a quoted terminal.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\'') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool is_symbol_name(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<LexicalClass> parse_class(std::string_view name) {
  if (name == "identifier") return LexicalClass::kIdentifier;
  if (name == "int") return LexicalClass::kInteger;
  if (name == "float") return LexicalClass::kFloat;
  if (name == "char") return LexicalClass::kCharacter;
  if (name == "string") return LexicalClass::kString;
  return std::nullopt;
}

}  // namespace

TokenKind token_kind_for(LexicalClass c) {
  switch (c) {
    case LexicalClass::kIdentifier: return TokenKind::kIdentifier;
    case LexicalClass::kInteger: return TokenKind::kIntLiteral;
    case LexicalClass::kFloat: return TokenKind::kFloatLiteral;
    case LexicalClass::kCharacter: return TokenKind::kCharLiteral;
    case LexicalClass::kString: return TokenKind::kStringLiteral;
  }
  return TokenKind::kIdentifier;
}

std::string_view lexical_class_name(LexicalClass c) {
  switch (c) {
    case LexicalClass::kIdentifier: return "identifier";
    case LexicalClass::kInteger: return "int";
    case LexicalClass::kFloat: return "float";
    case LexicalClass::kCharacter: return "char";
    case LexicalClass::kString: return "string";
  }
  return "identifier";
}

std::string placeholder_terminal(LexicalClass c) {
  return "<" + std::string(lexical_class_name(c)) + ">";
}

SymbolId Grammar::intern_nonterminal(const std::string& name) {
  auto [it, inserted] = nonterminal_index_.emplace(name, static_cast<SymbolId>(nonterminals_.size()));
  if (inserted) {
    nonterminals_.push_back(name);
    lexical_class_.emplace_back();
  }
  return it->second;
}

SymbolId Grammar::intern_terminal(const std::string& name) {
  auto [it, inserted] = terminal_index_.emplace(name, static_cast<SymbolId>(terminals_.size()));
  if (inserted) {
    terminals_.push_back(name);
    placeholder_class_.emplace_back();
  }
  return it->second;
}

Grammar Grammar::load(std::string_view text) {
  Grammar g;
  std::unordered_map<SymbolId, int> first_reference_line;
  std::unordered_map<SymbolId, int> explicit_rule_line;
  bool have_start = false;
  int line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (!have_start) {
      if (line.substr(0, 6) != "start:") throw GrammarError("missing start directive", line_no);
      const std::string_view name = trim(line.substr(6));
      if (!is_symbol_name(name)) throw GrammarError("invalid start symbol", line_no);
      g.start_ = g.intern_nonterminal(std::string(name));
      first_reference_line.emplace(g.start_, line_no);
      have_start = true;
      continue;
    }

    if (line.substr(0, 14) == "identifier_nt:") {
      const auto parts = split_ws(line.substr(14));
      if (parts.empty() || parts.size() > 2 || !is_symbol_name(parts[0])) {
        throw GrammarError("malformed identifier_nt directive", line_no);
      }
      LexicalClass cls = LexicalClass::kIdentifier;
      if (parts.size() == 2) {
        const auto parsed = parse_class(parts[1]);
        if (!parsed) throw GrammarError("unknown lexical class '" + std::string(parts[1]) + "'", line_no);
        cls = *parsed;
      }
      const SymbolId nt = g.intern_nonterminal(std::string(parts[0]));
      if (g.lexical_class_[nt]) throw GrammarError("duplicate identifier_nt directive", line_no);
      if (explicit_rule_line.count(nt)) {
        throw GrammarError("identifier nonterminal '" + std::string(parts[0]) + "' has explicit rules",
                           line_no);
      }
      g.lexical_class_[nt] = cls;
      const SymbolId term = g.intern_terminal(placeholder_terminal(cls));
      g.placeholder_class_[term] = cls;
      ProductionRule r;
      r.id = static_cast<RuleId>(g.rules_.size());
      r.lhs = nt;
      r.rhs = {Symbol{true, term}};
      r.kind = cls == LexicalClass::kIdentifier ? RuleKind::kIdentifierTerminal
                                                : RuleKind::kLiteralTerminal;
      g.rules_.push_back(std::move(r));
      continue;
    }

    if (line.substr(0, 6) == "start:") throw GrammarError("duplicate start directive", line_no);

    const auto arrow = line.find("->");
    if (arrow == std::string_view::npos) throw GrammarError("expected 'Lhs -> symbols'", line_no);
    const std::string_view lhs_name = trim(line.substr(0, arrow));
    if (!is_symbol_name(lhs_name)) {
      throw GrammarError("invalid left-hand side '" + std::string(lhs_name) + "'", line_no);
    }
    ProductionRule r;
    r.id = static_cast<RuleId>(g.rules_.size());
    r.lhs = g.intern_nonterminal(std::string(lhs_name));
    if (g.lexical_class_[r.lhs]) {
      throw GrammarError("identifier nonterminal '" + std::string(lhs_name) + "' has explicit rules",
                         line_no);
    }
    explicit_rule_line.emplace(r.lhs, line_no);
    for (std::string_view sym : split_ws(line.substr(arrow + 2))) {
      if (sym.front() == '\'') {
        if (sym.size() < 3 || sym.back() != '\'') {
          throw GrammarError("malformed terminal " + std::string(sym), line_no);
        }
        const std::string name(sym.substr(1, sym.size() - 2));
        if (name.size() > 2 && name.front() == '<' && name.back() == '>') {
          throw GrammarError("terminal " + std::string(sym) + " collides with a placeholder", line_no);
        }
        r.rhs.push_back(Symbol{true, g.intern_terminal(name)});
      } else {
        if (!is_symbol_name(sym)) {
          throw GrammarError("invalid symbol '" + std::string(sym) + "'", line_no);
        }
        const SymbolId nt = g.intern_nonterminal(std::string(sym));
        first_reference_line.emplace(nt, line_no);
        r.rhs.push_back(Symbol{false, nt});
      }
    }
    if (g.find_rule(r.lhs, r.rhs)) {
      throw GrammarError("duplicate rule '" + std::string(line) + "'", line_no);
    }
    g.rules_.push_back(std::move(r));
  }

  if (!have_start) throw GrammarError("missing start directive", 0);
  g.finalize();
  for (SymbolId nt = 0; nt < static_cast<SymbolId>(g.nonterminals_.size()); ++nt) {
    if (g.rules_by_lhs_[nt].empty()) {
      const auto it = first_reference_line.find(nt);
      throw GrammarError("undefined symbol '" + g.nonterminals_[nt] + "'",
                         it == first_reference_line.end() ? 0 : it->second);
    }
  }
  g.check_invariants();
  return g;
}

Grammar Grammar::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GrammarError("cannot open grammar file " + path, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load(ss.str());
}

void Grammar::finalize() {
  rules_by_lhs_.assign(nonterminals_.size(), {});
  for (const auto& r : rules_) rules_by_lhs_[r.lhs].push_back(r.id);
  nullable_.assign(nonterminals_.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : rules_) {
      if (nullable_[r.lhs]) continue;
      const bool all = std::all_of(r.rhs.begin(), r.rhs.end(), [&](const Symbol& s) {
        return !s.terminal && nullable_[s.id];
      });
      if (all) {
        nullable_[r.lhs] = true;
        changed = true;
      }
    }
  }
}

std::optional<SymbolId> Grammar::find_nonterminal(std::string_view name) const {
  const auto it = nonterminal_index_.find(std::string(name));
  if (it == nonterminal_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<RuleId> Grammar::find_rule(SymbolId lhs, const std::vector<Symbol>& rhs) const {
  for (const auto& r : rules_) {
    if (r.lhs == lhs && r.rhs == rhs) return r.id;
  }
  return std::nullopt;
}

std::vector<SymbolId> Grammar::identifier_nonterminals() const {
  std::vector<SymbolId> out;
  for (SymbolId nt = 0; nt < static_cast<SymbolId>(lexical_class_.size()); ++nt) {
    if (lexical_class_[nt]) out.push_back(nt);
  }
  return out;
}

bool Grammar::terminal_matches(SymbolId terminal, const Token& token) const {
  if (const auto cls = placeholder_class_.at(terminal)) return token.kind == token_kind_for(*cls);
  if (token.kind != TokenKind::kKeyword && token.kind != TokenKind::kOperator) return false;
  return terminals_[terminal] == token.text;
}

std::string Grammar::rule_to_string(RuleId id) const {
  const auto& r = rule(id);
  std::string out = nonterminals_[r.lhs] + " ->";
  for (const auto& s : r.rhs) {
    out += ' ';
    if (s.terminal && !placeholder_class_[s.id]) {
      out += '\'' + terminals_[s.id] + '\'';
    } else {
      out += symbol_name(s);
    }
  }
  return out;
}

void Grammar::check_invariants() const {
  const auto n_nt = static_cast<SymbolId>(nonterminals_.size());
  const auto n_t = static_cast<SymbolId>(terminals_.size());
  if (start_ < 0 || start_ >= n_nt) throw GrammarError("start symbol out of range", 0);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    if (r.id != static_cast<RuleId>(i)) throw GrammarError("rule ids are not dense", 0);
    if (r.lhs < 0 || r.lhs >= n_nt || nonterminals_[r.lhs].empty()) {
      throw GrammarError("rule " + std::to_string(i) + " has an invalid lhs", 0);
    }
    for (const auto& s : r.rhs) {
      const bool ok = s.terminal ? (s.id >= 0 && s.id < n_t && !terminals_[s.id].empty())
                                 : (s.id >= 0 && s.id < n_nt);
      if (!ok) throw GrammarError("rule " + std::to_string(i) + " has an invalid rhs symbol", 0);
    }
    const bool single_terminal = r.rhs.size() == 1 && r.rhs[0].terminal;
    const bool lexical = lexical_class_[r.lhs].has_value() && single_terminal;
    if (lexical != r.is_lexical()) {
      throw GrammarError("rule " + std::to_string(i) + " has an inconsistent kind", 0);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (rules_[j].lhs == r.lhs && rules_[j].rhs == r.rhs) {
        throw GrammarError("duplicate rule " + rule_to_string(r.id), 0);
      }
    }
  }
  for (SymbolId nt = 0; nt < n_nt; ++nt) {
    if (rules_by_lhs_[nt].empty()) {
      throw GrammarError("nonterminal '" + nonterminals_[nt] + "' has no rules", 0);
    }
  }
}

}  // namespace concode::grammar
