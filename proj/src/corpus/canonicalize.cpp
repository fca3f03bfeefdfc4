#include "concode/corpus/canonicalize.hpp"

#include <algorithm>
#include <optional>
#include <unordered_map>

#include "concode/grammar/lexer.hpp"

namespace concode::corpus {

namespace {

using grammar::Derivation;
using grammar::Grammar;
using grammar::Token;
using grammar::TokenKind;

// Token index of every lexical step, in derivation order.
std::vector<int> lexical_token_positions(const Derivation& d, const Grammar& g) {
  std::vector<int> positions(d.size(), -1);
  int next_token = 0;
  std::vector<grammar::Symbol> stack{{false, g.start_symbol()}};
  std::size_t t = 0;
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    if (s.terminal) {
      ++next_token;
      continue;
    }
    const auto& rule = g.rule(d[t].rule);
    if (rule.is_lexical()) {
      positions[t++] = next_token++;
      continue;
    }
    ++t;
    for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it) stack.push_back(*it);
  }
  return positions;
}

}  // namespace

std::string canonicalize(std::string_view code, const Grammar& g, const grammar::ParseOptions& options,
                         const DeclarationRoles& roles) {
  const std::vector<Token> tokens = grammar::tokenize_code(code);
  const Derivation d = grammar::parse(tokens, g, options);
  const auto positions = lexical_token_positions(d, g);

  std::optional<int> method_name_token;
  std::vector<int> params;
  std::vector<int> locals;
  for (std::size_t t = 0; t < d.size(); ++t) {
    const auto& rule = g.rule(d[t].rule);
    if (rule.kind != grammar::RuleKind::kIdentifierTerminal || d[t].parent < 0) continue;
    const std::string& parent_lhs = g.nonterminal_name(g.rule(d[d[t].parent].rule).lhs);
    const int pos = positions[t];
    if (parent_lhs == roles.method_declaration) {
      if (!method_name_token) method_name_token = pos;
    } else if (parent_lhs == roles.parameter) {
      params.push_back(pos);
    } else if (std::find(roles.locals.begin(), roles.locals.end(), parent_lhs) != roles.locals.end()) {
      locals.push_back(pos);
    }
  }

  std::unordered_map<std::string, std::string> renames;
  int next_arg = 0;
  for (int pos : params) {
    if (renames.emplace(tokens[pos].text, "arg" + std::to_string(next_arg)).second) ++next_arg;
  }
  int next_loc = 0;
  for (int pos : locals) {
    if (renames.emplace(tokens[pos].text, "loc" + std::to_string(next_loc)).second) ++next_loc;
  }
  const std::string method_name = method_name_token ? tokens[*method_name_token].text : std::string();

  auto text_at = [&](int k) -> std::string_view {
    if (k < 0 || k >= static_cast<int>(tokens.size())) return {};
    return tokens[k].text;
  };

  std::string out;
  std::size_t cursor = 0;
  for (int k = 0; k < static_cast<int>(tokens.size()); ++k) {
    const Token& tok = tokens[k];
    std::optional<std::string> replacement;
    if (tok.kind == TokenKind::kStringLiteral) {
      replacement = std::string(kCanonicalString);
    } else if (tok.kind == TokenKind::kIdentifier) {
      const bool member = text_at(k - 1) == ".";
      const bool invoked = text_at(k + 1) == "(";
      const bool self_member = member && text_at(k - 2) == "this";
      if (method_name_token && k == *method_name_token) {
        replacement = std::string(kCanonicalMethodName);
      } else if (invoked && tok.text == method_name && (!member || self_member)) {
        replacement = std::string(kCanonicalMethodName);
      } else if (!member && !invoked) {
        if (const auto it = renames.find(tok.text); it != renames.end()) replacement = it->second;
      }
    }
    if (!replacement) continue;
    out.append(code.substr(cursor, tok.offset - cursor));
    out.append(*replacement);
    cursor = tok.offset + tok.length;
  }
  out.append(code.substr(cursor));
  return out;
}

}  // namespace concode::corpus
