#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "concode/grammar/grammar.hpp"
#include "concode/grammar/parser.hpp"

namespace concode::corpus {

inline constexpr std::string_view kCanonicalMethodName = "function";
inline constexpr std::string_view kCanonicalString = "\"str\"";

// Nonterminal names whose Identifier children declare names. Defaults match
// the shipped Java-subset grammar.
struct DeclarationRoles {
  std::string method_declaration = "MethodDeclaration";
  std::string parameter = "FormalParameter";
  std::vector<std::string> locals = {"VariableDeclarator", "CatchClause", "Statement"};
};

// Renames parameters to arg0.. and locals to loc0.. (first-occurrence order),
// the method's own name to `function`, and string literals to "str". Member
// accesses (`this.x`, `obj.x`) and invoked names are left alone. The original
// whitespace layout is preserved. Throws LexError/ParseError on input that
// does not parse.
std::string canonicalize(std::string_view code, const grammar::Grammar& g,
                         const grammar::ParseOptions& options = {},
                         const DeclarationRoles& roles = {});

}  // namespace concode::corpus
