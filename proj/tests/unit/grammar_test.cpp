#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "concode/grammar/derivation.hpp"
#include "concode/grammar/grammar.hpp"
#include "concode/grammar/lexer.hpp"
#include "concode/grammar/parser.hpp"
#include "concode/grammar/sampler.hpp"

using namespace concode::grammar;

namespace {

const Grammar& java() {
  static const Grammar g = Grammar::load_file(std::string(CONCODE_DATA_DIR) + "/java_subset.grammar");
  return g;
}

std::vector<Token> toks(std::initializer_list<const char*> texts) {
  std::vector<Token> out;
  for (const char* t : texts) {
    Token tok;
    tok.text = t;
    tok.kind = TokenKind::kOperator;
    out.push_back(tok);
  }
  return out;
}

std::vector<RuleChoice> choices(std::initializer_list<int> ids) {
  std::vector<RuleChoice> out;
  for (int id : ids) out.push_back({id, {}});
  return out;
}

// Enumerates every leftmost derivation (as rule-id sequences) whose yield is
// exactly `target`, pruning once the yield prefix diverges.
std::vector<std::vector<int>> brute_force_parses(const Grammar& g, const std::vector<std::string>& target,
                                                 std::size_t max_steps) {
  std::vector<std::vector<int>> found;
  std::vector<int> seq;
  std::function<void(std::vector<Symbol>, std::size_t)> go = [&](std::vector<Symbol> stack,
                                                                 std::size_t pos) {
    while (!stack.empty() && stack.back().terminal) {
      if (pos >= target.size() || g.terminal_name(stack.back().id) != target[pos]) return;
      stack.pop_back();
      ++pos;
    }
    if (stack.empty()) {
      if (pos == target.size()) found.push_back(seq);
      return;
    }
    if (seq.size() >= max_steps) return;
    std::size_t pending_terminals = 0;
    for (const auto& s : stack) pending_terminals += s.terminal ? 1 : 0;
    if (pos + pending_terminals > target.size()) return;
    const SymbolId nt = stack.back().id;
    stack.pop_back();
    for (RuleId r : g.rules_for(nt)) {
      auto next = stack;
      const auto& rhs = g.rule(r).rhs;
      for (auto it = rhs.rbegin(); it != rhs.rend(); ++it) next.push_back(*it);
      seq.push_back(r);
      go(next, pos);
      seq.pop_back();
    }
  };
  go({Symbol{false, g.start_symbol()}}, 0);
  return found;
}

}  // namespace

TEST(GrammarLoad, MinimalGrammar) {
  const Grammar g = Grammar::load("start: S\nS -> 'a'");
  EXPECT_EQ(g.num_rules(), 1u);
  EXPECT_EQ(g.nonterminal_name(g.start_symbol()), "S");
  EXPECT_EQ(g.rule(0).kind, RuleKind::kStructural);
}

TEST(GrammarLoad, UndefinedSymbolReportsLine) {
  try {
    Grammar::load("start: S\nS -> 'a'\nS -> T\n");
    FAIL() << "expected GrammarError";
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("undefined symbol 'T'"), std::string::npos);
  }
}

TEST(GrammarLoad, DuplicateRule) {
  try {
    Grammar::load("start: S\nS -> 'a'\n# again\nS -> 'a'\n");
    FAIL();
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(GrammarLoad, MissingStart) {
  EXPECT_THROW(Grammar::load("S -> 'a'\n"), GrammarError);
  EXPECT_THROW(Grammar::load("# only a comment\n"), GrammarError);
}

TEST(GrammarLoad, SyntaxErrorsCarryLineNumbers) {
  try {
    Grammar::load("start: S\nS -> 'a'\nS 'b'\n");
    FAIL();
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(Grammar::load("start: S\nS -> 'a\n"), GrammarError);
  EXPECT_THROW(Grammar::load("start: S\nidentifier_nt: Id bogus\nS -> Id\n"), GrammarError);
  EXPECT_THROW(Grammar::load("start: S\nidentifier_nt: Id\nId -> 'x'\nS -> Id\n"), GrammarError);
}

TEST(GrammarLoad, IdentifierDirectiveCreatesPlaceholderRule) {
  const Grammar g = Grammar::load("start: S\nidentifier_nt: Id\nidentifier_nt: Num int\nS -> Id '=' Num\n");
  ASSERT_EQ(g.num_rules(), 3u);
  EXPECT_EQ(g.rule(0).kind, RuleKind::kIdentifierTerminal);
  EXPECT_EQ(g.rule(1).kind, RuleKind::kLiteralTerminal);
  EXPECT_EQ(g.rule(2).kind, RuleKind::kStructural);
  const auto id = *g.find_nonterminal("Id");
  const auto num = *g.find_nonterminal("Num");
  EXPECT_TRUE(g.is_copyable_nt(id));
  EXPECT_TRUE(g.is_identifier_nt(num));
  EXPECT_FALSE(g.is_copyable_nt(num));
}

TEST(GrammarLoad, ShippedJavaGrammarSatisfiesInvariants) {
  const Grammar& g = java();
  EXPECT_NO_THROW(g.check_invariants());
  EXPECT_EQ(g.nonterminal_name(g.start_symbol()), "MemberDeclaration");
  EXPECT_EQ(g.identifier_nonterminals().size(), 5u);
  for (SymbolId nt = 0; nt < static_cast<SymbolId>(g.num_nonterminals()); ++nt) {
    EXPECT_FALSE(g.rules_for(nt).empty()) << g.nonterminal_name(nt);
  }
  for (const auto& r : g.rules()) {
    EXPECT_EQ(r.is_lexical(), g.is_identifier_nt(r.lhs)) << g.rule_to_string(r.id);
  }
}

TEST(Lexer, SimpleStatement) {
  const auto t = tokenize_code("int x = 1;");
  EXPECT_EQ(token_texts(t), (std::vector<std::string>{"int", "x", "=", "1", ";"}));
  EXPECT_EQ(t[0].kind, TokenKind::kKeyword);
  EXPECT_EQ(t[1].kind, TokenKind::kIdentifier);
  EXPECT_EQ(t[3].kind, TokenKind::kIntLiteral);
}

TEST(Lexer, UnterminatedLiterals) {
  EXPECT_THROW(tokenize_code("\"abc"), LexError);
  EXPECT_THROW(tokenize_code("char c = 'a"), LexError);
  EXPECT_THROW(tokenize_code("/* open"), LexError);
}

TEST(Lexer, IllegalCharacterOffset) {
  try {
    tokenize_code("int x = #;");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.offset(), 8u);
  }
}

TEST(Lexer, CompoundAssignmentHandCount) {
  // vecElements [ loc0 ] += arg0 ;
  const auto t = tokenize_code("vecElements[loc0] += arg0;");
  EXPECT_EQ(t.size(), 7u);
  const auto idents = std::count_if(t.begin(), t.end(),
                                    [](const Token& k) { return k.kind == TokenKind::kIdentifier; });
  EXPECT_EQ(idents, 3);
  EXPECT_EQ(t[4].text, "+=");
}

TEST(Lexer, CommentsAndLiterals) {
  const auto t = tokenize_code("// line\nreturn /* block */ \"a\\\"b\" + 'c' + 1.5f + 0x1F + 10L;");
  EXPECT_EQ(token_texts(t), (std::vector<std::string>{"return", "\"a\\\"b\"", "+", "'c'", "+", "1.5f",
                                                      "+", "0x1F", "+", "10L", ";"}));
  EXPECT_EQ(t[1].kind, TokenKind::kStringLiteral);
  EXPECT_EQ(t[3].kind, TokenKind::kCharLiteral);
  EXPECT_EQ(t[5].kind, TokenKind::kFloatLiteral);
  EXPECT_EQ(t[7].kind, TokenKind::kIntLiteral);
}

TEST(Lexer, GenericTypesCollapse) {
  EXPECT_EQ(token_texts(tokenize_code("List<String> xs = new ArrayList<>();")),
            (std::vector<std::string>{"List<String>", "xs", "=", "new", "ArrayList<>", "(", ")", ";"}));
  EXPECT_EQ(token_texts(tokenize_code("Map<String, List<int[]>> m;")).front(), "Map<String,List<int[]>>");
  // Relational operators between lower-case names are not type arguments.
  EXPECT_EQ(tokenize_code("a < b && c > d").size(), 7u);
}

TEST(Parse, ToyRightRecursion) {
  const Grammar g = Grammar::load("start: S\nS -> 'a' S\nS -> 'b'\n");
  const Derivation d = parse(toks({"a", "a", "b"}), g);
  EXPECT_EQ(d.rule_ids(), (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(d[0].parent, kNoParent);
  EXPECT_EQ(d[1].parent, 0);
  EXPECT_EQ(d[2].parent, 1);
  // Brute-force enumeration agrees: exactly one parse.
  const auto all = brute_force_parses(g, {"a", "a", "b"}, 10);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0], d.rule_ids());
}

TEST(Parse, ToyNoParse) {
  const Grammar g = Grammar::load("start: S\nS -> 'a' S\nS -> 'b'\n");
  try {
    parse(toks({"a"}), g);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.reason(), ParseError::Reason::kNoParse);
    EXPECT_EQ(e.furthest_token(), 1u);
  }
  try {
    parse(toks({"a", "c", "b"}), g);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.furthest_token(), 1u);
  }
}

TEST(Parse, TokenLimit) {
  const Grammar g = Grammar::load("start: S\nS -> 'a' S\nS -> 'b'\n");
  ParseOptions opts;
  opts.max_tokens = 2;
  try {
    parse(toks({"a", "a", "b"}), g, opts);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.reason(), ParseError::Reason::kTooLong);
  }
}

TEST(Parse, AmbiguityMatchesBruteForceLexicographicMinimum) {
  // Ambiguous grammars; the preferred parse is the smallest pre-order sequence.
  const std::vector<std::string> grammars = {
      "start: E\nE -> E '+' E\nE -> 'n'\n",
      "start: E\nE -> 'n'\nE -> E '+' E\nE -> E '*' E\n",
      "start: S\nS -> A B\nS -> C\nA -> 'x'\nA -> 'x' 'x'\nB -> 'x'\nB -> 'x' 'x'\nC -> 'x' 'x' 'x'\n",
      "start: S\nS -> 'i' S\nS -> 'i' S 'e' S\nS -> 'o'\n",
  };
  std::mt19937_64 rng(7);
  for (const auto& text : grammars) {
    const Grammar g = Grammar::load(text);
    std::vector<std::string> alphabet;
    for (SymbolId t = 0; t < static_cast<SymbolId>(g.num_terminals()); ++t) alphabet.push_back(g.terminal_name(t));
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 40; ++trial) {
      std::uniform_int_distribution<int> len_dist(1, 7);
      std::uniform_int_distribution<std::size_t> sym_dist(0, alphabet.size() - 1);
      std::vector<std::string> target(static_cast<std::size_t>(len_dist(rng)));
      for (auto& s : target) s = alphabet[sym_dist(rng)];
      const auto all = brute_force_parses(g, target, 20);
      std::vector<Token> input;
      for (const auto& s : target) input.push_back(Token{TokenKind::kOperator, s, 0, 0});
      if (all.empty()) {
        EXPECT_THROW(parse(input, g), ParseError);
        continue;
      }
      ++checked;
      const auto expected = *std::min_element(all.begin(), all.end());
      EXPECT_EQ(parse(input, g).rule_ids(), expected) << text;
    }
    EXPECT_GT(checked, 0) << text;
  }
}

TEST(Realize, ToyReplay) {
  const Grammar g = Grammar::load("start: S\nS -> 'a' S\nS -> 'b'\n");
  const Derivation d = validate(choices({0, 0, 1}), g);
  EXPECT_EQ(realize(d, g), (std::vector<std::string>{"a", "a", "b"}));
  EXPECT_EQ(realize(validate(choices({1}), g), g), (std::vector<std::string>{"b"}));
}

TEST(Realize, InvalidDerivationThrows) {
  const Grammar g = Grammar::load("start: S\nS -> 'a' S\nS -> 'b'\n");
  EXPECT_THROW(realize(Derivation({{0, kNoParent, {}}}), g), DerivationError);
  EXPECT_THROW(realize(Derivation({{1, kNoParent, {}}, {1, 0, {}}}), g), DerivationError);
}

TEST(Validate, ToyCases) {
  const Grammar g = Grammar::load("start: S\nS -> 'a' S\nS -> 'b'\nT -> 'c'\nS -> T\n");
  EXPECT_EQ(validate(choices({1}), g).size(), 1u);
  try {
    validate(choices({1, 1}), g);
    FAIL();
  } catch (const DerivationError& e) {
    EXPECT_NE(std::string(e.what()).find("rules remain"), std::string::npos);
    EXPECT_EQ(e.step(), 1);
  }
  EXPECT_THROW(validate(choices({0}), g), DerivationError);     // leftover frontier
  EXPECT_THROW(validate(choices({2}), g), DerivationError);     // lhs mismatch
  EXPECT_THROW(validate(choices({99}), g), DerivationError);    // out of range
  const Derivation d = validate(choices({3, 2}), g);
  EXPECT_EQ(d[1].parent, 0);
}

TEST(Validate, LexicalRulesNeedLexemes) {
  const Grammar g = Grammar::load("start: S\nidentifier_nt: Id\nS -> Id ';'\n");
  EXPECT_THROW(validate(choices({1, 0}), g), DerivationError);
  const std::vector<RuleChoice> ok = {{1, {}}, {0, "foo"}};
  EXPECT_EQ(realize(validate(ok, g), g), (std::vector<std::string>{"foo", ";"}));
}

TEST(Parse, ToyParseRealizeIdentityOnRandomDerivations) {
  const Grammar g = Grammar::load("start: S\nS -> 'a' S\nS -> 'b'\nS -> 'c' S 'd'\n");
  std::mt19937_64 rng(3);
  SampleOptions opts;
  opts.max_tokens = 30;
  for (int i = 0; i < 200; ++i) {
    const Derivation d = sample_derivation(g, rng, opts);
    const auto tokens = realize_tokens(d, g);
    EXPECT_EQ(parse(tokens, g), d);
  }
}

TEST(JavaParse, RealMethods) {
  const std::vector<std::string> methods = {
      "void function(double arg0) { for (int loc0 = 0; loc0 < vecElements.length; loc0++) "
      "vecElements[loc0] += arg0; }",
      "void inc() { this.add(1); }",
      "public String function() { return \"str\"; }",
      "boolean function(Object arg0) { if (arg0 == null) return false; else return items.contains(arg0); }",
      "List<String> function() throws IOException { List<String> loc0 = new ArrayList<>(); "
      "for (String loc1 : names) { loc0.add(loc1.trim()); } return loc0; }",
      "int function(int arg0) { switch (arg0) { case 1: return 2; default: return (int) Math.floor(1.5); } }",
      "void function() { try { close(); } catch (IOException | RuntimeException loc0) { throw new "
      "IllegalStateException(loc0); } finally { open = false; } }",
      "static int[] function(int arg0) { int[] loc0 = new int[arg0]; int loc1 = arg0 > 0 ? 1 : -1; "
      "while (--arg0 >= 0) loc0[arg0] = loc1 << 2; return loc0; }",
      "Class<?> function() { return String.class; }",
  };
  for (const auto& m : methods) {
    const auto tokens = tokenize_code(m);
    Derivation d;
    ASSERT_NO_THROW(d = parse(tokens, java())) << m;
    EXPECT_EQ(realize(d, java()), token_texts(tokens)) << m;
    EXPECT_NO_THROW(validate(d.choices(), java()));
    for (std::size_t t = 1; t < d.size(); ++t) EXPECT_LT(d[t].parent, static_cast<int>(t));
    EXPECT_EQ(parse(tokens, java()), d);
  }
}

TEST(JavaParse, DanglingElseBindsInner) {
  const auto tokens = tokenize_code("void f() { if (a) if (b) x(); else y(); }");
  const Derivation d = parse(tokens, java());
  // The first if-statement expansion is the else-less one.
  const Grammar& g = java();
  const auto if_stmt = std::find_if(d.steps().begin(), d.steps().end(), [&](const DerivationStep& s) {
    const auto& r = g.rule(s.rule);
    return !r.rhs.empty() && r.rhs[0].terminal && g.terminal_name(r.rhs[0].id) == "if";
  });
  ASSERT_NE(if_stmt, d.steps().end());
  EXPECT_EQ(g.rule(if_stmt->rule).rhs.size(), 3u);
}

TEST(JavaParse, NoParseReportsFurthestToken) {
  const auto tokens = tokenize_code("void f() { return ) ; }");
  try {
    parse(tokens, java());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.furthest_token(), 6u);
  }
}

TEST(JavaParse, SampledProgramsRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Derivation d = sample_derivation(java(), rng);
    const auto tokens = realize_tokens(d, java());
    const Derivation back = parse(tokens, java());
    EXPECT_EQ(realize(back, java()), token_texts(tokens));
    EXPECT_NO_THROW(validate(back.choices(), java()));
  }
}
