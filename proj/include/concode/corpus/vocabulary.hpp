#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/grammar/grammar.hpp"
#include "json.hpp"

namespace concode::corpus {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;

struct Thresholds {
  int identifier = 7;
  int type = 2;
  int rule = 2;
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// String table with the pad and UNK entries at 0 and 1.
class TokenTable {
 public:
  TokenTable();
  explicit TokenTable(const std::vector<std::string>& tokens);

  int index(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.contains(token); }
  const std::string& token(int i) const { return tokens_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return tokens_.size(); }
  // Entries past pad and UNK.
  std::vector<std::string> entries() const { return {tokens_.begin() + 2, tokens_.end()}; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// An output action: a structural rule, or a lexical rule with its terminal.
struct OutputAction {
  grammar::RuleId rule = 0;
  std::string lexeme;
  friend bool operator==(const OutputAction&, const OutputAction&) = default;
};

inline constexpr std::string_view kUnkLexeme = "unk_id";

class Vocabulary {
 public:
  // Rows of the previous/parent rule table.
  static constexpr int kSentinelRule = 2;
  static constexpr int kIdentifierOrLiteral = 3;

  Vocabulary(const grammar::Grammar& g, TokenTable identifiers, TokenTable types,
             std::vector<OutputAction> lexical_actions, Thresholds thresholds);

  const TokenTable& identifiers() const { return identifiers_; }
  const TokenTable& types() const { return types_; }
  const Thresholds& thresholds() const { return thresholds_; }

  // Output actions. Index 0 is padding, 1 the UNK action available at every
  // identifier nonterminal, then every structural rule in id order, then
  // lexical (rule, lexeme) pairs by descending frequency.
  std::size_t num_actions() const { return actions_.size(); }
  const OutputAction& action(int i) const { return actions_.at(static_cast<std::size_t>(i)); }
  // kUnk when the pair is not in the table.
  int action_index(grammar::RuleId rule, const std::string& lexeme) const;
  // Actions whose rule expands `nt`, ascending; identifier nonterminals also
  // list kUnk first.
  std::span<const int> candidate_actions(grammar::SymbolId nt) const {
    return candidates_.at(static_cast<std::size_t>(nt));
  }
  // Lhs nonterminal of an action; for kUnk, of no particular one (-1).
  grammar::SymbolId action_lhs(int i) const;

  // Previous/parent rule embedding rows: pad, UNK, sentinel,
  // IdentifierOrLiteral, then structural rules.
  int prev_rule_index(grammar::RuleId rule) const;
  std::size_t num_prev_rules() const { return 4 + num_structural_; }

  int nonterminal_index(grammar::SymbolId nt) const { return 2 + nt; }
  std::size_t num_nonterminal_rows() const { return 2 + num_nonterminals_; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j, const grammar::Grammar& g);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path, const grammar::Grammar& g);

  // 64-bit FNV-1a of the serialized tables, as 16 hex digits.
  std::string hash() const;

 private:
  TokenTable identifiers_;
  TokenTable types_;
  Thresholds thresholds_;
  std::vector<OutputAction> actions_;
  std::map<std::pair<grammar::RuleId, std::string>, int> action_index_;
  std::vector<std::vector<int>> candidates_;
  std::vector<int> prev_rule_row_;
  std::vector<grammar::SymbolId> action_lhs_;
  std::size_t num_structural_ = 0;
  std::size_t num_nonterminals_ = 0;
  std::uint64_t grammar_fingerprint_ = 0;
};

std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t grammar_fingerprint(const grammar::Grammar& g);

// Tokens an example contributes to the identifier table: its NL plus the
// word tokens of every member name.
std::vector<std::string> identifier_stream(const Example& ex);

// Table of the tokens counted at least `threshold` times, most frequent
// first with lexicographic ties.
TokenTable frequent_table(const std::map<std::string, int>& counts, int threshold);

// Throws VocabularyError on an empty corpus. Items below a table's threshold
// are left out and map to UNK; ties in frequency are ordered lexicographically.
Vocabulary build_vocab(std::span<const Example> corpus, const grammar::Grammar& g, const Thresholds& thresholds = {});

}  // namespace concode::corpus
