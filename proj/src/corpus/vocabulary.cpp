#include "concode/corpus/vocabulary.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "concode/corpus/text.hpp"

namespace concode::corpus {

namespace {

using grammar::Grammar;
using grammar::RuleId;
using grammar::RuleKind;

template <typename Key>
std::vector<Key> frequent(const std::map<Key, int>& counts, int threshold) {
  std::vector<std::pair<Key, int>> kept;
  for (const auto& [key, n] : counts) {
    if (n >= threshold) kept.emplace_back(key, n);
  }
  // std::map iteration is already lexicographic, so a stable sort on count
  // gives the tie order.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<Key> out;
  out.reserve(kept.size());
  for (auto& [key, n] : kept) out.push_back(key);
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

TokenTable::TokenTable() : TokenTable(std::vector<std::string>{}) {}

TokenTable::TokenTable(const std::vector<std::string>& tokens) {
  tokens_ = {"<pad>", "<unk>"};
  tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 2; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw VocabularyError("duplicate table entry '" + tokens_[i] + "'");
    }
  }
}

int TokenTable::index(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

Vocabulary::Vocabulary(const Grammar& g, TokenTable identifiers, TokenTable types,
                       std::vector<OutputAction> lexical_actions, Thresholds thresholds)
    : identifiers_(std::move(identifiers)),
      types_(std::move(types)),
      thresholds_(thresholds),
      num_nonterminals_(g.num_nonterminals()),
      grammar_fingerprint_(grammar_fingerprint(g)) {
  actions_ = {OutputAction{-1, "<pad>"}, OutputAction{-1, std::string(kUnkLexeme)}};
  action_lhs_ = {-1, -1};
  prev_rule_row_.assign(g.num_rules(), kIdentifierOrLiteral);
  for (const auto& r : g.rules()) {
    if (r.is_lexical()) continue;
    prev_rule_row_[r.id] = static_cast<int>(4 + num_structural_++);
    actions_.push_back({r.id, {}});
    action_lhs_.push_back(r.lhs);
  }
  for (auto& a : lexical_actions) {
    if (a.rule < 0 || static_cast<std::size_t>(a.rule) >= g.num_rules() || !g.rule(a.rule).is_lexical()) {
      throw VocabularyError("lexical action refers to non-lexical rule " + std::to_string(a.rule));
    }
    action_lhs_.push_back(g.rule(a.rule).lhs);
    actions_.push_back(std::move(a));
  }
  candidates_.assign(g.num_nonterminals(), {});
  for (grammar::SymbolId nt = 0; nt < static_cast<grammar::SymbolId>(g.num_nonterminals()); ++nt) {
    if (g.is_identifier_nt(nt)) candidates_[nt].push_back(kUnk);
  }
  for (std::size_t i = 2; i < actions_.size(); ++i) {
    if (!action_index_.emplace(std::make_pair(actions_[i].rule, actions_[i].lexeme), static_cast<int>(i)).second) {
      throw VocabularyError("duplicate output action for rule " + std::to_string(actions_[i].rule));
    }
    candidates_[action_lhs_[i]].push_back(static_cast<int>(i));
  }
}

int Vocabulary::action_index(RuleId rule, const std::string& lexeme) const {
  const auto it = action_index_.find({rule, lexeme});
  return it == action_index_.end() ? kUnk : it->second;
}

grammar::SymbolId Vocabulary::action_lhs(int i) const { return action_lhs_.at(static_cast<std::size_t>(i)); }

int Vocabulary::prev_rule_index(RuleId rule) const { return prev_rule_row_.at(static_cast<std::size_t>(rule)); }

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json lexical = nlohmann::json::array();
  for (std::size_t i = 2 + num_structural_; i < actions_.size(); ++i) {
    lexical.push_back({actions_[i].rule, actions_[i].lexeme});
  }
  return {
      {"grammar", hex64(grammar_fingerprint_)},
      {"thresholds", {{"identifier", thresholds_.identifier}, {"type", thresholds_.type}, {"rule", thresholds_.rule}}},
      {"identifiers", identifiers_.entries()},
      {"types", types_.entries()},
      {"lexical_actions", lexical},
  };
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j, const Grammar& g) {
  try {
    if (j.at("grammar").get<std::string>() != hex64(grammar_fingerprint(g))) {
      throw VocabularyError("vocabulary was built for a different grammar");
    }
    const auto& th = j.at("thresholds");
    Thresholds thresholds{th.at("identifier").get<int>(), th.at("type").get<int>(), th.at("rule").get<int>()};
    std::vector<OutputAction> lexical;
    for (const auto& a : j.at("lexical_actions")) lexical.push_back({a.at(0).get<int>(), a.at(1).get<std::string>()});
    return Vocabulary(g, TokenTable(j.at("identifiers").get<std::vector<std::string>>()),
                      TokenTable(j.at("types").get<std::vector<std::string>>()), std::move(lexical), thresholds);
  } catch (const nlohmann::json::exception& e) {
    throw VocabularyError(std::string("malformed vocabulary: ") + e.what());
  }
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw VocabularyError("cannot write " + path);
  out << to_json().dump(1) << '\n';
}

Vocabulary Vocabulary::load(const std::string& path, const Grammar& g) {
  std::ifstream in(path);
  if (!in) throw VocabularyError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw VocabularyError(path + ": " + e.what());
  }
  return from_json(j, g);
}

std::string Vocabulary::hash() const { return hex64(fnv1a(to_json().dump())); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t grammar_fingerprint(const Grammar& g) {
  std::ostringstream s;
  s << g.nonterminal_name(g.start_symbol()) << '\n';
  for (const auto& r : g.rules()) s << g.rule_to_string(r.id) << '\n';
  return fnv1a(s.str());
}

std::vector<std::string> identifier_stream(const Example& ex) {
  std::vector<std::string> out = ex.nl;
  for (const auto* members : {&ex.variables, &ex.methods}) {
    for (const auto& m : *members) {
      auto words = word_tokens(m.name);
      out.insert(out.end(), words.begin(), words.end());
    }
  }
  return out;
}

TokenTable frequent_table(const std::map<std::string, int>& counts, int threshold) {
  return TokenTable(frequent(counts, threshold));
}

Vocabulary build_vocab(std::span<const Example> corpus, const Grammar& g, const Thresholds& thresholds) {
  if (corpus.empty()) throw VocabularyError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, int> identifier_counts;
  std::map<std::string, int> type_counts;
  std::map<std::pair<RuleId, std::string>, int> action_counts;
  for (const auto& ex : corpus) {
    for (const auto& w : identifier_stream(ex)) ++identifier_counts[w];
    for (const auto& v : ex.variables) ++type_counts[v.type];
    for (const auto& m : ex.methods) ++type_counts[m.type];
    for (const auto& step : ex.target.steps()) {
      if (g.rule(step.rule).is_lexical()) ++action_counts[{step.rule, step.lexeme}];
    }
  }
  std::vector<OutputAction> lexical;
  for (auto& [rule, lexeme] : frequent(action_counts, thresholds.rule)) lexical.push_back({rule, lexeme});
  return Vocabulary(g, TokenTable(frequent(identifier_counts, thresholds.identifier)),
                    TokenTable(frequent(type_counts, thresholds.type)), std::move(lexical), thresholds);
}

}  // namespace concode::corpus
