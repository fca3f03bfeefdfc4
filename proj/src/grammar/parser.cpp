#include "concode/grammar/parser.hpp"

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace concode::grammar {

namespace {

struct Item {
  RuleId rule;
  int dot;
  int origin;
};

std::uint64_t item_key(const Item& it) {
  return (static_cast<std::uint64_t>(it.rule) << 40) | (static_cast<std::uint64_t>(it.dot) << 24) |
         static_cast<std::uint64_t>(it.origin);
}

std::uint64_t span_key(SymbolId nt, int i, int j) {
  return (static_cast<std::uint64_t>(nt) << 40) | (static_cast<std::uint64_t>(i) << 20) |
         static_cast<std::uint64_t>(j);
}

struct ItemSet {
  std::vector<Item> items;
  std::unordered_set<std::uint64_t> seen;
  // waiting[nt] = indices of items whose next symbol is nonterminal nt.
  std::vector<std::vector<int>> waiting;
};

class Recognizer {
 public:
  Recognizer(const Grammar& g, std::span<const Token> tokens) : g_(g), tokens_(tokens) {}

  // Fills completed_ with every (lhs, origin, end) span; throws on failure.
  void run() {
    const int n = static_cast<int>(tokens_.size());
    sets_.resize(static_cast<std::size_t>(n) + 1);
    for (auto& s : sets_) s.waiting.resize(g_.num_nonterminals());
    for (RuleId r : g_.rules_for(g_.start_symbol())) add(0, {r, 0, 0});

    for (int k = 0; k <= n; ++k) {
      auto& set = sets_[k];
      for (std::size_t idx = 0; idx < set.items.size(); ++idx) {
        const Item item = set.items[idx];
        const auto& rule = g_.rule(item.rule);
        if (item.dot == static_cast<int>(rule.rhs.size())) {
          complete(item, k);
          continue;
        }
        const Symbol next = rule.rhs[item.dot];
        if (next.terminal) {
          if (k < n && g_.terminal_matches(next.id, tokens_[k])) {
            add(k + 1, {item.rule, item.dot + 1, item.origin});
          }
          continue;
        }
        for (RuleId r : g_.rules_for(next.id)) add(k, {r, 0, k});
        if (g_.nullable()[next.id]) add(k, {item.rule, item.dot + 1, item.origin});
      }
      if (k < n && sets_[k + 1].items.empty()) {
        throw ParseError(ParseError::Reason::kNoParse,
                         "no parse: unexpected token '" + tokens_[k].text + "' at index " +
                             std::to_string(k),
                         static_cast<std::size_t>(k));
      }
    }
    if (!completed_.count(span_key(g_.start_symbol(), 0, n))) {
      throw ParseError(ParseError::Reason::kNoParse, "no parse: input ended early",
                       tokens_.size());
    }
  }

  bool completed(SymbolId nt, int i, int j) const { return completed_.count(span_key(nt, i, j)) > 0; }

 private:
  void add(int k, const Item& item) {
    auto& set = sets_[k];
    if (!set.seen.insert(item_key(item)).second) return;
    const auto& rule = g_.rule(item.rule);
    if (item.dot < static_cast<int>(rule.rhs.size()) && !rule.rhs[item.dot].terminal) {
      set.waiting[rule.rhs[item.dot].id].push_back(static_cast<int>(set.items.size()));
    }
    set.items.push_back(item);
  }

  void complete(const Item& item, int k) {
    const SymbolId lhs = g_.rule(item.rule).lhs;
    completed_.insert(span_key(lhs, item.origin, k));
    // Copy: add() may grow the same list when origin == k.
    const std::vector<int> waiting = sets_[item.origin].waiting[lhs];
    for (int idx : waiting) {
      const Item parent = sets_[item.origin].items[idx];
      add(k, {parent.rule, parent.dot + 1, parent.origin});
    }
  }

  const Grammar& g_;
  std::span<const Token> tokens_;
  std::vector<ItemSet> sets_;
  std::unordered_set<std::uint64_t> completed_;
};

// Builds the lexicographically smallest derivation over the recognized spans.
class Extractor {
 public:
  Extractor(const Grammar& g, std::span<const Token> tokens, const Recognizer& rec)
      : g_(g), tokens_(tokens), rec_(rec) {}

  Derivation run() {
    const int root = best(g_.start_symbol(), 0, static_cast<int>(tokens_.size()));
    if (root < 0) {
      throw ParseError(ParseError::Reason::kNoParse, "no parse: no acyclic derivation",
                       tokens_.size());
    }
    std::vector<DerivationStep> steps;
    struct Frame {
      int node;
      int parent;
    };
    std::vector<Frame> stack{{root, kNoParent}};
    std::vector<int> children;
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      const Node& node = nodes_[f.node];
      const int step = static_cast<int>(steps.size());
      DerivationStep s;
      s.rule = node.rule;
      s.parent = f.parent;
      if (g_.rule(node.rule).is_lexical()) s.lexeme = tokens_[node.start].text;
      steps.push_back(std::move(s));
      child_nodes(f.node, children);
      for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back({*it, step});
    }
    return Derivation(std::move(steps));
  }

 private:
  static constexpr int kFail = -2;
  static constexpr int kBusy = -3;
  static constexpr int kEmpty = -1;

  struct Node {
    RuleId rule;
    int start;
    int seq;  // first cell, or kEmpty
  };
  struct Cell {
    int child;  // node index, or -1 for a terminal
    int next;   // next cell, or kEmpty
  };

  void child_nodes(int node, std::vector<int>& out) const {
    out.clear();
    for (int c = nodes_[node].seq; c >= 0; c = cells_[c].next) {
      if (cells_[c].child >= 0) out.push_back(cells_[c].child);
    }
  }

  int best(SymbolId nt, int i, int j) {
    if (!rec_.completed(nt, i, j)) return kFail;
    const auto key = span_key(nt, i, j);
    if (const auto it = best_memo_.find(key); it != best_memo_.end()) {
      return it->second == kBusy ? kFail : it->second;
    }
    best_memo_[key] = kBusy;
    int result = kFail;
    for (RuleId r : g_.rules_for(nt)) {
      const int seq = decompose(r, 0, i, j);
      if (seq != kFail) {
        nodes_.push_back({r, i, seq});
        result = static_cast<int>(nodes_.size()) - 1;
        break;
      }
    }
    best_memo_[key] = result;
    return result;
  }

  int decompose(RuleId r, int d, int i, int j) {
    const auto& rhs = g_.rule(r).rhs;
    if (d == static_cast<int>(rhs.size())) return i == j ? kEmpty : kFail;
    const std::uint64_t key = (static_cast<std::uint64_t>(r) << 44) |
                              (static_cast<std::uint64_t>(d) << 36) |
                              (static_cast<std::uint64_t>(i) << 18) | static_cast<std::uint64_t>(j);
    if (const auto it = seq_memo_.find(key); it != seq_memo_.end()) {
      return it->second == kBusy ? kFail : it->second;
    }
    seq_memo_[key] = kBusy;
    int result = kFail;
    const Symbol sym = rhs[d];
    if (sym.terminal) {
      if (i < j && g_.terminal_matches(sym.id, tokens_[i])) {
        const int rest = decompose(r, d + 1, i + 1, j);
        if (rest != kFail) result = push_cell(-1, rest);
      }
    } else {
      int best_child = kFail;
      int best_rest = kFail;
      for (int k = i; k <= j; ++k) {
        if (!rec_.completed(sym.id, i, k)) continue;
        const int rest = decompose(r, d + 1, k, j);
        if (rest == kFail) continue;
        const int child = best(sym.id, i, k);
        if (child == kFail) continue;
        if (best_child == kFail || compare(child, best_child) < 0) {
          best_child = child;
          best_rest = rest;
        }
      }
      if (best_child != kFail) result = push_cell(best_child, best_rest);
    }
    seq_memo_[key] = result;
    return result;
  }

  int push_cell(int child, int next) {
    cells_.push_back({child, next});
    return static_cast<int>(cells_.size()) - 1;
  }

  // Lexicographic comparison of pre-order rule sequences.
  int compare(int a, int b) const {
    std::vector<int> sa{a}, sb{b}, ca, cb;
    while (!sa.empty() && !sb.empty()) {
      const int na = sa.back();
      const int nb = sb.back();
      sa.pop_back();
      sb.pop_back();
      if (nodes_[na].rule != nodes_[nb].rule) return nodes_[na].rule < nodes_[nb].rule ? -1 : 1;
      child_nodes(na, ca);
      child_nodes(nb, cb);
      sa.insert(sa.end(), ca.rbegin(), ca.rend());
      sb.insert(sb.end(), cb.rbegin(), cb.rend());
    }
    if (sa.empty() && sb.empty()) return 0;
    return sa.empty() ? -1 : 1;
  }

  const Grammar& g_;
  std::span<const Token> tokens_;
  const Recognizer& rec_;
  std::vector<Node> nodes_;
  std::vector<Cell> cells_;
  std::unordered_map<std::uint64_t, int> best_memo_;
  std::unordered_map<std::uint64_t, int> seq_memo_;
};

}  // namespace

Derivation parse(std::span<const Token> tokens, const Grammar& g, const ParseOptions& options) {
  if (tokens.size() > options.max_tokens) {
    throw ParseError(ParseError::Reason::kTooLong,
                     "input has " + std::to_string(tokens.size()) + " tokens, limit is " +
                         std::to_string(options.max_tokens),
                     options.max_tokens);
  }
  Recognizer rec(g, tokens);
  rec.run();
  return Extractor(g, tokens, rec).run();
}

}  // namespace concode::grammar
