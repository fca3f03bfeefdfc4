#include "concode/inference/decoder.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "concode/grammar/lexer.hpp"

namespace concode::inference {

using grammar::RuleId;
using grammar::SymbolId;

CompletionCost::CompletionCost(const grammar::Grammar& g) {
  terminals_.resize(g.num_rules());
  for (const auto& r : g.rules()) {
    terminals_[static_cast<std::size_t>(r.id)] =
        static_cast<std::size_t>(std::count_if(r.rhs.begin(), r.rhs.end(), [](const auto& s) { return s.terminal; }));
  }
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;
  cost_.assign(g.num_nonterminals(), Cost{kInf, kInf});
  auto less = [](const Cost& a, const Cost& b) { return a.tokens != b.tokens ? a.tokens < b.tokens : a.rules < b.rules; };
  // Costs only decrease, and (tokens, rules) order is preserved by addition,
  // so relaxation reaches the lexicographic minimum.
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : g.rules()) {
      Cost c{terminals_[static_cast<std::size_t>(r.id)], 1};
      bool finite = true;
      for (const auto& s : r.rhs) {
        if (s.terminal) continue;
        const Cost& child = cost_[s.id];
        if (child.tokens >= kInf) {
          finite = false;
          break;
        }
        c.tokens += child.tokens;
        c.rules += child.rules;
      }
      if (finite && less(c, cost_[r.lhs])) {
        cost_[r.lhs] = c;
        changed = true;
      }
    }
  }
}

bool lexeme_fits(const grammar::Grammar& g, SymbolId nonterminal, const std::string& text) {
  const auto cls = g.lexical_class(nonterminal);
  if (!cls) return false;
  try {
    const auto tokens = grammar::tokenize_code(text);
    return tokens.size() == 1 && tokens[0].text == text && tokens[0].kind == grammar::token_kind_for(*cls);
  } catch (const grammar::LexError&) {
    return false;
  }
}

namespace {

struct Pending {
  SymbolId nonterminal;
  int parent_step;
  RuleId parent_rule;
  StatePtr parent_state;
};

// Persistent list of chosen steps, shared between hypotheses with a common
// prefix.
struct Trail {
  std::shared_ptr<const Trail> prev;
  grammar::DerivationStep step;
  Expansion choice;
};

struct Hyp {
  std::vector<Pending> frontier;
  std::shared_ptr<const Trail> trail;
  StatePtr last_state;
  RuleId last_rule = -1;
  int steps = 0;
  std::size_t tokens = 0;
  std::size_t pending_tokens = 0;
  std::size_t pending_rules = 0;
  double logp = 0;

  bool complete() const { return frontier.empty(); }
};

// Terminal yield of a possibly incomplete derivation, up to the first
// unexpanded nonterminal.
std::vector<std::string> realize_prefix(const std::vector<grammar::DerivationStep>& steps, const grammar::Grammar& g) {
  std::vector<std::string> out;
  std::vector<grammar::Symbol> stack{grammar::Symbol{false, g.start_symbol()}};
  std::size_t t = 0;
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    if (s.terminal) {
      out.push_back(g.terminal_name(s.id));
      continue;
    }
    if (t >= steps.size()) break;
    const auto& rule = g.rule(steps[t].rule);
    if (rule.is_lexical()) {
      out.push_back(steps[t].lexeme);
    } else {
      for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it) stack.push_back(*it);
    }
    ++t;
  }
  return out;
}

class Search {
 public:
  Search(const StepScorer& scorer, const grammar::Grammar& g, const DecodeOptions& options)
      : scorer_(scorer), g_(g), options_(options), cost_(g) {
    if (options.beam_size < 1) throw std::invalid_argument("beam size must be at least 1");
    const auto& start = cost_.of(g.start_symbol());
    budgeted_ = start.rules <= limit(options.max_rules) && start.tokens <= limit(options.max_tokens);
  }

  Hyp initial() const {
    Hyp h;
    h.frontier.push_back({g_.start_symbol(), -1, -1, nullptr});
    h.pending_rules = cost_.of(g_.start_symbol()).rules;
    h.pending_tokens = cost_.of(g_.start_symbol()).tokens;
    return h;
  }

  ScoredStep score(const Hyp& h) const {
    const Pending& top = h.frontier.back();
    StepContext ctx;
    ctx.nonterminal = top.nonterminal;
    ctx.prev_rule = h.last_rule;
    ctx.parent_rule = top.parent_rule;
    ctx.prev = h.last_state.get();
    ctx.parent = top.parent_state.get();
    return scorer_.score(ctx);
  }

  // Admissible expansions ordered by logp (stable, so scorer order breaks
  // ties), at most `keep` of them.
  std::vector<const Expansion*> ranked(const Hyp& h, const ScoredStep& scored, std::size_t keep) const {
    std::vector<const Expansion*> out;
    const SymbolId nt = h.frontier.back().nonterminal;
    for (const auto& e : scored.expansions) {
      if (g_.rule(e.rule).lhs != nt) throw std::logic_error("scorer proposed a rule for another nonterminal");
      if (admissible(h, e)) out.push_back(&e);
    }
    std::stable_sort(out.begin(), out.end(), [](const Expansion* a, const Expansion* b) { return a->logp > b->logp; });
    if (out.size() > keep) out.resize(keep);
    return out;
  }

  Hyp extend(const Hyp& h, const Expansion& e, const StatePtr& state) const {
    Hyp n;
    const auto& rule = g_.rule(e.rule);
    n.frontier = h.frontier;
    const Pending top = n.frontier.back();
    n.frontier.pop_back();
    n.pending_rules = h.pending_rules - cost_.of(top.nonterminal).rules;
    n.pending_tokens = h.pending_tokens - cost_.of(top.nonterminal).tokens;
    for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it) {
      if (it->terminal) continue;
      n.frontier.push_back({it->id, h.steps, e.rule, state});
      n.pending_rules += cost_.of(it->id).rules;
      n.pending_tokens += cost_.of(it->id).tokens;
    }
    n.trail = std::make_shared<const Trail>(Trail{h.trail, {e.rule, top.parent_step, e.lexeme}, e});
    n.last_state = state;
    n.last_rule = e.rule;
    n.steps = h.steps + 1;
    n.tokens = h.tokens + cost_.terminals(e.rule);
    n.logp = h.logp + e.logp;
    return n;
  }

  DecodeResult finish(const Hyp& h) const {
    DecodeResult r;
    std::vector<grammar::DerivationStep> steps(static_cast<std::size_t>(h.steps));
    r.choices.resize(steps.size());
    std::size_t i = steps.size();
    for (const Trail* t = h.trail.get(); t; t = t->prev.get()) {
      --i;
      steps[i] = t->step;
      r.choices[i] = t->choice;
    }
    r.logp = h.logp;
    r.truncated = !h.complete();
    if (r.truncated) {
      r.tokens = realize_prefix(steps, g_);
    } else {
      r.derivation = grammar::Derivation(std::move(steps));
      r.tokens = grammar::realize(r.derivation, g_);
    }
    return r;
  }

  double rank_score(const Hyp& h) const {
    return options_.length_normalize && h.steps > 0 ? h.logp / h.steps : h.logp;
  }

 private:
  static std::size_t limit(int v) { return static_cast<std::size_t>(std::max(v, 0)); }

  bool admissible(const Hyp& h, const Expansion& e) const {
    const auto& rule = g_.rule(e.rule);
    const std::size_t steps = static_cast<std::size_t>(h.steps) + 1;
    const std::size_t tokens = h.tokens + cost_.terminals(e.rule);
    if (!budgeted_) return steps <= limit(options_.max_rules) && tokens <= limit(options_.max_tokens);
    std::size_t rules_left = h.pending_rules - cost_.of(rule.lhs).rules;
    std::size_t tokens_left = h.pending_tokens - cost_.of(rule.lhs).tokens;
    for (const auto& s : rule.rhs) {
      if (s.terminal) continue;
      rules_left += cost_.of(s.id).rules;
      tokens_left += cost_.of(s.id).tokens;
    }
    return steps + rules_left <= limit(options_.max_rules) && tokens + tokens_left <= limit(options_.max_tokens);
  }

  const StepScorer& scorer_;
  const grammar::Grammar& g_;
  DecodeOptions options_;
  CompletionCost cost_;
  bool budgeted_ = true;
};

}  // namespace

DecodeResult greedy_decode(const StepScorer& scorer, const grammar::Grammar& g, const DecodeOptions& options) {
  const Search search(scorer, g, options);
  Hyp h = search.initial();
  while (!h.complete()) {
    const ScoredStep scored = search.score(h);
    const auto best = search.ranked(h, scored, 1);
    if (best.empty()) break;
    h = search.extend(h, *best.front(), scored.state);
  }
  return search.finish(h);
}

namespace {

struct Done {
  Hyp hyp;
  int completed_at;
  DecodeResult result;
};

// One shrinking-beam pass at a fixed width. Hypotheses with no admissible
// expansion are collected in `stuck`.
void run_beam(const Search& search, std::size_t width, std::vector<Done>& done, std::vector<Hyp>& stuck) {
  std::vector<Hyp> live{search.initial()};
  for (int iteration = 0; !live.empty(); ++iteration) {
    std::vector<Hyp> candidates;
    for (const Hyp& h : live) {
      const ScoredStep scored = search.score(h);
      const auto top = search.ranked(h, scored, width);
      if (top.empty()) stuck.push_back(h);
      for (const Expansion* e : top) candidates.push_back(search.extend(h, *e, scored.state));
    }
    // Stable: equal scores keep parent rank, then expansion rank.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Hyp& a, const Hyp& b) { return a.logp > b.logp; });
    if (candidates.size() > width) candidates.resize(width);
    live.clear();
    for (auto& c : candidates) {
      if (c.complete()) {
        DecodeResult r = search.finish(c);
        done.push_back({std::move(c), iteration, std::move(r)});
      } else {
        live.push_back(std::move(c));
      }
    }
  }
}

bool same_output(const DecodeResult& a, const DecodeResult& b) { return a.derivation == b.derivation; }

}  // namespace

std::vector<DecodeResult> beam_decode(const StepScorer& scorer, const grammar::Grammar& g,
                                      const DecodeOptions& options) {
  const Search search(scorer, g, options);
  std::vector<Done> done;
  std::vector<Hyp> stuck;
  // Widths 1..beam_size; a wider pass alone can miss what a narrower one finds.
  for (int width = 1; width <= options.beam_size; ++width) {
    std::vector<Done> found;
    run_beam(search, static_cast<std::size_t>(width), found, stuck);
    for (auto& d : found) {
      const bool seen = std::any_of(done.begin(), done.end(), [&](const Done& o) { return same_output(o.result, d.result); });
      if (!seen) done.push_back(std::move(d));
    }
  }

  std::vector<DecodeResult> out;
  if (done.empty()) {
    if (stuck.empty()) return out;
    // First of the highest-scoring, so earlier hypotheses win ties.
    const auto it = std::max_element(stuck.begin(), stuck.end(),
                                     [](const Hyp& a, const Hyp& b) { return a.logp < b.logp; });
    out.push_back(search.finish(*it));
    return out;
  }
  std::stable_sort(done.begin(), done.end(), [&](const Done& a, const Done& b) {
    const double sa = search.rank_score(a.hyp);
    const double sb = search.rank_score(b.hyp);
    if (sa != sb) return sa > sb;
    if (a.completed_at != b.completed_at) return a.completed_at < b.completed_at;
    return a.result.tokens < b.result.tokens;
  });
  out.reserve(done.size());
  for (auto& d : done) out.push_back(std::move(d.result));
  return out;
}

}  // namespace concode::inference
