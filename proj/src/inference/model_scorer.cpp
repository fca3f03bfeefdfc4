#include "concode/inference/model_scorer.hpp"

#include <cmath>
#include <unordered_map>

#include "concode/corpus/canonicalize.hpp"
#include "concode/corpus/vocabulary.hpp"

namespace concode::inference {

namespace {

struct ModelState : ScorerState {
  model::DecoderState decoder;
};

const model::DecoderState& decoder_state(const ScorerState* s) { return static_cast<const ModelState*>(s)->decoder; }

}  // namespace

std::string literal_fallback(grammar::LexicalClass cls) {
  switch (cls) {
    case grammar::LexicalClass::kInteger:
      return "0";
    case grammar::LexicalClass::kFloat:
      return "0.0";
    case grammar::LexicalClass::kCharacter:
      return "'a'";
    case grammar::LexicalClass::kString:
      return std::string(corpus::kCanonicalString);
    case grammar::LexicalClass::kIdentifier:
      break;
  }
  return std::string(corpus::kUnkLexeme);
}

ModelScorer::ModelScorer(const model::Model& model, const corpus::Example& ex) : model_(model) {
  tensor::NoGrad no_grad;
  enc_ = model.encode(ex);
  const auto& g = model.grammar();
  lexical_rule_.assign(g.num_nonterminals(), -1);
  for (const auto& r : g.rules()) {
    if (r.is_lexical()) lexical_rule_[r.lhs] = r.id;
  }
}

ScoredStep ModelScorer::score(const StepContext& ctx) const {
  tensor::NoGrad no_grad;
  const auto& vocab = model_.vocab();
  const auto& g = model_.grammar();

  model::StepInput in;
  in.nonterminal = ctx.nonterminal;
  in.prev_rule_row = ctx.prev_rule < 0 ? corpus::Vocabulary::kSentinelRule : vocab.prev_rule_index(ctx.prev_rule);
  in.parent_rule_row =
      ctx.parent_rule < 0 ? corpus::Vocabulary::kSentinelRule : vocab.prev_rule_index(ctx.parent_rule);
  in.parent_top = ctx.parent ? decoder_state(ctx.parent).top() : enc_.init.top();
  const model::DecoderState& prev = ctx.prev ? decoder_state(ctx.prev) : enc_.init;
  model::StepOutput out = model_.step(enc_, in, prev);

  auto state = std::make_shared<ModelState>();
  state->decoder = std::move(out.state);

  const bool copying = out.copy_available();
  const double gate = copying ? out.copy_gate.item() : 0.0;
  const auto& gen = out.generation.value();

  // Probabilities accumulate per lexeme (or per rule for structural ones)
  // before taking logs, so merged candidates add in probability space.
  std::vector<Expansion> expansions;
  std::vector<double> prob;
  std::vector<double> best_copy;
  std::unordered_map<std::string, std::size_t> by_lexeme;
  auto add = [&](grammar::RuleId rule, const std::string& lexeme, double p, int action, int slot) {
    std::size_t idx;
    const auto it = lexeme.empty() ? by_lexeme.end() : by_lexeme.find(lexeme);
    if (it != by_lexeme.end()) {
      idx = it->second;
    } else {
      idx = expansions.size();
      expansions.push_back({rule, lexeme, 0.0, -1, -1});
      prob.push_back(0.0);
      best_copy.push_back(-1.0);
      if (!lexeme.empty()) by_lexeme.emplace(lexeme, idx);
    }
    prob[idx] += p;
    if (action >= 0) expansions[idx].action = action;
    if (slot >= 0 && p > best_copy[idx]) {
      best_copy[idx] = p;
      expansions[idx].copy_slot = slot;
    }
  };

  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    const int action = out.candidates[i];
    const double p = (1.0 - gate) * gen(static_cast<Eigen::Index>(i), 0);
    if (action == corpus::kUnk) {
      if (copying) continue;
      const auto cls = g.lexical_class(ctx.nonterminal);
      add(lexical_rule_[ctx.nonterminal], literal_fallback(cls.value_or(grammar::LexicalClass::kIdentifier)), p,
          action, -1);
      continue;
    }
    const auto& a = vocab.action(action);
    add(a.rule, a.lexeme, p, action, -1);
  }
  if (copying) {
    const auto& beta = out.attention.beta.value();
    for (std::size_t j = 0; j < enc_.slots.size(); ++j) {
      if (!lexeme_fits(g, ctx.nonterminal, enc_.slots[j].text)) continue;
      add(lexical_rule_[ctx.nonterminal], enc_.slots[j].text, gate * beta(static_cast<Eigen::Index>(j), 0), -1,
          static_cast<int>(j));
    }
  }
  for (std::size_t i = 0; i < expansions.size(); ++i) expansions[i].logp = std::log(prob[i]);
  return {std::move(state), std::move(expansions)};
}

DecodeOptions decode_options(const model::ModelConfig& config) {
  DecodeOptions o;
  o.beam_size = config.beam_size;
  o.max_rules = config.max_rules;
  o.max_tokens = config.max_tokens;
  return o;
}

DecodeResult greedy_decode(const model::Model& model, const corpus::Example& ex) {
  return greedy_decode(model, ex, decode_options(model.config()));
}

DecodeResult greedy_decode(const model::Model& model, const corpus::Example& ex, const DecodeOptions& options) {
  const ModelScorer scorer(model, ex);
  return greedy_decode(scorer, model.grammar(), options);
}

std::vector<DecodeResult> beam_decode(const model::Model& model, const corpus::Example& ex) {
  return beam_decode(model, ex, decode_options(model.config()));
}

std::vector<DecodeResult> beam_decode(const model::Model& model, const corpus::Example& ex,
                                      const DecodeOptions& options) {
  const ModelScorer scorer(model, ex);
  return beam_decode(scorer, model.grammar(), options);
}

}  // namespace concode::inference
