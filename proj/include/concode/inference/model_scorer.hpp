#pragma once

#include <string>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/inference/decoder.hpp"
#include "concode/model/model.hpp"

namespace concode::inference {

// Lexeme emitted by the UNK action at a literal nonterminal, where the
// identifier placeholder would not lex as the right kind of token.
std::string literal_fallback(grammar::LexicalClass cls);

// Scores expansions with the trained model for one example. Generated and
// copied candidates with the same lexeme are merged by adding their
// probabilities. At copyable nonterminals with a non-empty environment the
// UNK action is withheld; elsewhere it emits the placeholder lexeme.
class ModelScorer : public StepScorer {
 public:
  // The model and example must outlive the scorer.
  ModelScorer(const model::Model& model, const corpus::Example& ex);
  ScoredStep score(const StepContext& ctx) const override;

  const model::Encoded& encoded() const { return enc_; }

 private:
  const model::Model& model_;
  model::Encoded enc_;
  std::vector<grammar::RuleId> lexical_rule_;  // per nonterminal, -1 if none
};

DecodeOptions decode_options(const model::ModelConfig& config);

// Decoding entry points for the model, with limits and beam size taken from
// its config unless overridden.
DecodeResult greedy_decode(const model::Model& model, const corpus::Example& ex);
DecodeResult greedy_decode(const model::Model& model, const corpus::Example& ex, const DecodeOptions& options);
std::vector<DecodeResult> beam_decode(const model::Model& model, const corpus::Example& ex);
std::vector<DecodeResult> beam_decode(const model::Model& model, const corpus::Example& ex,
                                      const DecodeOptions& options);

}  // namespace concode::inference
