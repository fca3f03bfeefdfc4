#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/corpus/vocabulary.hpp"
#include "concode/grammar/grammar.hpp"
#include "concode/inference/decoder.hpp"
#include "concode/inference/predictions.hpp"
#include "concode/model/config.hpp"
#include "concode/model/model.hpp"
#include "concode/model/trainable.hpp"

namespace concode::baselines {

using tensor::Tensor;

// For each step of the target derivation at a copyable nonterminal, every
// input position whose token equals the step's lexeme; empty elsewhere.
std::vector<std::vector<int>> position_copy_labels(const corpus::Example& ex, const grammar::Grammar& g,
                                                   const std::vector<std::string>& input);

// BiLSTM encoder over the flattened input and the grammar-constrained rule
// decoder, with single-step attention and copying from any input position.
// Only hidden, sym_embed, layers, dropout, use_copy and the decoding limits of
// the config apply.
class Seq2Prod : public model::Trainable {
 public:
  static Seq2Prod build(std::span<const corpus::Example> train, const grammar::Grammar& g,
                        const model::ModelConfig& config, const corpus::Thresholds& thresholds = {});
  static std::unique_ptr<Seq2Prod> load(const std::string& path, const grammar::Grammar& g);

  Seq2Prod(const grammar::Grammar& g, corpus::Vocabulary vocab, corpus::TokenTable source, model::ModelConfig config);
  void init(std::uint64_t seed);

  tensor::ParameterSet& params() override { return params_; }
  const tensor::ParameterSet& params() const { return params_; }
  Tensor loss(const corpus::Example& ex, std::mt19937_64* rng = nullptr) const override;
  void save(const std::string& path) const override;

  const grammar::Grammar& grammar() const { return *grammar_; }
  const corpus::Vocabulary& vocab() const { return vocab_; }
  const corpus::TokenTable& source() const { return source_; }
  const model::ModelConfig& config() const { return config_; }

  struct Encoded {
    Tensor states;     // H x n
    Tensor keys;       // F * states
    Tensor copy_keys;  // G * states
    std::vector<std::string> tokens;
    model::DecoderState init;
  };
  struct Step {
    model::DecoderState state;
    Tensor alpha;
    Tensor c;
    std::span<const int> candidates;
    Tensor generation;
    Tensor copy_gate;  // undefined when copying does not apply
    Tensor beta;       // copy distribution over input positions
    bool copy_available() const { return copy_gate.defined(); }
  };
  Encoded encode(const corpus::Example& ex, std::mt19937_64* rng = nullptr) const;
  Step step(const Encoded& enc, const model::StepInput& in, const model::DecoderState& prev,
            std::mt19937_64* rng = nullptr) const;

  inference::DecodeOptions decode_options() const;
  std::vector<inference::Prediction> predict_corpus(std::span<const corpus::Example> examples) const;
  std::vector<inference::Prediction> predict_corpus(std::span<const corpus::Example> examples,
                                                    const inference::DecodeOptions& opts) const;

 private:
  const grammar::Grammar* grammar_;
  corpus::Vocabulary vocab_;
  corpus::TokenTable source_;
  model::ModelConfig config_;
  tensor::ParameterSet params_;
};

// Decoder scorer for Seq2Prod; same merging and UNK rules as the main model.
class Seq2ProdScorer : public inference::StepScorer {
 public:
  Seq2ProdScorer(const Seq2Prod& model, const corpus::Example& ex);
  inference::ScoredStep score(const inference::StepContext& ctx) const override;

 private:
  const Seq2Prod& model_;
  Seq2Prod::Encoded enc_;
  std::vector<grammar::RuleId> lexical_rule_;
};

}  // namespace concode::baselines
