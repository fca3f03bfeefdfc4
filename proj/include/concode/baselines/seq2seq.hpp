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
#include "concode/inference/predictions.hpp"
#include "concode/model/config.hpp"
#include "concode/model/model.hpp"
#include "concode/model/trainable.hpp"

namespace concode::baselines {

using tensor::Tensor;

// Reserved rows of the target token table.
inline constexpr int kEndToken = 2;    // "</s>"
inline constexpr int kStartToken = 3;  // "<s>"

// Code tokens seen at least `threshold` times after the reserved rows.
corpus::TokenTable build_target_table(std::span<const corpus::Example> corpus, const grammar::Grammar& g,
                                      int threshold);

// LSTM encoder over the flattened input and an LSTM decoder over code tokens
// with general attention. Uses hidden, sym_embed (target embeddings),
// layers, dropout and max_tokens from the config.
class Seq2Seq : public model::Trainable {
 public:
  // Source threshold is the identifier threshold, target threshold the rule
  // threshold.
  static Seq2Seq build(std::span<const corpus::Example> train, const grammar::Grammar& g,
                       const model::ModelConfig& config, const corpus::Thresholds& thresholds = {});
  static std::unique_ptr<Seq2Seq> load(const std::string& path, const grammar::Grammar& g);

  Seq2Seq(const grammar::Grammar& g, corpus::TokenTable source, corpus::TokenTable target, model::ModelConfig config);
  void init(std::uint64_t seed);

  tensor::ParameterSet& params() override { return params_; }
  const tensor::ParameterSet& params() const { return params_; }
  Tensor loss(const corpus::Example& ex, std::mt19937_64* rng = nullptr) const override;
  void save(const std::string& path) const override;

  struct Output {
    std::vector<std::string> tokens;
    double logp = 0;
    bool truncated = false;  // max_tokens reached before the end token
  };
  // Greedy decoding. An UNK output is replaced by the source token holding
  // the most attention at that step.
  Output predict(const corpus::Example& ex) const;
  std::vector<inference::Prediction> predict_corpus(std::span<const corpus::Example> examples) const;

  const corpus::TokenTable& source() const { return source_; }
  const corpus::TokenTable& target() const { return target_; }
  const model::ModelConfig& config() const { return config_; }

  struct Step {
    model::DecoderState state;
    Tensor alpha;  // over source positions
    Tensor probs;  // over the target table
  };
  struct Encoded {
    Tensor states;  // H x n
    model::DecoderState init;
    std::vector<std::string> tokens;
  };
  Encoded encode(const corpus::Example& ex, std::mt19937_64* rng = nullptr) const;
  Step step(const Encoded& enc, int prev_token, const model::DecoderState& prev, std::mt19937_64* rng = nullptr) const;

 private:
  const grammar::Grammar* grammar_;
  corpus::TokenTable source_;
  corpus::TokenTable target_;
  model::ModelConfig config_;
  tensor::ParameterSet params_;
};

}  // namespace concode::baselines
