#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/corpus/vocabulary.hpp"
#include "concode/grammar/grammar.hpp"
#include "concode/model/config.hpp"
#include "concode/model/trainable.hpp"
#include "concode/tensor/parameters.hpp"
#include "concode/tensor/tensor.hpp"

namespace concode::model {

using tensor::Tensor;

// Per-layer LSTM state.
struct DecoderState {
  std::vector<Tensor> h;
  std::vector<Tensor> c;
  const Tensor& top() const { return h.back(); }
};

struct Encoded {
  Tensor nl_states;   // H x z
  Tensor nl_keys;     // F * nl_states
  Tensor env_states;  // H x slots; undefined for an empty environment
  Tensor env_keys;    // G * env_states
  std::vector<corpus::Slot> slots;
  DecoderState init;

  bool has_environment() const { return !slots.empty(); }
};

struct Attention {
  Tensor alpha;  // z x 1
  Tensor z;      // H x 1
  Tensor beta;   // slots x 1; undefined without environment
  Tensor e;      // H x 1; zero without environment
  Tensor c;      // H x 1
};

// Inputs to one decoder step. Rule rows index the previous/parent rule
// table (Vocabulary::prev_rule_index or kSentinelRule).
struct StepInput {
  grammar::SymbolId nonterminal = 0;
  int prev_rule_row = corpus::Vocabulary::kSentinelRule;
  int parent_rule_row = corpus::Vocabulary::kSentinelRule;
  Tensor parent_top;  // top-layer hidden state of the step that produced the nonterminal
};

struct StepOutput {
  DecoderState state;
  Attention attention;
  std::span<const int> candidates;  // output actions with lhs = nonterminal
  Tensor generation;                // softmax over candidates
  Tensor copy_gate;                 // 1x1; undefined when copying is unavailable
  bool copy_available() const { return copy_gate.defined(); }
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Members visible to the model after the variable/method ablations.
struct Environment {
  std::vector<corpus::Member> variables;
  std::vector<corpus::Member> methods;
};
Environment effective_environment(const corpus::Example& ex, const ModelConfig& config);

// Copy labels recomputed against the effective environment.
std::vector<std::optional<int>> effective_copy_labels(const corpus::Example& ex, const grammar::Grammar& g,
                                                      const ModelConfig& config);

class Model : public Trainable {
 public:
  // The grammar and vocabulary must outlive the model.
  Model(const grammar::Grammar& g, const corpus::Vocabulary& vocab, ModelConfig config);

  // Xavier-uniform weights, forget-gate biases at 1, other biases at 0.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const grammar::Grammar& grammar() const { return *grammar_; }
  const corpus::Vocabulary& vocab() const { return *vocab_; }
  tensor::ParameterSet& params() override { return params_; }
  const tensor::ParameterSet& params() const { return params_; }

  // `rng` enables dropout; pass nullptr for evaluation.
  Encoded encode(const corpus::Example& ex, std::mt19937_64* rng = nullptr) const;
  // NL BiLSTM over token indices: H x z states plus the per-layer initial
  // decoder state built from each direction's final state.
  std::pair<Tensor, DecoderState> encode_nl(std::span<const int> tokens, std::mt19937_64* rng = nullptr) const;
  // Environment slot states in [t : v : r : m] order (H x slots), undefined
  // when empty.
  Tensor encode_env(std::span<const corpus::Member> variables, std::span<const corpus::Member> methods) const;
  std::vector<int> nl_indices(const corpus::Example& ex) const;

  StepInput first_step_input(const Encoded& enc) const;
  // Advances the decoder LSTM stack only.
  DecoderState advance(const StepInput& in, const DecoderState& prev, std::mt19937_64* rng = nullptr) const;
  Attention attend(const Tensor& s, const Encoded& enc, std::mt19937_64* rng = nullptr) const;
  StepOutput step(const Encoded& enc, const StepInput& in, const DecoderState& prev,
                  std::mt19937_64* rng = nullptr) const;

  // Negative log-likelihood of the example's target derivation.
  Tensor loss(const corpus::Example& ex, std::mt19937_64* rng = nullptr) const override;

  // Checkpoint plus `<path>.meta.json` recording the config and vocabulary
  // hash. load() rejects a sidecar that disagrees with this model.
  void save(const std::string& path) const override;
  void load(const std::string& path);

 private:
  struct Lstm {
    Tensor w;
    Tensor b;
  };
  struct BiLstm {
    Lstm fw;
    Lstm bw;
  };
  // Handles into params_, resolved once.
  struct Weights {
    Tensor I, T, N, A, F, G, W_ctx, R, copy_b;
    std::vector<BiLstm> nl;
    BiLstm name, pair;
    std::vector<Lstm> dec;
  };

  void build_params();
  Tensor lstm_sequence_final(const std::vector<Tensor>& inputs, const BiLstm& lstm) const;

  const grammar::Grammar* grammar_;
  const corpus::Vocabulary* vocab_;
  ModelConfig config_;
  tensor::ParameterSet params_;
  Weights w_;
};

// Config stored in a checkpoint's sidecar.
ModelConfig read_checkpoint_config(const std::string& path);

// Position of `action` within the candidate list, if present.
std::optional<int> candidate_position(std::span<const int> candidates, int action);

}  // namespace concode::model
