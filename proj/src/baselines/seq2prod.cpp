#include "concode/baselines/seq2prod.hpp"

#include <cmath>
#include <unordered_map>

#include "concode/baselines/flat_input.hpp"
#include "concode/inference/model_scorer.hpp"
#include "recurrent.hpp"

namespace concode::baselines {

using namespace detail;
using corpus::Vocabulary;

namespace {

Lstm lstm(const tensor::ParameterSet& p, const std::string& name) { return {p.get(name + ".W"), p.get(name + ".b")}; }

}  // namespace

std::vector<std::vector<int>> position_copy_labels(const corpus::Example& ex, const grammar::Grammar& g,
                                                   const std::vector<std::string>& input) {
  std::vector<std::vector<int>> out(ex.target.size());
  for (std::size_t t = 0; t < ex.target.size(); ++t) {
    const auto& step = ex.target[t];
    if (!g.is_copyable_nt(g.rule(step.rule).lhs)) continue;
    for (std::size_t j = 0; j < input.size(); ++j) {
      if (input[j] == step.lexeme) out[t].push_back(static_cast<int>(j));
    }
  }
  return out;
}

Seq2Prod Seq2Prod::build(std::span<const corpus::Example> train, const grammar::Grammar& g,
                         const model::ModelConfig& config, const corpus::Thresholds& thresholds) {
  return Seq2Prod(g, corpus::build_vocab(train, g, thresholds), build_source_table(train, thresholds.identifier),
                  config);
}

Seq2Prod::Seq2Prod(const grammar::Grammar& g, corpus::Vocabulary vocab, corpus::TokenTable source,
                   model::ModelConfig config)
    : grammar_(&g), vocab_(std::move(vocab)), source_(std::move(source)), config_(config) {
  config_.validate();
  const Eigen::Index H = config_.hidden;
  const Eigen::Index h = H / 2;
  const Eigen::Index S = config_.sym_embed;
  params_.add("S", H, static_cast<Eigen::Index>(source_.size()));
  params_.add("N", S, static_cast<Eigen::Index>(vocab_.num_nonterminal_rows()));
  params_.add("A", S, static_cast<Eigen::Index>(vocab_.num_prev_rules()));
  for (int l = 0; l < config_.layers; ++l) {
    for (const char* dir : {"fw", "bw"}) {
      const std::string p = "enc." + std::to_string(l) + "." + dir;
      params_.add(p + ".W", 4 * h, H + h);
      params_.add(p + ".b", 4 * h, 1);
    }
  }
  for (int l = 0; l < config_.layers; ++l) {
    params_.add("dec." + std::to_string(l) + ".W", 4 * H, (l == 0 ? 3 * S + H : H) + H);
    params_.add("dec." + std::to_string(l) + ".b", 4 * H, 1);
  }
  params_.add("F", H, H);
  params_.add("G", H, H);
  params_.add("W_ctx", H, 2 * H);
  params_.add("R", static_cast<Eigen::Index>(vocab_.num_actions()), H);
  params_.add("copy.b", H, 1);
}

void Seq2Prod::init(std::uint64_t seed) { init_parameters(params_, seed, "copy.b"); }

Seq2Prod::Encoded Seq2Prod::encode(const corpus::Example& ex, std::mt19937_64* rng) const {
  Encoded enc;
  enc.tokens = flatten_input(ex);
  const auto ids = source_indices(source_, enc.tokens);
  const Eigen::Index h = config_.hidden / 2;
  const std::size_t n = ids.size();
  std::vector<Tensor> inputs;
  inputs.reserve(n);
  for (int id : ids) inputs.push_back(ts::embedding_lookup(params_.get("S"), id));

  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    const std::vector<Lstm> fw_cell{lstm(params_, p + ".fw")};
    const std::vector<Lstm> bw_cell{lstm(params_, p + ".bw")};
    std::vector<model::DecoderState> fw(n), bw(n);
    model::DecoderState s = zero_state(1, h);
    for (std::size_t i = 0; i < n; ++i) fw[i] = s = stacked_step(inputs[i], s, fw_cell, 0.0, nullptr);
    s = zero_state(1, h);
    for (std::size_t i = n; i-- > 0;) bw[i] = s = stacked_step(inputs[i], s, bw_cell, 0.0, nullptr);
    enc.init.h.push_back(ts::concat({fw[n - 1].h[0], bw[0].h[0]}));
    enc.init.c.push_back(ts::concat({fw[n - 1].c[0], bw[0].c[0]}));
    const bool inner = l + 1 < config_.layers;
    for (std::size_t i = 0; i < n; ++i) {
      Tensor out = ts::concat({fw[i].h[0], bw[i].h[0]});
      inputs[i] = inner && rng ? ts::dropout(out, config_.dropout, true, *rng) : out;
    }
  }
  enc.states = ts::hconcat(inputs);
  enc.keys = ts::matmul(params_.get("F"), enc.states);
  enc.copy_keys = ts::matmul(params_.get("G"), enc.states);
  return enc;
}

Seq2Prod::Step Seq2Prod::step(const Encoded& enc, const model::StepInput& in, const model::DecoderState& prev,
                              std::mt19937_64* rng) const {
  Step out;
  const Tensor x = ts::concat({ts::embedding_lookup(params_.get("N"), vocab_.nonterminal_index(in.nonterminal)),
                               ts::embedding_lookup(params_.get("A"), in.prev_rule_row),
                               ts::embedding_lookup(params_.get("A"), in.parent_rule_row), in.parent_top});
  std::vector<Lstm> dec;
  for (int l = 0; l < config_.layers; ++l) dec.push_back(lstm(params_, "dec." + std::to_string(l)));
  out.state = stacked_step(x, prev, dec, config_.dropout, rng);
  const Tensor& s = out.state.top();
  out.alpha = ts::softmax(ts::matmul_tn(enc.keys, s));
  const Tensor z = ts::matmul(enc.states, out.alpha);
  out.c = ts::tanh(ts::matmul(params_.get("W_ctx"), ts::concat({s, z})));
  if (rng) out.c = ts::dropout(out.c, config_.dropout, true, *rng);
  out.candidates = vocab_.candidate_actions(in.nonterminal);
  out.generation = ts::softmax(ts::matmul(ts::gather_rows(params_.get("R"), out.candidates), out.c));
  if (config_.use_copy && grammar_->is_copyable_nt(in.nonterminal)) {
    out.copy_gate = ts::sigmoid(ts::matmul_tn(params_.get("copy.b"), out.c));
    out.beta = ts::softmax(ts::matmul_tn(enc.copy_keys, s));
  }
  return out;
}

Tensor Seq2Prod::loss(const corpus::Example& ex, std::mt19937_64* rng) const {
  const auto& d = ex.target;
  if (d.empty()) throw model::ModelError("example has an empty target derivation");
  const Encoded enc = encode(ex, rng);
  const auto labels = position_copy_labels(ex, *grammar_, enc.tokens);
  std::vector<model::DecoderState> states;
  states.reserve(d.size());
  std::vector<Tensor> log_probs;
  log_probs.reserve(d.size());
  for (std::size_t t = 0; t < d.size(); ++t) {
    model::StepInput in;
    in.nonterminal = grammar_->rule(d[t].rule).lhs;
    in.prev_rule_row = t == 0 ? Vocabulary::kSentinelRule : vocab_.prev_rule_index(d[t - 1].rule);
    const int parent = d[t].parent;
    in.parent_rule_row = parent < 0 ? Vocabulary::kSentinelRule : vocab_.prev_rule_index(d[parent].rule);
    in.parent_top = parent < 0 ? enc.init.top() : states[static_cast<std::size_t>(parent)].top();
    Step out = step(enc, in, t == 0 ? enc.init : states.back(), rng);

    const int action = vocab_.action_index(d[t].rule, d[t].lexeme);
    const auto pos = model::candidate_position(out.candidates, action);
    if (!pos) throw model::ModelError("step " + std::to_string(t) + " has no output action for its rule");
    const Tensor p_gen = ts::element(out.generation, *pos);
    Tensor p = p_gen;
    if (out.copy_available()) {
      const Tensor keep = ts::affine(out.copy_gate, -1.0, 1.0);
      if (labels[t].empty()) {
        p = ts::mul(keep, p_gen);
      } else {
        const Tensor copied = ts::mul(out.copy_gate, ts::sum(ts::gather_rows(out.beta, labels[t])));
        p = action == corpus::kUnk ? copied : ts::add(copied, ts::mul(keep, p_gen));
      }
    }
    log_probs.push_back(ts::log(p));
    states.push_back(std::move(out.state));
  }
  return ts::affine(ts::sum(ts::concat(log_probs)), -1.0, 0.0);
}

inference::DecodeOptions Seq2Prod::decode_options() const { return inference::decode_options(config_); }

std::vector<inference::Prediction> Seq2Prod::predict_corpus(std::span<const corpus::Example> examples) const {
  return predict_corpus(examples, decode_options());
}

std::vector<inference::Prediction> Seq2Prod::predict_corpus(std::span<const corpus::Example> examples,
                                                            const inference::DecodeOptions& opts) const {
  std::vector<inference::Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const Seq2ProdScorer scorer(*this, ex);
    if (opts.beam_size == 1) {
      out.push_back(inference::to_prediction(inference::greedy_decode(scorer, *grammar_, opts)));
    } else {
      const auto ranked = inference::beam_decode(scorer, *grammar_, opts);
      out.push_back(ranked.empty() ? inference::Prediction{} : inference::to_prediction(ranked.front()));
    }
  }
  return out;
}

void Seq2Prod::save(const std::string& path) const {
  save_with_meta(path, params_,
                 {{"system", "seq2prod"},
                  {"config", config_.to_json()},
                  {"vocab", vocab_.to_json()},
                  {"source", source_.entries()}});
}

std::unique_ptr<Seq2Prod> Seq2Prod::load(const std::string& path, const grammar::Grammar& g) {
  const auto meta = read_meta(path);
  if (meta.value("system", "") != "seq2prod") throw std::runtime_error(path + " is not a seq2prod checkpoint");
  auto m = std::make_unique<Seq2Prod>(g, Vocabulary::from_json(meta.at("vocab"), g),
                                      source_table_from_entries(meta.at("source").get<std::vector<std::string>>()),
                                      model::ModelConfig::from_json(meta.at("config")));
  ts::load_checkpoint(path, m->params_);
  return m;
}

namespace {

struct ProdState : inference::ScorerState {
  model::DecoderState decoder;
};

const model::DecoderState& decoder_state(const inference::ScorerState* s) {
  return static_cast<const ProdState*>(s)->decoder;
}

}  // namespace

Seq2ProdScorer::Seq2ProdScorer(const Seq2Prod& model, const corpus::Example& ex) : model_(model) {
  tensor::NoGrad no_grad;
  enc_ = model.encode(ex);
  const auto& g = model.grammar();
  lexical_rule_.assign(g.num_nonterminals(), -1);
  for (const auto& r : g.rules()) {
    if (r.is_lexical()) lexical_rule_[r.lhs] = r.id;
  }
}

inference::ScoredStep Seq2ProdScorer::score(const inference::StepContext& ctx) const {
  tensor::NoGrad no_grad;
  const auto& vocab = model_.vocab();
  const auto& g = model_.grammar();
  model::StepInput in;
  in.nonterminal = ctx.nonterminal;
  in.prev_rule_row = ctx.prev_rule < 0 ? Vocabulary::kSentinelRule : vocab.prev_rule_index(ctx.prev_rule);
  in.parent_rule_row = ctx.parent_rule < 0 ? Vocabulary::kSentinelRule : vocab.prev_rule_index(ctx.parent_rule);
  in.parent_top = ctx.parent ? decoder_state(ctx.parent).top() : enc_.init.top();
  Seq2Prod::Step out = model_.step(enc_, in, ctx.prev ? decoder_state(ctx.prev) : enc_.init);

  auto state = std::make_shared<ProdState>();
  state->decoder = std::move(out.state);
  const bool copying = out.copy_available();
  const double gate = copying ? out.copy_gate.item() : 0.0;
  const auto& gen = out.generation.value();

  std::vector<inference::Expansion> expansions;
  std::vector<double> prob;
  std::vector<double> best_copy;
  std::unordered_map<std::string, std::size_t> by_lexeme;
  auto add = [&](grammar::RuleId rule, const std::string& lexeme, double p, int action, int slot) {
    const auto it = lexeme.empty() ? by_lexeme.end() : by_lexeme.find(lexeme);
    std::size_t idx = it == by_lexeme.end() ? expansions.size() : it->second;
    if (idx == expansions.size()) {
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
      const auto cls = g.lexical_class(ctx.nonterminal).value_or(grammar::LexicalClass::kIdentifier);
      add(lexical_rule_[ctx.nonterminal], inference::literal_fallback(cls), p, action, -1);
      continue;
    }
    const auto& a = vocab.action(action);
    add(a.rule, a.lexeme, p, action, -1);
  }
  if (copying) {
    const auto& beta = out.beta.value();
    for (std::size_t j = 0; j < enc_.tokens.size(); ++j) {
      const auto& tok = enc_.tokens[j];
      if (!inference::lexeme_fits(g, ctx.nonterminal, tok)) continue;
      add(lexical_rule_[ctx.nonterminal], tok, gate * beta(static_cast<Eigen::Index>(j), 0), -1,
          static_cast<int>(j));
    }
  }
  for (std::size_t i = 0; i < expansions.size(); ++i) expansions[i].logp = std::log(prob[i]);
  return {std::move(state), std::move(expansions)};
}

}  // namespace concode::baselines
