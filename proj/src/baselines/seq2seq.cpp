#include "concode/baselines/seq2seq.hpp"

#include <map>

#include "concode/baselines/flat_input.hpp"
#include "concode/grammar/derivation.hpp"
#include "recurrent.hpp"

namespace concode::baselines {

using namespace detail;

namespace {

std::vector<Lstm> layers(const tensor::ParameterSet& p, const std::string& prefix, int n) {
  std::vector<Lstm> out;
  for (int l = 0; l < n; ++l) {
    const std::string name = prefix + "." + std::to_string(l);
    out.push_back({p.get(name + ".W"), p.get(name + ".b")});
  }
  return out;
}

// Index of the first maximum.
Eigen::Index argmax(const tensor::Matrix& column) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < column.rows(); ++i) {
    if (column(i, 0) > column(best, 0)) best = i;
  }
  return best;
}

}  // namespace

corpus::TokenTable build_target_table(std::span<const corpus::Example> corpus, const grammar::Grammar& g,
                                      int threshold) {
  std::map<std::string, int> counts;
  for (const auto& ex : corpus) {
    for (const auto& t : grammar::realize(ex.target, g)) ++counts[t];
  }
  std::vector<std::string> entries{"</s>", "<s>"};
  counts.erase("</s>");
  counts.erase("<s>");
  for (auto& t : corpus::frequent_table(counts, threshold).entries()) entries.push_back(std::move(t));
  return corpus::TokenTable(entries);
}

Seq2Seq Seq2Seq::build(std::span<const corpus::Example> train, const grammar::Grammar& g,
                       const model::ModelConfig& config, const corpus::Thresholds& thresholds) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  return Seq2Seq(g, build_source_table(train, thresholds.identifier), build_target_table(train, g, thresholds.rule),
                 config);
}

Seq2Seq::Seq2Seq(const grammar::Grammar& g, corpus::TokenTable source, corpus::TokenTable target,
                 model::ModelConfig config)
    : grammar_(&g), source_(std::move(source)), target_(std::move(target)), config_(config) {
  config_.validate();
  const Eigen::Index H = config_.hidden;
  const Eigen::Index E = config_.sym_embed;
  params_.add("S", H, static_cast<Eigen::Index>(source_.size()));
  params_.add("E", E, static_cast<Eigen::Index>(target_.size()));
  for (int l = 0; l < config_.layers; ++l) {
    params_.add("enc." + std::to_string(l) + ".W", 4 * H, 2 * H);
    params_.add("enc." + std::to_string(l) + ".b", 4 * H, 1);
  }
  for (int l = 0; l < config_.layers; ++l) {
    params_.add("dec." + std::to_string(l) + ".W", 4 * H, (l == 0 ? E : H) + H);
    params_.add("dec." + std::to_string(l) + ".b", 4 * H, 1);
  }
  params_.add("W_a", H, H);
  params_.add("W_c", H, 2 * H);
  params_.add("O", static_cast<Eigen::Index>(target_.size()), H);
}

void Seq2Seq::init(std::uint64_t seed) { init_parameters(params_, seed, ""); }

Seq2Seq::Encoded Seq2Seq::encode(const corpus::Example& ex, std::mt19937_64* rng) const {
  Encoded enc;
  enc.tokens = flatten_input(ex);
  const auto ids = source_indices(source_, enc.tokens);
  const auto enc_layers = layers(params_, "enc", config_.layers);
  model::DecoderState s = zero_state(enc_layers.size(), config_.hidden);
  std::vector<Tensor> tops;
  tops.reserve(ids.size());
  for (int id : ids) {
    s = stacked_step(ts::embedding_lookup(params_.get("S"), id), s, enc_layers, config_.dropout, rng);
    tops.push_back(s.top());
  }
  enc.states = ts::hconcat(tops);
  enc.init = std::move(s);
  return enc;
}

Seq2Seq::Step Seq2Seq::step(const Encoded& enc, int prev_token, const model::DecoderState& prev,
                            std::mt19937_64* rng) const {
  Step out;
  out.state = stacked_step(ts::embedding_lookup(params_.get("E"), prev_token), prev,
                           layers(params_, "dec", config_.layers), config_.dropout, rng);
  const Tensor& h = out.state.top();
  out.alpha = ts::softmax(ts::matmul_tn(enc.states, ts::matmul(params_.get("W_a"), h)));
  const Tensor ctx = ts::matmul(enc.states, out.alpha);
  Tensor attn = ts::tanh(ts::matmul(params_.get("W_c"), ts::concat({ctx, h})));
  if (rng) attn = ts::dropout(attn, config_.dropout, true, *rng);
  out.probs = ts::softmax(ts::matmul(params_.get("O"), attn));
  return out;
}

Tensor Seq2Seq::loss(const corpus::Example& ex, std::mt19937_64* rng) const {
  const Encoded enc = encode(ex, rng);
  std::vector<int> gold;
  for (const auto& t : grammar::realize(ex.target, *grammar_)) gold.push_back(target_.index(t));
  gold.push_back(kEndToken);
  model::DecoderState state = enc.init;
  int prev = kStartToken;
  std::vector<Tensor> log_probs;
  log_probs.reserve(gold.size());
  for (int y : gold) {
    Step s = step(enc, prev, state, rng);
    log_probs.push_back(ts::log(ts::element(s.probs, y)));
    state = std::move(s.state);
    prev = y;
  }
  return ts::affine(ts::sum(ts::concat(log_probs)), -1.0, 0.0);
}

Seq2Seq::Output Seq2Seq::predict(const corpus::Example& ex) const {
  tensor::NoGrad no_grad;
  const Encoded enc = encode(ex);
  Output out;
  model::DecoderState state = enc.init;
  int prev = kStartToken;
  for (;;) {
    if (static_cast<int>(out.tokens.size()) >= config_.max_tokens) {
      out.truncated = true;
      break;
    }
    Step s = step(enc, prev, state);
    const Eigen::Index y = argmax(s.probs.value());
    out.logp += std::log(s.probs.value()(y, 0));
    if (y == kEndToken) break;
    if (y == corpus::kUnk) {
      out.tokens.push_back(enc.tokens[static_cast<std::size_t>(argmax(s.alpha.value()))]);
    } else {
      out.tokens.push_back(target_.token(static_cast<int>(y)));
    }
    state = std::move(s.state);
    prev = static_cast<int>(y);
  }
  return out;
}

std::vector<inference::Prediction> Seq2Seq::predict_corpus(std::span<const corpus::Example> examples) const {
  std::vector<inference::Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    auto r = predict(ex);
    inference::Prediction p;
    p.tokens = std::move(r.tokens);
    p.logp = r.logp;
    p.truncated = r.truncated;
    out.push_back(std::move(p));
  }
  return out;
}

void Seq2Seq::save(const std::string& path) const {
  save_with_meta(path, params_,
                 {{"system", "seq2seq"},
                  {"config", config_.to_json()},
                  {"source", source_.entries()},
                  {"target", target_.entries()}});
}

std::unique_ptr<Seq2Seq> Seq2Seq::load(const std::string& path, const grammar::Grammar& g) {
  const auto meta = read_meta(path);
  if (meta.value("system", "") != "seq2seq") throw std::runtime_error(path + " is not a seq2seq checkpoint");
  auto m = std::make_unique<Seq2Seq>(g, source_table_from_entries(meta.at("source").get<std::vector<std::string>>()),
                                     corpus::TokenTable(meta.at("target").get<std::vector<std::string>>()),
                                     model::ModelConfig::from_json(meta.at("config")));
  ts::load_checkpoint(path, m->params_);
  return m;
}

}  // namespace concode::baselines
