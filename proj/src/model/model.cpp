#include "concode/model/model.hpp"

#include <algorithm>
#include <fstream>

#include "concode/corpus/text.hpp"

namespace concode::model {

namespace ts = concode::tensor;
using corpus::Vocabulary;

namespace {

struct LstmStep {
  Tensor h;
  Tensor c;
};

LstmStep cell(const Tensor& x, const LstmStep& prev, const Tensor& w, const Tensor& b) {
  const Eigen::Index n = prev.h.rows();
  const Tensor out = ts::lstm_cell(x, prev.h, prev.c, w, b);
  return {ts::slice_rows(out, 0, n), ts::slice_rows(out, n, n)};
}

LstmStep zero_state(Eigen::Index n) { return {Tensor::zeros(n), Tensor::zeros(n)}; }

std::string sidecar_path(const std::string& path) { return path + ".meta.json"; }

}  // namespace

Environment effective_environment(const corpus::Example& ex, const ModelConfig& config) {
  Environment env;
  if (config.use_variables) env.variables = ex.variables;
  if (config.use_methods) env.methods = ex.methods;
  return env;
}

std::vector<std::optional<int>> effective_copy_labels(const corpus::Example& ex, const grammar::Grammar& g,
                                                      const ModelConfig& config) {
  const auto env = effective_environment(ex, config);
  return corpus::copy_labels(ex.target, g, corpus::environment_slots(env.variables, env.methods));
}

std::optional<int> candidate_position(std::span<const int> candidates, int action) {
  // Candidates are ascending.
  const auto it = std::lower_bound(candidates.begin(), candidates.end(), action);
  if (it == candidates.end() || *it != action) return std::nullopt;
  return static_cast<int>(it - candidates.begin());
}

Model::Model(const grammar::Grammar& g, const corpus::Vocabulary& vocab, ModelConfig config)
    : grammar_(&g), vocab_(&vocab), config_(config) {
  config_.validate();
  build_params();
}

void Model::build_params() {
  const Eigen::Index H = config_.hidden;
  const Eigen::Index h = H / 2;
  const Eigen::Index S = config_.sym_embed;
  params_.add("I", H, static_cast<Eigen::Index>(vocab_->identifiers().size()));
  params_.add("T", H, static_cast<Eigen::Index>(vocab_->types().size()));
  params_.add("N", S, static_cast<Eigen::Index>(vocab_->num_nonterminal_rows()));
  params_.add("A", S, static_cast<Eigen::Index>(vocab_->num_prev_rules()));
  for (int l = 0; l < config_.layers; ++l) {
    for (const char* dir : {"fw", "bw"}) {
      const std::string p = "nl." + std::to_string(l) + "." + dir;
      params_.add(p + ".W", 4 * h, H + h);
      params_.add(p + ".b", 4 * h, 1);
    }
  }
  for (const char* enc : {"name", "pair"}) {
    for (const char* dir : {"fw", "bw"}) {
      const std::string p = std::string(enc) + "." + dir;
      params_.add(p + ".W", 4 * h, H + h);
      params_.add(p + ".b", 4 * h, 1);
    }
  }
  for (int l = 0; l < config_.layers; ++l) {
    const Eigen::Index in = l == 0 ? 3 * S + H : H;
    params_.add("dec." + std::to_string(l) + ".W", 4 * H, in + H);
    params_.add("dec." + std::to_string(l) + ".b", 4 * H, 1);
  }
  params_.add("F", H, H);
  params_.add("G", H, H);
  params_.add("W_ctx", H, 3 * H);
  params_.add("R", static_cast<Eigen::Index>(vocab_->num_actions()), H);
  params_.add("copy.b", H, 1);

  auto lstm = [&](const std::string& p) { return Lstm{params_.get(p + ".W"), params_.get(p + ".b")}; };
  w_.I = params_.get("I");
  w_.T = params_.get("T");
  w_.N = params_.get("N");
  w_.A = params_.get("A");
  w_.F = params_.get("F");
  w_.G = params_.get("G");
  w_.W_ctx = params_.get("W_ctx");
  w_.R = params_.get("R");
  w_.copy_b = params_.get("copy.b");
  for (int l = 0; l < config_.layers; ++l) {
    w_.nl.push_back({lstm("nl." + std::to_string(l) + ".fw"), lstm("nl." + std::to_string(l) + ".bw")});
    w_.dec.push_back(lstm("dec." + std::to_string(l)));
  }
  w_.name = {lstm("name.fw"), lstm("name.bw")};
  w_.pair = {lstm("pair.fw"), lstm("pair.bw")};
}

void Model::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : params_.entries()) {
    if (name.ends_with(".b") && name != "copy.b") {
      // LSTM bias: gate blocks [input; forget; output; candidate].
      const Eigen::Index n = t.rows() / 4;
      t.mutable_value().setZero();
      t.mutable_value().middleRows(n, n).setOnes();
    } else {
      ts::xavier_uniform(t, rng);
    }
  }
}

std::vector<int> Model::nl_indices(const corpus::Example& ex) const {
  std::vector<int> out;
  out.reserve(ex.nl.size());
  for (const auto& w : ex.nl) out.push_back(vocab_->identifiers().index(w));
  return out;
}

std::pair<Tensor, DecoderState> Model::encode_nl(std::span<const int> tokens, std::mt19937_64* rng) const {
  if (tokens.empty()) throw ModelError("cannot encode an empty NL sequence");
  const Eigen::Index h = config_.hidden / 2;
  const Tensor& I = w_.I;
  std::vector<Tensor> inputs;
  inputs.reserve(tokens.size());
  for (int t : tokens) inputs.push_back(ts::embedding_lookup(I, t));

  DecoderState init;
  const std::size_t z = tokens.size();
  for (int l = 0; l < config_.layers; ++l) {
    const auto& [fwd, bwd] = w_.nl[static_cast<std::size_t>(l)];
    std::vector<LstmStep> fw(z), bw(z);
    LstmStep s = zero_state(h);
    for (std::size_t i = 0; i < z; ++i) fw[i] = s = cell(inputs[i], s, fwd.w, fwd.b);
    s = zero_state(h);
    for (std::size_t i = z; i-- > 0;) bw[i] = s = cell(inputs[i], s, bwd.w, bwd.b);
    init.h.push_back(ts::concat({fw[z - 1].h, bw[0].h}));
    init.c.push_back(ts::concat({fw[z - 1].c, bw[0].c}));
    const bool inner = l + 1 < config_.layers;
    for (std::size_t i = 0; i < z; ++i) {
      Tensor out = ts::concat({fw[i].h, bw[i].h});
      inputs[i] = inner && rng ? ts::dropout(out, config_.dropout, true, *rng) : out;
    }
  }
  return {ts::hconcat(inputs), std::move(init)};
}

Tensor Model::lstm_sequence_final(const std::vector<Tensor>& inputs, const BiLstm& lstm) const {
  const Eigen::Index h = config_.hidden / 2;
  LstmStep f = zero_state(h);
  for (const auto& x : inputs) f = cell(x, f, lstm.fw.w, lstm.fw.b);
  LstmStep b = zero_state(h);
  for (auto it = inputs.rbegin(); it != inputs.rend(); ++it) b = cell(*it, b, lstm.bw.w, lstm.bw.b);
  return ts::concat({f.h, b.h});
}

Tensor Model::encode_env(std::span<const corpus::Member> variables, std::span<const corpus::Member> methods) const {
  if (variables.empty() && methods.empty()) return {};
  const Eigen::Index h = config_.hidden / 2;
  const Tensor& I = w_.I;
  const Tensor& T = w_.T;
  const auto& ids = vocab_->identifiers();

  auto name_vector = [&](const std::string& name) {
    if (!config_.use_camel_encoding) return ts::embedding_lookup(I, ids.index(corpus::to_lower(name)));
    std::vector<Tensor> pieces;
    for (const auto& p : corpus::camel_split(name)) pieces.push_back(ts::embedding_lookup(I, ids.index(p)));
    if (pieces.empty()) pieces.push_back(ts::embedding_lookup(I, corpus::kUnk));
    return lstm_sequence_final(pieces, w_.name);
  };

  // 2-step BiLSTM over (type, name); returns (type state, name state).
  const auto& [wf, bf] = w_.pair.fw;
  const auto& [wb, bb] = w_.pair.bw;
  auto pair = [&](const corpus::Member& m) {
    const Tensor t = ts::embedding_lookup(T, vocab_->types().index(m.type));
    const Tensor v = name_vector(m.name);
    const LstmStep f1 = cell(t, zero_state(h), wf, bf);
    const LstmStep f2 = cell(v, f1, wf, bf);
    const LstmStep b2 = cell(v, zero_state(h), wb, bb);
    const LstmStep b1 = cell(t, b2, wb, bb);
    return std::make_pair(ts::concat({f1.h, b1.h}), ts::concat({f2.h, b2.h}));
  };

  std::vector<Tensor> type_slots, name_slots, return_slots, method_slots;
  for (const auto& v : variables) {
    auto [t, n] = pair(v);
    type_slots.push_back(t);
    name_slots.push_back(n);
  }
  for (const auto& m : methods) {
    auto [r, n] = pair(m);
    return_slots.push_back(r);
    method_slots.push_back(n);
  }
  std::vector<Tensor> slots;
  for (auto* group : {&type_slots, &name_slots, &return_slots, &method_slots}) {
    slots.insert(slots.end(), group->begin(), group->end());
  }
  return ts::hconcat(slots);
}

Encoded Model::encode(const corpus::Example& ex, std::mt19937_64* rng) const {
  Encoded enc;
  const auto tokens = nl_indices(ex);
  auto [states, init] = encode_nl(tokens, rng);
  enc.nl_states = states;
  enc.init = std::move(init);
  enc.nl_keys = ts::matmul(w_.F, enc.nl_states);
  const auto env = effective_environment(ex, config_);
  enc.slots = corpus::environment_slots(env.variables, env.methods);
  if (!enc.slots.empty()) {
    enc.env_states = encode_env(env.variables, env.methods);
    enc.env_keys = ts::matmul(w_.G, enc.env_states);
  }
  return enc;
}

StepInput Model::first_step_input(const Encoded& enc) const {
  return {grammar_->start_symbol(), Vocabulary::kSentinelRule, Vocabulary::kSentinelRule, enc.init.top()};
}

DecoderState Model::advance(const StepInput& in, const DecoderState& prev, std::mt19937_64* rng) const {
  const Tensor& N = w_.N;
  const Tensor& A = w_.A;
  Tensor x = ts::concat({ts::embedding_lookup(N, vocab_->nonterminal_index(in.nonterminal)),
                         ts::embedding_lookup(A, in.prev_rule_row), ts::embedding_lookup(A, in.parent_rule_row),
                         in.parent_top});
  DecoderState next;
  const Eigen::Index H = config_.hidden;
  for (int l = 0; l < config_.layers; ++l) {
    const auto& [w, b] = w_.dec[static_cast<std::size_t>(l)];
    const Tensor out = ts::lstm_cell(x, prev.h[l], prev.c[l], w, b);
    next.h.push_back(ts::slice_rows(out, 0, H));
    next.c.push_back(ts::slice_rows(out, H, H));
    if (l + 1 < config_.layers) x = rng ? ts::dropout(next.h.back(), config_.dropout, true, *rng) : next.h.back();
  }
  return next;
}

Attention Model::attend(const Tensor& s, const Encoded& enc, std::mt19937_64* rng) const {
  Attention a;
  a.alpha = ts::softmax(ts::matmul_tn(enc.nl_keys, s));
  a.z = ts::matmul(enc.nl_states, a.alpha);
  if (enc.has_environment()) {
    const Tensor& query = config_.use_two_step_attention ? a.z : s;
    a.beta = ts::softmax(ts::matmul_tn(enc.env_keys, query));
    a.e = ts::matmul(enc.env_states, a.beta);
  } else {
    a.e = Tensor::zeros(config_.hidden);
  }
  a.c = ts::tanh(ts::matmul(w_.W_ctx, ts::concat({s, a.z, a.e})));
  if (rng) a.c = ts::dropout(a.c, config_.dropout, true, *rng);
  return a;
}

StepOutput Model::step(const Encoded& enc, const StepInput& in, const DecoderState& prev, std::mt19937_64* rng) const {
  StepOutput out;
  out.state = advance(in, prev, rng);
  out.attention = attend(out.state.top(), enc, rng);
  out.candidates = vocab_->candidate_actions(in.nonterminal);
  if (out.candidates.empty()) {
    throw ModelError("nonterminal " + grammar_->nonterminal_name(in.nonterminal) + " has no output actions");
  }
  out.generation = ts::softmax(ts::matmul(ts::gather_rows(w_.R, out.candidates), out.attention.c));
  if (config_.use_copy && enc.has_environment() && grammar_->is_copyable_nt(in.nonterminal)) {
    out.copy_gate = ts::sigmoid(ts::matmul_tn(w_.copy_b, out.attention.c));
  }
  return out;
}

Tensor Model::loss(const corpus::Example& ex, std::mt19937_64* rng) const {
  const auto& d = ex.target;
  if (d.empty()) throw ModelError("example has an empty target derivation");
  const Encoded enc = encode(ex, rng);
  const auto labels = effective_copy_labels(ex, *grammar_, config_);

  std::vector<DecoderState> states;
  states.reserve(d.size());
  std::vector<Tensor> log_probs;
  log_probs.reserve(d.size());
  for (std::size_t t = 0; t < d.size(); ++t) {
    const auto& rule = grammar_->rule(d[t].rule);
    StepInput in;
    in.nonterminal = rule.lhs;
    in.prev_rule_row = t == 0 ? Vocabulary::kSentinelRule : vocab_->prev_rule_index(d[t - 1].rule);
    const int parent = d[t].parent;
    in.parent_rule_row = parent < 0 ? Vocabulary::kSentinelRule : vocab_->prev_rule_index(d[parent].rule);
    in.parent_top = parent < 0 ? enc.init.top() : states[static_cast<std::size_t>(parent)].top();
    StepOutput out = step(enc, in, t == 0 ? enc.init : states.back(), rng);

    const int action = vocab_->action_index(d[t].rule, d[t].lexeme);
    const auto pos = candidate_position(out.candidates, action);
    if (!pos) throw ModelError("step " + std::to_string(t) + " has no output action for its rule");
    const Tensor p_gen = ts::element(out.generation, *pos);
    Tensor p;
    if (out.copy_available()) {
      const Tensor& gate = out.copy_gate;
      if (labels[t]) {
        const Tensor p_copy = ts::mul(gate, ts::element(out.attention.beta, *labels[t]));
        p = action == corpus::kUnk ? p_copy : ts::add(p_copy, ts::mul(ts::affine(gate, -1.0, 1.0), p_gen));
      } else {
        p = ts::mul(ts::affine(gate, -1.0, 1.0), p_gen);
      }
    } else {
      p = p_gen;
    }
    log_probs.push_back(ts::log(p));
    states.push_back(std::move(out.state));
  }
  return ts::affine(ts::sum(ts::concat(log_probs)), -1.0, 0.0);
}

void Model::save(const std::string& path) const {
  ts::save_checkpoint(path, params_);
  std::ofstream out(sidecar_path(path));
  if (!out) throw ModelError("cannot write " + sidecar_path(path));
  const nlohmann::json meta = {{"system", "ours"},
                               {"config", config_.to_json()},
                               {"vocab_hash", vocab_->hash()},
                               {"parameters", params_.num_values()}};
  out << meta.dump(1) << '\n';
}

void Model::load(const std::string& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw ModelError("missing checkpoint metadata " + sidecar_path(path));
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(sidecar_path(path) + ": " + e.what());
  }
  if (meta.value("system", "ours") != "ours") throw ModelError(path + " is not a checkpoint of this model");
  if (meta.value("vocab_hash", "") != vocab_->hash()) {
    throw ModelError("vocabulary hash mismatch: checkpoint " + meta.value("vocab_hash", "?") + ", current " +
                     vocab_->hash());
  }
  if (!ModelConfig::from_json(meta.at("config")).same_architecture(config_)) {
    throw ModelError("model configuration differs from the checkpoint's");
  }
  ts::load_checkpoint(path, params_);
}

ModelConfig read_checkpoint_config(const std::string& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw ModelError("missing checkpoint metadata " + sidecar_path(path));
  try {
    nlohmann::json meta;
    in >> meta;
    return ModelConfig::from_json(meta.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(sidecar_path(path) + ": " + e.what());
  }
}

}  // namespace concode::model
