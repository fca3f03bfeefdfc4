// Acceptance criteria. Prints one PASS/FAIL line per criterion; an argument
// selects a single criterion by name.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "concode/baselines/retrieval.hpp"
#include "concode/cli/commands.hpp"
#include "concode/corpus/synthetic.hpp"
#include "concode/corpus/vocabulary.hpp"
#include "concode/grammar/derivation.hpp"
#include "concode/grammar/parser.hpp"
#include "concode/grammar/sampler.hpp"
#include "concode/inference/model_scorer.hpp"
#include "concode/inference/predictions.hpp"
#include "concode/metrics/metrics.hpp"
#include "concode/model/model.hpp"
#include "concode/model/train.hpp"
#include "concode/tensor/parameters.hpp"
#include "concode/tensor/tensor.hpp"

namespace {

using namespace concode;
namespace ts = concode::tensor;
using ts::Matrix;
using ts::Tensor;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const grammar::Grammar& java() {
  static const grammar::Grammar g =
      grammar::Grammar::load_file(std::string(CONCODE_DATA_DIR) + "/java_subset.grammar");
  return g;
}

model::ModelConfig small_config(int hidden, int sym_embed) {
  model::ModelConfig c;
  c.hidden = hidden;
  c.sym_embed = sym_embed;
  c.layers = 1;
  c.dropout = 0.0;
  return c;
}

// Spreads every parameter uniformly over [-scale, scale] so distributions are
// far from uniform.
void randomize(model::Model& m, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : m.params().entries()) ts::uniform_fill(t, scale, rng);
}

// Runs every step of the gold derivation, calling visit(step input, output).
template <class Visit>
void walk(const model::Model& m, const corpus::Example& ex, Visit visit) {
  const auto enc = m.encode(ex);
  std::vector<model::DecoderState> states;
  const auto& d = ex.target;
  const auto& vocab = m.vocab();
  for (std::size_t t = 0; t < d.size(); ++t) {
    model::StepInput in;
    in.nonterminal = java().rule(d[t].rule).lhs;
    in.prev_rule_row = t == 0 ? corpus::Vocabulary::kSentinelRule : vocab.prev_rule_index(d[t - 1].rule);
    const int parent = d[t].parent;
    in.parent_rule_row = parent < 0 ? corpus::Vocabulary::kSentinelRule : vocab.prev_rule_index(d[parent].rule);
    in.parent_top = parent < 0 ? enc.init.top() : states[static_cast<std::size_t>(parent)].top();
    auto out = m.step(enc, in, t == 0 ? enc.init : states.back());
    visit(in, out);
    states.push_back(out.state);
  }
}

// Greedy training-set exact match under the shared overfit protocol.
struct OverfitRun {
  double exact = 0;
  int best_epoch = -1;
  int epochs = 0;
  double seconds = 0;
};

model::TrainOptions overfit_options() {
  model::TrainOptions o;
  o.lr = 5e-3;
  o.decay_enabled = false;
  o.batch_size = 10;
  o.max_epochs = 300;
  o.target_exact_match = 100.0;
  return o;
}

OverfitRun overfit(const std::vector<corpus::Example>& data, const corpus::Vocabulary& vocab,
                   const model::ModelConfig& config, std::uint64_t seed) {
  model::Model m(java(), vocab, config);
  m.init(seed);
  const auto refs = cli::reference_tokens(data, java());
  auto decode = inference::decode_options(config);
  decode.beam_size = 1;
  auto exact = [&] {
    std::vector<metrics::Tokens> preds;
    for (const auto& p : inference::predict_corpus(m, data, decode)) preds.push_back(p.tokens);
    return metrics::exact_match(preds, refs);
  };
  auto options = overfit_options();
  options.seed = seed;
  const auto start = Clock::now();
  const auto result = model::train(m, data, exact, options);
  return {exact(), result.best_epoch, static_cast<int>(result.epochs.size()), seconds_since(start)};
}

// ---------------------------------------------------------------------------

Outcome grammar_round_trip() {
  std::mt19937_64 rng(2024);
  const auto start = Clock::now();
  int failures = 0;
  std::string first;
  for (int i = 0; i < 1000; ++i) {
    const auto d = grammar::sample_derivation(java(), rng);
    const auto tokens = grammar::realize_tokens(d, java());
    const auto texts = grammar::token_texts(tokens);
    try {
      if (grammar::realize(grammar::parse(tokens, java()), java()) != texts) {
        ++failures;
        if (first.empty()) first = grammar::join_tokens(texts);
      }
    } catch (const std::exception& e) {
      ++failures;
      if (first.empty()) first = e.what();
    }
  }
  const double secs = seconds_since(start);
  return {failures == 0 && secs < 60.0,
          fmt("1000 sampled programs, %d mismatches, %.1f s (limit 60 s)%s%s", failures, secs,
              first.empty() ? "" : "; first: ", first.c_str())};
}

Outcome syntactic_guarantee() {
  const auto data = corpus::generate_synthetic(100, 5, java());
  const auto vocab = corpus::build_vocab(data, java());
  int decodes = 0;
  int hypotheses = 0;
  int failures = 0;
  std::string first;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    model::Model m(java(), vocab, small_config(16, 8));
    m.init(seed);
    randomize(m, 0.5, 100 + seed);
    const auto opts = inference::decode_options(m.config());
    for (const auto& ex : data) {
      ++decodes;
      const auto ranked = inference::beam_decode(m, ex, opts);
      if (ranked.empty()) {
        ++failures;
        continue;
      }
      for (const auto& r : ranked) {
        ++hypotheses;
        try {
          if (r.truncated) throw std::runtime_error("truncated");
          const auto replayed = grammar::validate(r.derivation.choices(), java());
          if (grammar::realize(replayed, java()) != r.tokens) throw std::runtime_error("realization differs");
          grammar::parse(grammar::realize_tokens(replayed, java()), java(), {.max_tokens = 1000});
        } catch (const std::exception& e) {
          ++failures;
          if (first.empty()) first = e.what();
        }
      }
    }
  }
  return {failures == 0 && decodes == 500,
          fmt("%d beam decodes (beam 3, randomized parameters), %d hypotheses, %d failures%s%s", decodes, hypotheses,
              failures, first.empty() ? "" : "; first: ", first.c_str())};
}

// Weighted sum with fixed random weights, so every output entry matters.
Tensor probe(const Tensor& t, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Matrix w(t.rows(), t.cols());
  std::uniform_real_distribution<double> d(-1, 1);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = d(rng);
  return ts::sum(ts::mul(t, Tensor(w)));
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(12);
  auto rand = [&](Eigen::Index r, Eigen::Index c) {
    Tensor t = Tensor::zeros(r, c, true);
    ts::uniform_fill(t, 1.0, rng);
    return t;
  };
  auto a = rand(4, 3), b = rand(3, 2), c = rand(4, 3), v = rand(4, 1), w = rand(4, 1), s = rand(1, 1);
  auto pos = Tensor((Matrix::Random(4, 3).array().abs() + 0.5).matrix(), true);
  auto x = rand(3, 1), h = rand(4, 1), cell = rand(4, 1), lw = rand(16, 7), lb = rand(16, 1);
  const std::vector<int> rows = {3, 0, 3};
  struct Op {
    const char* name;
    std::function<Tensor()> f;
    std::vector<Tensor> inputs;
  };
  const std::vector<Op> ops = {
      {"matmul", [&] { return probe(ts::matmul(a, b)); }, {a, b}},
      {"matmul_tn", [&] { return probe(ts::matmul_tn(a, c)); }, {a, c}},
      {"add", [&] { return probe(ts::add(a, c)); }, {a, c}},
      {"sub", [&] { return probe(ts::sub(a, c)); }, {a, c}},
      {"mul", [&] { return probe(ts::mul(a, c)); }, {a, c}},
      {"affine", [&] { return probe(ts::affine(a, -1.7, 0.3)); }, {a}},
      {"scale_by", [&] { return probe(ts::scale_by(a, s)); }, {a, s}},
      {"concat", [&] { return probe(ts::concat({a, c})); }, {a, c}},
      {"hconcat", [&] { return probe(ts::hconcat(std::vector<Tensor>{v, w})); }, {v, w}},
      {"slice_rows", [&] { return probe(ts::slice_rows(a, 1, 2)); }, {a}},
      {"element", [&] { return ts::element(a, 2, 1); }, {a}},
      {"sum", [&] { return ts::sum(a); }, {a}},
      {"tanh", [&] { return probe(ts::tanh(a)); }, {a}},
      {"sigmoid", [&] { return probe(ts::sigmoid(a)); }, {a}},
      {"softmax", [&] { return probe(ts::softmax(a)); }, {a}},
      {"log", [&] { return probe(ts::log(pos)); }, {pos}},
      {"embedding_lookup", [&] { return probe(ts::embedding_lookup(a, 2)); }, {a}},
      {"gather_rows", [&] { return probe(ts::gather_rows(a, rows)); }, {a}},
      {"dropout",
       [&] {
         std::mt19937_64 fixed(7);
         return probe(ts::dropout(a, 0.3, true, fixed));
       },
       {a}},
      {"lstm_cell", [&] { return probe(ts::lstm_cell(x, h, cell, lw, lb)); }, {x, h, cell, lw, lb}},
  };
  std::vector<std::string> failed;
  double worst_op = 0;
  std::size_t op_coords = 0;
  for (const auto& op : ops) {
    std::mt19937_64 pick(1);
    const auto r = ts::grad_check(op.f, op.inputs, 1e-5, 1e-4, 0, pick);
    worst_op = std::max(worst_op, r.max_rel_error);
    op_coords += r.checked;
    if (!r.passed) failed.push_back(op.name);
  }

  // Full per-example loss, H=8, one layer: every coordinate on one example
  // with an environment, sampled coordinates on four more.
  const auto data = corpus::generate_synthetic(40, 11, java());
  const auto vocab = corpus::build_vocab(data, java());
  model::ModelConfig config = small_config(8, 4);
  model::Model m(java(), vocab, config);
  m.init(3);
  std::vector<Tensor> inputs;
  for (auto& [name, t] : m.params().entries()) inputs.push_back(t);
  // A central difference of a loss L carries round-off of about
  // eps_machine * |L| / eps. Gradients smaller than that bound over the
  // tolerance cannot be resolved, so it becomes the denominator floor. The
  // fixed 1e-7 floor is also reported.
  double worst_loss = 0;
  double worst_strict = 0;
  std::size_t strict_failures = 0;
  double max_floor = 0;
  std::size_t loss_coords = 0;
  int checked_examples = 0;
  for (const auto& ex : data) {
    if (ex.variables.empty() || ex.methods.empty()) continue;
    const std::size_t coords = checked_examples == 0 ? 0 : 300;
    const double eps = 1e-5, tol = 1e-3;
    const double loss = m.loss(ex).item();
    const double floor = std::numeric_limits<double>::epsilon() * std::max(std::abs(loss), 1.0) / eps / tol;
    max_floor = std::max(max_floor, floor);
    std::mt19937_64 pick(static_cast<std::uint64_t>(checked_examples));
    const auto r = ts::grad_check([&] { return m.loss(ex); }, inputs, eps, tol, coords, pick, floor);
    std::mt19937_64 same(static_cast<std::uint64_t>(checked_examples));
    const auto strict = ts::grad_check([&] { return m.loss(ex); }, inputs, eps, tol, coords, same);
    worst_loss = std::max(worst_loss, r.max_rel_error);
    worst_strict = std::max(worst_strict, strict.max_rel_error);
    strict_failures += strict.failures.size();
    loss_coords += r.checked;
    if (!r.passed) failed.push_back("loss(example " + std::to_string(checked_examples) + ")");
    if (++checked_examples == 5) break;
  }
  const double secs = seconds_since(start);
  std::string names;
  for (const auto& f : failed) names += " " + f;
  return {failed.empty() && secs < 300.0 && checked_examples == 5,
          fmt("%zu primitives over %zu coordinates, max rel err %.2e (tol 1e-4); loss over %zu coordinates on %d "
              "examples, max rel err %.2e (tol 1e-3, round-off floor <= %.1e; with floor 1e-7: %zu above tol, max "
              "%.2e); %.1f s (limit 300 s)%s%s",
              ops.size(), op_coords, worst_op, loss_coords, checked_examples, worst_loss, max_floor, strict_failures,
              worst_strict, secs,
              failed.empty() ? "" : "; failed:", names.c_str())};
}

Outcome normalization() {
  const auto data = corpus::generate_synthetic(60, 13, java());
  const auto vocab = corpus::build_vocab(data, java());
  std::size_t alpha_n = 0, beta_n = 0, gen_n = 0, mix_n = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; std::min({alpha_n, beta_n, gen_n, mix_n}) < 1000 && seed < 50; ++seed) {
    model::Model m(java(), vocab, small_config(16, 8));
    m.init(seed);
    randomize(m, 1.0, 1000 + seed);
    for (const auto& ex : data) {
      walk(m, ex, [&](const model::StepInput&, const model::StepOutput& out) {
        worst = std::max(worst, std::abs(out.attention.alpha.value().sum() - 1.0));
        ++alpha_n;
        worst = std::max(worst, std::abs(out.generation.value().sum() - 1.0));
        ++gen_n;
        if (out.attention.beta.defined()) {
          worst = std::max(worst, std::abs(out.attention.beta.value().sum() - 1.0));
          ++beta_n;
        }
        if (out.copy_available()) {
          const double g = out.copy_gate.item();
          const double mix = g * out.attention.beta.value().sum() + (1 - g) * out.generation.value().sum();
          worst = std::max(worst, std::abs(mix - 1.0));
          ++mix_n;
        }
      });
    }
  }
  const bool enough = std::min({alpha_n, beta_n, gen_n, mix_n}) >= 1000;
  return {enough && worst <= 1e-6,
          fmt("states: alpha %zu, beta %zu, generation %zu, copy mixture %zu; max |sum - 1| = %.2e (tol 1e-6)",
              alpha_n, beta_n, gen_n, mix_n, worst)};
}

Outcome masked_output() {
  const auto data = corpus::generate_synthetic(40, 17, java());
  const auto vocab = corpus::build_vocab(data, java());
  std::size_t steps = 0, bit_mismatches = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    model::Model m(java(), vocab, small_config(16, 8));
    m.init(seed);
    randomize(m, 1.0, 2000 + seed);
    const Matrix& R = m.params().get("R").value();
    for (const auto& ex : data) {
      walk(m, ex, [&](const model::StepInput&, const model::StepOutput& out) {
        ++steps;
        const auto k = static_cast<Eigen::Index>(out.candidates.size());
        Matrix own(k, R.cols());
        for (Eigen::Index i = 0; i < k; ++i) own.row(i) = R.row(out.candidates[static_cast<std::size_t>(i)]);
        const Matrix separate = ts::softmax(ts::matmul(Tensor(own), out.attention.c)).value();
        if (separate != out.generation.value()) ++bit_mismatches;

        const Matrix logits = R * out.attention.c.value();
        Matrix masked = Matrix::Constant(logits.rows(), 1, -std::numeric_limits<double>::infinity());
        for (int a : out.candidates) masked(a, 0) = logits(a, 0);
        const Matrix e = (masked.array() - masked.maxCoeff()).exp().matrix();
        const double z = e.sum();
        for (Eigen::Index i = 0; i < k; ++i) {
          worst = std::max(worst, std::abs(out.generation.value()(i, 0) - e(out.candidates[static_cast<std::size_t>(i)], 0) / z));
        }
      });
    }
  }
  return {bit_mismatches == 0 && worst <= 1e-12,
          fmt("%zu decoder steps: %zu differ bitwise from the per-nonterminal matrix; max diff against the -inf "
              "masked full softmax %.2e (tol 1e-12)",
              steps, bit_mismatches, worst)};
}

Outcome overfit_ablation() {
  const auto data = corpus::generate_synthetic(50, 7, java());
  model::ModelConfig config = small_config(64, 32);
  config.beam_size = 1;
  const auto training = [] {
    auto o = overfit_options();
    return o;
  }();
  auto decode = inference::decode_options(config);
  decode.beam_size = 1;
  const auto rows =
      cli::run_ablation(data, data, java(), config, corpus::Thresholds{}, training, decode, /*seed=*/1);
  const auto& full = rows.front();
  bool ablations_ok = true;
  std::string detail = fmt("full model %.0f%% train exact (best epoch %d, %.0f s)", full.exact_match, full.best_epoch,
                           full.seconds);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ablations_ok = ablations_ok && rows[i].exact_match <= full.exact_match;
    detail += fmt("; %s %.0f%%", rows[i].label.c_str(), rows[i].exact_match);
  }
  const bool full_ok = full.exact_match >= 95.0 && full.best_epoch < 300 && full.seconds < 600.0;
  return {full_ok && ablations_ok,
          detail + " (need full >= 95% within 300 epochs and 600 s; each ablation <= full)"};
}

Outcome copy_necessity() {
  corpus::SynthOptions so;
  so.unique_names = true;
  const auto data = corpus::generate_synthetic(50, 7, java(), so);
  const auto vocab = corpus::build_vocab(data, java());
  // Every copied member name must be missing from the output vocabulary.
  // Copied type names (String etc.) recur across records and may be in it.
  std::size_t copied = 0, in_vocab = 0, copied_types = 0;
  for (const auto& ex : data) {
    for (std::size_t t = 0; t < ex.target.size(); ++t) {
      if (!ex.copy_labels[t]) continue;
      const std::string& lexeme = ex.target[t].lexeme;
      const auto named = [&](const corpus::Member& m) { return m.name == lexeme; };
      if (std::none_of(ex.variables.begin(), ex.variables.end(), named) &&
          std::none_of(ex.methods.begin(), ex.methods.end(), named)) {
        ++copied_types;
        continue;
      }
      ++copied;
      in_vocab += vocab.action_index(ex.target[t].rule, lexeme) != corpus::kUnk;
    }
  }
  model::ModelConfig config = small_config(64, 32);
  const auto with_copy = overfit(data, vocab, config, 1);
  config.use_copy = false;
  const auto without_copy = overfit(data, vocab, config, 1);
  return {copied > 0 && in_vocab == 0 && with_copy.exact >= 90.0 && without_copy.exact < 10.0,
          fmt("%zu copied member names, %zu in the output vocabulary (%zu copied type names); copy on %.0f%% (epoch %d, %.0f s), copy off "
              "%.0f%% after %d epochs (need >= 90%% and < 10%%)",
              copied, in_vocab, copied_types, with_copy.exact, with_copy.best_epoch, with_copy.seconds, without_copy.exact,
              without_copy.epochs)};
}

Outcome beam_properties() {
  const auto data = corpus::generate_synthetic(100, 21, java());
  const auto vocab = corpus::build_vocab(data, java());
  std::size_t equal = 0, compared = 0, monotone = 0, chains = 0;
  {
    model::Model m(java(), vocab, small_config(16, 8));
    m.init(17);
    auto o = inference::decode_options(m.config());
    o.beam_size = 1;
    for (const auto& ex : data) {
      const auto g = inference::greedy_decode(m, ex, o);
      const auto b = inference::beam_decode(m, ex, o);
      ++compared;
      equal += b.size() == 1 && b[0].tokens == g.tokens && b[0].logp == g.logp;
    }
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    model::Model m(java(), vocab, small_config(16, 8));
    m.init(seed);
    auto o = inference::decode_options(m.config());
    for (std::size_t i = 0; i < 20; ++i) {
      double previous = -std::numeric_limits<double>::infinity();
      bool ok = true;
      for (int beam : {1, 3, 5}) {
        o.beam_size = beam;
        const auto ranked = inference::beam_decode(m, data[i], o);
        ok = ok && !ranked.empty() && ranked.front().logp >= previous;
        if (!ranked.empty()) previous = ranked.front().logp;
      }
      ++chains;
      monotone += ok;
    }
  }
  return {equal == compared && compared == 100 && monotone == chains,
          fmt("beam 1 equals greedy on %zu/%zu decodes; best logp non-decreasing over beams 1, 3, 5 on %zu/%zu",
              equal, compared, monotone, chains)};
}

// Independent n-gram counter: scans for every occurrence, no containers.
long long occurrences(const metrics::Tokens& t, const metrics::Tokens& src, std::size_t at, std::size_t n) {
  long long c = 0;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    bool eq = true;
    for (std::size_t k = 0; k < n && eq; ++k) eq = t[i + k] == src[at + k];
    c += eq;
  }
  return c;
}

double brute_force_bleu(const std::vector<metrics::Tokens>& preds, const std::vector<metrics::Tokens>& refs) {
  double num[4] = {}, den[4] = {}, c = 0, r = 0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const auto& p = preds[s];
    c += static_cast<double>(p.size());
    r += static_cast<double>(refs[s].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      for (std::size_t i = 0; i + n <= p.size(); ++i) {
        den[n - 1] += 1;
        bool first = true;
        for (std::size_t j = 0; j < i && first; ++j) first = occurrences({p.begin() + static_cast<std::ptrdiff_t>(j), p.begin() + static_cast<std::ptrdiff_t>(j + n)}, p, i, n) == 0;
        if (first) num[n - 1] += static_cast<double>(std::min(occurrences(p, p, i, n), occurrences(refs[s], p, i, n)));
      }
    }
  }
  double product = 1;
  for (int n = 0; n < 4; ++n) {
    if (num[n] == 0) return 0;
    product *= num[n] / den[n];
  }
  return 100.0 * (c > r ? 1.0 : std::exp(1.0 - r / c)) * std::pow(product, 0.25);
}

Outcome metric_oracles() {
  std::mt19937_64 rng(77);
  auto sentence = [&](int lo, int hi) {
    std::uniform_int_distribution<int> len(lo, hi), sym(0, 2);
    metrics::Tokens t(static_cast<std::size_t>(len(rng)));
    for (auto& s : t) s = std::string(1, static_cast<char>('a' + sym(rng)));
    return t;
  };
  double worst = 0;
  int nonzero = 0, self_ok = 0, em_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<metrics::Tokens> preds, refs;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      refs.push_back(sentence(4, 14));
      if (rng() % 2) {
        auto p = refs.back();
        p[rng() % p.size()] = "z";
        preds.push_back(p);
      } else {
        preds.push_back(sentence(1, 14));
      }
    }
    const double expected = brute_force_bleu(preds, refs);
    nonzero += expected > 0;
    worst = std::max(worst, std::abs(metrics::bleu(preds, refs) - expected));
    self_ok += metrics::bleu(refs, refs) == 100.0;
    em_ok += metrics::exact_match(refs, refs) == 100.0 && metrics::bleu(refs, refs) == 100.0;
  }
  return {worst <= 1e-9 && nonzero >= 25 && self_ok == 50 && em_ok == 50,
          fmt("50 random corpora (%d with nonzero BLEU): max |bleu - brute force| %.2e (tol 1e-9); bleu(x,x)=100 on "
              "%d/50; exact 100 => BLEU 100 on %d/50",
              nonzero, worst, self_ok, em_ok)};
}

double dense_cosine(const std::vector<std::vector<std::string>>& docs, const std::vector<std::string>& q,
                    std::size_t d) {
  std::set<std::string> terms;
  for (const auto& doc : docs) terms.insert(doc.begin(), doc.end());
  const double n = static_cast<double>(docs.size());
  auto vec = [&](const std::vector<std::string>& tokens) {
    std::vector<double> v;
    for (const auto& t : terms) {
      const double tf = static_cast<double>(std::count(tokens.begin(), tokens.end(), t));
      double df = 0;
      for (const auto& doc : docs) df += std::find(doc.begin(), doc.end(), t) != doc.end();
      v.push_back(tf * std::log(n / df));
    }
    return v;
  };
  const auto a = vec(q), b = vec(docs[d]);
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return na == 0 || nb == 0 ? 0.0 : dot / std::sqrt(na * nb);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome retrieval() {
  const auto train = corpus::generate_synthetic(200, 31, java());
  const auto test = corpus::generate_synthetic(60, 32, java());
  std::vector<std::vector<std::string>> docs;
  for (const auto& ex : train) docs.push_back(ex.nl);
  const baselines::RetrievalBaseline baseline(train, java());
  double worst = 0;
  std::size_t pairs = 0;
  for (const auto& q : test) {
    const auto sims = baseline.index().similarities(q.nl);
    for (std::size_t d = 0; d < docs.size(); ++d, ++pairs) worst = std::max(worst, std::abs(sims[d] - dense_cosine(docs, q.nl, d)));
  }
  const auto dir = std::filesystem::temp_directory_path();
  const std::string a = (dir / "concode_acceptance_retrieval_a.jsonl").string();
  const std::string b = (dir / "concode_acceptance_retrieval_b.jsonl").string();
  inference::write_predictions(a, baseline.predict_corpus(test, 42), inference::PredictionFormat::kJsonl);
  inference::write_predictions(b, baselines::RetrievalBaseline(train, java()).predict_corpus(test, 42),
                               inference::PredictionFormat::kJsonl);
  const bool identical = slurp(a) == slurp(b) && !slurp(a).empty();
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  return {worst <= 1e-9 && identical,
          fmt("%zu query-document pairs: max |cosine - brute force| %.2e (tol 1e-9); seed 42 predictions %s",
              pairs, worst, identical ? "byte-identical across runs" : "DIFFER across runs")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"grammar_round_trip", grammar_round_trip},
      {"syntactic_guarantee", syntactic_guarantee},
      {"gradient_correctness", gradient_correctness},
      {"normalization", normalization},
      {"masked_output_equivalence", masked_output},
      {"overfit_and_ablation", overfit_ablation},
      {"copy_necessity", copy_necessity},
      {"beam_properties", beam_properties},
      {"metric_oracles", metric_oracles},
      {"retrieval", retrieval},
  };
  const std::string only = argc > 1 ? argv[1] : "";
  int failures = 0;
  int ran = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && only != name) continue;
    ++ran;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion " << only << "\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
