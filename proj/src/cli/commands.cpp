#include "concode/cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <random>

#include "concode/baselines/retrieval.hpp"
#include "concode/baselines/seq2prod.hpp"
#include "concode/baselines/seq2seq.hpp"
#include "concode/corpus/dataset.hpp"
#include "concode/corpus/synthetic.hpp"
#include "concode/corpus/vocabulary.hpp"
#include "concode/grammar/derivation.hpp"
#include "concode/inference/model_scorer.hpp"
#include "concode/inference/predictions.hpp"
#include "concode/model/model.hpp"

namespace concode::cli {

namespace fs = std::filesystem;
using corpus::Example;
using inference::Prediction;

namespace {

void require(const std::string& value, std::string_view flag, const RunConfig& rc) {
  if (value.empty()) {
    throw UsageError(std::string(command_name(rc.command)) + " requires --" + std::string(flag));
  }
}

std::vector<Example> load_split(const std::string& path, const grammar::Grammar& g,
                                corpus::LoadStats* stats = nullptr) {
  auto examples = corpus::load_dataset(path, g, {}, stats);
  if (examples.empty()) throw InputError(path + ": no usable examples after filtering");
  return examples;
}

std::vector<metrics::Tokens> prediction_tokens(const std::vector<Prediction>& preds) {
  std::vector<metrics::Tokens> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(p.tokens);
  return out;
}

// Run-level seeds drawn from one generator: model initialization, then data
// order.
struct Seeds {
  std::uint64_t init;
  std::uint64_t shuffle;
};
Seeds derive_seeds(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::uint64_t init = gen();
  return {init, gen()};
}

inference::DecodeOptions greedy_options(const model::ModelConfig& config) {
  auto opts = inference::decode_options(config);
  opts.beam_size = 1;
  return opts;
}

std::function<void(const model::EpochLog&)> epoch_logger(std::ostream& log, std::string prefix) {
  return [&log, prefix = std::move(prefix)](const model::EpochLog& e) {
    log << prefix << "epoch " << e.epoch << " loss " << e.mean_loss << " dev_exact " << e.dev_exact_match << " lr "
        << e.lr << (e.improved ? " *" : "") << "\n";
    log.flush();
  };
}

std::string vocab_path(const std::string& checkpoint) { return checkpoint + ".vocab.json"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

void write_vectors(const std::string& path, std::span<const Example> examples, const corpus::Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  for (const auto& ex : examples) {
    nlohmann::json nl = nlohmann::json::array();
    for (const auto& w : ex.nl) nl.push_back(vocab.identifiers().index(w));
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& step : ex.target.steps()) actions.push_back(vocab.action_index(step.rule, step.lexeme));
    nlohmann::json copies = nlohmann::json::array();
    for (const auto& c : ex.copy_labels) copies.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
    out << nlohmann::json{{"nl", nl}, {"actions", actions}, {"copy", copies}}.dump() << "\n";
  }
}

nlohmann::json load_stats_json(const corpus::LoadStats& s) {
  return {{"records", s.records},
          {"loaded", s.loaded},
          {"skipped_unparseable", s.skipped_unparseable},
          {"skipped_empty_nl", s.skipped_empty_nl},
          {"filtered_input_length", s.filtered_input_length},
          {"filtered_code_length", s.filtered_code_length}};
}

double corpus_exact(const std::vector<Prediction>& preds, const std::vector<metrics::Tokens>& refs) {
  return metrics::exact_match(prediction_tokens(preds), refs);
}

}  // namespace

std::vector<metrics::Tokens> reference_tokens(std::span<const Example> examples, const grammar::Grammar& g) {
  std::vector<metrics::Tokens> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(grammar::realize(ex.target, g));
  return out;
}

void cmd_synth(const RunConfig& rc, std::ostream& log) {
  require(rc.out, "out", rc);
  corpus::SynthOptions options;
  options.unique_names = rc.synth_unique_names;
  const auto records = corpus::generate_synthetic_records(static_cast<std::size_t>(rc.synth_count), rc.seed, options);
  corpus::write_records(rc.out, records);
  log << "wrote " << records.size() << " records to " << rc.out << "\n";
}

void cmd_preprocess(const RunConfig& rc, std::ostream& log) {
  require(rc.train_file, "train-file", rc);
  require(rc.out, "out", rc);
  const auto g = grammar::Grammar::load_file(rc.grammar);

  struct Split {
    std::string name;
    std::string path;
  };
  const Split splits[] = {{"train", rc.train_file}, {"dev", rc.dev_file}, {"test", rc.test_file}};
  std::vector<std::vector<Example>> loaded;
  nlohmann::json split_stats = nlohmann::json::object();
  for (const auto& s : splits) {
    if (s.path.empty()) {
      loaded.emplace_back();
      continue;
    }
    corpus::LoadStats stats;
    loaded.push_back(load_split(s.path, g, &stats));
    split_stats[s.name] = {{"load", load_stats_json(stats)}, {"corpus", corpus::corpus_stats(loaded.back()).to_json()}};
  }

  const auto vocab = corpus::build_vocab(loaded[0], g, rc.thresholds);
  fs::create_directories(rc.out);
  const fs::path dir(rc.out);
  vocab.save((dir / "vocab.json").string());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    if (!loaded[i].empty()) write_vectors((dir / (splits[i].name + ".vectors.jsonl")).string(), loaded[i], vocab);
  }
  const nlohmann::json stats = {
      {"thresholds",
       {{"identifier", rc.thresholds.identifier}, {"type", rc.thresholds.type}, {"rule", rc.thresholds.rule}}},
      {"vocabulary",
       {{"identifiers", vocab.identifiers().size()},
        {"types", vocab.types().size()},
        {"actions", vocab.num_actions()},
        {"hash", vocab.hash()}}},
      {"splits", split_stats}};
  write_text((dir / "stats.json").string(), stats.dump(2) + "\n");

  log << "thresholds  identifier " << rc.thresholds.identifier << "  type " << rc.thresholds.type << "  rule "
      << rc.thresholds.rule << "\n";
  for (const auto& [name, s] : split_stats.items()) {
    const auto& c = s.at("corpus");
    log << name << "  examples " << c.at("examples") << "  avg_nl " << c.at("avg_nl_tokens").get<double>()
        << "  avg_code " << c.at("avg_code_tokens").get<double>() << "  avg_rules " << c.at("avg_rules").get<double>()
        << "\n";
  }
  log << "vocabulary  identifiers " << vocab.identifiers().size() << "  types " << vocab.types().size()
      << "  actions " << vocab.num_actions() << "\n";
}

void cmd_train(const RunConfig& rc, std::ostream& log) {
  require(rc.train_file, "train-file", rc);
  require(rc.checkpoint, "checkpoint", rc);
  if (rc.system == System::kRetrieval) throw UsageError("the retrieval system has no training step");
  const auto g = grammar::Grammar::load_file(rc.grammar);
  const auto train_set = load_split(rc.train_file, g);
  std::vector<Example> dev_storage;
  if (!rc.dev_file.empty()) {
    dev_storage = load_split(rc.dev_file, g);
  } else {
    log << "no --dev-file: selecting on training exact match\n";
  }
  const std::span<const Example> dev = rc.dev_file.empty() ? std::span<const Example>(train_set) : dev_storage;
  const auto dev_refs = reference_tokens(dev, g);

  const Seeds seeds = derive_seeds(rc.seed);
  auto options = rc.training;
  options.seed = seeds.shuffle;
  options.checkpoint_path = rc.checkpoint;
  if (const auto parent = fs::path(rc.checkpoint).parent_path(); !parent.empty()) fs::create_directories(parent);

  model::TrainResult result;
  switch (rc.system) {
    case System::kOurs: {
      const auto vocab =
          rc.vocab.empty() ? corpus::build_vocab(train_set, g, rc.thresholds) : corpus::Vocabulary::load(rc.vocab, g);
      vocab.save(vocab_path(rc.checkpoint));
      model::Model m(g, vocab, rc.model);
      m.init(seeds.init);
      const auto decode = greedy_options(rc.model);
      result = model::train(
          m, train_set, [&] { return corpus_exact(inference::predict_corpus(m, dev, decode), dev_refs); }, options,
          epoch_logger(log, ""));
      m.save(rc.checkpoint);
      break;
    }
    case System::kSeq2Seq: {
      auto m = baselines::Seq2Seq::build(train_set, g, rc.model, rc.thresholds);
      m.init(seeds.init);
      result = model::train(
          m, train_set, [&] { return corpus_exact(m.predict_corpus(dev), dev_refs); }, options, epoch_logger(log, ""));
      m.save(rc.checkpoint);
      break;
    }
    case System::kSeq2Prod: {
      auto m = baselines::Seq2Prod::build(train_set, g, rc.model, rc.thresholds);
      m.init(seeds.init);
      const auto decode = greedy_options(rc.model);
      result = model::train(
          m, train_set, [&] { return corpus_exact(m.predict_corpus(dev, decode), dev_refs); }, options,
          epoch_logger(log, ""));
      m.save(rc.checkpoint);
      break;
    }
    case System::kRetrieval:
      break;
  }
  log << "best dev exact " << result.best_exact_match << " at epoch " << result.best_epoch << "; saved "
      << rc.checkpoint << "\n";
}

void cmd_predict(const RunConfig& rc, std::ostream& log) {
  require(rc.test_file, "test-file", rc);
  require(rc.out, "out", rc);
  const auto g = grammar::Grammar::load_file(rc.grammar);
  const auto test = load_split(rc.test_file, g);
  if (rc.system != System::kRetrieval) {
    require(rc.checkpoint, "checkpoint", rc);
    if (!fs::exists(rc.checkpoint)) throw InputError("missing checkpoint " + rc.checkpoint);
  }

  std::vector<Prediction> preds;
  switch (rc.system) {
    case System::kOurs: {
      auto config = model::read_checkpoint_config(rc.checkpoint);
      if (rc.beam) config.beam_size = *rc.beam;
      if (!fs::exists(vocab_path(rc.checkpoint))) throw InputError("missing vocabulary " + vocab_path(rc.checkpoint));
      const auto vocab = corpus::Vocabulary::load(vocab_path(rc.checkpoint), g);
      model::Model m(g, vocab, config);
      m.load(rc.checkpoint);
      preds = inference::predict_corpus(m, test, inference::decode_options(config));
      break;
    }
    case System::kRetrieval: {
      require(rc.train_file, "train-file", rc);
      const auto train_set = load_split(rc.train_file, g);
      preds = baselines::RetrievalBaseline(train_set, g).predict_corpus(test, rc.seed);
      break;
    }
    case System::kSeq2Seq:
      preds = baselines::Seq2Seq::load(rc.checkpoint, g)->predict_corpus(test);
      break;
    case System::kSeq2Prod: {
      const auto m = baselines::Seq2Prod::load(rc.checkpoint, g);
      auto opts = m->decode_options();
      if (rc.beam) opts.beam_size = *rc.beam;
      preds = m->predict_corpus(test, opts);
      break;
    }
  }
  if (const auto parent = fs::path(rc.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  inference::write_predictions(rc.out, preds,
                               rc.format == "jsonl" ? inference::PredictionFormat::kJsonl
                                                    : inference::PredictionFormat::kText);
  std::size_t truncated = 0;
  for (const auto& p : preds) truncated += p.truncated;
  log << "wrote " << preds.size() << " predictions (" << truncated << " truncated) to " << rc.out << "\n";
}

metrics::EvalReport cmd_eval(const RunConfig& rc, std::ostream& log) {
  require(rc.predictions, "predictions", rc);
  const auto g = grammar::Grammar::load_file(rc.grammar);
  std::vector<metrics::Tokens> refs;
  auto read = [](const std::string& path) {
    try {
      return prediction_tokens(inference::read_predictions(path));
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
  };
  if (!rc.references.empty()) {
    refs = read(rc.references);
  } else if (!rc.test_file.empty()) {
    refs = reference_tokens(load_split(rc.test_file, g), g);
  } else {
    throw UsageError("eval requires --references or --test-file");
  }
  const auto preds = read(rc.predictions);
  if (preds.size() != refs.size()) {
    throw InputError(std::to_string(preds.size()) + " predictions for " + std::to_string(refs.size()) +
                     " references");
  }
  if (refs.empty()) throw InputError("no references to score");
  auto report = metrics::evaluate(preds, refs, &g);
  log << report.table();
  if (!rc.out.empty()) {
    write_text(rc.out, report.to_json().dump(2) + "\n");
  } else {
    log << report.to_json(false).dump() << "\n";
  }
  return report;
}

std::vector<metrics::AblationRow> run_ablation(std::span<const Example> train, std::span<const Example> eval,
                                               const grammar::Grammar& g, const model::ModelConfig& base,
                                               const corpus::Thresholds& thresholds,
                                               const model::TrainOptions& training,
                                               const inference::DecodeOptions& decode, std::uint64_t seed,
                                               std::ostream* log) {
  const auto vocab = corpus::build_vocab(train, g, thresholds);
  const auto refs = reference_tokens(eval, g);
  const Seeds seeds = derive_seeds(seed);

  std::vector<model::ModelConfig> configs(metrics::kAblationLabels.size(), base);
  for (auto& c : configs) {
    c.use_variables = c.use_methods = c.use_two_step_attention = c.use_camel_encoding = true;
  }
  configs[1].use_variables = false;
  configs[2].use_methods = false;
  configs[3].use_two_step_attention = false;
  configs[4].use_camel_encoding = false;

  std::vector<metrics::AblationRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const std::string label(metrics::kAblationLabels[i]);
    model::Model m(g, vocab, configs[i]);
    m.init(seeds.init);
    auto options = training;
    options.seed = seeds.shuffle;
    options.checkpoint_path.clear();
    const auto greedy = greedy_options(configs[i]);
    const auto start = std::chrono::steady_clock::now();
    const auto result = model::train(
        m, train, [&] { return corpus_exact(inference::predict_corpus(m, eval, greedy), refs); }, options,
        log ? epoch_logger(*log, "[" + label + "] ") : std::function<void(const model::EpochLog&)>{});
    const auto preds = prediction_tokens(inference::predict_corpus(m, eval, decode));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    rows.push_back({label, metrics::exact_match(preds, refs), metrics::bleu(preds, refs), result.best_epoch,
                    elapsed.count()});
    if (log) {
      *log << "[" << label << "] best epoch " << result.best_epoch << " exact " << rows.back().exact_match << "\n";
    }
  }
  return rows;
}

std::vector<metrics::AblationRow> cmd_ablate(const RunConfig& rc, std::ostream& log) {
  require(rc.train_file, "train-file", rc);
  if (rc.system != System::kOurs) throw UsageError("ablate applies to --system ours only");
  const auto g = grammar::Grammar::load_file(rc.grammar);
  const auto train_set = load_split(rc.train_file, g);
  std::vector<Example> dev_storage;
  if (!rc.dev_file.empty()) dev_storage = load_split(rc.dev_file, g);
  const std::span<const Example> eval = rc.dev_file.empty() ? std::span<const Example>(train_set) : dev_storage;

  const auto rows = run_ablation(train_set, eval, g, rc.model, rc.thresholds, rc.training,
                                 inference::decode_options(rc.model), rc.seed, &log);
  log << metrics::ablation_table(rows, rc.dev_file.empty() ? "Train exact" : "Dev exact");
  if (!rc.out.empty()) write_text(rc.out, metrics::ablation_json(rows).dump(2) + "\n");
  return rows;
}

void run(const RunConfig& rc, std::ostream& log) {
  switch (rc.command) {
    case Command::kPreprocess: cmd_preprocess(rc, log); break;
    case Command::kTrain: cmd_train(rc, log); break;
    case Command::kPredict: cmd_predict(rc, log); break;
    case Command::kEval: cmd_eval(rc, log); break;
    case Command::kAblate: cmd_ablate(rc, log); break;
    case Command::kSynth: cmd_synth(rc, log); break;
  }
}

namespace {

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

int fail(std::ostream& err, std::string_view category, const std::string& what, int code) {
  err << "error: " << category << ": " << one_line(what) << "\n";
  return code;
}

}  // namespace

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    run(parse_args(args), out);
    return 0;
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const UsageError& e) {
    return fail(err, "usage", e.what(), 2);
  } catch (const InputError& e) {
    return fail(err, "input", e.what(), 3);
  } catch (const corpus::DatasetError& e) {
    return fail(err, "input", e.what(), 3);
  } catch (const corpus::VocabularyError& e) {
    return fail(err, "vocabulary", e.what(), 3);
  } catch (const nlohmann::json::exception& e) {
    return fail(err, "input", e.what(), 3);
  } catch (const metrics::MetricsError& e) {
    return fail(err, "input", e.what(), 3);
  } catch (const model::ModelError& e) {
    return fail(err, "checkpoint", e.what(), 4);
  } catch (const model::TrainingDiverged& e) {
    return fail(err, "training", e.what(), 5);
  } catch (const std::exception& e) {
    return fail(err, "runtime", e.what(), 1);
  }
}

}  // namespace concode::cli
