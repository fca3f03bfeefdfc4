#include "concode/cli/run_config.hpp"

#include <memory>

#include "CLI11.hpp"

namespace concode::cli {

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::kPreprocess, "preprocess"}, {Command::kTrain, "train"}, {Command::kPredict, "predict"},
    {Command::kEval, "eval"},             {Command::kAblate, "ablate"}, {Command::kSynth, "synth"},
};

// Flag targets that need post-processing into RunConfig.
struct Pending {
  std::string system = "ours";
  int beam = 0;
  bool no_variables = false;
  bool no_methods = false;
  bool no_two_step = false;
  bool no_camel = false;
  bool no_copy = false;
  bool no_lr_decay = false;
  double target_exact = -1;
};

std::unique_ptr<CLI::App> build_app(RunConfig& rc, Pending& p) {
  auto app = std::make_unique<CLI::App>("Contextual code generation: preprocessing, training, decoding, scoring.",
                                        "concode");
  app->set_config("--config", "", "File of `key = value` lines; keys are long flag names");
  app->allow_config_extras(CLI::config_extras_mode::error);
  app->require_subcommand(1, 1);
  app->set_help_all_flag("--help-all", "Show every flag");

  for (const auto& [cmd, name] : kCommands) {
    auto* sub = app->add_subcommand(std::string(name));
    sub->fallthrough();
    sub->callback([&rc, cmd = cmd] { rc.command = cmd; });
  }
  app->get_subcommand("preprocess")->description("Vocabulary tables, corpus statistics and vectorized splits");
  app->get_subcommand("train")->description("Train the selected neural system");
  app->get_subcommand("predict")->description("Decode the test file with the selected system");
  app->get_subcommand("eval")->description("Exact match and BLEU of predictions against references");
  app->get_subcommand("ablate")->description("Full model and the four single-toggle ablations");
  app->get_subcommand("synth")->description("Write a synthetic JSONL corpus");

  auto existing = CLI::ExistingFile;
  app->add_option("--grammar", rc.grammar, "Grammar file")->check(existing)->capture_default_str();
  app->add_option("--train-file", rc.train_file, "Training JSONL")->check(existing);
  app->add_option("--dev-file", rc.dev_file, "Development JSONL")->check(existing);
  app->add_option("--test-file", rc.test_file, "Test JSONL")->check(existing);
  app->add_option("--checkpoint", rc.checkpoint, "Checkpoint path (written by train, read by predict)");
  app->add_option("--out", rc.out, "Output file or directory");
  app->add_option("--vocab", rc.vocab, "Vocabulary written by preprocess")->check(existing);
  app->add_option("--predictions", rc.predictions, "Predictions to score")->check(existing);
  app->add_option("--references", rc.references, "Reference predictions-format file")->check(existing);
  app->add_option("--format", rc.format, "Prediction output format")
      ->check(CLI::IsMember({"text", "jsonl"}))
      ->capture_default_str();

  app->add_option("--system", p.system, "System to train, decode or ablate")
      ->check(CLI::IsMember({"ours", "retrieval", "seq2seq", "seq2prod"}))
      ->capture_default_str();
  app->add_option("--seed", rc.seed, "Seed of the run's generator")->capture_default_str();
  app->add_option("--beam", p.beam, "Beam size (default from the model config)")->check(CLI::PositiveNumber);

  auto& m = rc.model;
  app->add_option("--hidden", m.hidden, "Hidden size H")->capture_default_str();
  app->add_option("--sym-embed", m.sym_embed, "Nonterminal and rule embedding width")->capture_default_str();
  app->add_option("--layers", m.layers, "LSTM layers")->capture_default_str();
  app->add_option("--dropout", m.dropout, "Dropout rate")->capture_default_str();
  app->add_option("--max-rules", m.max_rules, "Decoding rule budget")->capture_default_str();
  app->add_option("--max-tokens", m.max_tokens, "Decoding token budget")->capture_default_str();
  app->add_flag("--no-variables", p.no_variables, "Hide member variables from the model");
  app->add_flag("--no-methods", p.no_methods, "Hide member methods from the model");
  app->add_flag("--no-two-step-attention", p.no_two_step, "Query the environment with the decoder state");
  app->add_flag("--no-camel-encoding", p.no_camel, "Embed whole member names");
  app->add_flag("--no-copy", p.no_copy, "Disable the copy mechanism");

  auto& t = rc.training;
  app->add_option("--epochs", t.max_epochs, "Maximum epochs")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--batch-size", t.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--lr", t.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--lr-decay", t.decay, "Learning-rate multiplier on a non-improving epoch")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_flag("--no-lr-decay", p.no_lr_decay, "Keep the learning rate constant");
  app->add_option("--patience", t.patience, "Non-improving epochs before a decay")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--clip-norm", t.clip_norm, "Gradient norm clip (<= 0 disables)")->capture_default_str();
  app->add_option("--target-exact", p.target_exact, "Stop once dev exact match reaches this percentage")
      ->check(CLI::Range(0.0, 100.0));

  auto& th = rc.thresholds;
  app->add_option("--identifier-threshold", th.identifier, "Identifier frequency threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--type-threshold", th.type, "Type frequency threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--rule-threshold", th.rule, "Output-rule frequency threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  app->add_option("--count", rc.synth_count, "Synthetic records to write")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_flag("--unique-names", rc.synth_unique_names, "Give every record fresh member names");
  return app;
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [cmd, name] : kCommands) {
    if (cmd == c) return name;
  }
  return "?";
}

std::string_view system_name(System s) {
  switch (s) {
    case System::kOurs: return "ours";
    case System::kRetrieval: return "retrieval";
    case System::kSeq2Seq: return "seq2seq";
    case System::kSeq2Prod: return "seq2prod";
  }
  return "?";
}

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig rc;
#ifdef CONCODE_DEFAULT_GRAMMAR
  rc.grammar = CONCODE_DEFAULT_GRAMMAR;
#endif
  Pending p;
  auto app = build_app(rc, p);
  // CLI11 consumes arguments from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app->parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app->help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app->help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  for (System s : {System::kOurs, System::kRetrieval, System::kSeq2Seq, System::kSeq2Prod}) {
    if (system_name(s) == p.system) rc.system = s;
  }

  if (p.beam > 0) {
    rc.beam = p.beam;
    rc.model.beam_size = p.beam;
  }
  rc.model.use_variables = !p.no_variables;
  rc.model.use_methods = !p.no_methods;
  rc.model.use_two_step_attention = !p.no_two_step;
  rc.model.use_camel_encoding = !p.no_camel;
  rc.model.use_copy = !p.no_copy;
  rc.training.decay_enabled = !p.no_lr_decay;
  if (p.target_exact >= 0) rc.training.target_exact_match = p.target_exact;
  rc.training.seed = rc.seed;
  try {
    rc.model.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (rc.grammar.empty()) throw UsageError("--grammar is required");
  return rc;
}

std::vector<std::string> config_keys() {
  RunConfig rc;
  Pending p;
  auto app = build_app(rc, p);
  std::vector<std::string> keys;
  for (const CLI::Option* opt : app->get_options()) {
    const std::string& name = opt->get_single_name();
    if (name == "help" || name == "help-all" || name == "config") continue;
    keys.push_back(name);
  }
  return keys;
}

}  // namespace concode::cli
