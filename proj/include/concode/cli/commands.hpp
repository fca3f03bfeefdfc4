#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "concode/cli/run_config.hpp"
#include "concode/corpus/example.hpp"
#include "concode/grammar/grammar.hpp"
#include "concode/inference/decoder.hpp"
#include "concode/metrics/metrics.hpp"
#include "concode/model/config.hpp"
#include "concode/model/train.hpp"

namespace concode::cli {

// Missing or unusable input artifacts (empty corpora, absent checkpoints).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void cmd_synth(const RunConfig& config, std::ostream& log);
void cmd_preprocess(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_predict(const RunConfig& config, std::ostream& log);
metrics::EvalReport cmd_eval(const RunConfig& config, std::ostream& log);
std::vector<metrics::AblationRow> cmd_ablate(const RunConfig& config, std::ostream& log);

// Dispatches on config.command.
void run(const RunConfig& config, std::ostream& log);

// Whole-process entry: parses, runs, and maps failures to a single
// `error: <category>: <message>` line on `err`. Returns the exit code.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Canonical code tokens of each example's target.
std::vector<metrics::Tokens> reference_tokens(std::span<const corpus::Example> examples, const grammar::Grammar& g);

// Trains the full model and each single-toggle ablation from the same seed on
// `train`, selects parameters by exact match on `eval` (greedy), and scores
// the selected parameters on `eval` with `decode`. Rows follow
// metrics::kAblationLabels.
std::vector<metrics::AblationRow> run_ablation(std::span<const corpus::Example> train,
                                               std::span<const corpus::Example> eval, const grammar::Grammar& g,
                                               const model::ModelConfig& base, const corpus::Thresholds& thresholds,
                                               const model::TrainOptions& training,
                                               const inference::DecodeOptions& decode, std::uint64_t seed,
                                               std::ostream* log = nullptr);

}  // namespace concode::cli
