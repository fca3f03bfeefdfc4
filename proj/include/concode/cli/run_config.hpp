#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "concode/corpus/vocabulary.hpp"
#include "concode/model/config.hpp"
#include "concode/model/train.hpp"

namespace concode::cli {

enum class Command { kPreprocess, kTrain, kPredict, kEval, kAblate, kSynth };
enum class System { kOurs, kRetrieval, kSeq2Seq, kSeq2Prod };

// Bad flags, config keys or values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --help: the help text is the payload.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Command command = Command::kSynth;
  std::string grammar;
  std::string train_file;
  std::string dev_file;
  std::string test_file;
  std::string checkpoint;
  std::string out;
  std::string vocab;        // preprocess output reused by train
  std::string predictions;  // eval input
  std::string references;   // eval input; --test-file also works
  std::string format = "text";
  System system = System::kOurs;
  std::uint64_t seed = 0;
  std::optional<int> beam;

  model::ModelConfig model;
  model::TrainOptions training;
  corpus::Thresholds thresholds;

  int synth_count = 100;
  bool synth_unique_names = false;
};

std::string_view command_name(Command c);
std::string_view system_name(System s);

// Parses `prog <command> [flags]`. A `--config FILE` holds `key = value`
// lines whose keys are the long flag names; flags on the command line win.
// Unknown keys and flags, missing input files and invalid values throw
// UsageError.
RunConfig parse_args(const std::vector<std::string>& args);

// Every accepted config key, for documentation.
std::vector<std::string> config_keys();

}  // namespace concode::cli
