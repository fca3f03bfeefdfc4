#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/model/trainable.hpp"

namespace concode::model {

struct TrainOptions {
  int batch_size = 20;
  int max_epochs = 30;
  double lr = 1e-3;
  double decay = 0.2;          // lr multiplier when dev exact match does not improve
  bool decay_enabled = true;
  int patience = 1;            // non-improving epochs tolerated before each decay
  double clip_norm = 5.0;      // <= 0 disables clipping
  std::uint64_t seed = 0;
  // Stop once dev exact match reaches this percentage.
  std::optional<double> target_exact_match;
  std::string checkpoint_path;  // best-dev checkpoint, written when non-empty
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0;
  double dev_exact_match = 0;
  double lr = 0;
  bool improved = false;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  double best_exact_match = -1;
  int best_epoch = -1;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dev exact-match percentage of the model's current parameters.
using DevEvaluator = std::function<double()>;

// Mini-batch Adam on the summed per-example loss averaged over the batch.
// After each epoch `evaluate` is called; the best-scoring parameters are
// restored into `model` at the end. A non-finite loss or gradient restores
// the best parameters so far and throws TrainingDiverged.
TrainResult train(Trainable& model, std::span<const corpus::Example> train_set, const DevEvaluator& evaluate, const TrainOptions& options = {},
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Mean per-example loss with dropout disabled.
double mean_loss(const Trainable& model, std::span<const corpus::Example> examples);

}  // namespace concode::model
