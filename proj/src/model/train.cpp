#include "concode/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace concode::model {

TrainResult train(Trainable& model, std::span<const corpus::Example> train_set, const DevEvaluator& evaluate, const TrainOptions& options,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (options.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");

  auto& params = model.params();
  tensor::Adam adam(params, {.lr = options.lr});
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  tensor::ParameterSet best = params.clone();
  int stale = 0;

  auto diverged = [&](const std::string& what) {
    params.copy_values_from(best);
    throw TrainingDiverged(what);
  };

  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      params.zero_grad();
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const Tensor l = model.loss(train_set[order[k]], &rng);
        if (!std::isfinite(l.item())) diverged("non-finite loss in epoch " + std::to_string(epoch));
        total += l.item();
        tensor::backward(tensor::affine(l, scale, 0.0));
      }
      if (options.clip_norm > 0) tensor::clip_grad_norm(params, options.clip_norm);
      try {
        adam.step();
      } catch (const tensor::NonFiniteGradient& e) {
        diverged(e.what());
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = total / static_cast<double>(train_set.size());
    log.lr = adam.lr();
    log.dev_exact_match = evaluate();
    log.improved = log.dev_exact_match > result.best_exact_match;
    if (log.improved) {
      result.best_exact_match = log.dev_exact_match;
      result.best_epoch = epoch;
      best.copy_values_from(params);
      if (!options.checkpoint_path.empty()) model.save(options.checkpoint_path);
      stale = 0;
    } else if (options.decay_enabled && ++stale >= options.patience) {
      adam.set_lr(adam.lr() * options.decay);
      stale = 0;
    }
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (options.target_exact_match && result.best_exact_match >= *options.target_exact_match) break;
  }
  params.copy_values_from(best);
  return result;
}

double mean_loss(const Trainable& model, std::span<const corpus::Example> examples) {
  tensor::NoGrad no_grad;
  double total = 0;
  for (const auto& ex : examples) total += model.loss(ex, nullptr).item();
  return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

}  // namespace concode::model
