#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/inference/decoder.hpp"
#include "concode/model/model.hpp"

namespace concode::inference {

struct Prediction {
  std::vector<std::string> tokens;
  std::optional<double> logp;
  std::vector<int> rules;  // empty for systems without a derivation
  bool truncated = false;
};

enum class PredictionFormat { kText, kJsonl };

Prediction to_prediction(const DecodeResult& r);

// Text: one line of space-separated tokens per prediction. JSONL: one object
// per line with "tokens", "code", and when known "logp", "rules" and
// "truncated".
void write_predictions(const std::string& path, std::span<const Prediction> predictions, PredictionFormat format);

// Accepts either format, detected per line by a leading '{'.
std::vector<Prediction> read_predictions(const std::string& path);

// Top beam hypothesis for each example (greedy when beam_size is 1).
std::vector<Prediction> predict_corpus(const model::Model& model, std::span<const corpus::Example> examples,
                                       const DecodeOptions& options);

}  // namespace concode::inference
