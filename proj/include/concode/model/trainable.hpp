#pragma once

#include <random>
#include <string>

#include "concode/corpus/example.hpp"
#include "concode/tensor/parameters.hpp"
#include "concode/tensor/tensor.hpp"

namespace concode::model {

using tensor::Tensor;

// Anything trained by per-example negative log-likelihood.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual tensor::ParameterSet& params() = 0;
  // `rng` enables dropout; nullptr evaluates deterministically.
  virtual Tensor loss(const corpus::Example& ex, std::mt19937_64* rng) const = 0;
  virtual void save(const std::string& path) const = 0;
};

}  // namespace concode::model
