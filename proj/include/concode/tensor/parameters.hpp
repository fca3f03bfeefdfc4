#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "concode/tensor/tensor.hpp"

namespace concode::tensor {

// Ordered collection of named trainable tensors. References returned by add()
// and get() stay valid as more parameters are added.
class ParameterSet {
 public:
  // Registers a zero-initialized parameter; names must be unique.
  Tensor& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  const std::deque<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::deque<std::pair<std::string, Tensor>>& entries() { return entries_; }
  std::size_t num_values() const;

  void zero_grad();
  // Deep copy of every value (gradients are not copied).
  ParameterSet clone() const;
  void copy_values_from(const ParameterSet& other);

 private:
  std::deque<std::pair<std::string, Tensor>> entries_;
};

// Uniform in ±sqrt(6 / (fan_in + fan_out)) with fan_out = rows, fan_in = cols.
void xavier_uniform(Tensor& t, std::mt19937_64& rng);
void uniform_fill(Tensor& t, double bound, std::mt19937_64& rng);

double global_grad_norm(const ParameterSet& params);
// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParameterSet& params, AdamOptions options = {});
  // One bias-corrected update from the current gradients. Throws
  // NonFiniteGradient, leaving every parameter and moment untouched, if any
  // gradient entry is NaN or infinite.
  void step();
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  long steps() const { return t_; }

 private:
  ParameterSet* params_;
  AdamOptions options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout: magic "CCDK", uint32 version, uint32 record count, then per
// record: uint32 name length, name bytes, uint32 rank, rank x uint64 dims,
// uint8 precision tag (8 = float64), row-major little-endian values.
void save_checkpoint(const std::string& path, const ParameterSet& params);
// Fills `params` in place. Every stored name must exist with the same shape,
// and every parameter must be present.
void load_checkpoint(const std::string& path, ParameterSet& params);

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0;
  std::vector<std::string> failures;
  bool passed = false;
};

// Compares backward() against central differences on `coordinates` randomly
// sampled entries (all entries when coordinates == 0). Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs, double eps, double tol,
                           std::size_t coordinates, std::mt19937_64& rng, double floor = 1e-7);

}  // namespace concode::tensor
