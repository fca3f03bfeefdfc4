#pragma once

#include <random>
#include <string>
#include <vector>

#include "concode/model/model.hpp"
#include "concode/tensor/tensor.hpp"
#include "json.hpp"

// Pieces shared by the neural baselines.
namespace concode::baselines::detail {

using tensor::Tensor;
namespace ts = concode::tensor;

struct Lstm {
  Tensor w;
  Tensor b;
};

// One step of a layered LSTM; dropout between layers when rng is set.
inline model::DecoderState stacked_step(const Tensor& input, const model::DecoderState& prev,
                                        const std::vector<Lstm>& layers, double dropout, std::mt19937_64* rng) {
  model::DecoderState next;
  Tensor x = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Eigen::Index n = prev.h[l].rows();
    const Tensor out = ts::lstm_cell(x, prev.h[l], prev.c[l], layers[l].w, layers[l].b);
    next.h.push_back(ts::slice_rows(out, 0, n));
    next.c.push_back(ts::slice_rows(out, n, n));
    x = rng && l + 1 < layers.size() ? ts::dropout(next.h.back(), dropout, true, *rng) : next.h.back();
  }
  return next;
}

inline model::DecoderState zero_state(std::size_t layers, Eigen::Index n) {
  model::DecoderState s;
  for (std::size_t l = 0; l < layers; ++l) {
    s.h.push_back(Tensor::zeros(n));
    s.c.push_back(Tensor::zeros(n));
  }
  return s;
}

// Xavier weights with LSTM forget-gate biases at 1; "*.b" names are biases.
void init_parameters(tensor::ParameterSet& params, std::uint64_t seed, const std::string& gate_free_bias);

// Checkpoint plus `<path>.meta.json`.
void save_with_meta(const std::string& path, const tensor::ParameterSet& params, const nlohmann::json& meta);
nlohmann::json read_meta(const std::string& path);

}  // namespace concode::baselines::detail
