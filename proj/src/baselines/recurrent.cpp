#include "recurrent.hpp"

#include <fstream>
#include <stdexcept>

#include "concode/tensor/parameters.hpp"

namespace concode::baselines::detail {

void init_parameters(tensor::ParameterSet& params, std::uint64_t seed, const std::string& gate_free_bias) {
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : params.entries()) {
    if (name.ends_with(".b") && name != gate_free_bias) {
      const Eigen::Index n = t.rows() / 4;
      t.mutable_value().setZero();
      t.mutable_value().middleRows(n, n).setOnes();
    } else {
      ts::xavier_uniform(t, rng);
    }
  }
}

void save_with_meta(const std::string& path, const tensor::ParameterSet& params, const nlohmann::json& meta) {
  ts::save_checkpoint(path, params);
  std::ofstream out(path + ".meta.json");
  if (!out) throw std::runtime_error("cannot write " + path + ".meta.json");
  out << meta.dump(1) << '\n';
}

nlohmann::json read_meta(const std::string& path) {
  std::ifstream in(path + ".meta.json");
  if (!in) throw std::runtime_error("missing checkpoint metadata " + path + ".meta.json");
  try {
    nlohmann::json meta;
    in >> meta;
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ".meta.json: " + e.what());
  }
}

}  // namespace concode::baselines::detail
