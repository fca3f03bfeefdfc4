#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace concode::model {

struct ModelConfig {
  int hidden = 1024;          // H; each BiLSTM direction gets H/2
  int sym_embed = 512;        // nonterminal and rule embedding width
  int layers = 2;
  double dropout = 0.5;
  bool use_variables = true;
  bool use_methods = true;
  bool use_two_step_attention = true;
  bool use_camel_encoding = true;
  bool use_copy = true;
  int beam_size = 3;
  int max_rules = 500;
  int max_tokens = 150;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  // Equal in everything that shapes parameters or the forward computation
  // (dropout and decoding limits excluded).
  bool same_architecture(const ModelConfig& other) const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace concode::model
