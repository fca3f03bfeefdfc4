#include "concode/model/config.hpp"

namespace concode::model {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be at least 1");
  };
  positive(hidden, "hidden");
  positive(sym_embed, "sym_embed");
  positive(layers, "layers");
  positive(beam_size, "beam_size");
  positive(max_rules, "max_rules");
  positive(max_tokens, "max_tokens");
  if (hidden % 2 != 0) throw std::invalid_argument("hidden must be even");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
}

bool ModelConfig::same_architecture(const ModelConfig& o) const {
  return hidden == o.hidden && sym_embed == o.sym_embed && layers == o.layers && use_variables == o.use_variables &&
         use_methods == o.use_methods && use_two_step_attention == o.use_two_step_attention &&
         use_camel_encoding == o.use_camel_encoding && use_copy == o.use_copy;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"hidden", hidden},
          {"sym_embed", sym_embed},
          {"layers", layers},
          {"dropout", dropout},
          {"use_variables", use_variables},
          {"use_methods", use_methods},
          {"use_two_step_attention", use_two_step_attention},
          {"use_camel_encoding", use_camel_encoding},
          {"use_copy", use_copy},
          {"beam_size", beam_size},
          {"max_rules", max_rules},
          {"max_tokens", max_tokens}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.hidden = j.at("hidden").get<int>();
  c.sym_embed = j.at("sym_embed").get<int>();
  c.layers = j.at("layers").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.use_variables = j.at("use_variables").get<bool>();
  c.use_methods = j.at("use_methods").get<bool>();
  c.use_two_step_attention = j.at("use_two_step_attention").get<bool>();
  c.use_camel_encoding = j.at("use_camel_encoding").get<bool>();
  c.use_copy = j.at("use_copy").get<bool>();
  c.beam_size = j.at("beam_size").get<int>();
  c.max_rules = j.at("max_rules").get<int>();
  c.max_tokens = j.at("max_tokens").get<int>();
  c.validate();
  return c;
}

}  // namespace concode::model
