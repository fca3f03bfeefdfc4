#include "concode/inference/predictions.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "concode/inference/model_scorer.hpp"
#include "json.hpp"

namespace concode::inference {

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

Prediction to_prediction(const DecodeResult& r) {
  Prediction p;
  p.tokens = r.tokens;
  p.logp = r.logp;
  p.truncated = r.truncated;
  p.rules.reserve(r.choices.size());
  for (const auto& c : r.choices) p.rules.push_back(c.rule);
  return p;
}

void write_predictions(const std::string& path, std::span<const Prediction> predictions, PredictionFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& p : predictions) {
    if (format == PredictionFormat::kText) {
      out << join(p.tokens) << '\n';
      continue;
    }
    nlohmann::ordered_json j;
    j["tokens"] = p.tokens;
    j["code"] = join(p.tokens);
    if (p.logp) j["logp"] = *p.logp;
    if (!p.rules.empty()) j["rules"] = p.rules;
    j["truncated"] = p.truncated;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("error writing " + path);
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<Prediction> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    Prediction p;
    if (!line.empty() && line.front() == '{') {
      try {
        const auto j = nlohmann::json::parse(line);
        p.tokens = j.at("tokens").get<std::vector<std::string>>();
        if (j.contains("logp")) p.logp = j["logp"].get<double>();
        if (j.contains("rules")) p.rules = j["rules"].get<std::vector<int>>();
        p.truncated = j.value("truncated", false);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ":" + std::to_string(number) + ": " + e.what());
      }
    } else {
      std::istringstream words(line);
      for (std::string w; words >> w;) p.tokens.push_back(w);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> predict_corpus(const model::Model& model, std::span<const corpus::Example> examples,
                                       const DecodeOptions& options) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (options.beam_size == 1) {
      out.push_back(to_prediction(greedy_decode(model, ex, options)));
    } else {
      const auto ranked = beam_decode(model, ex, options);
      out.push_back(ranked.empty() ? Prediction{} : to_prediction(ranked.front()));
    }
  }
  return out;
}

}  // namespace concode::inference
