#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/grammar/grammar.hpp"
#include "concode/inference/predictions.hpp"

namespace concode::baselines {

// tf-idf over NL tokens: raw term frequency times ln(N / df), L2-normalized.
class TfIdfIndex {
 public:
  using SparseVector = std::vector<std::pair<int, double>>;  // ascending term ids

  // Throws std::invalid_argument when there are no documents.
  explicit TfIdfIndex(std::span<const std::vector<std::string>> documents);

  // Terms absent from the index are ignored; an all-unknown or all-zero-idf
  // query yields an empty vector.
  SparseVector vectorize(const std::vector<std::string>& tokens) const;
  double cosine(const std::vector<std::string>& query, std::size_t document) const;
  std::vector<double> similarities(const std::vector<std::string>& query) const;

  std::size_t size() const { return documents_.size(); }
  // ln(N / df), or 0 for a term never seen.
  double idf(const std::string& term) const;

 private:
  std::unordered_map<std::string, int> term_ids_;
  std::vector<double> idf_;
  std::vector<SparseVector> documents_;
};

// Replaces every reference to a member of `source`'s environment with a member
// of the same kind and exact type from `target`'s environment, drawn
// uniformly when several fit. Each distinct member is mapped once; members
// with no same-typed counterpart stay as they are.
std::vector<std::string> substitute_members(const std::vector<std::string>& code, const corpus::Example& source,
                                            const corpus::Example& target, std::mt19937_64& rng);

class RetrievalBaseline {
 public:
  // `train` and `g` must outlive the baseline.
  RetrievalBaseline(std::span<const corpus::Example> train, const grammar::Grammar& g);

  const TfIdfIndex& index() const { return index_; }
  // Most similar training example; exact ties are broken uniformly with rng.
  std::size_t retrieve(const corpus::Example& query, std::mt19937_64& rng) const;
  std::vector<std::string> predict(const corpus::Example& query, std::mt19937_64& rng) const;
  // One generator per example, seeded from (seed, position).
  std::vector<inference::Prediction> predict_corpus(std::span<const corpus::Example> queries,
                                                    std::uint64_t seed) const;

 private:
  std::span<const corpus::Example> train_;
  const grammar::Grammar& g_;
  TfIdfIndex index_;
};

}  // namespace concode::baselines
