#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "concode/corpus/dataset.hpp"
#include "concode/corpus/example.hpp"
#include "concode/grammar/grammar.hpp"

namespace concode::corpus {

struct SynthOptions {
  // Share of getters among generated methods.
  double getter_fraction = 0.1674;
  // Every member name is a fresh adjective+noun combination used by at most
  // one record, and only templates that mention the target member once are
  // drawn, so no name reaches the output-vocabulary threshold.
  bool unique_names = false;
  int min_variables = 2;
  int max_variables = 4;
  int min_methods = 1;
  int max_methods = 3;
};

// Templated getters, setters, increments, containment checks and delegating
// calls over randomized class environments. Deterministic in (n, seed,
// options).
std::vector<Record> generate_synthetic_records(std::size_t n, std::uint64_t seed, const SynthOptions& options = {});

std::vector<Example> generate_synthetic(std::size_t n, std::uint64_t seed, const grammar::Grammar& g,
                                        const SynthOptions& options = {});

}  // namespace concode::corpus
