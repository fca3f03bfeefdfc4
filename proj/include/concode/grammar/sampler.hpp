#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "concode/grammar/derivation.hpp"
#include "concode/grammar/grammar.hpp"

namespace concode::grammar {

struct SampleOptions {
  // Past this depth only rules of minimal derivation height are chosen.
  int max_depth = 24;
  // Upper bound on the yield length; rules that cannot fit are skipped.
  std::size_t max_tokens = 120;
  std::vector<std::string> identifiers = {"x", "count", "vecElements", "loc0", "arg0",
                                          "List<String>", "size", "Vector"};
  std::vector<std::string> integers = {"0", "1", "42", "0x1F", "7L"};
  std::vector<std::string> floats = {"1.5", "0.25f", "2e10"};
  std::vector<std::string> chars = {"'a'", "'\\n'"};
  std::vector<std::string> strings = {"\"str\""};
};

// Draws a random complete derivation from the grammar's start symbol.
Derivation sample_derivation(const Grammar& g, std::mt19937_64& rng, const SampleOptions& options = {});

}  // namespace concode::grammar
