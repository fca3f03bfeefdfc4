#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "concode/grammar/grammar.hpp"
#include "json.hpp"

namespace concode::metrics {

using Tokens = std::vector<std::string>;

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kMaxOrder = 4;

// Splits on runs of whitespace.
Tokens split_tokens(std::string_view line);

// Percentage of predictions whose token sequence equals the reference.
double exact_match(std::span<const Tokens> preds, std::span<const Tokens> refs);

// Clipped n-gram counts summed over a corpus. Integer counts make the
// reduction order irrelevant.
struct BleuStats {
  std::array<long long, kMaxOrder> matches{};
  std::array<long long, kMaxOrder> totals{};
  long long candidate_length = 0;
  long long reference_length = 0;

  BleuStats& operator+=(const BleuStats& o);
  // Corpus BLEU-4 in [0, 100]: geometric mean of the modified precisions
  // times exp(1 - r/c) when c <= r. Zero if any precision is zero.
  double score() const;
};

BleuStats sentence_stats(const Tokens& pred, const Tokens& ref);

// Throws on a count mismatch or an empty corpus.
double bleu(std::span<const Tokens> preds, std::span<const Tokens> refs);

// Diagnostic only: add-one smoothing on the 2..4-gram precisions, so a single
// short sentence does not collapse to zero. Not comparable to corpus BLEU.
double smoothed_sentence_bleu(const Tokens& pred, const Tokens& ref);

struct ExampleRecord {
  bool match = false;
  double sentence_bleu = 0;
  bool parses = true;
};

struct EvalReport {
  double exact_match = 0;
  double bleu = 0;
  std::size_t n = 0;
  // Predictions that do not parse as a method under the grammar; -1 when no
  // grammar was supplied.
  long long parse_failures = -1;
  std::vector<ExampleRecord> records;

  nlohmann::json to_json(bool with_examples = true) const;
  std::string table() const;
};

// `g` enables the parse-failure count.
EvalReport evaluate(std::span<const Tokens> preds, std::span<const Tokens> refs,
                    const grammar::Grammar* g = nullptr);

struct AblationRow {
  std::string label;
  double exact_match = 0;
  double bleu = 0;
  int best_epoch = -1;
  double seconds = 0;  // wall time; left out of the JSON so reruns compare equal
};

// Labels of the full model and the four single-toggle ablations, in table
// order.
inline constexpr std::array<std::string_view, 5> kAblationLabels = {
    "Full model", "-Variables", "-Methods", "-Two step attention", "-Camel-case encoding"};

std::string ablation_table(std::span<const AblationRow> rows, std::string_view score_heading = "Exact");
nlohmann::json ablation_json(std::span<const AblationRow> rows);

}  // namespace concode::metrics
