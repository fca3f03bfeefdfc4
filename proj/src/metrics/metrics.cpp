#include "concode/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "concode/grammar/lexer.hpp"
#include "concode/grammar/parser.hpp"

namespace concode::metrics {

namespace {

void check_counts(std::size_t preds, std::size_t refs) {
  if (preds != refs) {
    throw MetricsError("prediction count " + std::to_string(preds) + " != reference count " +
                       std::to_string(refs));
  }
}

using NgramCounts = std::map<std::vector<std::string>, long long>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++out[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

bool parses(const Tokens& pred, const grammar::Grammar& g) {
  try {
    grammar::ParseOptions options;
    options.max_tokens = std::numeric_limits<std::size_t>::max();
    grammar::parse(grammar::tokenize_code(grammar::join_tokens(pred)), g, options);
    return true;
  } catch (const grammar::LexError&) {
    return false;
  } catch (const grammar::ParseError&) {
    return false;
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Tokens split_tokens(std::string_view line) {
  Tokens out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < line.size()) {
    while (i < line.size() && space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double exact_match(std::span<const Tokens> preds, std::span<const Tokens> refs) {
  check_counts(preds.size(), refs.size());
  if (preds.empty()) throw MetricsError("empty corpus");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == refs[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kMaxOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  candidate_length += o.candidate_length;
  reference_length += o.reference_length;
  return *this;
}

double BleuStats::score() const {
  double log_sum = 0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (matches[n] == 0 || totals[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
  }
  const double c = static_cast<double>(candidate_length);
  const double r = static_cast<double>(reference_length);
  const double bp = c <= r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / kMaxOrder);
}

BleuStats sentence_stats(const Tokens& pred, const Tokens& ref) {
  BleuStats s;
  s.candidate_length = static_cast<long long>(pred.size());
  s.reference_length = static_cast<long long>(ref.size());
  for (int n = 1; n <= kMaxOrder; ++n) {
    const NgramCounts p = ngrams(pred, static_cast<std::size_t>(n));
    const NgramCounts r = ngrams(ref, static_cast<std::size_t>(n));
    long long total = 0;
    long long clipped = 0;
    for (const auto& [gram, count] : p) {
      total += count;
      auto it = r.find(gram);
      if (it != r.end()) clipped += std::min(count, it->second);
    }
    s.matches[n - 1] = clipped;
    s.totals[n - 1] = total;
  }
  return s;
}

double bleu(std::span<const Tokens> preds, std::span<const Tokens> refs) {
  check_counts(preds.size(), refs.size());
  if (preds.empty()) throw MetricsError("empty corpus");
  BleuStats total;
  for (std::size_t i = 0; i < preds.size(); ++i) total += sentence_stats(preds[i], refs[i]);
  return total.score();
}

double smoothed_sentence_bleu(const Tokens& pred, const Tokens& ref) {
  const BleuStats s = sentence_stats(pred, ref);
  if (s.candidate_length == 0 || s.matches[0] == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(s.matches[0]) / static_cast<double>(s.totals[0]));
  for (int n = 1; n < kMaxOrder; ++n) {
    log_sum += std::log((static_cast<double>(s.matches[n]) + 1.0) / (static_cast<double>(s.totals[n]) + 1.0));
  }
  const double c = static_cast<double>(s.candidate_length);
  const double r = static_cast<double>(s.reference_length);
  const double bp = c <= r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / kMaxOrder);
}

EvalReport evaluate(std::span<const Tokens> preds, std::span<const Tokens> refs, const grammar::Grammar* g) {
  check_counts(preds.size(), refs.size());
  if (preds.empty()) throw MetricsError("empty corpus");
  EvalReport report;
  report.n = preds.size();
  report.exact_match = exact_match(preds, refs);
  report.bleu = bleu(preds, refs);
  report.records.reserve(preds.size());
  if (g) report.parse_failures = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ExampleRecord rec;
    rec.match = preds[i] == refs[i];
    rec.sentence_bleu = smoothed_sentence_bleu(preds[i], refs[i]);
    if (g) {
      rec.parses = parses(preds[i], *g);
      report.parse_failures += !rec.parses;
    }
    report.records.push_back(rec);
  }
  return report;
}

nlohmann::json EvalReport::to_json(bool with_examples) const {
  nlohmann::json j;
  j["n"] = n;
  j["exact_match"] = exact_match;
  j["bleu"] = bleu;
  if (parse_failures >= 0) {
    j["parse_failures"] = parse_failures;
    j["parse_failure_rate"] = 100.0 * static_cast<double>(parse_failures) / static_cast<double>(n);
  }
  if (!with_examples) return j;
  auto& recs = j["examples"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json e{{"match", r.match}, {"sentence_bleu_smoothed", r.sentence_bleu}};
    if (parse_failures >= 0) e["parses"] = r.parses;
    recs.push_back(std::move(e));
  }
  return j;
}

std::string EvalReport::table() const {
  std::ostringstream s;
  s << "examples     " << n << "\n";
  s << "exact match  " << fixed(exact_match, 2) << "\n";
  s << "BLEU         " << fixed(bleu, 2) << "\n";
  if (parse_failures >= 0) {
    s << "parse fail   " << parse_failures << " ("
      << fixed(100.0 * static_cast<double>(parse_failures) / static_cast<double>(n), 2) << "%)\n";
  }
  return s.str();
}

std::string ablation_table(std::span<const AblationRow> rows, std::string_view score_heading) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::ostringstream s;
  auto pad = [&](std::string_view text) {
    s << text << std::string(width - text.size() + 2, ' ');
  };
  pad("Model");
  s << score_heading << "  BLEU\n";
  for (const auto& r : rows) {
    pad(r.label);
    const std::string em = fixed(r.exact_match, 2);
    s << em << std::string(score_heading.size() > em.size() ? score_heading.size() - em.size() : 0, ' ') << "  "
      << fixed(r.bleu, 2) << "\n";
  }
  return s.str();
}

nlohmann::json ablation_json(std::span<const AblationRow> rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back({{"model", r.label}, {"exact_match", r.exact_match}, {"bleu", r.bleu}, {"best_epoch", r.best_epoch}});
  return j;
}

}  // namespace concode::metrics
