#include "concode/baselines/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "concode/grammar/derivation.hpp"
#include "concode/grammar/lexer.hpp"

namespace concode::baselines {

namespace {

std::vector<std::vector<std::string>> nl_documents(std::span<const corpus::Example> examples) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(examples.size());
  for (const auto& ex : examples) docs.push_back(ex.nl);
  return docs;
}

double dot(const TfIdfIndex::SparseVector& a, const TfIdfIndex::SparseVector& b) {
  double s = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

}  // namespace

TfIdfIndex::TfIdfIndex(std::span<const std::vector<std::string>> documents) {
  if (documents.empty()) throw std::invalid_argument("cannot index an empty training corpus");
  std::vector<int> df;
  for (const auto& doc : documents) {
    std::vector<int> seen;
    for (const auto& t : doc) {
      const auto [it, added] = term_ids_.emplace(t, static_cast<int>(df.size()));
      if (added) df.push_back(0);
      seen.push_back(it->second);
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (int id : seen) ++df[static_cast<std::size_t>(id)];
  }
  const double n = static_cast<double>(documents.size());
  idf_.reserve(df.size());
  for (int d : df) idf_.push_back(std::log(n / d));
  documents_.reserve(documents.size());
  for (const auto& doc : documents) documents_.push_back(vectorize(doc));
}

TfIdfIndex::SparseVector TfIdfIndex::vectorize(const std::vector<std::string>& tokens) const {
  std::map<int, double> tf;
  for (const auto& t : tokens) {
    const auto it = term_ids_.find(t);
    if (it != term_ids_.end()) tf[it->second] += 1.0;
  }
  SparseVector v;
  double norm = 0;
  for (const auto& [id, count] : tf) {
    const double w = count * idf_[static_cast<std::size_t>(id)];
    if (w == 0) continue;
    v.emplace_back(id, w);
    norm += w * w;
  }
  norm = std::sqrt(norm);
  for (auto& [id, w] : v) w /= norm;
  return v;
}

double TfIdfIndex::cosine(const std::vector<std::string>& query, std::size_t document) const {
  return dot(vectorize(query), documents_.at(document));
}

std::vector<double> TfIdfIndex::similarities(const std::vector<std::string>& query) const {
  const auto q = vectorize(query);
  std::vector<double> out;
  out.reserve(documents_.size());
  for (const auto& d : documents_) out.push_back(dot(q, d));
  return out;
}

double TfIdfIndex::idf(const std::string& term) const {
  const auto it = term_ids_.find(term);
  return it == term_ids_.end() ? 0.0 : idf_[static_cast<std::size_t>(it->second)];
}

std::vector<std::string> substitute_members(const std::vector<std::string>& code, const corpus::Example& source,
                                            const corpus::Example& target, std::mt19937_64& rng) {
  // Members are looked up by name; a name followed by "(" prefers a method.
  auto find = [](const std::vector<corpus::Member>& members, const std::string& name) -> const corpus::Member* {
    for (const auto& m : members) {
      if (m.name == name) return &m;
    }
    return nullptr;
  };
  std::map<std::pair<bool, std::string>, std::string> chosen;
  auto replacement = [&](bool method, const corpus::Member& m) {
    const auto key = std::make_pair(method, m.name);
    if (const auto it = chosen.find(key); it != chosen.end()) return it->second;
    std::vector<const corpus::Member*> fits;
    for (const auto& c : method ? target.methods : target.variables) {
      if (c.type == m.type) fits.push_back(&c);
    }
    std::string out = m.name;
    if (!fits.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, fits.size() - 1);
      out = fits[pick(rng)]->name;
    }
    chosen.emplace(key, out);
    return out;
  };

  std::vector<std::string> out = code;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (grammar::classify_token(code[i]) != grammar::TokenKind::kIdentifier) continue;
    const bool call = i + 1 < code.size() && code[i + 1] == "(";
    const corpus::Member* var = find(source.variables, code[i]);
    const corpus::Member* method = find(source.methods, code[i]);
    if (method && (call || !var)) {
      out[i] = replacement(true, *method);
    } else if (var) {
      out[i] = replacement(false, *var);
    }
  }
  return out;
}

RetrievalBaseline::RetrievalBaseline(std::span<const corpus::Example> train, const grammar::Grammar& g)
    : train_(train), g_(g), index_(nl_documents(train)) {}

std::size_t RetrievalBaseline::retrieve(const corpus::Example& query, std::mt19937_64& rng) const {
  const auto sims = index_.similarities(query.nl);
  const double best = *std::max_element(sims.begin(), sims.end());
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i] == best) tied.push_back(i);
  }
  if (tied.size() == 1) return tied.front();
  std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
  return tied[pick(rng)];
}

std::vector<std::string> RetrievalBaseline::predict(const corpus::Example& query, std::mt19937_64& rng) const {
  const auto& hit = train_[retrieve(query, rng)];
  return substitute_members(grammar::realize(hit.target, g_), hit, query, rng);
}

std::vector<inference::Prediction> RetrievalBaseline::predict_corpus(std::span<const corpus::Example> queries,
                                                                     std::uint64_t seed) const {
  std::vector<inference::Prediction> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    inference::Prediction p;
    p.tokens = predict(queries[i], rng);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace concode::baselines
