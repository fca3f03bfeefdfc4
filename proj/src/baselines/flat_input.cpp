#include "concode/baselines/flat_input.hpp"

#include <map>

namespace concode::baselines {

std::vector<std::string> flatten_input(const corpus::Example& ex) {
  std::vector<std::string> out = ex.nl;
  out.emplace_back(kSectionSeparator);
  for (const auto& v : ex.variables) {
    out.push_back(v.type);
    out.emplace_back(kTypeSeparator);
    out.push_back(v.name);
  }
  out.emplace_back(kSectionSeparator);
  for (const auto& m : ex.methods) {
    out.push_back(m.type);
    out.emplace_back(kTypeSeparator);
    out.push_back(m.name);
  }
  return out;
}

corpus::TokenTable build_source_table(std::span<const corpus::Example> corpus, int threshold) {
  std::map<std::string, int> counts;
  for (const auto& ex : corpus) {
    for (const auto& t : flatten_input(ex)) ++counts[t];
  }
  counts.erase(std::string(kSectionSeparator));
  counts.erase(std::string(kTypeSeparator));
  return source_table_from_entries(corpus::frequent_table(counts, threshold).entries());
}

corpus::TokenTable source_table_from_entries(const std::vector<std::string>& entries) {
  std::vector<std::string> tokens;
  const bool reserved = entries.size() >= 2 && entries[0] == kSectionSeparator && entries[1] == kTypeSeparator;
  if (!reserved) {
    tokens.emplace_back(kSectionSeparator);
    tokens.emplace_back(kTypeSeparator);
  }
  tokens.insert(tokens.end(), entries.begin(), entries.end());
  return corpus::TokenTable(tokens);
}

std::vector<int> source_indices(const corpus::TokenTable& table, const std::vector<std::string>& tokens) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(table.index(t));
  return out;
}

}  // namespace concode::baselines
