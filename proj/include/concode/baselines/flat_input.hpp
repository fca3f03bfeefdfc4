#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/corpus/vocabulary.hpp"

namespace concode::baselines {

// Reserved rows 2 and 3 of every source table.
inline constexpr std::string_view kSectionSeparator = "<sep>";
inline constexpr std::string_view kTypeSeparator = "<tsep>";

// NL <sep> (type <tsep> name)* <sep> (return type <tsep> name)*
std::vector<std::string> flatten_input(const corpus::Example& ex);

// Separators first, then flattened-input tokens seen at least `threshold`
// times.
corpus::TokenTable build_source_table(std::span<const corpus::Example> corpus, int threshold);
corpus::TokenTable source_table_from_entries(const std::vector<std::string>& entries);

std::vector<int> source_indices(const corpus::TokenTable& table, const std::vector<std::string>& tokens);

}  // namespace concode::baselines
