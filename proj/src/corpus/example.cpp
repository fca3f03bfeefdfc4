#include "concode/corpus/example.hpp"

namespace concode::corpus {

std::vector<Slot> environment_slots(std::span<const Member> variables, std::span<const Member> methods) {
  std::vector<Slot> slots;
  slots.reserve(2 * (variables.size() + methods.size()));
  for (std::size_t i = 0; i < variables.size(); ++i) slots.push_back({SlotKind::kVariableType, i, variables[i].type});
  for (std::size_t i = 0; i < variables.size(); ++i) slots.push_back({SlotKind::kVariableName, i, variables[i].name});
  for (std::size_t i = 0; i < methods.size(); ++i) slots.push_back({SlotKind::kReturnType, i, methods[i].type});
  for (std::size_t i = 0; i < methods.size(); ++i) slots.push_back({SlotKind::kMethodName, i, methods[i].name});
  return slots;
}

std::vector<Slot> environment_slots(const Example& ex) { return environment_slots(ex.variables, ex.methods); }

std::vector<std::optional<int>> copy_labels(const grammar::Derivation& d, const grammar::Grammar& g,
                                            std::span<const Slot> slots) {
  std::vector<std::optional<int>> labels(d.size());
  for (std::size_t t = 0; t < d.size(); ++t) {
    if (g.rule(d[t].rule).kind != grammar::RuleKind::kIdentifierTerminal) continue;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      if (slots[j].text == d[t].lexeme) {
        labels[t] = static_cast<int>(j);
        break;
      }
    }
  }
  return labels;
}

void label_copies(Example& ex, const grammar::Grammar& g) {
  ex.copy_labels = copy_labels(ex.target, g, environment_slots(ex));
}

std::size_t input_length(const Example& ex) {
  return ex.nl.size() + 2 * ex.variables.size() + 2 * ex.methods.size();
}

}  // namespace concode::corpus
