#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concode/grammar/derivation.hpp"
#include "concode/grammar/grammar.hpp"

namespace concode::corpus {

// A class member: a variable (name, type) or a method (name, return type).
struct Member {
  std::string name;
  std::string type;
  friend bool operator==(const Member&, const Member&) = default;
};

enum class SlotKind { kVariableType, kVariableName, kReturnType, kMethodName };

// One environment slot in [t : v : r : m] order.
struct Slot {
  SlotKind kind;
  std::size_t member;  // index into variables or methods
  std::string text;
};

struct Example {
  std::vector<std::string> nl;
  std::vector<Member> variables;
  std::vector<Member> methods;
  std::string code;
  grammar::Derivation target;
  std::vector<std::optional<int>> copy_labels;  // one per target step
};

// Slots for the given members: all variable types, then variable names, then
// return types, then method names.
std::vector<Slot> environment_slots(std::span<const Member> variables, std::span<const Member> methods);
std::vector<Slot> environment_slots(const Example& ex);

// For each identifier-terminal step, the first slot whose text equals the
// step's lexeme; nullopt elsewhere.
std::vector<std::optional<int>> copy_labels(const grammar::Derivation& d, const grammar::Grammar& g,
                                            std::span<const Slot> slots);

void label_copies(Example& ex, const grammar::Grammar& g);

// Combined input length used by the length filter: NL tokens plus one token
// per name and one per type.
std::size_t input_length(const Example& ex);

}  // namespace concode::corpus
