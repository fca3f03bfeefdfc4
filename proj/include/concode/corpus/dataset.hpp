#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "concode/corpus/example.hpp"
#include "concode/grammar/grammar.hpp"
#include "json.hpp"

namespace concode::corpus {

// One JSONL record as stored on disk.
struct Record {
  std::string nl;
  std::string code;
  std::vector<std::string> var_names;
  std::vector<std::string> var_types;
  std::vector<std::string> method_names;
  std::vector<std::string> method_returns;
  friend bool operator==(const Record&, const Record&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct LoadOptions {
  std::size_t max_input_tokens = 200;
  std::size_t max_code_tokens = 150;
};

struct LoadStats {
  std::size_t records = 0;
  std::size_t loaded = 0;
  std::size_t skipped_unparseable = 0;
  std::size_t skipped_empty_nl = 0;
  std::size_t filtered_input_length = 0;
  std::size_t filtered_code_length = 0;
};

Record record_from_json(const nlohmann::json& j, int line = 0);
nlohmann::json record_to_json(const Record& r);

// Why a record did not become an example.
class RecordRejected : public std::runtime_error {
 public:
  enum class Reason { kUnparseable, kEmptyNl, kInputTooLong, kCodeTooLong };
  RecordRejected(Reason reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

// Strips the documentation, canonicalizes and parses the code, and labels
// copies. Throws RecordRejected.
Example make_example(const Record& r, const grammar::Grammar& g, const LoadOptions& options = {});

// Malformed JSON or schema violations throw DatasetError with the line
// number; rejected records are counted in `stats` and skipped.
std::vector<Example> load_examples(std::span<const Record> records, const grammar::Grammar& g,
                                   const LoadOptions& options = {}, LoadStats* stats = nullptr);
std::vector<Record> read_records(const std::string& path);
std::vector<Example> load_dataset(const std::string& path, const grammar::Grammar& g,
                                  const LoadOptions& options = {}, LoadStats* stats = nullptr);
void write_records(const std::string& path, std::span<const Record> records);

// Corpus-level statistics.
struct CorpusStats {
  std::size_t examples = 0;
  double avg_nl_tokens = 0;
  double avg_code_tokens = 0;
  double avg_rules = 0;
  double avg_variables = 0;
  double avg_methods = 0;
  double pct_using_variables = 0;
  double pct_using_methods = 0;
  double pct_getters = 0;
  double pct_setters = 0;
  nlohmann::json to_json() const;
};

// `return x;` or `return this.x;` with no parameters, x a member variable.
bool is_getter(const Example& ex);
// A single assignment of a parameter to a member variable.
bool is_setter(const Example& ex);
CorpusStats corpus_stats(std::span<const Example> corpus);

}  // namespace concode::corpus
