#include "concode/corpus/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "concode/corpus/canonicalize.hpp"
#include "concode/corpus/text.hpp"
#include "concode/grammar/lexer.hpp"
#include "concode/grammar/parser.hpp"

namespace concode::corpus {

namespace {

using Reason = RecordRejected::Reason;

std::vector<std::string> string_array(const nlohmann::json& j, const char* key, int line) {
  if (!j.contains(key)) return {};
  const auto& a = j.at(key);
  if (!a.is_array()) throw DatasetError(std::string("field '") + key + "' must be an array of strings", line);
  std::vector<std::string> out;
  for (const auto& v : a) {
    if (!v.is_string()) throw DatasetError(std::string("field '") + key + "' must be an array of strings", line);
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<Member> zip_members(const std::vector<std::string>& names, const std::vector<std::string>& types) {
  std::vector<Member> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], types[i]});
  return out;
}

std::vector<std::string> code_tokens(const Example& ex) { return grammar::token_texts(grammar::tokenize_code(ex.code)); }

// Tokens of the method body between the outer braces, and the parameter list.
struct Shape {
  std::vector<std::string> params;
  std::vector<std::string> body;
};

std::optional<Shape> method_shape(const std::vector<std::string>& tokens) {
  const auto name = std::find(tokens.begin(), tokens.end(), kCanonicalMethodName);
  if (name == tokens.end() || name + 1 == tokens.end() || *(name + 1) != "(") return std::nullopt;
  const auto close = std::find(name + 1, tokens.end(), ")");
  if (close == tokens.end() || close + 1 == tokens.end() || *(close + 1) != "{" || tokens.back() != "}") {
    return std::nullopt;
  }
  return Shape{{name + 2, close}, {close + 2, tokens.end() - 1}};
}

bool is_variable(const Example& ex, const std::string& name) {
  return std::any_of(ex.variables.begin(), ex.variables.end(), [&](const Member& m) { return m.name == name; });
}

// Strips a leading `this .` from a body.
std::vector<std::string> drop_this(std::vector<std::string> body) {
  if (body.size() >= 2 && body[0] == "this" && body[1] == ".") body.erase(body.begin(), body.begin() + 2);
  return body;
}

}  // namespace

Record record_from_json(const nlohmann::json& j, int line) {
  if (!j.is_object()) throw DatasetError("record must be a JSON object", line);
  Record r;
  for (const char* key : {"nl", "code"}) {
    if (!j.contains(key) || !j.at(key).is_string()) {
      throw DatasetError(std::string("missing string field '") + key + "'", line);
    }
  }
  r.nl = j.at("nl").get<std::string>();
  r.code = j.at("code").get<std::string>();
  r.var_names = string_array(j, "var_names", line);
  r.var_types = string_array(j, "var_types", line);
  r.method_names = string_array(j, "method_names", line);
  r.method_returns = string_array(j, "method_returns", line);
  if (r.var_names.size() != r.var_types.size()) throw DatasetError("var_names and var_types differ in length", line);
  if (r.method_names.size() != r.method_returns.size()) {
    throw DatasetError("method_names and method_returns differ in length", line);
  }
  return r;
}

nlohmann::json record_to_json(const Record& r) {
  return {{"nl", r.nl},
          {"code", r.code},
          {"var_names", r.var_names},
          {"var_types", r.var_types},
          {"method_names", r.method_names},
          {"method_returns", r.method_returns}};
}

Example make_example(const Record& r, const grammar::Grammar& g, const LoadOptions& options) {
  Example ex;
  ex.nl = strip_doc(r.nl);
  if (ex.nl.empty()) throw RecordRejected(Reason::kEmptyNl, "documentation has no words");
  ex.variables = zip_members(r.var_names, r.var_types);
  ex.methods = zip_members(r.method_names, r.method_returns);
  if (input_length(ex) > options.max_input_tokens) {
    throw RecordRejected(Reason::kInputTooLong, "input has " + std::to_string(input_length(ex)) + " tokens");
  }
  const grammar::ParseOptions parse_options{options.max_code_tokens};
  try {
    ex.code = canonicalize(r.code, g, parse_options);
    ex.target = grammar::parse(grammar::tokenize_code(ex.code), g, parse_options);
  } catch (const grammar::ParseError& e) {
    if (e.reason() == grammar::ParseError::Reason::kTooLong) throw RecordRejected(Reason::kCodeTooLong, e.what());
    throw RecordRejected(Reason::kUnparseable, e.what());
  } catch (const grammar::LexError& e) {
    throw RecordRejected(Reason::kUnparseable, e.what());
  }
  label_copies(ex, g);
  return ex;
}

std::vector<Example> load_examples(std::span<const Record> records, const grammar::Grammar& g,
                                   const LoadOptions& options, LoadStats* stats) {
  LoadStats local;
  std::vector<Example> out;
  for (const auto& r : records) {
    ++local.records;
    try {
      out.push_back(make_example(r, g, options));
      ++local.loaded;
    } catch (const RecordRejected& e) {
      switch (e.reason()) {
        case Reason::kUnparseable: ++local.skipped_unparseable; break;
        case Reason::kEmptyNl: ++local.skipped_empty_nl; break;
        case Reason::kInputTooLong: ++local.filtered_input_length; break;
        case Reason::kCodeTooLong: ++local.filtered_code_length; break;
      }
    }
  }
  if (stats) *stats = local;
  return out;
}

std::vector<Record> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read " + path, 0);
  std::vector<Record> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw DatasetError("malformed JSON", line_no);
    }
    records.push_back(record_from_json(j, line_no));
  }
  return records;
}

std::vector<Example> load_dataset(const std::string& path, const grammar::Grammar& g, const LoadOptions& options,
                                  LoadStats* stats) {
  const auto records = read_records(path);
  return load_examples(records, g, options, stats);
}

void write_records(const std::string& path, std::span<const Record> records) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path, 0);
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

bool is_getter(const Example& ex) {
  const auto shape = method_shape(code_tokens(ex));
  if (!shape || !shape->params.empty()) return false;
  auto body = shape->body;
  if (body.size() < 3 || body.front() != "return" || body.back() != ";") return false;
  body = drop_this({body.begin() + 1, body.end() - 1});
  return body.size() == 1 && is_variable(ex, body[0]);
}

bool is_setter(const Example& ex) {
  const auto shape = method_shape(code_tokens(ex));
  if (!shape || shape->params.empty() || shape->params.back() != "arg0") return false;
  if (std::find(shape->params.begin(), shape->params.end(), ",") != shape->params.end()) return false;
  const auto body = drop_this(shape->body);
  return body.size() == 4 && is_variable(ex, body[0]) && body[1] == "=" && body[2] == "arg0" && body[3] == ";";
}

nlohmann::json CorpusStats::to_json() const {
  return {{"examples", examples},
          {"avg_nl_tokens", avg_nl_tokens},
          {"avg_code_tokens", avg_code_tokens},
          {"avg_rules", avg_rules},
          {"avg_variables", avg_variables},
          {"avg_methods", avg_methods},
          {"pct_using_variables", pct_using_variables},
          {"pct_using_methods", pct_using_methods},
          {"pct_getters", pct_getters},
          {"pct_setters", pct_setters}};
}

CorpusStats corpus_stats(std::span<const Example> corpus) {
  CorpusStats s;
  s.examples = corpus.size();
  if (corpus.empty()) return s;
  for (const auto& ex : corpus) {
    const auto tokens = code_tokens(ex);
    s.avg_nl_tokens += static_cast<double>(ex.nl.size());
    s.avg_code_tokens += static_cast<double>(tokens.size());
    s.avg_rules += static_cast<double>(ex.target.size());
    s.avg_variables += static_cast<double>(ex.variables.size());
    s.avg_methods += static_cast<double>(ex.methods.size());
    auto uses = [&](const std::vector<Member>& members) {
      return std::any_of(members.begin(), members.end(), [&](const Member& m) {
        return std::find(tokens.begin(), tokens.end(), m.name) != tokens.end();
      });
    };
    s.pct_using_variables += uses(ex.variables);
    s.pct_using_methods += uses(ex.methods);
    s.pct_getters += is_getter(ex);
    s.pct_setters += is_setter(ex);
  }
  const double n = static_cast<double>(corpus.size());
  for (double* v : {&s.avg_nl_tokens, &s.avg_code_tokens, &s.avg_rules, &s.avg_variables, &s.avg_methods}) *v /= n;
  for (double* v : {&s.pct_using_variables, &s.pct_using_methods, &s.pct_getters, &s.pct_setters}) *v *= 100.0 / n;
  return s;
}

}  // namespace concode::corpus
