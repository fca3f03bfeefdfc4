#include "concode/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <string_view>

#include "concode/corpus/text.hpp"

namespace concode::corpus {

namespace {

constexpr std::array kAdjectives{"red",   "fast",  "old",   "main",  "total", "next",  "last",  "local",
                                 "raw",   "dark",  "small", "large", "cold",  "warm",  "free",  "open",
                                 "final", "inner", "outer", "prime", "quick", "spare", "base",  "extra"};
constexpr std::array kNouns{"Count",  "Items",  "Value", "Width",  "Height", "Name",   "Price", "Score",
                            "Length", "Index",  "Level", "Weight", "Speed",  "Amount", "Size",  "Depth",
                            "Flag",   "Buffer", "Keys",  "Labels", "Rate",   "Offset", "Limit", "Total"};
constexpr std::array kVerbs{"compute", "load", "read", "build", "find", "update", "check", "refresh"};
constexpr std::array kTypes{"int", "long", "double", "boolean", "String", "int[]", "double[]", "List<String>",
                            "Vector"};

struct Template {
  std::string_view name;
  bool targets_method;
  bool single_use;  // the member name occurs once in the code
  std::vector<std::string_view> types;  // empty: any
  std::string_view code;
  std::vector<std::string_view> docs;
};

// {T} type, {N} member name, {C} capitalized member name, {W} member words.
const std::vector<Template>& templates() {
  static const std::vector<Template> kTemplates{
      {"getter", false, true, {}, "public {T} get{C}() { return {N}; }", {"Returns the {W}.", "Gets the {W}."}},
      {"setter", false, true, {}, "public void set{C}({T} value) { this.{N} = value; }",
       {"Sets the {W}.", "Updates the {W} to the given value."}},
      {"increment", false, true, {"int", "long", "double"}, "public void increment{C}() { {N}++; }",
       {"Increments the {W}.", "Increases the {W} by one."}},
      {"add", false, true, {"int", "long", "double"}, "public void add{C}({T} amount) { {N} += amount; }",
       {"Adds the given amount to the {W}."}},
      {"reset", false, true, {"int", "long"}, "public void reset{C}() { {N} = 0; }", {"Resets the {W} to zero."}},
      {"toggle", false, false, {"boolean"}, "public void toggle{C}() { {N} = !{N}; }",
       {"Toggles the {W}.", "Flips the {W} flag."}},
      {"contains", false, true, {"List<String>"}, "public boolean has{C}(String item) { return {N}.contains(item); }",
       {"Checks whether the {W} contain the given item."}},
      {"size", false, true, {"List<String>", "Vector"}, "public int size{C}() { return {N}.size(); }",
       {"Returns the number of {W}."}},
      {"length", false, true, {"int[]", "double[]"}, "public int length{C}() { return {N}.length; }",
       {"Returns the length of the {W}."}},
      {"sum", false, false, {"int[]"},
       "public int sum{C}() { int total = 0; for (int i = 0; i < {N}.length; i++) { total += {N}[i]; } return total; }",
       {"Computes the sum of the {W}."}},
      {"delegate", true, true, {"int", "long", "double", "boolean", "String"}, "public {T} fetch{C}() { return {N}(); }",
       {"Returns the result of {W}.", "Delegates to {W}."}},
      {"call", true, true, {"void"}, "public void run{C}() { {N}(); }", {"Calls {W}.", "Runs {W} once."}},
  };
  return kTemplates;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string words_of(const std::string& name) {
  std::string out;
  for (const auto& piece : camel_split(name)) out += (out.empty() ? "" : " ") + piece;
  return out;
}

class Generator {
 public:
  Generator(std::uint64_t seed, const SynthOptions& options) : rng_(seed), options_(options) {
    for (const auto* adj : kAdjectives) {
      for (const auto* noun : kNouns) combos_.push_back(std::string(adj) + noun);
    }
    std::shuffle(combos_.begin(), combos_.end(), rng_);
  }

  Record next() {
    const auto& all = templates();
    const Template* t = &all[0];
    if (!coin(options_.getter_fraction)) {
      std::vector<const Template*> allowed;
      for (std::size_t i = 1; i < all.size(); ++i) {
        if (all[i].single_use || !options_.unique_names) allowed.push_back(&all[i]);
      }
      t = allowed[uniform(allowed.size())];
    }

    const int nv = static_cast<int>(options_.min_variables + uniform(options_.max_variables - options_.min_variables + 1));
    const int nm = static_cast<int>(options_.min_methods + uniform(options_.max_methods - options_.min_methods + 1));
    std::vector<Member> vars(static_cast<std::size_t>(std::max(nv, t->targets_method ? 0 : 1)));
    std::vector<Member> methods(static_cast<std::size_t>(std::max(nm, t->targets_method ? 1 : 0)));

    std::vector<std::string> used;
    for (auto& v : vars) v = {variable_name(used), std::string(kTypes[uniform(kTypes.size())])};
    for (auto& m : methods) {
      const std::size_t r = uniform(kTypes.size() + 1);
      m = {method_name(used), r == kTypes.size() ? "void" : std::string(kTypes[r])};
    }

    auto& pool = t->targets_method ? methods : vars;
    Member& target = pool[uniform(pool.size())];
    if (!t->types.empty()) target.type = std::string(t->types[uniform(t->types.size())]);

    Record r;
    r.code = std::string(t->code);
    r.code = replace_all(r.code, "{T}", target.type);
    r.code = replace_all(r.code, "{C}", capitalize(target.name));
    r.code = replace_all(r.code, "{N}", target.name);
    r.nl = replace_all(std::string(t->docs[uniform(t->docs.size())]), "{W}", words_of(target.name));
    for (const auto& v : vars) {
      r.var_names.push_back(v.name);
      r.var_types.push_back(v.type);
    }
    for (const auto& m : methods) {
      r.method_names.push_back(m.name);
      r.method_returns.push_back(m.type);
    }
    return r;
  }

 private:
  std::size_t uniform(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  std::string fresh(std::vector<std::string>& used, auto make) {
    for (;;) {
      std::string name = make();
      if (std::find(used.begin(), used.end(), name) == used.end()) {
        used.push_back(name);
        return name;
      }
    }
  }

  std::string unique_combo() {
    if (next_combo_ == combos_.size()) {
      // Exhausted: start another round with a distinguishing prefix.
      ++round_;
      next_combo_ = 0;
    }
    const std::string& base = combos_[next_combo_++];
    return round_ == 0 ? base : std::string(kAdjectives[round_ % kAdjectives.size()]) + capitalize(base);
  }

  std::string variable_name(std::vector<std::string>& used) {
    if (options_.unique_names) return fresh(used, [&] { return unique_combo(); });
    // A small fixed pool so names recur across records.
    return fresh(used, [&] { return combos_[uniform(32)]; });
  }

  std::string method_name(std::vector<std::string>& used) {
    if (options_.unique_names) {
      return fresh(used, [&] { return std::string(kVerbs[uniform(kVerbs.size())]) + capitalize(unique_combo()); });
    }
    return fresh(used, [&] {
      return std::string(kVerbs[uniform(kVerbs.size())]) + std::string(kNouns[uniform(8)]);
    });
  }

  std::mt19937_64 rng_;
  SynthOptions options_;
  std::vector<std::string> combos_;
  std::size_t next_combo_ = 0;
  std::size_t round_ = 0;
};

}  // namespace

std::vector<Record> generate_synthetic_records(std::size_t n, std::uint64_t seed, const SynthOptions& options) {
  Generator gen(seed, options);
  std::vector<Record> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen.next());
  return out;
}

std::vector<Example> generate_synthetic(std::size_t n, std::uint64_t seed, const grammar::Grammar& g,
                                        const SynthOptions& options) {
  const auto records = generate_synthetic_records(n, seed, options);
  std::vector<Example> out;
  out.reserve(n);
  for (const auto& r : records) out.push_back(make_example(r, g));
  return out;
}

}  // namespace concode::corpus
