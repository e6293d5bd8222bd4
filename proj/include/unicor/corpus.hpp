#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "unicor/io.hpp"
#include "unicor/lexer.hpp"
#include "unicor/rng.hpp"

namespace unicor {

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Sample {
  std::string id;
  std::string problem_id;   // functional-equivalence group
  std::string language;
  std::string code;
  std::string nl;
  std::optional<std::string> comment;
  std::string source;
};

// Immutable, indexed collection of samples. Indices are rebuilt from the
// sample vector on construction and always partition it.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Sample> samples) : samples_(std::move(samples)) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const Sample& s = samples_[i];
      if (!by_id_.emplace(s.id, i).second) throw CorpusError("duplicate sample id: " + s.id);
      by_problem_[s.problem_id].push_back(i);
      by_language_[s.language].push_back(i);
      languages_.insert(s.language);
    }
  }

  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const Sample* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &samples_[it->second];
  }

  const std::map<std::string, std::vector<std::size_t>>& by_problem() const { return by_problem_; }
  const std::map<std::string, std::vector<std::size_t>>& by_language() const { return by_language_; }
  const std::set<std::string>& languages() const { return languages_; }

  // Stable content hash over every field of every sample, in order.
  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a64("unicor-corpus");
    auto feed = [&h](std::string_view s) {
      h = fnv1a64(s, h);
      h = fnv1a64(std::string_view("\x1f", 1), h);
    };
    for (const Sample& s : samples_) {
      feed(s.id);
      feed(s.problem_id);
      feed(s.language);
      feed(s.code);
      feed(s.nl);
      feed(s.comment ? *s.comment : "\x00");
      feed(s.source);
    }
    return h;
  }

 private:
  std::vector<Sample> samples_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_problem_;
  std::map<std::string, std::vector<std::size_t>> by_language_;
  std::set<std::string> languages_;
};

namespace corpusdetail {

inline std::string trimmed(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && lexdetail::is_space(s[b])) ++b;
  while (e > b && lexdetail::is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline Sample parse_record(const nlohmann::json& j, const std::string& dataset, std::size_t line_no) {
  auto context = [&](const std::string& what) {
    return CorpusError("line " + std::to_string(line_no) + ": " + what);
  };
  auto required = [&](const char* key) -> std::string {
    if (!j.contains(key)) throw context(std::string("missing \"") + key + "\" field");
    if (!j.at(key).is_string()) throw context(std::string("field \"") + key + "\" must be a string");
    return j.at(key).get<std::string>();
  };

  Sample s;
  s.problem_id = required("problem_id");
  s.language = required("language");
  s.code = required("code");
  s.nl = required("nl");
  if (j.contains("id")) {
    if (!j.at("id").is_string()) throw context("field \"id\" must be a string");
    s.id = j.at("id").get<std::string>();
  } else {
    s.id = dataset + ":" + std::to_string(line_no);
  }
  if (j.contains("comment")) {
    if (!j.at("comment").is_string()) throw context("field \"comment\" must be a string");
    s.comment = j.at("comment").get<std::string>();
  }
  s.source = j.value("source", dataset);

  if (trimmed(s.code).empty()) throw context("empty code");
  if (trimmed(s.nl).empty()) throw context("empty nl");
  return s;
}

}  // namespace corpusdetail

// Reads one JSONL record per line. Any malformed line aborts the whole
// ingest with its line number; a partially loaded corpus is never returned.
inline Corpus ingest_jsonl(const std::string& path, const std::string& dataset_name) {
  std::string data = slurp_file(path);
  std::vector<Sample> samples;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= data.size()) {
    std::size_t end = data.find('\n', begin);
    if (end == std::string::npos) end = data.size();
    std::string_view line(data.data() + begin, end - begin);
    ++line_no;
    begin = end + 1;
    if (corpusdetail::trimmed(line).empty()) {
      if (begin > data.size()) break;
      continue;
    }
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw CorpusError("line " + std::to_string(line_no) + ": invalid JSON");
    if (!j.is_object())
      throw CorpusError("line " + std::to_string(line_no) + ": record must be a JSON object");
    samples.push_back(corpusdetail::parse_record(j, dataset_name, line_no));
    if (begin > data.size()) break;
  }
  return Corpus(std::move(samples));
}

inline void write_jsonl(const Corpus& corpus, const std::string& path) {
  std::string out;
  for (const Sample& s : corpus.samples()) {
    nlohmann::json j{{"id", s.id},     {"problem_id", s.problem_id}, {"language", s.language},
                     {"code", s.code}, {"nl", s.nl},                 {"source", s.source}};
    if (s.comment) j["comment"] = *s.comment;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

struct FilterResult {
  Corpus corpus;
  std::vector<std::string> warnings;  // "WARN <id> <reason>" lines
};

// Lexer-level stand-in for parser-based screening: a sample survives iff
// its token stream is nonempty, has no unterminated string/comment, and
// all (), [], {} pairs balance. Samples in languages without a lexer
// table are kept and reported, never silently dropped.
inline FilterResult filter_syntactic(const Corpus& corpus) {
  FilterResult result;
  std::vector<Sample> kept;
  for (const Sample& s : corpus.samples()) {
    if (!language_supported(s.language)) {
      result.warnings.push_back("WARN " + s.id + " unsupported language '" + s.language +
                                "', retained without check");
      kept.push_back(s);
      continue;
    }
    try {
      TokenSeq seq = tokenize_code(s.code, s.language, /*strict=*/true);
      if (!seq.tokens.empty() && brackets_balanced(seq)) kept.push_back(s);
    } catch (const LexError&) {
      // unterminated string or comment: dropped
    }
  }
  result.corpus = Corpus(std::move(kept));
  return result;
}

// At most `cap` samples per (problem_id, language) group; oversized
// groups keep a seeded uniform subset. Surviving samples stay in input order.
inline Corpus cap_per_problem(const Corpus& corpus, std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw CorpusError("cap must be >= 1");
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Sample& s = corpus.samples()[i];
    groups[{s.problem_id, s.language}].push_back(i);
  }
  std::vector<bool> keep(corpus.size(), true);
  Rng master(seed);
  for (const auto& [key, indices] : groups) {
    if (indices.size() <= cap) continue;
    // per-group stream keyed by (problem_id, language): stable under
    // reordering of other groups
    Rng rng = master.fork(key.first + "\x1f" + key.second);
    std::vector<std::size_t> chosen = rng.sample_indices(indices.size(), cap);
    std::vector<bool> chosen_mask(indices.size(), false);
    for (std::size_t c : chosen) chosen_mask[c] = true;
    for (std::size_t k = 0; k < indices.size(); ++k)
      if (!chosen_mask[k]) keep[indices[k]] = false;
  }
  std::vector<Sample> kept;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (keep[i]) kept.push_back(corpus.samples()[i]);
  return Corpus(std::move(kept));
}

// Normalized form used for exact-duplicate detection: comments stripped,
// whitespace runs collapsed to single separators.
inline std::string normalize_code(const std::string& code, const std::string& language) {
  TokenSeq seq = tokenize_code(code, language, /*strict=*/false);
  std::string out;
  for (const Token& t : seq.tokens) {
    if (!is_content_kind(t.kind)) continue;
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

// First occurrence wins; idempotent by construction.
inline Corpus dedup(const Corpus& corpus) {
  std::set<std::string> seen;
  std::vector<Sample> kept;
  for (const Sample& s : corpus.samples()) {
    if (seen.insert(normalize_code(s.code, s.language)).second) kept.push_back(s);
  }
  return Corpus(std::move(kept));
}

// Problem-disjoint train/test split: no problem_id ever appears on both
// sides, which is what keeps evaluation free of train/test leakage.
inline std::pair<Corpus, Corpus> split_by_problem(const Corpus& corpus, double test_fraction,
                                                  std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw CorpusError("test_fraction must be in (0, 1)");

  std::vector<std::string> problems;  // first-occurrence order
  std::set<std::string> seen;
  for (const Sample& s : corpus.samples())
    if (seen.insert(s.problem_id).second) problems.push_back(s.problem_id);
  if (problems.size() < 2) throw CorpusError("need at least 2 problems to split");

  Rng rng = Rng(seed).fork("split_by_problem");
  rng.shuffle(problems);
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(problems.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, problems.size() - 1);

  std::set<std::string> test_problems(problems.begin(), problems.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<Sample> train, test;
  for (const Sample& s : corpus.samples())
    (test_problems.count(s.problem_id) ? test : train).push_back(s);
  return {Corpus(std::move(train)), Corpus(std::move(test))};
}

}  // namespace unicor
