#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "unicor/checkpoint.hpp"
#include "unicor/corpus.hpp"
#include "unicor/io.hpp"
#include "unicor/vocab.hpp"

namespace unicor {

struct RetrievalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw RetrievalError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw RetrievalError("cosine: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct StoreRecord {
  std::string id;
  std::string problem_id;
  std::string language;
  std::vector<double> code_vec;
  std::vector<double> nl_vec;
};

// Unit-norm code and NL embeddings for every sample of a corpus, stamped
// with the fingerprint of the checkpoint that produced them.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::vector<StoreRecord> records, std::size_t dim, std::uint64_t fingerprint)
      : records_(std::move(records)), dim_(dim), fingerprint_(fingerprint) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (!by_id_.emplace(records_[i].id, i).second)
        throw RetrievalError("duplicate id in store: " + records_[i].id);
      by_language_[records_[i].language].push_back(i);
    }
  }

  const std::vector<StoreRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t dim() const { return dim_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  const StoreRecord& at(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw RetrievalError("unknown id: " + id);
    return records_[it->second];
  }
  bool contains(const std::string& id) const { return by_id_.count(id) > 0; }

  const std::vector<std::size_t>& language_indices(const std::string& lang) const {
    static const std::vector<std::size_t> empty;
    auto it = by_language_.find(lang);
    return it == by_language_.end() ? empty : it->second;
  }
  std::vector<std::string> languages() const {
    std::vector<std::string> out;
    for (const auto& [lang, _] : by_language_) out.push_back(lang);
    return out;
  }

 private:
  std::vector<StoreRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_language_;
  std::size_t dim_ = 0;
  std::uint64_t fingerprint_ = 0;
};

// Query-encoder embeddings for every sample: code at the 256-token
// budget, NL at 128.
inline EmbeddingStore embed_corpus(const Checkpoint& ckpt, const Corpus& corpus,
                                   std::size_t code_max_len = 256, std::size_t nl_max_len = 128) {
  std::vector<StoreRecord> records;
  records.reserve(corpus.size());
  for (const Sample& s : corpus.samples()) {
    StoreRecord r;
    r.id = s.id;
    r.problem_id = s.problem_id;
    r.language = s.language;
    try {
      TokenSeq seq = tokenize_code(s.code, s.language, /*strict=*/false);
      r.code_vec = forward(ckpt.state.query, encode_ids(seq, ckpt.vocab, code_max_len));
      r.nl_vec = forward(ckpt.state.query, encode_nl_text(s.nl, ckpt.vocab, nl_max_len));
    } catch (const EncoderError& e) {
      throw RetrievalError("sample " + s.id + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  return EmbeddingStore(std::move(records), ckpt.state.query.dim, checkpoint_fingerprint(ckpt));
}

enum class Strategy { NL2Code, NL2NL, Code2Code, Remix, Concat, Weight };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::NL2Code: return "nl2code";
    case Strategy::NL2NL: return "nl2nl";
    case Strategy::Code2Code: return "code2code";
    case Strategy::Remix: return "remix";
    case Strategy::Concat: return "concat";
    default: return "weight";
  }
}

inline std::optional<Strategy> strategy_from_name(std::string_view name) {
  if (name == "nl2code") return Strategy::NL2Code;
  if (name == "nl2nl") return Strategy::NL2NL;
  if (name == "code2code") return Strategy::Code2Code;
  if (name == "remix") return Strategy::Remix;
  if (name == "concat") return Strategy::Concat;
  if (name == "weight") return Strategy::Weight;
  return std::nullopt;
}

struct Scenario {
  std::string query_language;
  std::string target_language;
  Strategy strategy = Strategy::NL2Code;
  double alpha = 0.5;  // Weight fusion coefficient
};

struct RankedEntry {
  std::string id;
  double score;
};

// Scores descending, ties broken by ascending id; the query never ranks
// against itself.
using RankedList = std::vector<RankedEntry>;

namespace retdetail {

inline RankedList rank(std::vector<RankedEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return entries;
}

inline std::vector<std::size_t> candidate_pool(const EmbeddingStore& store, const Scenario& sc,
                                               const std::string& query_id) {
  std::vector<std::size_t> pool;
  for (std::size_t i : store.language_indices(sc.target_language))
    if (store.records()[i].id != query_id) pool.push_back(i);
  if (pool.empty()) throw RetrievalError("empty candidate pool for target " + sc.target_language);
  return pool;
}

}  // namespace retdetail

inline RankedList retrieve_single(Strategy kind, const std::string& query_id, const Scenario& sc,
                                  const EmbeddingStore& store) {
  if (kind != Strategy::NL2Code && kind != Strategy::NL2NL && kind != Strategy::Code2Code)
    throw RetrievalError("retrieve_single expects a single-modal strategy");
  const StoreRecord& q = store.at(query_id);
  if (q.language != sc.query_language)
    throw RetrievalError("query " + query_id + " is not in language " + sc.query_language);

  const std::vector<double>& qv = (kind == Strategy::Code2Code) ? q.code_vec : q.nl_vec;
  const bool target_nl = (kind == Strategy::NL2NL);

  std::vector<RankedEntry> entries;
  for (std::size_t i : retdetail::candidate_pool(store, sc, query_id)) {
    const StoreRecord& c = store.records()[i];
    entries.push_back({c.id, cosine(qv, target_nl ? c.nl_vec : c.code_vec)});
  }
  return retdetail::rank(std::move(entries));
}

// Input-level fusion: NL words, a [SEP] sentinel, then the code tokens,
// all within the code token budget and re-encoded by the query encoder.
// With no code content the sequence reduces to the NL words alone.
inline std::vector<double> remix_query_embedding(const Sample& sample, const Checkpoint& ckpt,
                                                 std::size_t code_max_len = 256) {
  std::vector<std::string> words = nl_words(sample.nl);
  TokenSeq code = tokenize_code(sample.code, sample.language, /*strict=*/false);

  IdSeq ids;
  ids.ids.assign(code_max_len, Vocab::kPad);
  auto push = [&ids, code_max_len](std::uint32_t id) {
    if (ids.real_count < code_max_len) ids.ids[ids.real_count++] = id;
  };
  for (const std::string& w : words) push(ckpt.vocab.lookup(normalize_nl_word(w)));

  bool has_code = false;
  for (const Token& t : code.tokens)
    if (is_content_kind(t.kind)) has_code = true;
  if (has_code) {
    push(Vocab::kSep);
    for (const Token& t : code.tokens)
      if (is_content_kind(t.kind)) push(ckpt.vocab.lookup(t.text));
  }
  return forward(ckpt.state.query, ids);
}

inline RankedList retrieve_remix(const std::string& query_id, const Scenario& sc,
                                 const EmbeddingStore& store, const Checkpoint& ckpt,
                                 const Corpus& corpus, std::size_t code_max_len = 256) {
  const Sample* sample = corpus.find(query_id);
  if (!sample) throw RetrievalError("query " + query_id + " not in corpus");
  if (sample->language != sc.query_language)
    throw RetrievalError("query " + query_id + " is not in language " + sc.query_language);
  std::vector<double> qv = remix_query_embedding(*sample, ckpt, code_max_len);

  std::vector<RankedEntry> entries;
  for (std::size_t i : retdetail::candidate_pool(store, sc, query_id)) {
    const StoreRecord& c = store.records()[i];
    entries.push_back({c.id, cosine(qv, c.code_vec)});
  }
  return retdetail::rank(std::move(entries));
}

// Representation-level fusion: [v_nl ; v_code] against self-concatenated
// candidate vectors [v_t ; v_t].
inline RankedList retrieve_concat(const std::string& query_id, const Scenario& sc,
                                  const EmbeddingStore& store) {
  const StoreRecord& q = store.at(query_id);
  if (q.language != sc.query_language)
    throw RetrievalError("query " + query_id + " is not in language " + sc.query_language);
  std::vector<double> qv(q.nl_vec);
  qv.insert(qv.end(), q.code_vec.begin(), q.code_vec.end());

  std::vector<RankedEntry> entries;
  for (std::size_t i : retdetail::candidate_pool(store, sc, query_id)) {
    const StoreRecord& c = store.records()[i];
    std::vector<double> cv(c.code_vec);
    cv.insert(cv.end(), c.code_vec.begin(), c.code_vec.end());
    entries.push_back({c.id, cosine(qv, cv)});
  }
  return retdetail::rank(std::move(entries));
}

// Score-level fusion: S = alpha * S_nl2code + (1 - alpha) * S_code2code.
inline RankedList retrieve_weight(const std::string& query_id, const Scenario& sc,
                                  const EmbeddingStore& store, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw RetrievalError("alpha must be in [0, 1]");
  const StoreRecord& q = store.at(query_id);
  if (q.language != sc.query_language)
    throw RetrievalError("query " + query_id + " is not in language " + sc.query_language);

  std::vector<RankedEntry> entries;
  for (std::size_t i : retdetail::candidate_pool(store, sc, query_id)) {
    const StoreRecord& c = store.records()[i];
    const double s = alpha * cosine(q.nl_vec, c.code_vec) + (1.0 - alpha) * cosine(q.code_vec, c.code_vec);
    entries.push_back({c.id, s});
  }
  return retdetail::rank(std::move(entries));
}

inline RankedList retrieve(const std::string& query_id, const Scenario& sc,
                           const EmbeddingStore& store, const Checkpoint* ckpt = nullptr,
                           const Corpus* corpus = nullptr) {
  switch (sc.strategy) {
    case Strategy::Remix:
      if (!ckpt || !corpus) throw RetrievalError("remix requires a checkpoint and corpus");
      return retrieve_remix(query_id, sc, store, *ckpt, *corpus);
    case Strategy::Concat:
      return retrieve_concat(query_id, sc, store);
    case Strategy::Weight:
      return retrieve_weight(query_id, sc, store, sc.alpha);
    default:
      return retrieve_single(sc.strategy, query_id, sc, store);
  }
}

// Store file layout: "UCRE", u32 version=1, u32 d, u32 count, u64
// checkpoint fingerprint, then per record: u16 id length + bytes, u16
// problem_id length + bytes, u8 language length + bytes, d f32 code
// vector, d f32 nl vector. Little-endian.
inline std::string serialize_store(const EmbeddingStore& store) {
  ByteWriter w;
  w.magic("UCRE");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u32(static_cast<std::uint32_t>(store.size()));
  w.u64(store.fingerprint());
  for (const StoreRecord& r : store.records()) {
    w.u16(static_cast<std::uint16_t>(r.id.size()));
    w.bytes(r.id);
    w.u16(static_cast<std::uint16_t>(r.problem_id.size()));
    w.bytes(r.problem_id);
    w.u8(static_cast<std::uint8_t>(r.language.size()));
    w.bytes(r.language);
    for (double x : r.code_vec) w.f32(static_cast<float>(x));
    for (double x : r.nl_vec) w.f32(static_cast<float>(x));
  }
  return w.data();
}

inline EmbeddingStore deserialize_store(std::string bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("UCRE");
  const std::uint32_t version = r.u32();
  if (version != 1) throw IoError("unsupported store version " + std::to_string(version));
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  const std::uint64_t fingerprint = r.u64();
  std::vector<StoreRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    StoreRecord rec;
    rec.id = r.bytes(r.u16());
    rec.problem_id = r.bytes(r.u16());
    rec.language = r.bytes(r.u8());
    rec.code_vec.resize(dim);
    for (double& x : rec.code_vec) x = static_cast<double>(r.f32());
    rec.nl_vec.resize(dim);
    for (double& x : rec.nl_vec) x = static_cast<double>(r.f32());
    records.push_back(std::move(rec));
  }
  if (!r.at_end()) throw IoError("trailing bytes in store");
  return EmbeddingStore(std::move(records), dim, fingerprint);
}

inline void save_store(const std::string& path, const EmbeddingStore& store) {
  write_file(path, serialize_store(store));
}

inline EmbeddingStore load_store(const std::string& path) {
  return deserialize_store(slurp_file(path));
}

// Human-inspectable CSV twin of the binary store.
inline void export_store_csv(const EmbeddingStore& store, const std::string& path) {
  std::string out = "id,problem_id,language";
  for (std::size_t j = 0; j < store.dim(); ++j) out += ",code_" + std::to_string(j);
  for (std::size_t j = 0; j < store.dim(); ++j) out += ",nl_" + std::to_string(j);
  out += '\n';
  for (const StoreRecord& r : store.records()) {
    out += r.id + ',' + r.problem_id + ',' + r.language;
    for (double x : r.code_vec) out += ',' + format_double(x);
    for (double x : r.nl_vec) out += ',' + format_double(x);
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace unicor
