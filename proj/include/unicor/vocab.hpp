#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "unicor/augment.hpp"
#include "unicor/corpus.hpp"
#include "unicor/lexer.hpp"

namespace unicor {

// Token table shared by the code and NL sides. Ids 0..3 are sentinels;
// corpus tokens fill the remaining slots most-frequent-first.
struct Vocab {
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;
  static constexpr std::uint32_t kMask = 2;
  static constexpr std::uint32_t kSep = 3;
  static constexpr std::uint32_t kReserved = 4;

  std::vector<std::string> id_to_token{"[PAD]", "[UNK]", "[MASK]", "[SEP]"};
  std::unordered_map<std::string, std::uint32_t> token_to_id{
      {"[PAD]", kPad}, {"[UNK]", kUnk}, {"[MASK]", kMask}, {"[SEP]", kSep}};

  std::size_t size() const { return id_to_token.size(); }

  std::uint32_t lookup(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnk : it->second;
  }

  std::uint32_t add(const std::string& token) {
    auto [it, inserted] = token_to_id.emplace(token, static_cast<std::uint32_t>(id_to_token.size()));
    if (inserted) id_to_token.push_back(token);
    return it->second;
  }
};

inline std::string lower_ascii(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

// NL words are matched case-insensitively; sentinels keep their exact form.
inline std::string normalize_nl_word(const std::string& w) {
  if (w == kMaskToken || w == kSepToken) return w;
  return lower_ascii(w);
}

// Frequency-ranked vocabulary over code content tokens and lowercased NL
// words (native comments included, since they can stand in as
// descriptions). Ties break lexicographically.
inline Vocab build_vocab(const Corpus& corpus, std::size_t max_vocab) {
  if (max_vocab < Vocab::kReserved) throw CorpusError("max_vocab must be >= 4");
  if (corpus.empty()) throw CorpusError("cannot build a vocabulary from an empty corpus");

  std::unordered_map<std::string, std::uint64_t> freq;
  for (const Sample& s : corpus.samples()) {
    TokenSeq seq = tokenize_code(s.code, s.language, /*strict=*/false);
    for (const Token& t : seq.tokens)
      if (is_content_kind(t.kind)) ++freq[t.text];
    for (const std::string& w : nl_words(s.nl)) ++freq[normalize_nl_word(w)];
    if (s.comment)
      for (const std::string& w : nl_words(*s.comment)) ++freq[normalize_nl_word(w)];
  }

  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab vocab;
  const std::size_t budget = max_vocab - Vocab::kReserved;
  for (std::size_t i = 0; i < ranked.size() && i < budget; ++i) vocab.add(ranked[i].first);
  return vocab;
}

struct IdSeq {
  std::vector<std::uint32_t> ids;  // length max_len, right-padded with [PAD]
  std::size_t real_count = 0;      // leading non-pad entries
};

// Code path: whitespace and comments drop out, the rest is looked up
// as-is, truncated to max_len and padded.
inline IdSeq encode_ids(const TokenSeq& seq, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 1) throw CorpusError("max_len must be >= 1");
  IdSeq out;
  out.ids.assign(max_len, Vocab::kPad);
  for (const Token& t : seq.tokens) {
    if (!is_content_kind(t.kind)) continue;
    if (out.real_count == max_len) break;
    out.ids[out.real_count++] = vocab.lookup(t.text);
  }
  return out;
}

inline IdSeq encode_ids(const std::vector<std::string>& words, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 1) throw CorpusError("max_len must be >= 1");
  IdSeq out;
  out.ids.assign(max_len, Vocab::kPad);
  for (const std::string& w : words) {
    if (out.real_count == max_len) break;
    out.ids[out.real_count++] = vocab.lookup(normalize_nl_word(w));
  }
  return out;
}

// Raw NL text from the corpus: sentinel-escaping word split.
inline IdSeq encode_nl_text(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  return encode_ids(nl_words(text), vocab, max_len);
}

// Augmented NL (output of mask_nl / comment swap): [MASK] words here are
// genuine sentinels, so the split must not escape them.
inline IdSeq encode_nl_augmented(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  auto segs = nldetail::split_nl(text);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < segs.parts.size(); ++i)
    if (segs.is_word[i]) words.push_back(segs.parts[i]);
  return encode_ids(words, vocab, max_len);
}

}  // namespace unicor
