#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unicor/lexer.hpp"
#include "unicor/rng.hpp"

namespace unicor {

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kSepToken = "[SEP]";

struct AugmentConfig {
  double p_mask = 0.15;
  double rename_fraction = 0.5;
  bool use_comments = true;
  double comment_swap_p = 0.5;
};

inline bool maskable_kind(TokenKind k) {
  switch (k) {
    case TokenKind::Identifier:
    case TokenKind::Keyword:
    case TokenKind::Number:
    case TokenKind::String:
    case TokenKind::Operator:
      return true;
    default:
      return false;
  }
}

// Dynamic masking: each maskable token is independently replaced by the
// [MASK] sentinel with probability p_mask. Comments, whitespace and
// punctuation survive untouched and the token count is preserved.
inline TokenSeq mask_tokens(const TokenSeq& seq, double p_mask, std::uint64_t seed) {
  Rng rng = Rng(seed).fork("mask_tokens");
  TokenSeq out = seq;
  for (auto& t : out.tokens) {
    if (maskable_kind(t.kind) && rng.bernoulli(p_mask)) t.text = std::string(kMaskToken);
  }
  return out;
}

// Identifier replacement: ceil(fraction * #distinct identifiers) distinct
// identifiers are drawn uniformly and each is renamed, at every
// occurrence, to a fresh "var<k>" that collides with no identifier
// already present in the sequence.
inline TokenSeq rename_identifiers(const TokenSeq& seq, double fraction, std::uint64_t seed) {
  std::vector<std::string> distinct;          // first-occurrence order
  std::set<std::string> present;
  for (const auto& t : seq.tokens) {
    if (t.kind == TokenKind::Identifier && present.insert(t.text).second) distinct.push_back(t.text);
  }
  const std::size_t n = distinct.size();
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (n == 0 || k == 0) return seq;

  Rng rng = Rng(seed).fork("rename_identifiers");
  std::vector<std::size_t> picked = rng.sample_indices(n, k);

  std::map<std::string, std::string> rename;
  std::size_t ordinal = 0;
  for (std::size_t idx : picked) {
    std::string fresh;
    do {
      fresh = "var" + std::to_string(ordinal++);
    } while (present.count(fresh));
    rename[distinct[idx]] = fresh;
  }

  TokenSeq out = seq;
  for (auto& t : out.tokens) {
    if (t.kind != TokenKind::Identifier) continue;
    auto it = rename.find(t.text);
    if (it != rename.end()) t.text = it->second;
  }
  return out;
}

namespace nldetail {

inline bool word_has_alnum(std::string_view w) {
  for (char c : w)
    if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return true;
  return false;
}

// Alternating whitespace/word segments; concatenation restores the text.
struct NlSegments {
  std::vector<std::string> parts;
  std::vector<bool> is_word;
};

inline NlSegments split_nl(std::string_view text) {
  NlSegments segs;
  std::size_t i = 0;
  while (i < text.size()) {
    const bool ws = lexdetail::is_space(text[i]);
    std::size_t j = i;
    while (j < text.size() && lexdetail::is_space(text[j]) == ws) ++j;
    segs.parts.emplace_back(text.substr(i, j - i));
    segs.is_word.push_back(!ws);
    i = j;
  }
  return segs;
}

}  // namespace nldetail

// Whitespace-delimited words of a raw NL text. A literal word equal to a
// sentinel is escaped with a leading backslash so that sentinel ids can
// only ever be produced by the augmentation ops themselves.
inline std::vector<std::string> nl_words(std::string_view text) {
  auto segs = nldetail::split_nl(text);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < segs.parts.size(); ++i) {
    if (!segs.is_word[i]) continue;
    std::string w = segs.parts[i];
    if (w == kMaskToken || w == kSepToken) w.insert(w.begin(), '\\');
    words.push_back(std::move(w));
  }
  return words;
}

// Word-level dynamic masking over raw NL text. Punctuation-only words are
// never masked; whitespace runs are reproduced exactly.
inline std::string mask_nl(std::string_view text, double p_mask, std::uint64_t seed) {
  Rng rng = Rng(seed).fork("mask_nl");
  auto segs = nldetail::split_nl(text);
  std::string out;
  for (std::size_t i = 0; i < segs.parts.size(); ++i) {
    std::string part = segs.parts[i];
    if (segs.is_word[i] && nldetail::word_has_alnum(part) && rng.bernoulli(p_mask))
      part = std::string(kMaskToken);
    out += part;
  }
  return out;
}

// One functionally-equivalent tuple D = (code1, code2, nl1, nl2) with the
// native comments of the two code samples (when present).
struct TupleText {
  TokenSeq code1, code2;
  std::string nl1, nl2;
  std::optional<std::string> comment1, comment2;
};

struct TupleAugmented {
  TokenSeq code1, code2;
  std::string nl1, nl2;
};

// Builds the perturbed twin D*: code members are identifier-renamed then
// masked, NL members are word-masked or, on a seeded coin, swapped for
// the sample's native comment. Each member runs on its own sub-stream so
// the result is a pure function of (D, cfg, seed).
inline TupleAugmented augment_tuple(const TupleText& d, const AugmentConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);

  auto perturb_code = [&](const TokenSeq& code, std::string_view name) {
    TokenSeq renamed = rename_identifiers(code, cfg.rename_fraction, rng.fork(name, 0).seed());
    return mask_tokens(renamed, cfg.p_mask, rng.fork(name, 1).seed());
  };
  auto perturb_nl = [&](const std::string& nl, const std::optional<std::string>& comment,
                        std::string_view name) {
    Rng coin = rng.fork(name, 0);
    if (cfg.use_comments && comment.has_value() && coin.bernoulli(cfg.comment_swap_p)) return *comment;
    return mask_nl(nl, cfg.p_mask, rng.fork(name, 1).seed());
  };

  TupleAugmented out;
  out.code1 = perturb_code(d.code1, "code1");
  out.code2 = perturb_code(d.code2, "code2");
  out.nl1 = perturb_nl(d.nl1, d.comment1, "nl1");
  out.nl2 = perturb_nl(d.nl2, d.comment2, "nl2");
  return out;
}

}  // namespace unicor
