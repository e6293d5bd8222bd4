#pragma once

#include <set>
#include <string>
#include <vector>

#include "unicor/corpus.hpp"
#include "unicor/rng.hpp"

namespace unicor {

// Synthetic multilingual corpus: every problem is a composition of
// primitive operations rendered into 2-4 toy surface languages with
// disjoint keyword sets. The operation stems, a per-problem constant and
// the NL phrases are shared across a problem's languages, so
// cross-language relevance holds by construction while keywords, fillers
// and noise numbers vary per sample.
struct SynthSpec {
  std::size_t n_problems = 80;
  std::size_t n_languages = 3;  // 2..4
  std::uint64_t seed = 1;
};

namespace synthdetail {

struct OpDef {
  const char* stem;      // identifier shared across languages
  const char* phrase;    // NL wording
  const char* comment;   // comment wording
};

inline const std::vector<OpDef>& op_pool() {
  static const std::vector<OpDef> ops{
      {"fold_sum", "fold the running sum", "sum fold"},
      {"clamp_range", "clamp values into the legal range", "range clamp"},
      {"hash_mix", "mix entries into a rolling hash", "hash mixing"},
      {"sort_pick", "sort and pick the midpoint entry", "median pick"},
      {"window_avg", "average over a sliding window", "windowed mean"},
      {"digit_fold", "fold the digits of every entry", "digit folding"},
      {"prime_mask", "mask out the prime positions", "prime masking"},
      {"grid_walk", "walk the grid of neighbouring cells", "grid traversal"},
      {"wave_merge", "merge adjacent waves pairwise", "wave merging"},
      {"pivot_split", "split around the pivot element", "pivot split"},
      {"chain_rot", "rotate the chain of elements", "chain rotation"},
      {"delta_pack", "pack consecutive deltas together", "delta packing"},
      {"mirror_cut", "cut the mirrored halves apart", "mirror cut"},
      {"stripe_count", "count the alternating stripes", "stripe count"},
      {"bucket_spread", "spread entries across buckets", "bucket spread"},
      {"edge_trim", "trim the dangling edge entries", "edge trimming"},
  };
  return ops;
}

// Language identity is carried by the keyword set, a fixed preamble line
// and name pools that are disjoint across languages; only the operation
// stems, the constant and the NL wording are shared within a problem.
struct LangStyle {
  const char* name;
  const char* fun_kw;
  const char* let_kw;
  const char* ret_kw;
  const char* assign;
  const char* term;  // statement terminator
  const char* preamble;
  std::vector<const char*> fun_names;
  std::vector<const char*> var_names;
  std::vector<const char*> arg_names;
};

inline const std::vector<LangStyle>& lang_styles() {
  static const std::vector<LangStyle> styles{
      {"alpha", "fun", "letv", "give", "=", "",
       "loopn modpack_core othw pack_alpha\n",
       {"weave_task", "weave_case", "weave_main"},
       {"wacc", "wcur", "wres"},
       {"wdata", "wfeed"}},
      {"beta", "proc", "bindv", "emitv", "<-", " ;",
       "cycle ringmod_base elsecase ring_beta ;\n",
       {"braid_task", "braid_case", "braid_main"},
       {"bacc", "bcur", "bres"},
       {"bdata", "bfeed"}},
      {"gamma", "routine", "store", "produce", ":=", "",
       "iterate gridmod_root fallback grid_gamma\n",
       {"lace_task", "lace_case", "lace_main"},
       {"gacc", "gcur", "gres"},
       {"gdata", "gfeed"}},
      {"delta", "blockfn", "holdv", "yieldv", "=", " ;;",
       "repeatn archmod_apex altv arch_delta ;;\n",
       {"knit_task", "knit_case", "knit_main"},
       {"dacc", "dcur", "dres"},
       {"ddata", "dfeed"}},
  };
  return styles;
}

inline const std::vector<std::string>& openers() {
  static const std::vector<std::string> v{"compute", "calculate", "determine", "derive"};
  return v;
}

struct Problem {
  std::vector<std::size_t> ops;
  int constant;
};

inline std::string render_code(const LangStyle& style, const Problem& p, Rng& rng) {
  const std::string fname = style.fun_names[rng.below(style.fun_names.size())];
  const std::string var = style.var_names[rng.below(style.var_names.size())];
  const std::string arg = style.arg_names[rng.below(style.arg_names.size())];
  const std::string c = std::to_string(p.constant);

  std::string code = style.preamble;
  code += std::string(style.fun_kw) + " " + fname + "(" + arg + ") {\n";
  code += "  " + std::string(style.let_kw) + " " + var + " " + style.assign + " " + arg +
          style.term + "\n";
  for (std::size_t oi : p.ops) {
    const OpDef& op = op_pool()[oi];
    code += "  " + var + " " + style.assign + " " + op.stem + "(" + var + ", " + c + ")" +
            style.term + "\n";
  }
  code += "  " + std::string(style.ret_kw) + " " + var + "\n";
  code += "}\n";
  return code;
}

inline std::string render_nl(const Problem& p, Rng& rng) {
  std::string nl = openers()[rng.below(openers().size())];
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    nl += i == 0 ? " " : ", then ";
    nl += op_pool()[p.ops[i]].phrase;
  }
  nl += " with limit " + std::to_string(p.constant);
  return nl;
}

inline std::string render_comment(const Problem& p, Rng& rng) {
  std::string text = "// ";
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    if (i > 0) text += " plus ";
    text += op_pool()[p.ops[i]].comment;
  }
  text += ", cap " + std::to_string(p.constant);
  if (rng.bernoulli(0.5)) text += " applied";
  return text;
}

}  // namespace synthdetail

inline Corpus synth_corpus(const SynthSpec& spec) {
  using namespace synthdetail;
  if (spec.n_languages < 2 || spec.n_languages > 4)
    throw CorpusError("synth supports 2 to 4 toy languages");
  if (spec.n_problems < 1) throw CorpusError("synth needs at least 1 problem");

  Rng master = Rng(spec.seed).fork("synth");

  // distinct problem signatures: operation sequence plus constant
  std::vector<Problem> problems;
  std::set<std::pair<std::vector<std::size_t>, int>> seen;
  Rng prng = master.fork("problems");
  while (problems.size() < spec.n_problems) {
    Problem p;
    const std::size_t k = 2 + prng.below(3);  // 2..4 ops
    std::vector<std::size_t> picked = prng.sample_indices(op_pool().size(), k);
    p.ops = picked;
    p.constant = static_cast<int>(2 + prng.below(96));
    if (seen.emplace(p.ops, p.constant).second) problems.push_back(std::move(p));
  }

  std::vector<Sample> samples;
  for (std::size_t pi = 0; pi < problems.size(); ++pi) {
    const std::string problem_id = "p" + std::to_string(pi);
    for (std::size_t li = 0; li < spec.n_languages; ++li) {
      const LangStyle& style = lang_styles()[li];
      Rng rng = master.fork("sample", fnv1a64(problem_id + ":" + style.name));
      Sample s;
      s.problem_id = problem_id;
      s.language = style.name;
      s.id = "synth:" + problem_id + ":" + style.name;
      s.source = "synth";
      s.code = render_code(style, problems[pi], rng);
      s.nl = render_nl(problems[pi], rng);
      if (rng.bernoulli(0.7)) s.comment = render_comment(problems[pi], rng);
      samples.push_back(std::move(s));
    }
  }
  return Corpus(std::move(samples));
}

}  // namespace unicor
