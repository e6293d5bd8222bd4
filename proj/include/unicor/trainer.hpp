#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "unicor/augment.hpp"
#include "unicor/checkpoint.hpp"
#include "unicor/corpus.hpp"
#include "unicor/encoder.hpp"
#include "unicor/losses.hpp"
#include "unicor/queues.hpp"
#include "unicor/rng.hpp"
#include "unicor/vocab.hpp"

namespace unicor {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t batch_tuples = 8;
  std::size_t steps = 300;
  double lr = 1e-3;          // desk-scale default; the "paper" preset records 2e-5
  double momentum = 0.95;  // desk-scale EMA horizon (~20 steps)
  std::size_t queue_capacity = 1024;
  std::size_t dim = 64;
  std::size_t max_vocab = 8192;
  std::size_t code_max_len = 256;
  std::size_t nl_max_len = 128;
  LossConfig loss;
  AugmentConfig augment;
  std::uint64_t seed = 42;
  bool disable_mpcl_intra = false;
  bool disable_rpcl = false;
  bool disable_augmentation = false;
};

struct LanguagePair {
  std::string a, b;
  bool degenerate = false;  // single-language corpus: a == b
};

// Uniform draw over unordered distinct language pairs; a one-language
// corpus degenerates to (L, L) and is flagged for the caller to warn about.
inline LanguagePair sample_language_pair(const std::vector<std::string>& languages, Rng& rng) {
  if (languages.empty()) throw TrainError("no languages to sample from");
  std::vector<std::string> langs = languages;
  std::sort(langs.begin(), langs.end());
  const std::size_t l = langs.size();
  if (l == 1) return {langs[0], langs[0], true};
  const std::uint64_t n_pairs = static_cast<std::uint64_t>(l) * (l - 1) / 2;
  std::uint64_t k = rng.below(n_pairs);
  for (std::size_t i = 0; i < l - 1; ++i) {
    const std::uint64_t row = l - 1 - i;
    if (k < row) return {langs[i], langs[i + 1 + k], false};
    k -= row;
  }
  throw TrainError("pair unranking out of range");  // unreachable
}

// One training tuple: two functionally equivalent samples from the two
// batch languages plus their augmented twin.
struct TupleData {
  std::string problem_id;
  const Sample* sample1 = nullptr;
  const Sample* sample2 = nullptr;
  TokenSeq code1, code2;    // raw token streams
  TokenSeq code1s, code2s;  // augmented twins
  std::string nl1s, nl2s;   // augmented NL (raw nl lives on the samples)
};

struct Batch {
  LanguagePair pair;
  std::vector<TupleData> tuples;
};

// B distinct problem_ids with samples in both languages of the pair, one
// uniformly drawn sample per language, plus the augmented twin D*. In
// degenerate single-language mode the two samples are distinct members of
// the same problem.
inline Batch build_batch(const Corpus& corpus, const LanguagePair& pair, std::size_t batch_tuples,
                         Rng& rng, const AugmentConfig& augment_cfg, bool disable_augmentation = false) {
  struct Eligible {
    std::string problem_id;
    std::vector<std::size_t> lang_a, lang_b;
  };
  std::vector<Eligible> eligible;
  for (const auto& [problem_id, indices] : corpus.by_problem()) {
    Eligible e;
    e.problem_id = problem_id;
    for (std::size_t idx : indices) {
      const std::string& lang = corpus.samples()[idx].language;
      if (lang == pair.a) e.lang_a.push_back(idx);
      if (lang == pair.b) e.lang_b.push_back(idx);
    }
    const bool ok = pair.degenerate ? e.lang_a.size() >= 2 : (!e.lang_a.empty() && !e.lang_b.empty());
    if (ok) eligible.push_back(std::move(e));
  }
  if (eligible.size() < batch_tuples)
    throw TrainError("insufficient cross-language problems for pair (" + pair.a + ", " + pair.b +
                     "): need " + std::to_string(batch_tuples) + ", have " +
                     std::to_string(eligible.size()));

  Batch batch;
  batch.pair = pair;
  Rng pick = rng.fork("problems");
  for (std::size_t sel : pick.sample_indices(eligible.size(), batch_tuples)) {
    const Eligible& e = eligible[sel];
    Rng draw = rng.fork("tuple", fnv1a64(e.problem_id));
    TupleData t;
    t.problem_id = e.problem_id;
    if (pair.degenerate) {
      auto picked = draw.sample_indices(e.lang_a.size(), 2);
      t.sample1 = &corpus.samples()[e.lang_a[picked[0]]];
      t.sample2 = &corpus.samples()[e.lang_a[picked[1]]];
    } else {
      t.sample1 = &corpus.samples()[e.lang_a[draw.below(e.lang_a.size())]];
      t.sample2 = &corpus.samples()[e.lang_b[draw.below(e.lang_b.size())]];
    }
    t.code1 = tokenize_code(t.sample1->code, t.sample1->language, /*strict=*/false);
    t.code2 = tokenize_code(t.sample2->code, t.sample2->language, /*strict=*/false);

    if (disable_augmentation) {
      t.code1s = t.code1;
      t.code2s = t.code2;
      t.nl1s = t.sample1->nl;
      t.nl2s = t.sample2->nl;
    } else {
      TupleText d{t.code1, t.code2, t.sample1->nl, t.sample2->nl, t.sample1->comment,
                  t.sample2->comment};
      TupleAugmented aug = augment_tuple(d, augment_cfg, draw.fork("augment").seed());
      t.code1s = std::move(aug.code1);
      t.code2s = std::move(aug.code2);
      t.nl1s = std::move(aug.nl1);
      t.nl2s = std::move(aug.nl2);
    }
    batch.tuples.push_back(std::move(t));
  }
  return batch;
}

// AdamW with decoupled weight decay on matrices (W1, W2 and the touched
// embedding rows); biases and untouched rows are never decayed. The
// embedding table keeps per-row step counters so sparse updates get the
// right bias correction.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;
inline constexpr double kWeightDecay = 0.01;

struct AdamTensorState {
  std::vector<double> m, v;
  std::uint64_t t = 0;
};

struct AdamRowState {
  std::vector<double> m, v;          // V x d, row-major
  std::vector<std::uint64_t> t_row;  // per-row step counts
};

struct OptimizerState {
  AdamRowState embed;
  AdamTensorState w1, b1, w2, b2;

  static OptimizerState create(const EncoderParams& p) {
    OptimizerState s;
    s.embed.m.assign(p.embed.size(), 0.0);
    s.embed.v.assign(p.embed.size(), 0.0);
    s.embed.t_row.assign(p.vocab_size, 0);
    auto init = [](AdamTensorState& st, std::size_t n) {
      st.m.assign(n, 0.0);
      st.v.assign(n, 0.0);
    };
    init(s.w1, p.w1.size());
    init(s.b1, p.b1.size());
    init(s.w2, p.w2.size());
    init(s.b2, p.b2.size());
    return s;
  }
};

namespace traindetail {

inline void adam_update_span(double* w, const double* g, double* m, double* v, std::size_t n,
                             std::uint64_t t, double lr, double weight_decay) {
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    w[i] -= lr * (m_hat / (std::sqrt(v_hat) + kAdamEps) + weight_decay * w[i]);
  }
}

}  // namespace traindetail

inline void optimizer_update(EncoderParams& params, const ParamGrads& grads, OptimizerState& opt,
                             double lr) {
  const std::size_t d = params.dim;
  for (const auto& [id, grad_row] : grads.embed_rows) {
    std::uint64_t& t = opt.embed.t_row[id];
    ++t;
    const std::size_t off = std::size_t(id) * d;
    traindetail::adam_update_span(params.embed.data() + off, grad_row.data(),
                                  opt.embed.m.data() + off, opt.embed.v.data() + off, d, t, lr,
                                  kWeightDecay);
  }
  auto dense = [lr](std::vector<double>& w, const std::vector<double>& g, AdamTensorState& st,
                    double decay) {
    ++st.t;
    traindetail::adam_update_span(w.data(), g.data(), st.m.data(), st.v.data(), w.size(), st.t, lr,
                                  decay);
  };
  dense(params.w1, grads.w1, opt.w1, kWeightDecay);
  dense(params.b1, grads.b1, opt.b1, 0.0);
  dense(params.w2, grads.w2, opt.w2, kWeightDecay);
  dense(params.b2, grads.b2, opt.b2, 0.0);
}

// Everything train_step mutates, kept together so callers can run steps
// directly (sweeps, tests) without the full train() orchestration.
struct TrainerState {
  EncoderState encoder;
  OptimizerState optimizer;
  QueueSet queues;
  Vocab vocab;

  TrainerState(EncoderState enc, Vocab voc, std::size_t queue_capacity)
      : encoder(std::move(enc)),
        optimizer(OptimizerState::create(encoder.query)),
        queues(queue_capacity),
        vocab(std::move(voc)) {}
};

namespace traindetail {

struct ItemCaches {
  ForwardCache q_code1, q_code2, q_nl1, q_nl2;
};

inline void check_finite(double value, const char* component, std::size_t step,
                         const ParamGrads* grads) {
  if (std::isfinite(value)) return;
  double max_grad = 0.0;
  if (grads) {
    auto scan = [&max_grad](const std::vector<double>& v) {
      for (double x : v) max_grad = std::max(max_grad, std::abs(x));
    };
    for (const auto& [id, row] : grads->embed_rows) scan(row);
    scan(grads->w1);
    scan(grads->b1);
    scan(grads->w2);
    scan(grads->b2);
  }
  throw TrainError("non-finite loss at step " + std::to_string(step) + " in " + component +
                   " (max |grad| = " + format_double(max_grad) + ")");
}

}  // namespace traindetail

struct StepEval {
  LossReport report;
  ParamGrads grads;
  std::vector<TupleViews> views;

  explicit StepEval(std::size_t dim) : grads(dim) {}
};

// Pure evaluation of one step's loss and query-parameter gradients;
// train_step applies the resulting updates. Exposed separately so the
// gradient suite can finite-difference the whole step objective.
inline StepEval evaluate_step(const TrainerState& ts, const Batch& batch, const TrainConfig& cfg) {
  const std::size_t d = ts.encoder.query.dim;

  StepEval eval(d);
  std::vector<TupleViews>& views = eval.views;
  views.resize(batch.tuples.size());
  std::vector<traindetail::ItemCaches> caches(batch.tuples.size());

  for (std::size_t i = 0; i < batch.tuples.size(); ++i) {
    const TupleData& t = batch.tuples[i];
    TupleViews& v = views[i];
    v.problem_id = t.problem_id;

    const IdSeq ids_code1 = encode_ids(t.code1, ts.vocab, cfg.code_max_len);
    const IdSeq ids_code2 = encode_ids(t.code2, ts.vocab, cfg.code_max_len);
    const IdSeq ids_code1s = encode_ids(t.code1s, ts.vocab, cfg.code_max_len);
    const IdSeq ids_code2s = encode_ids(t.code2s, ts.vocab, cfg.code_max_len);
    const IdSeq ids_nl1 = encode_nl_text(t.sample1->nl, ts.vocab, cfg.nl_max_len);
    const IdSeq ids_nl2 = encode_nl_text(t.sample2->nl, ts.vocab, cfg.nl_max_len);
    const IdSeq ids_nl1s = encode_nl_augmented(t.nl1s, ts.vocab, cfg.nl_max_len);
    const IdSeq ids_nl2s = encode_nl_augmented(t.nl2s, ts.vocab, cfg.nl_max_len);

    v.q_code1 = forward(ts.encoder.query, ids_code1, caches[i].q_code1);
    v.q_code2 = forward(ts.encoder.query, ids_code2, caches[i].q_code2);
    v.q_nl1 = forward(ts.encoder.query, ids_nl1, caches[i].q_nl1);
    v.q_nl2 = forward(ts.encoder.query, ids_nl2, caches[i].q_nl2);

    v.k_code1 = forward(ts.encoder.key, ids_code1);
    v.k_code2 = forward(ts.encoder.key, ids_code2);
    v.k_code1s = forward(ts.encoder.key, ids_code1s);
    v.k_code2s = forward(ts.encoder.key, ids_code2s);
    v.k_nl1 = forward(ts.encoder.key, ids_nl1);
    v.k_nl2 = forward(ts.encoder.key, ids_nl2);
    v.k_nl1s = forward(ts.encoder.key, ids_nl1s);
    v.k_nl2s = forward(ts.encoder.key, ids_nl2s);
  }

  MpclResult mp = mpcl(views, ts.queues, cfg.loss, /*include_intra=*/!cfg.disable_mpcl_intra);

  RpclResult rp;
  if (!cfg.disable_rpcl) {
    std::vector<Vec> code1_set, code2_set;
    for (const TupleViews& v : views) {
      code1_set.emplace_back(v.q_code1.data(), v.q_code1.size());
      code2_set.emplace_back(v.q_code2.data(), v.q_code2.size());
    }
    rp = rpcl(code1_set, code2_set, ts.queues.code.snapshot(), cfg.loss.sigmas);
  } else {
    rp.grad_code1.assign(views.size(), std::vector<double>(d, 0.0));
    rp.grad_code2.assign(views.size(), std::vector<double>(d, 0.0));
  }

  LossReport& report = eval.report;
  report.l_code2code = mp.l_code2code;
  report.l_nl2nl = mp.l_nl2nl;
  report.l_nl2code = mp.l_nl2code;
  report.l_mpcl = mp.total();
  report.l_local = rp.l_local;
  report.l_global = rp.l_global;
  report.l_rpcl = rp.total();
  report.l_total = total_loss(report.l_mpcl, report.l_rpcl);

  // gradients w.r.t. the query-view embeddings, then through the encoder
  auto add_vec = [d](std::vector<double>& dst, const std::vector<double>& src) {
    if (src.empty()) return;
    if (dst.empty()) dst.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
  };
  for (std::size_t i = 0; i < views.size(); ++i) {
    TupleQueryGrads g = mp.grads[i];
    add_vec(g.code1, rp.grad_code1[i]);
    add_vec(g.code2, rp.grad_code2[i]);
    if (!g.code1.empty()) backward(ts.encoder.query, caches[i].q_code1, g.code1, eval.grads);
    if (!g.code2.empty()) backward(ts.encoder.query, caches[i].q_code2, g.code2, eval.grads);
    if (!g.nl1.empty()) backward(ts.encoder.query, caches[i].q_nl1, g.nl1, eval.grads);
    if (!g.nl2.empty()) backward(ts.encoder.query, caches[i].q_nl2, g.nl2, eval.grads);
  }
  return eval;
}

// One optimization step: query/key views, MPCL + RPCL with queue
// negatives, backprop into the query encoder only, AdamW update, momentum
// update, then enqueue the key views.
inline LossReport train_step(TrainerState& ts, const Batch& batch, const TrainConfig& cfg,
                             std::size_t step_index) {
  StepEval eval = evaluate_step(ts, batch, cfg);
  const LossReport& report = eval.report;

  traindetail::check_finite(report.l_code2code, "l_code2code", step_index, &eval.grads);
  traindetail::check_finite(report.l_nl2nl, "l_nl2nl", step_index, &eval.grads);
  traindetail::check_finite(report.l_nl2code, "l_nl2code", step_index, &eval.grads);
  traindetail::check_finite(report.l_local, "l_local", step_index, &eval.grads);
  traindetail::check_finite(report.l_global, "l_global", step_index, &eval.grads);

  optimizer_update(ts.encoder.query, eval.grads, ts.optimizer, cfg.lr);
  momentum_update(ts.encoder);

  for (const TupleViews& v : eval.views) {
    ts.queues.code.push(v.k_code1);
    ts.queues.code.push(v.k_code2);
    ts.queues.code_star.push(v.k_code1s);
    ts.queues.code_star.push(v.k_code2s);
    ts.queues.nl.push(v.k_nl1);
    ts.queues.nl.push(v.k_nl2);
    ts.queues.nl_star.push(v.k_nl1s);
    ts.queues.nl_star.push(v.k_nl2s);
  }
  return report;
}

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossReport> log;  // one row per step
};

// Full training run: per-step language pair, batch, train_step. All
// randomness forks off cfg.seed by step index, so the result is a pure
// function of (config, corpus).
inline TrainResult train(const TrainConfig& cfg, const Corpus& corpus) {
  if (cfg.batch_tuples < 1) throw TrainError("batch_tuples must be >= 1");
  if (cfg.queue_capacity < cfg.batch_tuples)
    throw TrainError("queue capacity must be >= batch_tuples");

  Vocab vocab = build_vocab(corpus, cfg.max_vocab);
  Rng master(cfg.seed);
  EncoderState encoder =
      init_state(cfg.dim, vocab.size(), cfg.momentum, master.fork("init").seed());
  TrainerState ts(std::move(encoder), std::move(vocab), cfg.queue_capacity);

  std::vector<std::string> languages(corpus.languages().begin(), corpus.languages().end());

  TrainResult result;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    Rng step_rng = master.fork("step", step);
    Rng pair_rng = step_rng.fork("pair");
    LanguagePair pair = sample_language_pair(languages, pair_rng);
    Rng batch_rng = step_rng.fork("batch");
    Batch batch = build_batch(corpus, pair, cfg.batch_tuples, batch_rng, cfg.augment,
                              cfg.disable_augmentation);
    result.log.push_back(train_step(ts, batch, cfg, step));
  }

  result.checkpoint.vocab = std::move(ts.vocab);
  result.checkpoint.state = std::move(ts.encoder);
  return result;
}

}  // namespace unicor
