#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "unicor/queues.hpp"

namespace unicor {

struct LossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vec = std::span<const double>;

struct LossConfig {
  double temperature = 0.07;                    // tau = 1 reproduces the raw objective
  std::vector<double> sigmas = {0.6, 1.2, 2.4};  // multi-scale Gaussian bandwidths
  bool nl2code_bidirectional = true;
};

// Per-step component breakdown; the sum identities
//   l_mpcl = l_code2code + l_nl2nl + l_nl2code
//   l_rpcl = l_local + l_global
//   l_total = l_mpcl + l_rpcl
// hold on every step and are asserted by the training loop.
struct LossReport {
  double l_code2code = 0.0;
  double l_nl2nl = 0.0;
  double l_nl2code = 0.0;
  double l_mpcl = 0.0;
  double l_local = 0.0;
  double l_global = 0.0;
  double l_rpcl = 0.0;
  double l_total = 0.0;
};

namespace lossdetail {

inline double dot(Vec a, Vec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void check_unit(Vec v, std::string_view what) {
  double n = std::sqrt(dot(v, v));
  if (std::abs(n - 1.0) > 1e-4)
    throw LossError(std::string(what) + " must be unit norm (got " + std::to_string(n) + ")");
}

}  // namespace lossdetail

struct InfoNceResult {
  double loss = 0.0;
  std::vector<double> grad_q;
};

// InfoNCE over cosine similarities of unit vectors, keys held constant:
//   loss = -log( exp(s+/t) / (exp(s+/t) + sum_j exp(s-_j/t)) )
// With no negatives the ratio is 1 and both loss and gradient vanish.
inline InfoNceResult info_nce(Vec q, Vec k_pos, const std::vector<Vec>& negs, double tau) {
  if (tau <= 0.0) throw LossError("temperature must be positive");
  if (k_pos.size() != q.size()) throw LossError("positive key dimension mismatch");
  lossdetail::check_unit(q, "query");
  lossdetail::check_unit(k_pos, "positive key");

  InfoNceResult res;
  res.grad_q.assign(q.size(), 0.0);
  if (negs.empty()) return res;

  const double l_pos = lossdetail::dot(q, k_pos) / tau;
  std::vector<double> l_neg(negs.size());
  double l_max = l_pos;
  for (std::size_t j = 0; j < negs.size(); ++j) {
    if (negs[j].size() != q.size()) throw LossError("negative key dimension mismatch");
    lossdetail::check_unit(negs[j], "negative key");
    l_neg[j] = lossdetail::dot(q, negs[j]) / tau;
    l_max = std::max(l_max, l_neg[j]);
  }

  double denom = std::exp(l_pos - l_max);
  for (double l : l_neg) denom += std::exp(l - l_max);
  const double lse = l_max + std::log(denom);
  res.loss = lse - l_pos;

  // grad_q = (1/tau) * ( sum_j p_j k_j - k_pos ), p = softmax over {pos, negs}
  const double p_pos = std::exp(l_pos - lse);
  for (std::size_t i = 0; i < q.size(); ++i) res.grad_q[i] += (p_pos - 1.0) * k_pos[i] / tau;
  for (std::size_t j = 0; j < negs.size(); ++j) {
    const double p_j = std::exp(l_neg[j] - lse);
    for (std::size_t i = 0; i < q.size(); ++i) res.grad_q[i] += p_j * negs[j][i] / tau;
  }
  return res;
}

// A key-view from the current batch, labeled so that same-problem keys
// can be excluded from an anchor's negative pool. Queue entries carry no
// label and always count as negatives.
struct LabeledKey {
  Vec vec;
  std::string_view problem_id;
};

struct PerspectiveAnchor {
  Vec query;
  std::string_view problem_id;
  std::vector<Vec> positives;
};

struct PerspectiveResult {
  double loss = 0.0;
  std::vector<std::vector<double>> grad_anchors;  // aligned with input anchors
};

// Mean InfoNCE over all (anchor, positive) pairs. Per pair, the negative
// pool is the batch keys minus anything sharing the anchor's problem_id,
// plus the full queue contents. Negative logits and their weighted key
// sum are shared across an anchor's positives, which keeps the cost at
// O(|negs| * d) per anchor instead of per pair.
inline PerspectiveResult perspective_loss(const std::vector<PerspectiveAnchor>& anchors,
                                          const std::vector<LabeledKey>& batch_keys,
                                          const std::vector<Vec>& queue_keys, double tau) {
  if (tau <= 0.0) throw LossError("temperature must be positive");
  PerspectiveResult res;
  std::size_t n_pairs = 0;
  for (const auto& a : anchors) {
    if (a.positives.empty()) throw LossError("anchor with no positives");
    n_pairs += a.positives.size();
  }
  res.grad_anchors.resize(anchors.size());
  if (n_pairs == 0) return res;
  const double pair_weight = 1.0 / static_cast<double>(n_pairs);

  for (std::size_t ai = 0; ai < anchors.size(); ++ai) {
    const auto& a = anchors[ai];
    const std::size_t d = a.query.size();
    res.grad_anchors[ai].assign(d, 0.0);
    lossdetail::check_unit(a.query, "query");

    std::vector<Vec> negs;
    negs.reserve(batch_keys.size() + queue_keys.size());
    for (const auto& k : batch_keys)
      if (k.problem_id != a.problem_id) negs.push_back(k.vec);
    for (const auto& k : queue_keys) negs.push_back(k);

    if (negs.empty()) continue;  // softmax over {positive} alone: zero loss

    // shared negative logits, shifted by their max for stability
    double l_neg_max = -1e300;
    std::vector<double> l_neg(negs.size());
    for (std::size_t j = 0; j < negs.size(); ++j) {
      if (negs[j].size() != d) throw LossError("negative key dimension mismatch");
      lossdetail::check_unit(negs[j], "negative key");
      l_neg[j] = lossdetail::dot(a.query, negs[j]) / tau;
      l_neg_max = std::max(l_neg_max, l_neg[j]);
    }
    double z_neg = 0.0;                 // sum_j exp(l_j - l_neg_max)
    std::vector<double> s_neg(d, 0.0);  // sum_j exp(l_j - l_neg_max) * k_j
    for (std::size_t j = 0; j < negs.size(); ++j) {
      const double w = std::exp(l_neg[j] - l_neg_max);
      z_neg += w;
      for (std::size_t i = 0; i < d; ++i) s_neg[i] += w * negs[j][i];
    }

    for (const Vec& pos : a.positives) {
      if (pos.size() != d) throw LossError("positive key dimension mismatch");
      lossdetail::check_unit(pos, "positive key");
      const double l_pos = lossdetail::dot(a.query, pos) / tau;
      const double shift = std::max(l_pos, l_neg_max);
      const double e_pos = std::exp(l_pos - shift);
      const double scale = std::exp(l_neg_max - shift);
      const double z = e_pos + scale * z_neg;
      res.loss += pair_weight * (std::log(z) + shift - l_pos);

      // grad_q = (1/tau) * ( (e_pos k_pos + scale S_neg) / z - k_pos )
      const double p_pos = e_pos / z;
      for (std::size_t i = 0; i < d; ++i)
        res.grad_anchors[ai][i] +=
            pair_weight * ((p_pos - 1.0) * pos[i] + scale * s_neg[i] / z) / tau;
    }
  }
  return res;
}

// Multi-scale Gaussian kernel, k(x,y) = mean_sigma exp(-||x-y||^2 / (2 sigma^2)).
inline double multiscale_kernel(Vec x, Vec y, std::span<const double> sigmas) {
  if (sigmas.empty()) throw LossError("sigma set must be nonempty");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dxy = x[i] - y[i];
    sq += dxy * dxy;
  }
  double acc = 0.0;
  for (double s : sigmas) acc += std::exp(-sq / (2.0 * s * s));
  return acc / static_cast<double>(sigmas.size());
}

struct MmdResult {
  double value = 0.0;
  std::vector<std::vector<double>> grad_x;
  std::vector<std::vector<double>> grad_y;
};

namespace lossdetail {

// d k(a, b) / d a = -k_sigma-weighted (a - b); accumulates scale * grad
// into ga and the mirror into gb.
inline void kernel_grad_accum(Vec a, Vec b, std::span<const double> sigmas, double scale,
                              std::vector<double>* ga, std::vector<double>* gb) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  double coeff = 0.0;  // sum over sigmas of exp(.) / sigma^2, averaged
  for (double s : sigmas) coeff += std::exp(-sq / (2.0 * s * s)) / (s * s);
  coeff /= static_cast<double>(sigmas.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double g = -coeff * (a[i] - b[i]) * scale;
    if (ga) (*ga)[i] += g;
    if (gb) (*gb)[i] -= g;
  }
}

}  // namespace lossdetail

namespace lossdetail {

// Mean kernel value over all ordered pairs of two sets.
inline double mean_kernel(const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                          std::span<const double> sigmas) {
  double acc = 0.0;
  for (const Vec& a : xs)
    for (const Vec& b : ys) acc += multiscale_kernel(a, b, sigmas);
  return acc / static_cast<double>(xs.size() * ys.size());
}

// Core estimator with selectable gradient sides; a precomputed mean
// k(y,y') lets callers reuse the expensive self-term of a constant set.
inline MmdResult mmd2_biased_impl(const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                                  std::span<const double> sigmas, bool want_gx, bool want_gy,
                                  const double* mean_kyy_hint) {
  if (xs.empty() || ys.empty()) throw LossError("MMD requires nonempty sets");
  const std::size_t n = xs.size(), m = ys.size();
  const std::size_t d = xs[0].size();

  MmdResult res;
  if (want_gx) res.grad_x.assign(n, std::vector<double>(d, 0.0));
  if (want_gy) res.grad_y.assign(m, std::vector<double>(d, 0.0));

  const double wxx = 1.0 / static_cast<double>(n * n);
  const double wyy = 1.0 / static_cast<double>(m * m);
  const double wxy = 2.0 / static_cast<double>(n * m);

  double kxx = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      kxx += multiscale_kernel(xs[i], xs[j], sigmas);
      if (want_gx && i != j)
        kernel_grad_accum(xs[i], xs[j], sigmas, wxx, &res.grad_x[i], &res.grad_x[j]);
    }

  double mean_kyy;
  if (mean_kyy_hint && !want_gy) {
    mean_kyy = *mean_kyy_hint;
  } else {
    double kyy = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        kyy += multiscale_kernel(ys[i], ys[j], sigmas);
        if (want_gy && i != j)
          kernel_grad_accum(ys[i], ys[j], sigmas, wyy, &res.grad_y[i], &res.grad_y[j]);
      }
    mean_kyy = kyy * wyy;
  }

  double kxy = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      kxy += multiscale_kernel(xs[i], ys[j], sigmas);
      if (want_gx || want_gy)
        kernel_grad_accum(xs[i], ys[j], sigmas, -wxy, want_gx ? &res.grad_x[i] : nullptr,
                          want_gy ? &res.grad_y[j] : nullptr);
    }

  res.value = kxx * wxx + mean_kyy - kxy * wxy;
  return res;
}

}  // namespace lossdetail

// Biased V-statistic estimator over all ordered pairs (self-pairs included):
//   MMD^2 = mean k(x,x') + mean k(y,y') - 2 mean k(x,y)
// Nonnegative by construction and well defined for single-element sets.
inline MmdResult mmd2_biased(const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                             std::span<const double> sigmas, bool want_grads = true) {
  return lossdetail::mmd2_biased_impl(xs, ys, sigmas, want_grads, want_grads, nullptr);
}

struct RpclResult {
  double l_local = 0.0;
  double l_global = 0.0;
  std::vector<std::vector<double>> grad_code1;
  std::vector<std::vector<double>> grad_code2;

  double total() const { return l_local + l_global; }
};

// Representation-distribution consistency:
//   l_local  = MMD^2(code1, code2)                       (batch-level)
//   l_global = MMD^2(code1, queue) + MMD^2(code2, queue) (history-level)
// Queue entries are constants; an empty queue contributes zero.
inline RpclResult rpcl(const std::vector<Vec>& code1, const std::vector<Vec>& code2,
                       const std::vector<Vec>& queue_code, std::span<const double> sigmas) {
  if (code1.empty() || code2.empty()) throw LossError("rpcl needs nonempty code sets");
  const std::size_t d = code1[0].size();

  RpclResult res;
  res.grad_code1.assign(code1.size(), std::vector<double>(d, 0.0));
  res.grad_code2.assign(code2.size(), std::vector<double>(d, 0.0));

  MmdResult local = mmd2_biased(code1, code2, sigmas);
  res.l_local = local.value;
  for (std::size_t i = 0; i < code1.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) res.grad_code1[i][j] += local.grad_x[i][j];
  for (std::size_t i = 0; i < code2.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) res.grad_code2[i][j] += local.grad_y[i][j];

  if (!queue_code.empty()) {
    // queue entries are constants: no gradients on their side, and their
    // self-kernel term is shared between the two global MMDs
    const double mean_kqq = lossdetail::mean_kernel(queue_code, queue_code, sigmas);
    MmdResult g1 = lossdetail::mmd2_biased_impl(code1, queue_code, sigmas, true, false, &mean_kqq);
    MmdResult g2 = lossdetail::mmd2_biased_impl(code2, queue_code, sigmas, true, false, &mean_kqq);
    res.l_global = g1.value + g2.value;
    for (std::size_t i = 0; i < code1.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) res.grad_code1[i][j] += g1.grad_x[i][j];
    for (std::size_t i = 0; i < code2.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) res.grad_code2[i][j] += g2.grad_x[i][j];
  }
  return res;
}

inline double total_loss(double l_mpcl, double l_rpcl) { return l_mpcl + l_rpcl; }

// Embeddings of one training tuple: query-encoder views of the four raw
// items (gradients flow into these) and momentum-encoder key views of
// all eight items including the augmented twins.
struct TupleViews {
  std::string problem_id;
  std::vector<double> q_code1, q_code2, q_nl1, q_nl2;
  std::vector<double> k_code1, k_code2, k_code1s, k_code2s;
  std::vector<double> k_nl1, k_nl2, k_nl1s, k_nl2s;
};

struct TupleQueryGrads {
  std::vector<double> code1, code2, nl1, nl2;
};

struct MpclResult {
  double l_code2code = 0.0;
  double l_nl2nl = 0.0;
  double l_nl2code = 0.0;
  std::vector<TupleQueryGrads> grads;  // aligned with the input batch

  double total() const { return l_code2code + l_nl2nl + l_nl2code; }
};

namespace lossdetail {

enum class Role { Code1, Code2, Nl1, Nl2 };

struct AnchorRef {
  std::size_t tuple;
  Role role;
};

inline std::vector<double>& grad_slot(TupleQueryGrads& g, Role r) {
  switch (r) {
    case Role::Code1: return g.code1;
    case Role::Code2: return g.code2;
    case Role::Nl1: return g.nl1;
    default: return g.nl2;
  }
}

inline void accumulate(std::vector<TupleQueryGrads>& grads, const std::vector<AnchorRef>& refs,
                       const PerspectiveResult& res, double scale) {
  for (std::size_t i = 0; i < refs.size(); ++i) {
    std::vector<double>& slot = grad_slot(grads[refs[i].tuple], refs[i].role);
    if (slot.empty()) slot.assign(res.grad_anchors[i].size(), 0.0);
    for (std::size_t j = 0; j < res.grad_anchors[i].size(); ++j)
      slot[j] += scale * res.grad_anchors[i][j];
  }
}

}  // namespace lossdetail

// Multi-perspective collaborative contrast loss (sum of Code2Code, NL2NL
// and NL2Code InfoNCE perspectives). Batch keys of the same problem are
// excluded from each anchor's negative pool; queue entries are used
// unconditionally. include_intra=false drops the two intra-modal
// perspectives (the "w/o MPCL" ablation).
inline MpclResult mpcl(const std::vector<TupleViews>& batch, const QueueSet& queues,
                       const LossConfig& cfg, bool include_intra = true) {
  using lossdetail::AnchorRef;
  using lossdetail::Role;

  MpclResult res;
  res.grads.resize(batch.size());

  std::vector<LabeledKey> code_keys, nl_keys;
  for (const TupleViews& t : batch) {
    code_keys.push_back({t.k_code1, t.problem_id});
    code_keys.push_back({t.k_code2, t.problem_id});
    code_keys.push_back({t.k_code1s, t.problem_id});
    code_keys.push_back({t.k_code2s, t.problem_id});
    nl_keys.push_back({t.k_nl1, t.problem_id});
    nl_keys.push_back({t.k_nl2, t.problem_id});
    nl_keys.push_back({t.k_nl1s, t.problem_id});
    nl_keys.push_back({t.k_nl2s, t.problem_id});
  }

  std::vector<Vec> queue_code = queues.code.snapshot();
  for (const auto& v : queues.code_star.snapshot()) queue_code.push_back(v);
  std::vector<Vec> queue_nl = queues.nl.snapshot();
  for (const auto& v : queues.nl_star.snapshot()) queue_nl.push_back(v);

  auto run = [&](const std::vector<PerspectiveAnchor>& anchors, const std::vector<AnchorRef>& refs,
                 const std::vector<LabeledKey>& keys, const std::vector<Vec>& queue, double scale) {
    PerspectiveResult pr = perspective_loss(anchors, keys, queue, cfg.temperature);
    lossdetail::accumulate(res.grads, refs, pr, scale);
    return scale * pr.loss;
  };

  if (include_intra) {
    // Code2Code: positives of code1 are {code1*, code2, code2*}, symmetrically for code2.
    std::vector<PerspectiveAnchor> anchors;
    std::vector<AnchorRef> refs;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const TupleViews& t = batch[i];
      anchors.push_back({t.q_code1, t.problem_id, {t.k_code1s, t.k_code2, t.k_code2s}});
      refs.push_back({i, Role::Code1});
      anchors.push_back({t.q_code2, t.problem_id, {t.k_code2s, t.k_code1, t.k_code1s}});
      refs.push_back({i, Role::Code2});
    }
    res.l_code2code = run(anchors, refs, code_keys, queue_code, 1.0);
  }

  if (include_intra) {
    std::vector<PerspectiveAnchor> anchors;
    std::vector<AnchorRef> refs;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const TupleViews& t = batch[i];
      anchors.push_back({t.q_nl1, t.problem_id, {t.k_nl1s, t.k_nl2, t.k_nl2s}});
      refs.push_back({i, Role::Nl1});
      anchors.push_back({t.q_nl2, t.problem_id, {t.k_nl2s, t.k_nl1, t.k_nl1s}});
      refs.push_back({i, Role::Nl2});
    }
    res.l_nl2nl = run(anchors, refs, nl_keys, queue_nl, 1.0);
  }

  {
    // NL2Code, NL anchors against code keys; optionally averaged with the
    // reverse direction (code anchors against NL keys).
    const double scale = cfg.nl2code_bidirectional ? 0.5 : 1.0;
    std::vector<PerspectiveAnchor> anchors;
    std::vector<AnchorRef> refs;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const TupleViews& t = batch[i];
      std::vector<Vec> pos{t.k_code1, t.k_code1s, t.k_code2, t.k_code2s};
      anchors.push_back({t.q_nl1, t.problem_id, pos});
      refs.push_back({i, Role::Nl1});
      anchors.push_back({t.q_nl2, t.problem_id, pos});
      refs.push_back({i, Role::Nl2});
    }
    res.l_nl2code = run(anchors, refs, code_keys, queue_code, scale);

    if (cfg.nl2code_bidirectional) {
      std::vector<PerspectiveAnchor> rev;
      std::vector<AnchorRef> rev_refs;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const TupleViews& t = batch[i];
        std::vector<Vec> pos{t.k_nl1, t.k_nl1s, t.k_nl2, t.k_nl2s};
        rev.push_back({t.q_code1, t.problem_id, pos});
        rev_refs.push_back({i, Role::Code1});
        rev.push_back({t.q_code2, t.problem_id, pos});
        rev_refs.push_back({i, Role::Code2});
      }
      res.l_nl2code += run(rev, rev_refs, nl_keys, queue_nl, scale);
    }
  }

  return res;
}

}  // namespace unicor
