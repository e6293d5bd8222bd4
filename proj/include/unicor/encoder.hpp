#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "unicor/rng.hpp"
#include "unicor/vocab.hpp"

namespace unicor {

struct EncoderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mean-pool bag encoder with a two-layer projection:
//   p = mean(E[id] over real ids), h = tanh(W1 p + b1), z = W2 h + b2,
//   e = z / ||z||2.
// All math runs in double; the f32 narrowing happens only at the
// checkpoint/store boundary.
struct EncoderParams {
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::vector<double> embed;  // V x d, row-major
  std::vector<double> w1;     // d x d
  std::vector<double> b1;     // d
  std::vector<double> w2;     // d x d
  std::vector<double> b2;     // d

  const double* embed_row(std::uint32_t id) const { return embed.data() + std::size_t(id) * dim; }
  double* embed_row(std::uint32_t id) { return embed.data() + std::size_t(id) * dim; }
};

struct EncoderState {
  EncoderParams query;
  EncoderParams key;
  double momentum = 0.999;
};

// Embedding rows start at uniform(-0.05, 0.05); the projection matrices
// use a Xavier-style bound and the biases start at zero. A uniform
// +-0.05 scheme across every tensor leaves z dominated by its constant
// bias path, which collapses all embeddings onto one direction at
// initialization and stalls contrastive training.
inline EncoderParams init_params(std::size_t dim, std::size_t vocab_size, std::uint64_t seed) {
  EncoderParams p;
  p.vocab_size = vocab_size;
  p.dim = dim;
  Rng rng = Rng(seed).fork("init_params");
  auto fill = [&rng](std::vector<double>& v, std::size_t n, double bound) {
    v.resize(n);
    for (double& x : v) x = rng.uniform(-bound, bound);
  };
  const double xavier = std::sqrt(3.0 / static_cast<double>(dim));
  fill(p.embed, vocab_size * dim, 0.05);
  fill(p.w1, dim * dim, xavier);
  p.b1.assign(dim, 0.0);
  fill(p.w2, dim * dim, xavier);
  p.b2.assign(dim, 0.0);
  return p;
}

inline EncoderState init_state(std::size_t dim, std::size_t vocab_size, double momentum,
                               std::uint64_t seed) {
  EncoderState s;
  s.query = init_params(dim, vocab_size, seed);
  s.key = s.query;  // twins start identical
  s.momentum = momentum;
  return s;
}

struct ForwardCache {
  std::vector<std::uint32_t> real_ids;
  std::vector<double> pooled;     // p
  std::vector<double> hidden;     // h = tanh(W1 p + b1)
  std::vector<double> raw;        // z
  std::vector<double> embedding;  // e = z / ||z||
  double raw_norm = 0.0;
};

inline const std::vector<double>& forward(const EncoderParams& params, const IdSeq& input,
                                          ForwardCache& cache) {
  if (input.real_count == 0) throw EncoderError("cannot encode an empty sequence");
  const std::size_t d = params.dim;

  cache.real_ids.assign(input.ids.begin(), input.ids.begin() + static_cast<std::ptrdiff_t>(input.real_count));
  cache.pooled.assign(d, 0.0);
  for (std::uint32_t id : cache.real_ids) {
    if (id >= params.vocab_size) throw EncoderError("token id out of range");
    const double* row = params.embed_row(id);
    for (std::size_t j = 0; j < d; ++j) cache.pooled[j] += row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(cache.real_ids.size());
  for (double& x : cache.pooled) x *= inv_n;

  cache.hidden.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = params.b1[i];
    const double* row = params.w1.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * cache.pooled[j];
    cache.hidden[i] = std::tanh(acc);
  }

  cache.raw.assign(d, 0.0);
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double acc = params.b2[i];
    const double* row = params.w2.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * cache.hidden[j];
    cache.raw[i] = acc;
    norm_sq += acc * acc;
  }
  cache.raw_norm = std::sqrt(norm_sq);
  if (cache.raw_norm < 1e-12) throw EncoderError("degenerate embedding: ||z|| below 1e-12");

  cache.embedding.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) cache.embedding[i] = cache.raw[i] / cache.raw_norm;
  return cache.embedding;
}

inline std::vector<double> forward(const EncoderParams& params, const IdSeq& input) {
  ForwardCache cache;
  forward(params, input, cache);
  return cache.embedding;
}

// Gradients of <grad_output, e> w.r.t. the parameters. Touched embedding
// rows accumulate sparsely; the map keeps row application order stable.
struct ParamGrads {
  std::size_t dim = 0;
  std::map<std::uint32_t, std::vector<double>> embed_rows;
  std::vector<double> w1, b1, w2, b2;

  explicit ParamGrads(std::size_t d)
      : dim(d), w1(d * d, 0.0), b1(d, 0.0), w2(d * d, 0.0), b2(d, 0.0) {}

  std::vector<double>& embed_row(std::uint32_t id) {
    auto it = embed_rows.find(id);
    if (it == embed_rows.end()) it = embed_rows.emplace(id, std::vector<double>(dim, 0.0)).first;
    return it->second;
  }
};

inline void backward(const EncoderParams& params, const ForwardCache& cache,
                     const std::vector<double>& grad_output, ParamGrads& grads) {
  const std::size_t d = params.dim;
  if (grad_output.size() != d) throw EncoderError("grad_output dimension mismatch");

  // through the normalization: grad_z = (g - (g.e) e) / ||z||
  double ge = 0.0;
  for (std::size_t i = 0; i < d; ++i) ge += grad_output[i] * cache.embedding[i];
  std::vector<double> grad_z(d);
  for (std::size_t i = 0; i < d; ++i)
    grad_z[i] = (grad_output[i] - ge * cache.embedding[i]) / cache.raw_norm;

  // z = W2 h + b2
  std::vector<double> grad_h(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double gz = grad_z[i];
    grads.b2[i] += gz;
    double* w2_grad_row = grads.w2.data() + i * d;
    const double* w2_row = params.w2.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      w2_grad_row[j] += gz * cache.hidden[j];
      grad_h[j] += w2_row[j] * gz;
    }
  }

  // h = tanh(a), a = W1 p + b1
  std::vector<double> grad_a(d);
  for (std::size_t i = 0; i < d; ++i) grad_a[i] = (1.0 - cache.hidden[i] * cache.hidden[i]) * grad_h[i];

  std::vector<double> grad_p(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double ga = grad_a[i];
    grads.b1[i] += ga;
    double* w1_grad_row = grads.w1.data() + i * d;
    const double* w1_row = params.w1.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      w1_grad_row[j] += ga * cache.pooled[j];
      grad_p[j] += w1_row[j] * ga;
    }
  }

  // p = mean of touched embedding rows
  const double inv_n = 1.0 / static_cast<double>(cache.real_ids.size());
  for (std::uint32_t id : cache.real_ids) {
    std::vector<double>& row = grads.embed_row(id);
    for (std::size_t j = 0; j < d; ++j) row[j] += grad_p[j] * inv_n;
  }
}

// key <- m * key + (1 - m) * query, elementwise over every tensor.
inline void momentum_update(EncoderState& state) {
  const double m = state.momentum;
  auto blend = [m](std::vector<double>& key, const std::vector<double>& query) {
    for (std::size_t i = 0; i < key.size(); ++i) key[i] = m * key[i] + (1.0 - m) * query[i];
  };
  blend(state.key.embed, state.query.embed);
  blend(state.key.w1, state.query.w1);
  blend(state.key.b1, state.query.b1);
  blend(state.key.w2, state.query.w2);
  blend(state.key.b2, state.query.b2);
}

inline std::size_t param_count(const EncoderParams& p) {
  return p.embed.size() + p.w1.size() + p.b1.size() + p.w2.size() + p.b2.size();
}

// Order-stable checksum used by tests to prove key params never see gradients.
inline std::uint64_t params_checksum(const EncoderParams& p) {
  std::uint64_t h = fnv1a64("params");
  auto feed = [&h](const std::vector<double>& v) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)), h);
  };
  feed(p.embed);
  feed(p.w1);
  feed(p.b1);
  feed(p.w2);
  feed(p.b2);
  return h;
}

}  // namespace unicor
