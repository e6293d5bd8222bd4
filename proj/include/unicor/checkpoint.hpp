#pragma once

#include <string>

#include "unicor/encoder.hpp"
#include "unicor/io.hpp"
#include "unicor/vocab.hpp"

namespace unicor {

struct Checkpoint {
  Vocab vocab;
  EncoderState state;
};

namespace ckptdetail {

inline void write_params(ByteWriter& w, const EncoderParams& p) {
  auto tensor = [&w](const std::vector<double>& v) {
    for (double x : v) w.f32(static_cast<float>(x));
  };
  tensor(p.embed);
  tensor(p.w1);
  tensor(p.b1);
  tensor(p.w2);
  tensor(p.b2);
}

inline EncoderParams read_params(ByteReader& r, std::size_t vocab_size, std::size_t dim) {
  EncoderParams p;
  p.vocab_size = vocab_size;
  p.dim = dim;
  auto tensor = [&r](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = static_cast<double>(r.f32());
  };
  tensor(p.embed, vocab_size * dim);
  tensor(p.w1, dim * dim);
  tensor(p.b1, dim);
  tensor(p.w2, dim * dim);
  tensor(p.b2, dim);
  return p;
}

}  // namespace ckptdetail

// Layout: "UCRM", u32 version=1, u32 V, u32 d, f32 momentum, vocab
// strings (u32 length + UTF-8 bytes, id order), then E, W1, b1, W2, b2
// for the query params followed by the key params, all f32 row-major,
// little-endian throughout.
inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.magic("UCRM");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(ckpt.vocab.size()));
  w.u32(static_cast<std::uint32_t>(ckpt.state.query.dim));
  w.f32(static_cast<float>(ckpt.state.momentum));
  for (const std::string& token : ckpt.vocab.id_to_token) {
    w.u32(static_cast<std::uint32_t>(token.size()));
    w.bytes(token);
  }
  ckptdetail::write_params(w, ckpt.state.query);
  ckptdetail::write_params(w, ckpt.state.key);
  return w.data();
}

inline Checkpoint deserialize_checkpoint(std::string bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("UCRM");
  const std::uint32_t version = r.u32();
  if (version != 1) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t vocab_size = r.u32();
  const std::uint32_t dim = r.u32();
  const float momentum = r.f32();

  Checkpoint ckpt;
  ckpt.vocab.id_to_token.clear();
  ckpt.vocab.token_to_id.clear();
  for (std::uint32_t i = 0; i < vocab_size; ++i) {
    std::string token = r.bytes(r.u32());
    ckpt.vocab.token_to_id.emplace(token, i);
    ckpt.vocab.id_to_token.push_back(std::move(token));
  }
  ckpt.state.momentum = static_cast<double>(momentum);
  ckpt.state.query = ckptdetail::read_params(r, vocab_size, dim);
  ckpt.state.key = ckptdetail::read_params(r, vocab_size, dim);
  if (!r.at_end()) throw IoError("trailing bytes in checkpoint");
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(slurp_file(path));
}

// Identity of the encoder that produced an embedding store; hashed over
// the serialized bytes so any parameter or vocab change shifts it.
inline std::uint64_t checkpoint_fingerprint(const Checkpoint& ckpt) {
  return fnv1a64(serialize_checkpoint(ckpt));
}

}  // namespace unicor
