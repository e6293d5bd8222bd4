// Acceptance suite: one pass/fail line per criterion. Criteria 1-4 and 8
// exercise the library directly; criteria 5-7 drive the real CLI binary
// (UNICOR_CLI_PATH) through temp-dir pipelines.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "unicor/checkpoint.hpp"
#include "unicor/metrics.hpp"
#include "unicor/retrieval.hpp"
#include "unicor/synth.hpp"
#include "unicor/trainer.hpp"

using namespace unicor;

namespace {

// ------------------------------------------------------------- harness

struct Harness {
  int failures = 0;
  int current = 0;
  bool current_ok = true;
  std::string detail;

  void begin(int criterion) {
    current = criterion;
    current_ok = true;
    detail.clear();
  }
  void expect(bool ok, const std::string& what) {
    if (!ok && current_ok) {
      current_ok = false;
      detail = what;
    }
  }
  void end(const std::string& title) {
    if (current_ok) {
      std::printf("PASS criterion-%d: %s\n", current, title.c_str());
    } else {
      std::printf("FAIL criterion-%d: %s -- %s\n", current, title.c_str(), detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
};

std::filesystem::path g_work;

int run_cli(const std::string& args) {
  const std::string log = (g_work / "cli.log").string();
  const std::string cmd = std::string(UNICOR_CLI_PATH) + " " + args + " >> " + log + " 2>&1";
  return std::system(cmd.c_str());
}

std::string path_in(const std::string& name) { return (g_work / name).string(); }

// minimal CSV reading: header names to column indices, rows as cells
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("missing column " + name);
  }
};

Csv read_csv(const std::string& path) {
  Csv csv;
  std::string text = slurp_file(path);
  std::size_t begin = 0;
  bool first = true;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(begin, end - begin);
    begin = end + 1;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t cb = 0;
    while (cb <= line.size()) {
      std::size_t ce = line.find(',', cb);
      if (ce == std::string::npos) ce = line.size();
      cells.push_back(line.substr(cb, ce - cb));
      cb = ce + 1;
      if (ce == line.size()) break;
    }
    if (first) {
      csv.header = std::move(cells);
      first = false;
    } else {
      csv.rows.push_back(std::move(cells));
    }
  }
  return csv;
}

std::vector<double> unit_vec(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.uniform(-1.0, 1.0);
      norm += x * x;
    }
  } while (norm < 1e-3);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<Vec> as_views(const std::vector<std::vector<double>>& vs) {
  std::vector<Vec> out;
  for (const auto& v : vs) out.emplace_back(v.data(), v.size());
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// worst-coordinate relative error against the gradient's infinity norm
struct GradCompare {
  double max_abs_diff = 0.0;
  double scale = 0.0;
  void add(double analytic, double numeric) {
    max_abs_diff = std::max(max_abs_diff, std::abs(analytic - numeric));
    scale = std::max({scale, std::abs(analytic), std::abs(numeric)});
  }
  double relative_error() const { return max_abs_diff / std::max(scale, 1e-12); }
};

template <typename F>
double central_difference(F&& f, double* coord, double eps = 1e-4) {
  const double saved = *coord;
  *coord = saved + eps;
  const double up = f();
  *coord = saved - eps;
  const double down = f();
  *coord = saved;
  return (up - down) / (2.0 * eps);
}

// --------------------------------------------------- criterion 1: grads

void criterion_gradients(Harness& h) {
  h.begin(1);
  const auto start = std::chrono::steady_clock::now();

  // encoder forward/backward, 20 instances
  {
    Rng rng(101);
    for (int instance = 0; instance < 20; ++instance) {
      EncoderParams params = init_params(4, 10, rng.next_u64());
      IdSeq ids;
      ids.ids = {static_cast<std::uint32_t>(rng.below(10)),
                 static_cast<std::uint32_t>(rng.below(10)),
                 static_cast<std::uint32_t>(rng.below(10))};
      ids.real_count = 3;
      std::vector<double> g(4);
      for (double& x : g) x = rng.uniform(-1.0, 1.0);

      ForwardCache cache;
      forward(params, ids, cache);
      ParamGrads grads(4);
      backward(params, cache, g, grads);

      auto f = [&]() {
        std::vector<double> e = forward(params, ids);
        double acc = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) acc += g[i] * e[i];
        return acc;
      };
      GradCompare cmp;
      for (std::size_t i = 0; i < params.w1.size(); ++i)
        cmp.add(grads.w1[i], central_difference(f, &params.w1[i]));
      for (std::size_t i = 0; i < params.b1.size(); ++i)
        cmp.add(grads.b1[i], central_difference(f, &params.b1[i]));
      for (std::size_t i = 0; i < params.w2.size(); ++i)
        cmp.add(grads.w2[i], central_difference(f, &params.w2[i]));
      for (std::size_t i = 0; i < params.b2.size(); ++i)
        cmp.add(grads.b2[i], central_difference(f, &params.b2[i]));
      for (auto& [id, row] : grads.embed_rows)
        for (std::size_t j = 0; j < 4; ++j)
          cmp.add(row[j], central_difference(f, &params.embed[std::size_t(id) * 4 + j]));
      h.expect(cmp.relative_error() < 1e-4,
               "encoder gradcheck rel error " + format_double(cmp.relative_error()));
    }
  }

  // info_nce, 20 instances
  {
    Rng rng(102);
    for (int instance = 0; instance < 20; ++instance) {
      auto q = unit_vec(rng, 4);
      auto kp = unit_vec(rng, 4);
      std::vector<std::vector<double>> negs;
      for (int j = 0; j < 4; ++j) negs.push_back(unit_vec(rng, 4));
      const double tau = (instance % 2 == 0) ? 1.0 : 0.07;
      InfoNceResult r = info_nce(q, kp, as_views(negs), tau);
      GradCompare cmp;
      for (std::size_t i = 0; i < q.size(); ++i)
        cmp.add(r.grad_q[i],
                central_difference(
                    [&]() { return info_nce(q, kp, as_views(negs), tau).loss; }, &q[i]));
      h.expect(cmp.relative_error() < 1e-4,
               "info_nce gradcheck rel error " + format_double(cmp.relative_error()));
    }
  }

  // mmd2_biased, 20 instances
  {
    Rng rng(103);
    std::vector<double> sigmas{0.6, 1.2, 2.4};
    for (int instance = 0; instance < 20; ++instance) {
      std::vector<std::vector<double>> xs, ys;
      for (int i = 0; i < 4; ++i) xs.push_back(unit_vec(rng, 3));
      for (int i = 0; i < 4; ++i) ys.push_back(unit_vec(rng, 3));
      MmdResult r = mmd2_biased(as_views(xs), as_views(ys), sigmas);
      GradCompare cmp;
      auto f = [&]() { return mmd2_biased(as_views(xs), as_views(ys), sigmas, false).value; };
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j)
          cmp.add(r.grad_x[i][j], central_difference(f, &xs[i][j]));
      for (std::size_t i = 0; i < ys.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j)
          cmp.add(r.grad_y[i][j], central_difference(f, &ys[i][j]));
      h.expect(cmp.relative_error() < 1e-4,
               "mmd gradcheck rel error " + format_double(cmp.relative_error()));
    }
  }

  // one full train_step
  {
    Corpus corpus = synth_corpus({6, 2, 13});
    TrainConfig cfg;
    cfg.batch_tuples = 2;
    cfg.dim = 4;
    cfg.max_vocab = 64;
    cfg.queue_capacity = 8;
    cfg.loss.temperature = 0.3;  // see ledger: FD truncation at tau=0.07 exceeds 1e-4
    Vocab vocab = build_vocab(corpus, cfg.max_vocab);
    EncoderState enc = init_state(cfg.dim, vocab.size(), cfg.momentum, 99);
    TrainerState ts(std::move(enc), std::move(vocab), cfg.queue_capacity);
    Rng qrng(14);
    for (int i = 0; i < 4; ++i) {
      auto v = unit_vec(qrng, 4);
      ts.queues.code.push(v);
      ts.queues.code_star.push(v);
      ts.queues.nl.push(v);
      ts.queues.nl_star.push(v);
    }
    Rng rng(15);
    Batch batch = build_batch(corpus, {"alpha", "beta", false}, 2, rng, cfg.augment);
    StepEval eval = evaluate_step(ts, batch, cfg);
    auto f = [&]() { return evaluate_step(ts, batch, cfg).report.l_total; };
    GradCompare cmp;
    for (std::size_t i = 0; i < ts.encoder.query.w1.size(); i += 3)
      cmp.add(eval.grads.w1[i], central_difference(f, &ts.encoder.query.w1[i]));
    for (std::size_t i = 0; i < ts.encoder.query.b1.size(); ++i)
      cmp.add(eval.grads.b1[i], central_difference(f, &ts.encoder.query.b1[i]));
    for (std::size_t i = 0; i < ts.encoder.query.w2.size(); i += 3)
      cmp.add(eval.grads.w2[i], central_difference(f, &ts.encoder.query.w2[i]));
    for (std::size_t i = 0; i < ts.encoder.query.b2.size(); ++i)
      cmp.add(eval.grads.b2[i], central_difference(f, &ts.encoder.query.b2[i]));
    std::size_t rows = 0;
    for (auto& [id, row] : eval.grads.embed_rows) {
      if (++rows > 8) break;
      for (std::size_t j = 0; j < 4; ++j)
        cmp.add(row[j], central_difference(f, &ts.encoder.query.embed[std::size_t(id) * 4 + j]));
    }
    h.expect(cmp.relative_error() < 1e-4,
             "train_step gradcheck rel error " + format_double(cmp.relative_error()));
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  h.expect(secs < 30.0, "gradient suite took " + format_double(secs) + "s (budget 30s)");
  h.end("gradient suite (encoder, info_nce, mmd2, full train_step) vs central differences");
}

// ------------------------------------------- criterion 2: loss identities

void criterion_loss_identities(Harness& h) {
  h.begin(2);
  Rng rng(201);

  // ln 2 and ln(N+1) for equal similarities, exact to 1e-12
  {
    auto q = unit_vec(rng, 6);
    auto k = unit_vec(rng, 6);
    InfoNceResult r = info_nce(q, k, {Vec(k)}, 1.0);
    h.expect(std::abs(r.loss - std::log(2.0)) < 1e-12, "info_nce != ln 2");
    for (double tau : {1.0, 0.07}) {
      for (std::size_t n : {std::size_t{2}, std::size_t{7}, std::size_t{31}}) {
        std::vector<Vec> negs(n, Vec(k));
        InfoNceResult rn = info_nce(q, k, negs, tau);
        h.expect(std::abs(rn.loss - std::log(static_cast<double>(n) + 1.0)) < 1e-12,
                 "info_nce != ln(N+1) at N=" + std::to_string(n));
      }
    }
  }

  // mmd2(X, X) = 0, symmetry, nonnegativity over 100 random pairs
  {
    std::vector<double> sigmas{0.6, 1.2, 2.4};
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::vector<double>> xs, ys;
      const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(6);
      for (std::size_t i = 0; i < n; ++i) xs.push_back(unit_vec(rng, 4));
      for (std::size_t i = 0; i < m; ++i) ys.push_back(unit_vec(rng, 4));
      MmdResult self = mmd2_biased(as_views(xs), as_views(xs), sigmas, false);
      h.expect(std::abs(self.value) <= 1e-10, "mmd2(X,X) = " + format_double(self.value));
      MmdResult fwd = mmd2_biased(as_views(xs), as_views(ys), sigmas, false);
      MmdResult rev = mmd2_biased(as_views(ys), as_views(xs), sigmas, false);
      h.expect(fwd.value >= 0.0, "mmd2 negative");
      h.expect(std::abs(fwd.value - rev.value) < 1e-12, "mmd2 not symmetric");
    }
  }

  // LossReport sum identities on every step of a live training run
  {
    Corpus corpus = synth_corpus({12, 3, 5});
    TrainConfig cfg;
    cfg.batch_tuples = 4;
    cfg.dim = 16;
    cfg.max_vocab = 1024;
    cfg.queue_capacity = 64;
    cfg.steps = 30;
    TrainResult result = train(cfg, corpus);
    h.expect(result.log.size() == 30, "training log incomplete");
    for (const LossReport& r : result.log) {
      h.expect(std::abs(r.l_mpcl - (r.l_code2code + r.l_nl2nl + r.l_nl2code)) < 1e-9,
               "mpcl sum identity violated");
      h.expect(std::abs(r.l_rpcl - (r.l_local + r.l_global)) < 1e-9, "rpcl sum identity violated");
      h.expect(std::abs(r.l_total - (r.l_mpcl + r.l_rpcl)) < 1e-9, "total sum identity violated");
    }
  }
  h.end("loss identities (ln 2, ln(N+1), MMD properties, LossReport sums)");
}

// --------------------------------------------- criterion 3: ranking oracles

void criterion_ranking_oracles(Harness& h) {
  h.begin(3);
  Rng rng(301);

  auto oracle_rank = [](const EmbeddingStore& store, const std::string& query_id,
                        const std::string& target_lang,
                        const std::function<double(const StoreRecord&)>& score) {
    std::vector<std::pair<double, std::string>> scored;
    for (const StoreRecord& r : store.records()) {
      if (r.language != target_lang || r.id == query_id) continue;
      scored.push_back({score(r), r.id});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<std::string> ids;
    for (const auto& [s, id] : scored) ids.push_back(id);
    return ids;
  };
  auto ids_of = [](const RankedList& ranked) {
    std::vector<std::string> ids;
    for (const auto& e : ranked) ids.push_back(e.id);
    return ids;
  };

  for (int fixture = 0; fixture < 50; ++fixture) {
    // pools of at most 20 candidates
    const std::size_t problems = 2 + rng.below(9);
    std::vector<StoreRecord> records;
    for (std::size_t p = 0; p < problems; ++p) {
      for (const char* lang : {"la", "lb"}) {
        StoreRecord r;
        r.id = std::string(lang) + "_" + std::to_string(p);
        r.problem_id = "p" + std::to_string(p);
        r.language = lang;
        r.code_vec = unit_vec(rng, 5);
        r.nl_vec = unit_vec(rng, 5);
        records.push_back(std::move(r));
      }
      if (p % 3 == 0) {  // occasional extra target so MAP differs from MRR
        StoreRecord r;
        r.id = "lb_x_" + std::to_string(p);
        r.problem_id = "p" + std::to_string(p);
        r.language = "lb";
        r.code_vec = unit_vec(rng, 5);
        r.nl_vec = unit_vec(rng, 5);
        records.push_back(std::move(r));
      }
    }
    EmbeddingStore store(std::move(records), 5, static_cast<std::uint64_t>(fixture));
    const std::string query = "la_" + std::to_string(rng.below(problems));
    const StoreRecord& q = store.at(query);
    Scenario sc{"la", "lb", Strategy::NL2Code, 0.5};
    const double alpha = rng.next_real();

    bool ok =
        ids_of(retrieve_single(Strategy::NL2Code, query, sc, store)) ==
            oracle_rank(store, query, "lb",
                        [&](const StoreRecord& r) { return dot(q.nl_vec, r.code_vec); }) &&
        ids_of(retrieve_single(Strategy::NL2NL, query, sc, store)) ==
            oracle_rank(store, query, "lb",
                        [&](const StoreRecord& r) { return dot(q.nl_vec, r.nl_vec); }) &&
        ids_of(retrieve_single(Strategy::Code2Code, query, sc, store)) ==
            oracle_rank(store, query, "lb",
                        [&](const StoreRecord& r) { return dot(q.code_vec, r.code_vec); }) &&
        ids_of(retrieve_weight(query, sc, store, alpha)) ==
            oracle_rank(store, query, "lb", [&](const StoreRecord& r) {
              return alpha * dot(q.nl_vec, r.code_vec) +
                     (1.0 - alpha) * dot(q.code_vec, r.code_vec);
            });
    h.expect(ok,
             "retrieve_* differs from the brute-force sort (fixture " + std::to_string(fixture) + ")");

    // endpoint and concat identities as exact permutations
    h.expect(ids_of(retrieve_weight(query, sc, store, 1.0)) ==
                 ids_of(retrieve_single(Strategy::NL2Code, query, sc, store)),
             "Weight(1) != NL2Code");
    h.expect(ids_of(retrieve_weight(query, sc, store, 0.0)) ==
                 ids_of(retrieve_single(Strategy::Code2Code, query, sc, store)),
             "Weight(0) != Code2Code");
    h.expect(ids_of(retrieve_concat(query, sc, store)) ==
                 ids_of(retrieve_weight(query, sc, store, 0.5)),
             "Concat != Weight(0.5)");

    // metrics against an independent brute-force evaluator
    {
      EvalResult got = evaluate_scenario(store, sc);
      double mrr = 0.0, map = 0.0;
      std::size_t n_q = 0;
      for (const StoreRecord& qq : store.records()) {
        if (qq.language != "la") continue;
        std::set<std::string> relevant;
        for (const StoreRecord& c : store.records())
          if (c.language == "lb" && c.id != qq.id && c.problem_id == qq.problem_id)
            relevant.insert(c.id);
        if (relevant.empty()) continue;
        auto order = oracle_rank(store, qq.id, "lb",
                                 [&](const StoreRecord& r) { return dot(qq.nl_vec, r.code_vec); });
        double rr = 0.0, ap = 0.0, hits = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
          if (!relevant.count(order[k])) continue;
          if (rr == 0.0) rr = 1.0 / static_cast<double>(k + 1);
          hits += 1.0;
          ap += hits / static_cast<double>(k + 1);
        }
        mrr += rr;
        map += ap / hits;
        ++n_q;
      }
      mrr /= static_cast<double>(n_q);
      map /= static_cast<double>(n_q);
      h.expect(got.n_queries == n_q, "query count mismatch");
      h.expect(std::abs(got.mrr - mrr) < 1e-12, "MRR differs from brute force");
      h.expect(std::abs(got.map - map) < 1e-12, "MAP differs from brute force");
    }
  }
  h.end("ranking oracles (50 fixtures, brute-force sort/eval, fusion identities)");
}

// ----------------------------------------------- criterion 4: MoCo mechanics

void criterion_moco(Harness& h) {
  h.begin(4);

  for (std::size_t capacity : {std::size_t{4}, std::size_t{1024}}) {
    FifoQueue q(capacity);
    for (std::size_t i = 0; i < capacity; ++i) q.push({static_cast<double>(i)});
    const std::size_t extra = 5;
    for (std::size_t i = 0; i < extra; ++i) q.push({static_cast<double>(capacity + i)});
    h.expect(q.size() == capacity, "queue size != capacity after overflow");
    bool fifo_ok = true;
    for (std::size_t i = 0; i < capacity; ++i)
      if (q.at(i)[0] != static_cast<double>(i + extra)) fifo_ok = false;
    h.expect(fifo_ok,
             "FIFO eviction lost the wrong sentinels at capacity " + std::to_string(capacity));
  }

  // momentum endpoints, exact
  {
    EncoderState st = init_state(4, 8, 1.0, 11);
    st.query = init_params(4, 8, 12);
    std::uint64_t before = params_checksum(st.key);
    momentum_update(st);
    h.expect(params_checksum(st.key) == before, "m=1 changed the key params");
    st.momentum = 0.0;
    momentum_update(st);
    h.expect(params_checksum(st.key) == params_checksum(st.query), "m=0 is not an exact copy");
  }

  // key params provably untouched by backprop
  {
    Corpus corpus = synth_corpus({8, 2, 41});
    TrainConfig cfg;
    cfg.batch_tuples = 3;
    cfg.dim = 8;
    cfg.max_vocab = 512;
    cfg.queue_capacity = 32;
    cfg.momentum = 1.0;  // isolate backprop: the EMA becomes a no-op
    Vocab vocab = build_vocab(corpus, cfg.max_vocab);
    EncoderState enc = init_state(cfg.dim, vocab.size(), 1.0, 77);
    TrainerState ts(std::move(enc), std::move(vocab), cfg.queue_capacity);
    const std::uint64_t key_before = params_checksum(ts.encoder.key);
    const std::uint64_t query_before = params_checksum(ts.encoder.query);
    Rng rng(42);
    for (int step = 1; step <= 3; ++step) {
      Rng step_rng = rng.fork("b", static_cast<std::uint64_t>(step));
      Batch batch = build_batch(corpus, {"alpha", "beta", false}, 3, step_rng, cfg.augment);
      train_step(ts, batch, cfg, static_cast<std::size_t>(step));
    }
    h.expect(params_checksum(ts.encoder.key) == key_before, "backprop leaked into key params");
    h.expect(params_checksum(ts.encoder.query) != query_before, "query params did not move");
  }
  h.end("MoCo mechanics (FIFO sentinels at 4/1024, momentum endpoints, key checksum)");
}

// ------------------------------------- criterion 5: end-to-end synthetic run

struct PipelineArtifacts {
  std::string corpus, init_ckpt, full_ckpt, ablated_ckpt;
  std::string init_store, full_store, ablated_store;
  std::string metrics;
};

bool run_pipeline(Harness& h, const std::string& tag, std::uint64_t seed, PipelineArtifacts& out) {
  // per-run directory with identical file names inside, so artifacts of
  // two runs are byte-comparable (the metrics dataset column carries the
  // store file stem)
  std::filesystem::create_directories(g_work / tag);
  out.corpus = path_in(tag + "/corpus.jsonl");
  out.init_ckpt = path_in(tag + "/init.ucrm");
  out.full_ckpt = path_in(tag + "/full.ucrm");
  out.ablated_ckpt = path_in(tag + "/norpcl.ucrm");
  out.init_store = path_in(tag + "/init.ucre");
  out.full_store = path_in(tag + "/full.ucre");
  out.ablated_store = path_in(tag + "/norpcl.ucre");
  out.metrics = path_in(tag + "/metrics.csv");
  const std::string seed_arg = " --seed " + std::to_string(seed);

  bool ok = true;
  ok = ok && run_cli("synth --problems 80 --languages 3" + seed_arg + " --out " + out.corpus) == 0;
  ok = ok && run_cli("train --corpus " + out.corpus + " --steps 0" + seed_arg + " --out " +
                     out.init_ckpt) == 0;
  ok = ok && run_cli("train --corpus " + out.corpus + seed_arg + " --out " + out.full_ckpt) == 0;
  ok = ok && run_cli("train --corpus " + out.corpus + " --ablate rpcl" + seed_arg + " --out " +
                     out.ablated_ckpt) == 0;
  ok = ok && run_cli("embed --checkpoint " + out.init_ckpt + " --corpus " + out.corpus + " --out " +
                     out.init_store) == 0;
  ok = ok && run_cli("embed --checkpoint " + out.full_ckpt + " --corpus " + out.corpus + " --out " +
                     out.full_store) == 0;
  ok = ok && run_cli("embed --checkpoint " + out.ablated_ckpt + " --corpus " + out.corpus +
                     " --out " + out.ablated_store) == 0;
  ok = ok && run_cli("eval --store " + out.full_store + " --checkpoint " + out.full_ckpt +
                     " --corpus " + out.corpus + " --out " + out.metrics) == 0;
  h.expect(ok, "pipeline command failed (see " + (g_work / "cli.log").string() + ")");
  return ok;
}

double avg_cross_c2c_mrr_from_csv(const std::string& metrics_path) {
  Csv csv = read_csv(metrics_path);
  const std::size_t ql = csv.col("query_lang"), tl = csv.col("target_lang");
  const std::size_t strat = csv.col("strategy"), mrr = csv.col("mrr");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& row : csv.rows) {
    if (row[strat] != "code2code" || row[ql] == row[tl]) continue;
    total += std::stod(row[mrr]);
    ++n;
  }
  if (n == 0) throw std::runtime_error("no cross-language code2code rows");
  return total / static_cast<double>(n);
}

double avg_cross_c2c_mrr_from_store(const EmbeddingStore& store) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& a : store.languages()) {
    for (const auto& b : store.languages()) {
      if (a == b) continue;
      total += evaluate_scenario(store, {a, b, Strategy::Code2Code, 0.5}).mrr;
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

// biased MMD^2 of code embeddings between the two largest language sets
double two_language_mmd(const EmbeddingStore& store) {
  std::vector<std::pair<std::size_t, std::string>> sizes;
  for (const auto& lang : store.languages())
    sizes.push_back({store.language_indices(lang).size(), lang});
  std::sort(sizes.begin(), sizes.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<Vec> xs, ys;
  for (std::size_t i : store.language_indices(sizes[0].second))
    xs.emplace_back(store.records()[i].code_vec.data(), store.dim());
  for (std::size_t i : store.language_indices(sizes[1].second))
    ys.emplace_back(store.records()[i].code_vec.data(), store.dim());
  return mmd2_biased(xs, ys, std::vector<double>{0.6, 1.2, 2.4}, false).value;
}

void criterion_end_to_end(Harness& h, PipelineArtifacts& run1) {
  h.begin(5);
  const auto start = std::chrono::steady_clock::now();

  if (run_pipeline(h, "run1", 42, run1)) {
    // (a) l_total at step 300 < 0.5 * l_total at step 1
    Csv log = read_csv(run1.full_ckpt + ".log.csv");
    const std::size_t lt = log.col("l_total");
    h.expect(log.rows.size() == 300, "expected 300 log rows");
    const double l1 = std::stod(log.rows.front()[lt]);
    const double l300 = std::stod(log.rows.back()[lt]);
    h.expect(l300 < 0.5 * l1,
             "loss halving failed: l1 = " + format_double(l1) + ", l300 = " + format_double(l300));
    std::printf("  [5a] l_total: step 1 = %.4f, step 300 = %.4f (ratio %.3f)\n", l1, l300,
                l300 / l1);

    // (b) trained cross-language Code2Code MRR >= 3x untrained
    EmbeddingStore init_store = load_store(run1.init_store);
    const double untrained = avg_cross_c2c_mrr_from_store(init_store);
    const double trained = avg_cross_c2c_mrr_from_csv(run1.metrics);
    double random_baseline = 0.0;
    {
      std::vector<std::string> langs = init_store.languages();
      std::size_t n = 0;
      for (const auto& a : langs)
        for (const auto& b : langs) {
          if (a == b) continue;
          random_baseline += expected_random_mrr(init_store, {a, b, Strategy::Code2Code, 0.5});
          ++n;
        }
      random_baseline /= static_cast<double>(n);
    }
    std::printf(
        "  [5b] cross-language C2C MRR: random %.4f, untrained %.4f, trained %.4f (%.2fx)\n",
        random_baseline, untrained, trained, trained / untrained);
    h.expect(trained >= 3.0 * untrained, "trained MRR " + format_double(trained) +
                                             " < 3x untrained " + format_double(untrained));

    // (c) MMD drop >= 50% with RPCL; smaller (or no) drop without it
    EmbeddingStore full_store = load_store(run1.full_store);
    EmbeddingStore ablated_store = load_store(run1.ablated_store);
    const double mmd_init = two_language_mmd(init_store);
    const double mmd_full = two_language_mmd(full_store);
    const double mmd_ablated = two_language_mmd(ablated_store);
    std::printf("  [5c] MMD^2(two largest languages): init %.6f, rpcl %.6f, no-rpcl %.6f\n",
                mmd_init, mmd_full, mmd_ablated);
    h.expect(mmd_full <= 0.5 * mmd_init, "MMD did not halve: init " + format_double(mmd_init) +
                                             ", trained " + format_double(mmd_full));
    h.expect(mmd_ablated > mmd_full, "ablating RPCL did not reduce the MMD drop: with " +
                                         format_double(mmd_full) + ", without " +
                                         format_double(mmd_ablated));
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("  [5] pipeline wall clock %.1fs\n", secs);
  h.expect(secs < 600.0, "end-to-end run exceeded 10 minutes");
  h.end("end-to-end synthetic run (loss halves, MRR >= 3x untrained, RPCL drives MMD down)");
}

// ----------------------------------- criterion 6: ablation and sweep plumbing

void criterion_ablation_sweeps(Harness& h) {
  h.begin(6);
  const std::string corpus = path_in("run1/corpus.jsonl");

  auto column_all_zero = [](const Csv& csv, const std::string& name) {
    const std::size_t c = csv.col(name);
    for (const auto& row : csv.rows)
      if (std::stod(row[c]) != 0.0) return false;
    return true;
  };
  auto column_any_nonzero = [](const Csv& csv, const std::string& name) {
    const std::size_t c = csv.col(name);
    for (const auto& row : csv.rows)
      if (std::stod(row[c]) != 0.0) return true;
    return false;
  };

  {
    const std::string ckpt = path_in("abl_rpcl.ucrm");
    h.expect(run_cli("train --corpus " + corpus + " --steps 10 --seed 42 --ablate rpcl --out " +
                     ckpt) == 0,
             "--ablate rpcl run failed");
    Csv log = read_csv(ckpt + ".log.csv");
    h.expect(column_all_zero(log, "l_rpcl") && column_all_zero(log, "l_local") &&
                 column_all_zero(log, "l_global"),
             "--ablate rpcl left nonzero rpcl columns");
    h.expect(column_any_nonzero(log, "l_mpcl"), "mpcl unexpectedly zero under rpcl ablation");
  }
  {
    const std::string ckpt = path_in("abl_intra.ucrm");
    h.expect(run_cli("train --corpus " + corpus +
                     " --steps 10 --seed 42 --ablate mpcl_intra --out " + ckpt) == 0,
             "--ablate mpcl_intra run failed");
    Csv log = read_csv(ckpt + ".log.csv");
    h.expect(column_all_zero(log, "l_code2code") && column_all_zero(log, "l_nl2nl"),
             "--ablate mpcl_intra left nonzero intra columns");
    h.expect(column_any_nonzero(log, "l_nl2code"),
             "nl2code unexpectedly zero under intra ablation");
  }
  {
    const std::string ckpt = path_in("abl_augment.ucrm");
    h.expect(run_cli("train --corpus " + corpus + " --steps 10 --seed 42 --ablate augment --out " +
                     ckpt) == 0,
             "--ablate augment run failed");
    Csv log = read_csv(ckpt + ".log.csv");
    h.expect(log.rows.size() == 10, "augment-ablated run incomplete");
  }

  // sweeps: batch {8, 16, 32} and queue {600, 2048, 6200}, ascending rows
  auto check_sweep = [&](const std::string& kind, const std::vector<std::string>& expect_values) {
    const std::string out = path_in("sweep_" + kind + ".csv");
    h.expect(run_cli("train --corpus " + corpus + " --steps 20 --seed 42 --sweep " + kind +
                     " --out " + out) == 0,
             "--sweep " + kind + " run failed");
    Csv csv = read_csv(out);
    h.expect(csv.rows.size() == expect_values.size(), "sweep row count wrong for " + kind);
    const std::size_t value_col = csv.col("value");
    for (std::size_t i = 0; i < csv.rows.size() && i < expect_values.size(); ++i)
      h.expect(csv.rows[i][value_col] == expect_values[i],
               "sweep " + kind + " row " + std::to_string(i) + " is " + csv.rows[i][value_col]);
  };
  check_sweep("batch", {"8", "16", "32"});
  check_sweep("queue", {"600", "2048", "6200"});

  h.end("ablation flags zero their loss columns; batch/queue sweeps emit ordered CSVs");
}

// --------------------------------------------- criterion 7: determinism

void criterion_determinism(Harness& h, const PipelineArtifacts& run1) {
  h.begin(7);
  PipelineArtifacts run2;
  if (run_pipeline(h, "run2", 42, run2)) {
    h.expect(slurp_file(run1.corpus) == slurp_file(run2.corpus), "synth corpora differ");
    h.expect(slurp_file(run1.full_ckpt) == slurp_file(run2.full_ckpt), "checkpoints differ");
    h.expect(slurp_file(run1.full_ckpt + ".log.csv") == slurp_file(run2.full_ckpt + ".log.csv"),
             "training logs differ");
    h.expect(slurp_file(run1.full_store) == slurp_file(run2.full_store), "stores differ");
    h.expect(slurp_file(run1.metrics) == slurp_file(run2.metrics), "metrics CSVs differ");
  }
  h.end("determinism: identical seeds give bitwise-identical checkpoint, store, metrics");
}

// ------------------------------------------- criterion 8: MRR equals MAP

void criterion_metric_identity(Harness& h, const PipelineArtifacts& run1) {
  h.begin(8);

  // synthetic cross-language scenarios have exactly one relevant per query
  Csv csv = read_csv(run1.metrics);
  const std::size_t ql = csv.col("query_lang"), tl = csv.col("target_lang");
  const std::size_t mrr = csv.col("mrr"), map = csv.col("map");
  std::size_t checked = 0;
  for (const auto& row : csv.rows) {
    if (row[ql] == row[tl]) continue;
    h.expect(row[mrr] == row[map],
             "MRR != MAP in " + row[ql] + "->" + row[tl] + ": " + row[mrr] + " vs " + row[map]);
    ++checked;
  }
  h.expect(checked > 0, "no cross-language rows found");

  // library-level: random store with exactly one relevant per query
  Rng rng(801);
  std::vector<StoreRecord> records;
  for (int p = 0; p < 15; ++p) {
    for (const char* lang : {"la", "lb"}) {
      StoreRecord r;
      r.id = std::string(lang) + std::to_string(p);
      r.problem_id = "p" + std::to_string(p);
      r.language = lang;
      r.code_vec = unit_vec(rng, 6);
      r.nl_vec = unit_vec(rng, 6);
      records.push_back(std::move(r));
    }
  }
  EmbeddingStore store(std::move(records), 6, 8);
  EvalResult r = evaluate_scenario(store, {"la", "lb", Strategy::NL2Code, 0.5});
  h.expect(r.mrr == r.map, "MRR != MAP on the single-relevant fixture");

  h.end("MRR equals MAP exactly when every query has exactly one relevant candidate");
}

}  // namespace

int main() {
  g_work = std::filesystem::temp_directory_path() /
           ("unicor_acceptance_" +
            std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::filesystem::create_directories(g_work);
  std::printf("acceptance workdir: %s\n", g_work.string().c_str());

  Harness h;
  criterion_gradients(h);
  criterion_loss_identities(h);
  criterion_ranking_oracles(h);
  criterion_moco(h);

  PipelineArtifacts run1;
  criterion_end_to_end(h, run1);
  criterion_ablation_sweeps(h);
  criterion_determinism(h, run1);
  criterion_metric_identity(h, run1);

  if (h.failures == 0) {
    std::printf("acceptance: all 8 criteria passed\n");
    std::error_code ec;
    std::filesystem::remove_all(g_work, ec);
  } else {
    std::printf("acceptance: %d criterion(s) FAILED (artifacts kept in %s)\n", h.failures,
                g_work.string().c_str());
  }
  return h.failures == 0 ? 0 : 1;
}
