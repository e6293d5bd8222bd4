#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "unicor/retrieval.hpp"
#include "unicor/rng.hpp"

namespace unicor {

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 1 / rank of the first relevant candidate (1-based).
inline double reciprocal_rank(const RankedList& ranked, const std::set<std::string>& relevant) {
  for (std::size_t i = 0; i < ranked.size(); ++i)
    if (relevant.count(ranked[i].id)) return 1.0 / static_cast<double>(i + 1);
  throw MetricsError("no relevant candidate in the ranked list");
}

// AP = (1/R) * sum over relevant ranks k of precision@k.
inline double average_precision(const RankedList& ranked, const std::set<std::string>& relevant) {
  double hits = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!relevant.count(ranked[i].id)) continue;
    hits += 1.0;
    acc += hits / static_cast<double>(i + 1);
  }
  if (hits == 0.0) throw MetricsError("no relevant candidate in the ranked list");
  return acc / hits;
}

struct PerQuery {
  std::string id;
  double rr = 0.0;
  double ap = 0.0;
};

struct EvalResult {
  Scenario scenario;
  double mrr = 0.0;
  double map = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_excluded = 0;  // queries with no relevant target
  std::vector<PerQuery> per_query;
};

// Relevance is problem_id equality; queries without any relevant
// candidate in the target pool are excluded and counted, not scored zero.
inline EvalResult evaluate_scenario(const EmbeddingStore& store, const Scenario& sc,
                                    const Checkpoint* ckpt = nullptr,
                                    const Corpus* corpus = nullptr) {
  // relevant counterpart count per problem in the target language
  std::map<std::string, std::size_t> target_problem_count;
  for (std::size_t i : store.language_indices(sc.target_language))
    ++target_problem_count[store.records()[i].problem_id];

  EvalResult res;
  res.scenario = sc;
  for (std::size_t qi : store.language_indices(sc.query_language)) {
    const StoreRecord& q = store.records()[qi];
    auto it = target_problem_count.find(q.problem_id);
    std::size_t n_relevant = (it == target_problem_count.end()) ? 0 : it->second;
    if (sc.query_language == sc.target_language && n_relevant > 0) --n_relevant;  // self excluded
    if (n_relevant == 0) {
      ++res.n_excluded;
      continue;
    }

    RankedList ranked = retrieve(q.id, sc, store, ckpt, corpus);
    std::set<std::string> relevant;
    for (std::size_t ci : store.language_indices(sc.target_language)) {
      const StoreRecord& c = store.records()[ci];
      if (c.id != q.id && c.problem_id == q.problem_id) relevant.insert(c.id);
    }
    PerQuery pq;
    pq.id = q.id;
    pq.rr = reciprocal_rank(ranked, relevant);
    pq.ap = average_precision(ranked, relevant);
    res.per_query.push_back(std::move(pq));
  }

  res.n_queries = res.per_query.size();
  if (res.n_queries == 0) throw MetricsError("no eligible queries for scenario");
  for (const PerQuery& pq : res.per_query) {
    res.mrr += pq.rr;
    res.map += pq.ap;
  }
  res.mrr /= static_cast<double>(res.n_queries);
  res.map /= static_cast<double>(res.n_queries);
  return res;
}

// Expected MRR of a uniformly random ranking over the same query set:
// for a pool of n with R relevant, E[RR] = sum_k P(first relevant at k)/k.
inline double expected_random_mrr(const EmbeddingStore& store, const Scenario& sc) {
  std::map<std::string, std::size_t> target_problem_count;
  const auto& target = store.language_indices(sc.target_language);
  for (std::size_t i : target) ++target_problem_count[store.records()[i].problem_id];

  double total = 0.0;
  std::size_t n_queries = 0;
  for (std::size_t qi : store.language_indices(sc.query_language)) {
    const StoreRecord& q = store.records()[qi];
    const bool intra = sc.query_language == sc.target_language;
    std::size_t pool = target.size() - (intra ? 1 : 0);
    auto it = target_problem_count.find(q.problem_id);
    std::size_t rel = (it == target_problem_count.end()) ? 0 : it->second;
    if (intra && rel > 0) --rel;
    if (rel == 0 || pool == 0) continue;

    double expect = 0.0;
    double p_no_rel_before = 1.0;  // P(no relevant in the first k-1 draws)
    const double n = static_cast<double>(pool), r = static_cast<double>(rel);
    for (std::size_t k = 1; k + rel <= pool + 1; ++k) {
      const double hazard = r / (n - static_cast<double>(k - 1));
      expect += p_no_rel_before * hazard / static_cast<double>(k);
      p_no_rel_before *= (n - r - static_cast<double>(k - 1)) / (n - static_cast<double>(k - 1));
    }
    total += expect;
    ++n_queries;
  }
  if (n_queries == 0) throw MetricsError("no eligible queries for scenario");
  return total / static_cast<double>(n_queries);
}

struct AlphaPoint {
  double alpha, mrr, map;
};

struct AlphaSearchResult {
  double best_alpha = 0.0;
  double mrr_at_best = 0.0;
  double map_at_best = 0.0;
  std::vector<AlphaPoint> curve;
};

// Sweeps the Weight strategy over {0, step, ..., 1}; alpha* maximizes
// MRR, ties resolved toward the smallest alpha.
inline AlphaSearchResult grid_search_alpha(const EmbeddingStore& store, const Scenario& base,
                                           double step = 0.01) {
  if (!(step > 0.0 && step <= 0.5)) throw MetricsError("grid step must be in (0, 0.5]");
  std::vector<double> alphas;
  for (std::size_t i = 0;; ++i) {
    const double a = static_cast<double>(i) * step;
    if (a >= 1.0) break;
    alphas.push_back(a);
  }
  alphas.push_back(1.0);

  AlphaSearchResult res;
  bool first = true;
  for (double a : alphas) {
    Scenario sc = base;
    sc.strategy = Strategy::Weight;
    sc.alpha = a;
    EvalResult er = evaluate_scenario(store, sc);
    res.curve.push_back({a, er.mrr, er.map});
    if (first || er.mrr > res.mrr_at_best) {
      first = false;
      res.best_alpha = a;
      res.mrr_at_best = er.mrr;
      res.map_at_best = er.map;
    }
  }
  return res;
}

struct WeightReportEntry {
  std::string dataset;
  double alpha_star, mrr, map;
};

struct WeightReport {
  std::vector<WeightReportEntry> per_dataset;
  double mean_alpha = 0.0;
  double std_alpha = 0.0;  // population standard deviation
};

inline WeightReport aggregate_weight_report(std::vector<WeightReportEntry> entries) {
  if (entries.empty()) throw MetricsError("weight report needs at least one dataset");
  WeightReport rep;
  rep.per_dataset = std::move(entries);
  for (const auto& e : rep.per_dataset) rep.mean_alpha += e.alpha_star;
  rep.mean_alpha /= static_cast<double>(rep.per_dataset.size());
  for (const auto& e : rep.per_dataset) {
    const double d = e.alpha_star - rep.mean_alpha;
    rep.std_alpha += d * d;
  }
  rep.std_alpha = std::sqrt(rep.std_alpha / static_cast<double>(rep.per_dataset.size()));
  return rep;
}

// L x L grid of per-scenario MRR; cells with no eligible query stay empty
// rather than reading as zero.
struct CrossMatrix {
  std::vector<std::string> languages;
  std::vector<std::vector<std::optional<double>>> mrr;  // [query][target]
};

inline CrossMatrix cross_language_matrix(const EmbeddingStore& store, Strategy strategy,
                                         const std::vector<std::string>& languages,
                                         const Checkpoint* ckpt = nullptr,
                                         const Corpus* corpus = nullptr, double alpha = 0.5) {
  CrossMatrix m;
  m.languages = languages;
  m.mrr.assign(languages.size(), std::vector<std::optional<double>>(languages.size()));
  for (std::size_t i = 0; i < languages.size(); ++i) {
    for (std::size_t j = 0; j < languages.size(); ++j) {
      Scenario sc{languages[i], languages[j], strategy, alpha};
      try {
        m.mrr[i][j] = evaluate_scenario(store, sc, ckpt, corpus).mrr;
      } catch (const MetricsError&) {
        // no eligible queries: absent
      }
    }
  }
  return m;
}

enum class RankMetric { RR, AP };

// Two-sided paired permutation test over per-query differences: each
// resample flips the sign of every query's difference with probability
// one half; p = (#{|T_perm| >= |T_obs|} + 1) / (resamples + 1).
inline double paired_significance(const EvalResult& a, const EvalResult& b,
                                  RankMetric metric = RankMetric::RR,
                                  std::size_t resamples = 100000, std::uint64_t seed = 7) {
  if (a.per_query.size() != b.per_query.size())
    throw MetricsError("mismatched query sets (different sizes)");
  std::map<std::string, double> b_values;
  for (const PerQuery& pq : b.per_query)
    b_values[pq.id] = (metric == RankMetric::RR) ? pq.rr : pq.ap;

  std::vector<double> diffs;
  diffs.reserve(a.per_query.size());
  for (const PerQuery& pq : a.per_query) {
    auto it = b_values.find(pq.id);
    if (it == b_values.end()) throw MetricsError("mismatched query sets (id " + pq.id + ")");
    diffs.push_back(((metric == RankMetric::RR) ? pq.rr : pq.ap) - it->second);
  }

  double observed = 0.0;
  for (double d : diffs) observed += d;
  observed = std::abs(observed / static_cast<double>(diffs.size()));

  Rng rng = Rng(seed).fork("paired_significance");
  std::size_t count = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (double d : diffs) sum += rng.bernoulli(0.5) ? d : -d;
    if (std::abs(sum / static_cast<double>(diffs.size())) >= observed) ++count;
  }
  return static_cast<double>(count + 1) / static_cast<double>(resamples + 1);
}

// --- report writers -------------------------------------------------------

struct MetricsRow {
  std::string dataset, query_lang, target_lang, strategy;
  std::optional<double> alpha;
  double mrr = 0.0, map = 0.0;
  std::size_t n_queries = 0;
};

inline std::string metrics_csv_header() {
  return "dataset,query_lang,target_lang,strategy,alpha,mrr,map,n_queries\n";
}

inline std::string metrics_csv_row(const MetricsRow& r) {
  std::string out = r.dataset + ',' + r.query_lang + ',' + r.target_lang + ',' + r.strategy + ',';
  if (r.alpha) out += format_double(*r.alpha);
  out += ',' + format_double(r.mrr) + ',' + format_double(r.map) + ',' + std::to_string(r.n_queries) + '\n';
  return out;
}

inline void write_matrix_csv(const CrossMatrix& m, const std::string& path) {
  std::string out = "query_lang";
  for (const auto& lang : m.languages) out += ',' + lang;
  out += '\n';
  for (std::size_t i = 0; i < m.languages.size(); ++i) {
    out += m.languages[i];
    for (std::size_t j = 0; j < m.languages.size(); ++j)
      out += ',' + (m.mrr[i][j] ? format_double(*m.mrr[i][j]) : std::string());
    out += '\n';
  }
  write_file(path, out);
}

// Self-contained SVG heatmap: cells ramp from dark navy to bright yellow
// with the MRR value printed in each cell; absent cells are greyed.
inline void write_matrix_svg(const CrossMatrix& m, const std::string& path) {
  const std::size_t l = m.languages.size();
  const int cell = 72, margin = 96, legend = 28;
  const int width = margin + cell * static_cast<int>(l) + 16;
  const int height = margin + cell * static_cast<int>(l) + legend + 16;

  auto ramp = [](double v) {
    const int r0 = 22, g0 = 24, b0 = 60;      // dark navy
    const int r1 = 255, g1 = 235, b1 = 59;    // bright yellow
    const int r = r0 + static_cast<int>((r1 - r0) * v);
    const int g = g0 + static_cast<int>((g1 - g0) * v);
    const int b = b0 + static_cast<int>((b1 - b0) * v);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"monospace\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"8\" y=\"20\">MRR by (query language row, target language column)</text>\n";

  for (std::size_t j = 0; j < l; ++j)
    svg += "<text x=\"" + std::to_string(margin + static_cast<int>(j) * cell + cell / 2) +
           "\" y=\"" + std::to_string(margin - 10) + "\" text-anchor=\"middle\">" + m.languages[j] +
           "</text>\n";
  for (std::size_t i = 0; i < l; ++i)
    svg += "<text x=\"" + std::to_string(margin - 8) + "\" y=\"" +
           std::to_string(margin + static_cast<int>(i) * cell + cell / 2 + 4) +
           "\" text-anchor=\"end\">" + m.languages[i] + "</text>\n";

  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const int x = margin + static_cast<int>(j) * cell;
      const int y = margin + static_cast<int>(i) * cell;
      if (m.mrr[i][j]) {
        const double v = *m.mrr[i][j];
        char val[16];
        std::snprintf(val, sizeof(val), "%.3f", v);
        const bool bright = v > 0.55;
        svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
               std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" + ramp(v) +
               "\" stroke=\"white\"/>\n";
        svg += "<text x=\"" + std::to_string(x + cell / 2) + "\" y=\"" + std::to_string(y + cell / 2 + 4) +
               "\" text-anchor=\"middle\" fill=\"" + (bright ? "#1a1a2e" : "#ffffff") + "\">" + val +
               "</text>\n";
      } else {
        svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
               std::to_string(cell) + "\" height=\"" + std::to_string(cell) +
               "\" fill=\"#cccccc\" stroke=\"white\"/>\n";
        svg += "<text x=\"" + std::to_string(x + cell / 2) + "\" y=\"" + std::to_string(y + cell / 2 + 4) +
               "\" text-anchor=\"middle\" fill=\"#555555\">n/a</text>\n";
      }
    }
  }

  const int ly = margin + cell * static_cast<int>(l) + 18;
  svg += "<text x=\"8\" y=\"" + std::to_string(ly) + "\">0.0</text>\n";
  for (int s = 0; s < 40; ++s)
    svg += "<rect x=\"" + std::to_string(40 + s * 4) + "\" y=\"" + std::to_string(ly - 10) +
           "\" width=\"4\" height=\"12\" fill=\"" + ramp(s / 39.0) + "\"/>\n";
  svg += "<text x=\"" + std::to_string(40 + 40 * 4 + 6) + "\" y=\"" + std::to_string(ly) + "\">1.0</text>\n";
  svg += "</svg>\n";
  write_file(path, svg);
}

}  // namespace unicor
