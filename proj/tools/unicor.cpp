// unicor: contrastively trained cross-language code retrieval at desk
// scale. Pipeline: synth/ingest -> train -> embed -> eval -> report.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "unicor/config.hpp"
#include "unicor/corpus.hpp"
#include "unicor/metrics.hpp"
#include "unicor/retrieval.hpp"
#include "unicor/synth.hpp"
#include "unicor/trainer.hpp"

namespace {

using namespace unicor;

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool g_quiet = false;

void note(const std::string& line) {
  if (!g_quiet) std::cerr << line << "\n";
}

std::string dataset_name_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const std::string& in_path, const std::string& dataset, std::size_t cap,
               std::uint64_t seed, const std::string& out_path) {
  const std::string name = dataset.empty() ? dataset_name_of(in_path) : dataset;
  Corpus raw = ingest_jsonl(in_path, name);
  std::printf("ingested   %zu\n", raw.size());

  FilterResult filtered = filter_syntactic(raw);
  for (const std::string& w : filtered.warnings) std::cerr << w << "\n";
  std::printf("filtered   %zu (%zu warnings)\n", filtered.corpus.size(), filtered.warnings.size());

  Corpus capped = cap_per_problem(filtered.corpus, cap, seed);
  std::printf("capped     %zu (cap %zu per problem and language)\n", capped.size(), cap);

  Corpus final_corpus = dedup(capped);
  std::printf("deduped    %zu\n", final_corpus.size());

  if (final_corpus.empty()) throw CorpusError("no samples survived the screening pipeline");
  write_jsonl(final_corpus, out_path);
  note("wrote " + out_path);
  return 0;
}

// ----------------------------------------------------------------- synth

int cmd_synth(std::size_t problems, std::size_t languages, std::uint64_t seed,
              const std::string& out_path) {
  Corpus corpus = synth_corpus({problems, languages, seed});
  write_jsonl(corpus, out_path);
  std::printf("synthesized %zu samples (%zu problems x %zu languages)\n", corpus.size(), problems,
              languages);
  note("wrote " + out_path);
  return 0;
}

// ----------------------------------------------------------------- train

std::string loss_log_csv(const std::vector<LossReport>& log) {
  std::string out = "step,l_code2code,l_nl2nl,l_nl2code,l_mpcl,l_local,l_global,l_rpcl,l_total\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    const LossReport& r = log[i];
    out += std::to_string(i + 1);
    for (double v : {r.l_code2code, r.l_nl2nl, r.l_nl2code, r.l_mpcl, r.l_local, r.l_global,
                     r.l_rpcl, r.l_total})
      out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

nlohmann::json config_echo(const RunConfig& cfg) {
  nlohmann::json echo = nlohmann::json::object();
  std::string rendered = render_config(cfg);
  std::size_t begin = 0;
  while (begin < rendered.size()) {
    std::size_t end = rendered.find('\n', begin);
    std::string line = rendered.substr(begin, end - begin);
    begin = end + 1;
    auto eq = line.find('=');
    echo[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return echo;
}

void write_manifest(const std::string& path, const RunConfig& cfg, const Corpus& corpus,
                    const TrainResult& result, double wall_seconds) {
  nlohmann::json manifest;
  manifest["config"] = config_echo(cfg);
  manifest["corpus_fingerprint"] = hex64(corpus.fingerprint());
  manifest["checkpoint_fingerprint"] = hex64(checkpoint_fingerprint(result.checkpoint));
  manifest["steps"] = result.log.size();
  manifest["wall_clock_seconds"] = wall_seconds;
  nlohmann::json final_losses = nlohmann::json::object();
  if (!result.log.empty()) {
    const LossReport& r = result.log.back();
    final_losses = {{"l_code2code", r.l_code2code}, {"l_nl2nl", r.l_nl2nl},
                    {"l_nl2code", r.l_nl2code},     {"l_mpcl", r.l_mpcl},
                    {"l_local", r.l_local},         {"l_global", r.l_global},
                    {"l_rpcl", r.l_rpcl},           {"l_total", r.l_total}};
  }
  manifest["final_losses"] = final_losses;
  write_file(path, manifest.dump(2) + "\n");
}

// average cross-language MRR/MAP over all ordered pairs for one strategy
std::pair<double, double> cross_language_average(const EmbeddingStore& store, Strategy strategy,
                                                 const Checkpoint* ckpt, const Corpus* corpus,
                                                 double alpha) {
  double mrr = 0.0, map = 0.0;
  std::size_t n = 0;
  std::vector<std::string> langs = store.languages();
  for (const auto& a : langs) {
    for (const auto& b : langs) {
      if (a == b) continue;
      try {
        EvalResult r = evaluate_scenario(store, {a, b, strategy, alpha}, ckpt, corpus);
        mrr += r.mrr;
        map += r.map;
        ++n;
      } catch (const MetricsError&) {
      }
    }
  }
  if (n == 0) throw MetricsError("no eligible cross-language scenario");
  return {mrr / static_cast<double>(n), map / static_cast<double>(n)};
}

int cmd_train(RunConfig cfg, const std::string& sweep, std::vector<std::size_t> sweep_values) {
  if (cfg.corpus_path.empty()) throw CliError("train requires --corpus");
  if (cfg.out_path.empty()) throw CliError("train requires --out");
  Corpus corpus = ingest_jsonl(cfg.corpus_path, dataset_name_of(cfg.corpus_path));
  if (corpus.languages().size() == 1)
    note("warning: single-language corpus; batches degenerate to intra-language pairs");

  if (!sweep.empty()) {
    if (sweep_values.empty())
      sweep_values = (sweep == "batch") ? std::vector<std::size_t>{8, 16, 32}
                                        : std::vector<std::size_t>{600, 2048, 6200};
    std::sort(sweep_values.begin(), sweep_values.end());
    std::string csv = "param,value,steps,l_total,remix_mrr,remix_map,code2code_mrr,code2code_map\n";
    for (std::size_t value : sweep_values) {
      RunConfig run_cfg = cfg;
      if (sweep == "batch")
        run_cfg.batch_tuples = value;
      else
        run_cfg.queue_capacity = value;
      note("sweep " + sweep + " = " + std::to_string(value));
      TrainResult result = train(run_cfg.to_train_config(), corpus);
      EmbeddingStore store =
          embed_corpus(result.checkpoint, corpus, run_cfg.code_max_len, run_cfg.nl_max_len);
      auto [remix_mrr, remix_map] =
          cross_language_average(store, Strategy::Remix, &result.checkpoint, &corpus, cfg.alpha);
      auto [c2c_mrr, c2c_map] =
          cross_language_average(store, Strategy::Code2Code, nullptr, nullptr, cfg.alpha);
      csv += sweep + ',' + std::to_string(value) + ',' + std::to_string(result.log.size()) + ',' +
             format_double(result.log.empty() ? 0.0 : result.log.back().l_total) + ',' +
             format_double(remix_mrr) + ',' + format_double(remix_map) + ',' +
             format_double(c2c_mrr) + ',' + format_double(c2c_map) + '\n';
    }
    write_file(cfg.out_path, csv);
    std::printf("sweep complete: %zu rows -> %s\n", sweep_values.size(), cfg.out_path.c_str());
    return 0;
  }

  const auto start = std::chrono::steady_clock::now();
  TrainResult result = train(cfg.to_train_config(), corpus);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_checkpoint(cfg.out_path, result.checkpoint);
  write_file(cfg.out_path + ".log.csv", loss_log_csv(result.log));
  write_manifest(cfg.out_path + ".manifest.json", cfg, corpus, result, wall);

  if (!result.log.empty())
    std::printf("trained %zu steps: l_total %s -> %s\n", result.log.size(),
                format_double(result.log.front().l_total).c_str(),
                format_double(result.log.back().l_total).c_str());
  else
    std::printf("trained 0 steps (checkpoint is the initialization)\n");
  note("wrote " + cfg.out_path + " (+ .log.csv, .manifest.json)");
  return 0;
}

// ----------------------------------------------------------------- embed

int cmd_embed(const RunConfig& cfg, bool force, const std::string& export_csv) {
  Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path);
  Corpus corpus = ingest_jsonl(cfg.corpus_path, dataset_name_of(cfg.corpus_path));

  if (std::filesystem::exists(cfg.out_path) && !force) {
    EmbeddingStore existing = load_store(cfg.out_path);
    if (existing.fingerprint() != checkpoint_fingerprint(ckpt))
      throw CliError("store " + cfg.out_path +
                     " was produced by a different checkpoint; pass --force to overwrite");
  }

  EmbeddingStore store = embed_corpus(ckpt, corpus, cfg.code_max_len, cfg.nl_max_len);
  save_store(cfg.out_path, store);
  if (!export_csv.empty()) export_store_csv(store, export_csv);
  std::printf("embedded %zu samples (dim %zu) -> %s\n", store.size(), store.dim(),
              cfg.out_path.c_str());
  return 0;
}

// ------------------------------------------------------------------ eval

std::vector<Strategy> parse_strategies(const std::string& csv) {
  std::vector<Strategy> out;
  std::size_t begin = 0;
  while (begin <= csv.size()) {
    std::size_t end = csv.find(',', begin);
    if (end == std::string::npos) end = csv.size();
    std::string name = csv.substr(begin, end - begin);
    if (!name.empty()) {
      auto strategy = strategy_from_name(name);
      if (!strategy) throw CliError("unknown strategy: '" + name + "'");
      out.push_back(*strategy);
    }
    begin = end + 1;
    if (end == csv.size()) break;
  }
  if (out.empty()) throw CliError("no strategies requested");
  return out;
}

int cmd_eval(const RunConfig& cfg, const std::vector<std::string>& store_paths,
             const std::string& strategies_csv, bool gridsearch, const std::string& heatmap_path,
             bool significance, const std::string& significance_metric) {
  std::vector<Strategy> strategies = parse_strategies(strategies_csv);

  const bool wants_remix =
      std::find(strategies.begin(), strategies.end(), Strategy::Remix) != strategies.end();
  std::optional<Checkpoint> ckpt;
  std::optional<Corpus> corpus;
  if (!cfg.checkpoint_path.empty()) ckpt = load_checkpoint(cfg.checkpoint_path);
  if (!cfg.corpus_path.empty())
    corpus = ingest_jsonl(cfg.corpus_path, dataset_name_of(cfg.corpus_path));
  if (wants_remix && (!ckpt || !corpus))
    throw CliError("remix evaluation requires --checkpoint and --corpus");
  if (wants_remix)
    note("note: remix queries are NL-first, separator, then code, truncated to the " +
         std::to_string(cfg.code_max_len) + "-token code budget");

  std::string csv = metrics_csv_header();
  std::string weights_csv = "dataset,query_lang,target_lang,alpha_star,mrr_at_best,map_at_best\n";
  std::vector<WeightReportEntry> weight_entries;

  for (const std::string& store_path : store_paths) {
    EmbeddingStore store = load_store(store_path);
    const std::string dataset = dataset_name_of(store_path);
    if (ckpt && store.fingerprint() != checkpoint_fingerprint(*ckpt))
      note("note: store " + store_path + " was not produced by --checkpoint");

    std::vector<std::string> langs = store.languages();
    std::vector<double> alpha_stars;
    for (const std::string& qlang : langs) {
      for (const std::string& tlang : langs) {
        for (Strategy strategy : strategies) {
          Scenario sc{qlang, tlang, strategy, cfg.alpha};
          try {
            EvalResult r =
                evaluate_scenario(store, sc, ckpt ? &*ckpt : nullptr, corpus ? &*corpus : nullptr);
            MetricsRow row{dataset,
                           qlang,
                           tlang,
                           strategy_name(strategy),
                           strategy == Strategy::Weight ? std::optional<double>(cfg.alpha)
                                                        : std::nullopt,
                           r.mrr,
                           r.map,
                           r.n_queries};
            csv += metrics_csv_row(row);
          } catch (const MetricsError&) {
            // no eligible queries in this cell
          }
        }
        if (gridsearch && qlang != tlang) {
          try {
            AlphaSearchResult res = grid_search_alpha(
                store, {qlang, tlang, Strategy::Weight, cfg.alpha}, cfg.grid_step);
            weights_csv += dataset + ',' + qlang + ',' + tlang + ',' +
                           format_double(res.best_alpha) + ',' + format_double(res.mrr_at_best) +
                           ',' + format_double(res.map_at_best) + '\n';
            alpha_stars.push_back(res.best_alpha);
          } catch (const MetricsError&) {
          }
        }
      }
    }
    if (gridsearch && !alpha_stars.empty()) {
      double mean = 0.0;
      for (double a : alpha_stars) mean += a;
      mean /= static_cast<double>(alpha_stars.size());
      weight_entries.push_back({dataset, mean, 0.0, 0.0});
    }
  }

  write_file(cfg.out_path, csv);
  note("wrote " + cfg.out_path);

  if (gridsearch) {
    if (!weight_entries.empty()) {
      WeightReport report = aggregate_weight_report(weight_entries);
      weights_csv += "# aggregate mean_alpha=" + format_double(report.mean_alpha) +
                     " std_alpha=" + format_double(report.std_alpha) + "\n";
      std::printf("alpha* mean %s (std %s over %zu datasets)\n",
                  format_double(report.mean_alpha).c_str(),
                  format_double(report.std_alpha).c_str(), report.per_dataset.size());
    }
    write_file(cfg.out_path + ".weights.csv", weights_csv);
    note("wrote " + cfg.out_path + ".weights.csv");
  }

  if (!heatmap_path.empty()) {
    EmbeddingStore store = load_store(store_paths.front());
    CrossMatrix matrix =
        cross_language_matrix(store, strategies.front(), store.languages(),
                              ckpt ? &*ckpt : nullptr, corpus ? &*corpus : nullptr, cfg.alpha);
    write_matrix_svg(matrix, heatmap_path);
    std::filesystem::path csv_path(heatmap_path);
    csv_path.replace_extension(".csv");
    write_matrix_csv(matrix, csv_path.string());
    note("wrote " + heatmap_path + " and " + csv_path.string());
  }

  if (significance) {
    if (store_paths.size() != 2) throw CliError("--significance compares exactly two stores");
    EmbeddingStore store_a = load_store(store_paths[0]);
    EmbeddingStore store_b = load_store(store_paths[1]);
    RankMetric metric = significance_metric == "map" ? RankMetric::AP : RankMetric::RR;
    std::string sig_csv = "query_lang,target_lang,strategy,metric_a,metric_b,p_value\n";
    for (const std::string& qlang : store_a.languages()) {
      for (const std::string& tlang : store_a.languages()) {
        for (Strategy strategy : strategies) {
          if (strategy == Strategy::Remix) continue;  // would need per-store checkpoints
          Scenario sc{qlang, tlang, strategy, cfg.alpha};
          try {
            EvalResult ra = evaluate_scenario(store_a, sc);
            EvalResult rb = evaluate_scenario(store_b, sc);
            double p = paired_significance(ra, rb, metric, 100000, cfg.seed);
            const double ma = metric == RankMetric::RR ? ra.mrr : ra.map;
            const double mb = metric == RankMetric::RR ? rb.mrr : rb.map;
            sig_csv += qlang + ',' + tlang + ',' + strategy_name(strategy) + ',' +
                       format_double(ma) + ',' + format_double(mb) + ',' + format_double(p) + '\n';
            std::printf("SIG %s->%s %s: %s vs %s, p = %s\n", qlang.c_str(), tlang.c_str(),
                        strategy_name(strategy), format_double(ma).c_str(),
                        format_double(mb).c_str(), format_double(p).c_str());
          } catch (const MetricsError&) {
          }
        }
      }
    }
    write_file(cfg.out_path + ".significance.csv", sig_csv);
    note("wrote " + cfg.out_path + ".significance.csv");
  }
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportKey {
  std::string dataset, qlang, tlang;
  bool operator<(const ReportKey& o) const {
    return std::tie(dataset, qlang, tlang) < std::tie(o.dataset, o.qlang, o.tlang);
  }
};

int cmd_report(const std::vector<std::string>& in_paths, const std::string& out_path) {
  const std::vector<std::string> strategy_order{"nl2code", "nl2nl", "code2code",
                                                "remix",   "concat", "weight"};
  std::map<ReportKey, std::map<std::string, std::pair<double, double>>> table;

  for (const std::string& path : in_paths) {
    std::string text = slurp_file(path);
    std::size_t begin = 0;
    bool header = true;
    while (begin < text.size()) {
      std::size_t end = text.find('\n', begin);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(begin, end - begin);
      begin = end + 1;
      if (header) {
        header = false;
        continue;
      }
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
      if (cells.size() != 8) throw CliError("malformed metrics row in " + path + ": " + line);
      table[{cells[0], cells[1], cells[2]}][cells[3]] = {std::stod(cells[5]), std::stod(cells[6])};
    }
  }

  std::string md = "# Retrieval summary\n\nMRR / MAP per scenario, in percent.\n\n";
  md += "| dataset | query | target |";
  for (const auto& s : strategy_order) md += " " + s + " MRR | " + s + " MAP |";
  md += "\n|---|---|---|";
  for (std::size_t i = 0; i < strategy_order.size() * 2; ++i) md += "---|";
  md += "\n";
  char cell[32];
  for (const auto& [key, per_strategy] : table) {
    md += "| " + key.dataset + " | " + key.qlang + " | " + key.tlang + " |";
    for (const auto& s : strategy_order) {
      auto it = per_strategy.find(s);
      if (it == per_strategy.end()) {
        md += " - | - |";
      } else {
        std::snprintf(cell, sizeof(cell), " %.2f |", it->second.first * 100.0);
        md += cell;
        std::snprintf(cell, sizeof(cell), " %.2f |", it->second.second * 100.0);
        md += cell;
      }
    }
    md += "\n";
  }
  write_file(out_path, md);
  std::printf("report over %zu scenario rows -> %s\n", table.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unicor: cross-language hybrid code retrieval (train, embed, evaluate)"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--seed", seed_flag, "master seed (overrides config)");
  app.add_flag("--quiet", g_quiet, "suppress progress notes");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "screen a JSONL dataset into a corpus file");
  std::string in_path, dataset, out_path;
  std::size_t cap = 10;
  ingest->add_option("--in", in_path, "input JSONL")->required();
  ingest->add_option("--dataset", dataset, "dataset name (default: file stem)");
  ingest->add_option("--cap", cap, "per (problem, language) cap")->capture_default_str();
  ingest->add_option("--out", out_path, "output corpus JSONL")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic multilingual corpus");
  std::size_t problems = 80, languages = 3;
  std::string synth_out;
  synth->add_option("--problems", problems, "number of problems")->capture_default_str();
  synth->add_option("--languages", languages, "number of toy languages (2-4)")->capture_default_str();
  synth->add_option("--out", synth_out, "output corpus JSONL")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train an encoder on a corpus");
  std::string train_corpus, train_out, preset, sweep;
  std::vector<std::size_t> sweep_values;
  std::vector<std::string> ablate;
  std::optional<std::size_t> steps_flag, batch_flag, queue_flag;
  std::optional<double> lr_flag, momentum_flag;
  train_cmd->add_option("--corpus", train_corpus, "corpus JSONL")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
  train_cmd->add_option("--steps", steps_flag, "training steps");
  train_cmd->add_option("--batch", batch_flag, "tuples per batch");
  train_cmd->add_option("--queue", queue_flag, "queue capacity");
  train_cmd->add_option("--lr", lr_flag, "learning rate");
  train_cmd->add_option("--momentum", momentum_flag, "key-encoder momentum");
  train_cmd->add_option("--preset", preset, "named preset: paper");
  train_cmd->add_option("--ablate", ablate, "disable a component: mpcl_intra|rpcl|augment")
      ->delimiter(',');
  train_cmd->add_option("--sweep", sweep, "sweep a hyperparameter: batch|queue");
  train_cmd->add_option("--sweep-values", sweep_values, "explicit sweep values")->delimiter(',');

  // embed
  auto* embed = app.add_subcommand("embed", "embed a corpus with a checkpoint");
  std::string embed_ckpt, embed_corpus_path, embed_out, export_csv;
  bool force = false;
  embed->add_option("--checkpoint", embed_ckpt, "checkpoint file")->required();
  embed->add_option("--corpus", embed_corpus_path, "corpus JSONL")->required();
  embed->add_option("--out", embed_out, "embedding store output")->required();
  embed->add_flag("--force", force, "overwrite a store from a different checkpoint");
  embed->add_option("--export-csv", export_csv, "also export the store as CSV");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate retrieval strategies over stores");
  std::vector<std::string> stores, report_inputs;
  std::string eval_out, strategies_csv = "nl2code,nl2nl,code2code,remix,concat,weight";
  std::string eval_ckpt, eval_corpus, heatmap_path, significance_metric = "mrr";
  bool gridsearch = false, significance = false;
  std::optional<double> alpha_flag;
  eval->add_option("--store", stores, "embedding store file (repeatable)")->required();
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint (required for remix)");
  eval->add_option("--corpus", eval_corpus, "corpus JSONL (required for remix)");
  eval->add_option("--strategies", strategies_csv, "comma list of strategies")->capture_default_str();
  eval->add_option("--alpha", alpha_flag, "weight fusion coefficient");
  eval->add_flag("--gridsearch", gridsearch, "grid-search alpha and emit a weight report");
  eval->add_option("--heatmap", heatmap_path, "write an SVG heatmap (plus CSV matrix)");
  eval->add_flag("--significance", significance, "paired permutation test over two stores");
  eval->add_option("--significance-metric", significance_metric, "mrr|map")->capture_default_str();
  eval->add_option("--out", eval_out, "metrics CSV output")->required();

  // report
  auto* report = app.add_subcommand("report", "render metrics CSVs into a markdown summary");
  std::string report_out;
  report->add_option("--in", report_inputs, "metrics CSV (repeatable)")->required();
  report->add_option("--out", report_out, "summary markdown path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits 0; any parse failure is a usage error
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!preset.empty()) {
      if (preset != "paper") throw CliError("unknown preset: '" + preset + "'");
      apply_paper_preset(cfg);
    }
    if (seed_flag) cfg.seed = *seed_flag;

    if (ingest->parsed()) return cmd_ingest(in_path, dataset, cap, cfg.seed, out_path);

    if (synth->parsed()) return cmd_synth(problems, languages, cfg.seed, synth_out);

    if (train_cmd->parsed()) {
      cfg.corpus_path = train_corpus;
      cfg.out_path = train_out;
      if (steps_flag) cfg.steps = *steps_flag;
      if (batch_flag) cfg.batch_tuples = *batch_flag;
      if (queue_flag) cfg.queue_capacity = *queue_flag;
      if (lr_flag) cfg.lr = *lr_flag;
      if (momentum_flag) cfg.momentum = *momentum_flag;
      for (const std::string& a : ablate) {
        if (a == "mpcl_intra")
          cfg.disable_mpcl_intra = true;
        else if (a == "rpcl")
          cfg.disable_rpcl = true;
        else if (a == "augment")
          cfg.disable_augmentation = true;
        else
          throw CliError("unknown ablation: '" + a + "' (want mpcl_intra|rpcl|augment)");
      }
      if (!sweep.empty() && sweep != "batch" && sweep != "queue")
        throw CliError("unknown sweep: '" + sweep + "' (want batch|queue)");
      return cmd_train(cfg, sweep, sweep_values);
    }

    if (embed->parsed()) {
      cfg.checkpoint_path = embed_ckpt;
      cfg.corpus_path = embed_corpus_path;
      cfg.out_path = embed_out;
      return cmd_embed(cfg, force, export_csv);
    }

    if (eval->parsed()) {
      if (!eval_ckpt.empty()) cfg.checkpoint_path = eval_ckpt;
      if (!eval_corpus.empty()) cfg.corpus_path = eval_corpus;
      cfg.out_path = eval_out;
      if (alpha_flag) cfg.alpha = *alpha_flag;
      return cmd_eval(cfg, stores, strategies_csv, gridsearch, heatmap_path, significance,
                      significance_metric);
    }

    if (report->parsed()) return cmd_report(report_inputs, report_out);

    throw CliError("no subcommand selected");
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    // a diverged optimization is an internal failure; bad inputs are usage errors
    return std::string(e.what()).find("non-finite") != std::string::npos ? 1 : 2;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CorpusError& e) {
    std::cerr << "corpus error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const RetrievalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MetricsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
