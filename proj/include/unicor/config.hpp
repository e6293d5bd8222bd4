#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "unicor/io.hpp"
#include "unicor/trainer.hpp"

namespace unicor {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One flat key=value configuration covering training, augmentation, loss
// and path settings. Every key has a default, unknown keys are rejected,
// and parse(render(c)) == c holds exactly.
struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t dim = 64;
  std::size_t max_vocab = 8192;
  std::size_t code_max_len = 256;
  std::size_t nl_max_len = 128;

  double temperature = 0.07;
  std::vector<double> sigmas = {0.6, 1.2, 2.4};
  bool nl2code_bidirectional = true;

  std::size_t batch_tuples = 8;
  std::size_t steps = 300;
  double lr = 1e-3;
  double momentum = 0.95;
  std::size_t queue_capacity = 1024;

  double p_mask = 0.15;
  double rename_fraction = 0.5;
  bool use_comments = true;
  double comment_swap_p = 0.5;

  bool disable_mpcl_intra = false;
  bool disable_rpcl = false;
  bool disable_augmentation = false;

  std::size_t cap_per_problem = 10;
  double alpha = 0.5;      // Weight fusion coefficient for eval
  double grid_step = 0.01;

  std::string corpus_path;
  std::string checkpoint_path;
  std::string store_path;
  std::string out_path;

  bool operator==(const RunConfig&) const = default;

  TrainConfig to_train_config() const {
    TrainConfig t;
    t.batch_tuples = batch_tuples;
    t.steps = steps;
    t.lr = lr;
    t.momentum = momentum;
    t.queue_capacity = queue_capacity;
    t.dim = dim;
    t.max_vocab = max_vocab;
    t.code_max_len = code_max_len;
    t.nl_max_len = nl_max_len;
    t.loss.temperature = temperature;
    t.loss.sigmas = sigmas;
    t.loss.nl2code_bidirectional = nl2code_bidirectional;
    t.augment.p_mask = p_mask;
    t.augment.rename_fraction = rename_fraction;
    t.augment.use_comments = use_comments;
    t.augment.comment_swap_p = comment_swap_p;
    t.seed = seed;
    t.disable_mpcl_intra = disable_mpcl_intra;
    t.disable_rpcl = disable_rpcl;
    t.disable_augmentation = disable_augmentation;
    return t;
  }
};

// Records the paper-scale hyperparameters for documentation runs; the
// remaining defaults stay desk-scale.
inline void apply_paper_preset(RunConfig& cfg) {
  cfg.lr = 2e-5;
  cfg.batch_tuples = 40;
}

namespace configdetail {

struct Field {
  std::string name;
  std::function<std::string(const RunConfig&)> render;
  std::function<void(RunConfig&, const std::string&)> parse;
};

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("invalid number: '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("invalid integer: '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("invalid bool (want true/false): '" + s + "'");
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::size_t begin = 0;
  while (begin <= s.size()) {
    std::size_t end = s.find(',', begin);
    if (end == std::string::npos) end = s.size();
    std::string item = s.substr(begin, end - begin);
    if (!item.empty()) out.push_back(parse_double(item));
    begin = end + 1;
    if (end == s.size()) break;
  }
  if (out.empty()) throw ConfigError("empty list: '" + s + "'");
  return out;
}

inline std::string render_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto num = [&f](const char* name, auto member) {
      f.push_back({name, [member](const RunConfig& c) { return format_double(c.*member); },
                   [member](RunConfig& c, const std::string& s) { c.*member = parse_double(s); }});
    };
    auto uns = [&f](const char* name, auto member) {
      f.push_back({name,
                   [member](const RunConfig& c) { return std::to_string(c.*member); },
                   [member](RunConfig& c, const std::string& s) {
                     c.*member = static_cast<std::remove_reference_t<decltype(std::declval<RunConfig>().*member)>>(
                         parse_uint(s));
                   }});
    };
    auto flag = [&f](const char* name, auto member) {
      f.push_back({name, [member](const RunConfig& c) { return (c.*member) ? "true" : "false"; },
                   [member](RunConfig& c, const std::string& s) { c.*member = parse_bool(s); }});
    };
    auto str = [&f](const char* name, auto member) {
      f.push_back({name, [member](const RunConfig& c) { return c.*member; },
                   [member](RunConfig& c, const std::string& s) { c.*member = s; }});
    };

    uns("seed", &RunConfig::seed);
    uns("dim", &RunConfig::dim);
    uns("max_vocab", &RunConfig::max_vocab);
    uns("code_max_len", &RunConfig::code_max_len);
    uns("nl_max_len", &RunConfig::nl_max_len);
    num("temperature", &RunConfig::temperature);
    f.push_back({"sigmas",
                 [](const RunConfig& c) { return render_double_list(c.sigmas); },
                 [](RunConfig& c, const std::string& s) { c.sigmas = parse_double_list(s); }});
    flag("nl2code_bidirectional", &RunConfig::nl2code_bidirectional);
    uns("batch_tuples", &RunConfig::batch_tuples);
    uns("steps", &RunConfig::steps);
    num("lr", &RunConfig::lr);
    num("momentum", &RunConfig::momentum);
    uns("queue_capacity", &RunConfig::queue_capacity);
    num("p_mask", &RunConfig::p_mask);
    num("rename_fraction", &RunConfig::rename_fraction);
    flag("use_comments", &RunConfig::use_comments);
    num("comment_swap_p", &RunConfig::comment_swap_p);
    flag("disable_mpcl_intra", &RunConfig::disable_mpcl_intra);
    flag("disable_rpcl", &RunConfig::disable_rpcl);
    flag("disable_augmentation", &RunConfig::disable_augmentation);
    uns("cap_per_problem", &RunConfig::cap_per_problem);
    num("alpha", &RunConfig::alpha);
    num("grid_step", &RunConfig::grid_step);
    str("corpus_path", &RunConfig::corpus_path);
    str("checkpoint_path", &RunConfig::checkpoint_path);
    str("store_path", &RunConfig::store_path);
    str("out_path", &RunConfig::out_path);
    return f;
  }();
  return table;
}

}  // namespace configdetail

inline std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& field : configdetail::fields()) out += field.name + "=" + field.render(cfg) + "\n";
  return out;
}

inline void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& field : configdetail::fields()) {
    if (field.name == key) {
      field.parse(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key: '" + key + "'");
}

// Lines of "key=value"; '#' starts a comment, blank lines are skipped.
inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(begin, end - begin));
    ++line_no;
    begin = end + 1;

    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string stripped = corpusdetail::trimmed(line);
    if (!stripped.empty()) {
      auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
      std::string key = corpusdetail::trimmed(stripped.substr(0, eq));
      std::string value = corpusdetail::trimmed(stripped.substr(eq + 1));
      try {
        apply_config_line(cfg, key, value);
      } catch (const ConfigError& e) {
        throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == text.size()) break;
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) { return parse_config(slurp_file(path)); }

}  // namespace unicor
