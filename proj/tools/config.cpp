// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/cli/config.hpp"

#include <fstream>
#include <set>

#include "promptlab/error.hpp"
#include "promptlab/priors/samplers.hpp"
#include "promptlab/tuner/prompt.hpp"

namespace promptlab::cli {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    out = convert<T>(*it, path_ + "." + key);
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    out = convert<T>(*it, path_ + "." + key);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError("unknown config key '" + path_ + "." + k + "'");
  }

 private:
  template <typename T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(where + ": expected a non-negative integer");
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return std::filesystem::path(v.get<std::string>());
    } else {
      if (!v.is_array()) throw ConfigError(where + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void section(Section& parent, const char* key, const std::string& path, F&& body) {
  if (const json* c = parent.child(key)) {
    Section s(*c, path + "." + key);
    body(s);
    s.finish();
  }
}

}  // namespace

std::string ActivationSource::str() const {
  if (embedding) return "embedding";
  return std::string(tasks::task_name(task)) + ":" + std::to_string(level);
}

ActivationSource parse_source(const std::string& text) {
  ActivationSource s;
  if (text == "embedding") {
    s.embedding = true;
    return s;
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon + 1 == text.size())
    throw ConfigError("activation source '" + text + "' must be 'embedding' or '<TASK>:<level>'");
  try {
    s.task = tasks::parse_task(text.substr(0, colon));
  } catch (const FormatError&) {
    throw ConfigError("activation source '" + text + "' names an unknown task");
  }
  try {
    std::size_t used = 0;
    const auto level = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    s.level = level;
  } catch (const std::exception&) {
    throw ConfigError("activation source '" + text + "' has a bad level");
  }
  return s;
}

void Config::validate() const {
  auto m = model;
  m.vocab_size = 1;
  m.validate();
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  need(lr > 0.0, "lr must be positive");
  need(data.pretrain_examples >= 10, "data.pretrain_examples must be at least 10");
  need(data.qa_examples >= 10, "data.qa_examples must be at least 10");
  need(data.lm_sentences >= 2, "data.lm_sentences must be at least 2");
  need(data.arith_examples >= 2, "data.arith_examples must be at least 2");
  need(data.pretrain_val_permille > 0 && data.pretrain_val_permille < 1000,
       "data.pretrain_val_permille must be in (0, 1000)");
  need(data.qa_val_permille > 0 && data.qa_val_permille < 1000,
       "data.qa_val_permille must be in (0, 1000)");
  need(data.arith_digits >= 1 && data.arith_digits <= 6, "data.arith_digits must be in [1, 6]");
  need(pretrain.steps > 0 && pretrain.batch > 0 && pretrain.lr > 0.0 && pretrain.eval_every > 0,
       "pretrain.steps, batch, lr and eval_every must be positive");
  tuner::parse_mode(tune.mode);
  priors::parse_prior(tune.prior);
  need(tune.prompt_length > 0, "tune.prompt_length must be positive");
  need(tune.deep_layers >= 1 && tune.deep_layers <= model.n_layers,
       "tune.deep_layers must be in [1, model.n_layers]");
  need(tune.steps > 0 && tune.batch > 0 && tune.eval_every > 0,
       "tune.steps, batch and eval_every must be positive");
  need(tune.min_delta >= 0.0, "tune.min_delta must be non-negative");
  need(prior.sigma >= 0.0, "prior.sigma must be non-negative");
  need(prior.c > 1.0, "prior.c must exceed 1");
  need(prior.max_draws > 0, "prior.max_draws must be positive");
  need(prior.fit_sequences >= 2, "prior.fit_sequences must be at least 2");
  need(!prior.alpha || (*prior.alpha >= 0.0 && *prior.alpha <= 1.0), "prior.alpha must be in [0, 1]");
  priors::parse_cdim_rule(prior.rule);
  for (const auto* src : {&prior.fit_source, &prior.interpolation_first, &prior.interpolation_second}) {
    const auto s = parse_source(*src);
    need(s.embedding || s.level <= model.n_layers,
         "activation source '" + *src + "' is past the last block");
  }
  need(!sweep.priors.empty() && !sweep.lrs.empty() && !sweep.modes.empty(),
       "sweep.priors, sweep.lrs and sweep.modes must be non-empty");
  for (const auto& p : sweep.priors) priors::parse_prior(p);
  for (double v : sweep.lrs) need(v > 0.0, "sweep.lrs must be positive");
  for (const auto& m2 : sweep.modes) tuner::parse_mode(m2);
  need(analysis.sequences >= 2, "analysis.sequences must be at least 2");
  need(analysis_level() <= model.n_layers, "analysis.level is past the last block");
  need(analysis.trajectory_sentences >= 1, "analysis.trajectory_sentences must be positive");
  need(analysis.walk_steps >= 2, "analysis.walk_steps must be at least 2");
  need(analysis.walk_support == "corpus" || analysis.walk_support == "alphabet",
       "analysis.walk_support must be \"corpus\" or \"alphabet\"");
}

Config parse_config(const nlohmann::json& j) {
  Config c;
  Section top(j, "config");
  std::optional<int> version;
  top.read("schema_version", version);
  if (!version) throw ConfigError("config.schema_version is required");
  if (*version != kSchemaVersion)
    throw ConfigError("config.schema_version " + std::to_string(*version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  top.read("seed", c.seed);
  top.read("out", c.out);
  top.read("lr", c.lr);
  const std::string p = "config";
  section(top, "model", p, [&](Section& s) {
    s.read("n_layers", c.model.n_layers);
    s.read("d_model", c.model.d_model);
    s.read("n_heads", c.model.n_heads);
    s.read("d_ff", c.model.d_ff);
    s.read("max_seq", c.model.max_seq);
  });
  section(top, "data", p, [&](Section& s) {
    s.read("pretrain_examples", c.data.pretrain_examples);
    s.read("pretrain_val_permille", c.data.pretrain_val_permille);
    s.read("qa_examples", c.data.qa_examples);
    s.read("qa_val_permille", c.data.qa_val_permille);
    s.read("lm_sentences", c.data.lm_sentences);
    s.read("arith_examples", c.data.arith_examples);
    s.read("arith_digits", c.data.arith_digits);
  });
  section(top, "pretrain", p, [&](Section& s) {
    s.read("steps", c.pretrain.steps);
    s.read("batch", c.pretrain.batch);
    s.read("lr", c.pretrain.lr);
    s.read("eval_every", c.pretrain.eval_every);
    s.read("max_val_examples", c.pretrain.max_val_examples);
  });
  section(top, "tune", p, [&](Section& s) {
    s.read("mode", c.tune.mode);
    s.read("prior", c.tune.prior);
    s.read("prompt_length", c.tune.prompt_length);
    s.read("deep_layers", c.tune.deep_layers);
    s.read("truncate", c.tune.truncate);
    s.read("steps", c.tune.steps);
    s.read("batch", c.tune.batch);
    s.read("eval_every", c.tune.eval_every);
    s.read("patience", c.tune.patience);
    s.read("min_delta", c.tune.min_delta);
    s.read("max_val_examples", c.tune.max_val_examples);
    s.read("replicate", c.tune.replicate);
  });
  section(top, "prior", p, [&](Section& s) {
    s.read("sigma", c.prior.sigma);
    s.read("fit_source", c.prior.fit_source);
    s.read("interpolation_first", c.prior.interpolation_first);
    s.read("interpolation_second", c.prior.interpolation_second);
    s.read("alpha", c.prior.alpha);
    s.read("c", c.prior.c);
    s.read("rule", c.prior.rule);
    s.read("max_draws", c.prior.max_draws);
    s.read("fit_sequences", c.prior.fit_sequences);
  });
  section(top, "sweep", p, [&](Section& s) {
    s.read("priors", c.sweep.priors);
    s.read("lrs", c.sweep.lrs);
    s.read("modes", c.sweep.modes);
  });
  section(top, "analysis", p, [&](Section& s) {
    s.read("sequences", c.analysis.sequences);
    s.read("level", c.analysis.level);
    s.read("trajectory_sentences", c.analysis.trajectory_sentences);
    s.read("walk_steps", c.analysis.walk_steps);
    s.read("walk_support", c.analysis.walk_support);
  });
  top.finish();
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json to_json(const Config& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["lr"] = c.lr;
  j["model"] = {{"n_layers", c.model.n_layers}, {"d_model", c.model.d_model},
                {"n_heads", c.model.n_heads}, {"d_ff", c.model.d_ff}, {"max_seq", c.model.max_seq}};
  j["data"] = {{"pretrain_examples", c.data.pretrain_examples},
               {"pretrain_val_permille", c.data.pretrain_val_permille},
               {"qa_examples", c.data.qa_examples},
               {"qa_val_permille", c.data.qa_val_permille},
               {"lm_sentences", c.data.lm_sentences},
               {"arith_examples", c.data.arith_examples},
               {"arith_digits", c.data.arith_digits}};
  j["pretrain"] = {{"steps", c.pretrain.steps}, {"batch", c.pretrain.batch}, {"lr", c.pretrain.lr},
                   {"eval_every", c.pretrain.eval_every},
                   {"max_val_examples", c.pretrain.max_val_examples}};
  j["tune"] = {{"mode", c.tune.mode}, {"prior", c.tune.prior},
               {"prompt_length", c.tune.prompt_length}, {"deep_layers", c.tune.deep_layers},
               {"truncate", c.tune.truncate}, {"steps", c.tune.steps}, {"batch", c.tune.batch},
               {"eval_every", c.tune.eval_every}, {"patience", c.tune.patience},
               {"min_delta", c.tune.min_delta}, {"max_val_examples", c.tune.max_val_examples},
               {"replicate", c.tune.replicate}};
  j["prior"] = {{"sigma", c.prior.sigma},
                {"fit_source", c.prior.fit_source},
                {"interpolation_first", c.prior.interpolation_first},
                {"interpolation_second", c.prior.interpolation_second},
                {"alpha", c.prior.alpha ? nlohmann::ordered_json(*c.prior.alpha) : nlohmann::ordered_json()},
                {"c", c.prior.c},
                {"rule", c.prior.rule},
                {"max_draws", c.prior.max_draws},
                {"fit_sequences", c.prior.fit_sequences}};
  j["sweep"] = {{"priors", c.sweep.priors}, {"lrs", c.sweep.lrs}, {"modes", c.sweep.modes}};
  j["analysis"] = {{"sequences", c.analysis.sequences},
                   {"level", c.analysis.level ? nlohmann::ordered_json(*c.analysis.level)
                                              : nlohmann::ordered_json()},
                   {"trajectory_sentences", c.analysis.trajectory_sentences},
                   {"walk_steps", c.analysis.walk_steps},
                   {"walk_support", c.analysis.walk_support}};
  return j;
}

}  // namespace promptlab::cli
