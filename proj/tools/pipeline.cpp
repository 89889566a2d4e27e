// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/cli/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "common.hpp"
#include "promptlab/analysis/report.hpp"
#include "promptlab/error.hpp"
#include "promptlab/model/activations.hpp"
#include "promptlab/model/checkpoint.hpp"
#include "promptlab/model/pretrain.hpp"
#include "promptlab/priors/samplers.hpp"
#include "promptlab/rng.hpp"
#include "promptlab/tasks/generators.hpp"
#include "promptlab/tuner/tune.hpp"

namespace promptlab::cli {

namespace fs = std::filesystem;
using analysis::format_number;
using nlohmann::ordered_json;

namespace layout {

fs::path data(const Config& c, const std::string& name) { return c.out / "data" / (name + ".tsv"); }
fs::path base(const Config& c) { return c.out / "base.ppl"; }
fs::path prior(const Config& c, const std::string& prior, const std::string& mode) {
  std::string n = prior + "-" + mode;
  if (c.tune.replicate > 0) n += "-r" + std::to_string(c.tune.replicate);
  return c.out / "priors" / (n + ".ppl");
}
fs::path cell(const Config& c, const std::string& name) { return c.out / "cells" / name; }

}  // namespace layout

std::uint64_t stage_seed(const Config& c, const std::string& tag, std::uint64_t index) {
  return derive_seed(c.seed, tag, index);
}

namespace detail {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw MissingArtifactError(path.string() + " not found; run `promptlab " + producer +
                               "` with the same --out first");
}

tasks::Dataset load_data(const Config& c, const std::string& name) {
  const auto p = layout::data(c, name);
  require(p, "gen-data");
  return tasks::read_dataset(p);
}

model::TransformerModel load_base(const Config& c) {
  require(layout::base(c), "pretrain");
  auto m = model::load_model(layout::base(c));
  m.freeze();
  return m;
}

tasks::Dataset task_data(const Config& c, tasks::TaskId task) {
  switch (task) {
    case tasks::TaskId::kLm: return load_data(c, "lm");
    case tasks::TaskId::kQa: return load_data(c, "qa_train");
    case tasks::TaskId::kArith: return load_data(c, "arith");
  }
  throw ConfigError("unknown task");
}

nc::Tensor char_embeddings(const model::TransformerModel& m, const tasks::Tokenizer& tok) {
  const auto& e = m.embedding()->value;
  return nc::slice_rows(e, tasks::Tokenizer::kFirstChar, tok.vocab_size() - tasks::Tokenizer::kFirstChar);
}

nc::Tensor source_points(const Config& c, const model::TransformerModel& m, const tasks::Tokenizer& tok,
                         const ActivationSource& src) {
  if (src.embedding) return char_embeddings(m, tok);
  const auto data = task_data(c, src.task);
  return model::capture_activations(m, tok, data, src.level, c.prior.fit_sequences,
                                    stage_seed(c, "fit:" + src.str()))
      .vectors;
}

void write_json(const fs::path& path, const ordered_json& j) {
  analysis::write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path.string() + " not found");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_atomic(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  analysis::write_text(tmp, text);
  fs::rename(tmp, path);
}

}  // namespace detail

using namespace detail;

namespace {

void prepare_out(const Config& c, const std::string& sub = {}) {
  fs::create_directories(sub.empty() ? c.out : c.out / sub);
  write_json(c.out / "config.json", to_json(c));
}

std::string csv_field(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ch == ',' ? ';' : ' ';
  return s;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
  if (dynamic_cast<const FormatError*>(&e)) return "FormatError";
  if (dynamic_cast<const MissingArtifactError*>(&e)) return "MissingArtifactError";
  return "Error";
}

std::mutex log_mutex;

void log_line(const std::string& s) {
  std::lock_guard lock(log_mutex);
  std::cerr << s << '\n';
}

}  // namespace

void run_gen_data(const Config& c) {
  prepare_out(c, "data");
  const auto pre = tasks::gen_pretrain_corpus(stage_seed(c, "data:pretrain"), c.data.pretrain_examples);
  const auto pre_split = tasks::split_train_val(pre, stage_seed(c, "split:pretrain"), c.data.pretrain_val_permille);
  const auto qa = tasks::gen_qa_dataset(stage_seed(c, "data:qa"), c.data.qa_examples);
  const auto qa_split = tasks::split_train_val(qa, stage_seed(c, "split:qa"), c.data.qa_val_permille);
  const auto lm = tasks::gen_lm_corpus(stage_seed(c, "data:lm"), c.data.lm_sentences);
  const auto arith = tasks::gen_arith_dataset(stage_seed(c, "data:arith"), c.data.arith_examples, c.data.arith_digits);
  if (qa_split.train.empty() || qa_split.val.empty() || pre_split.train.empty() || pre_split.val.empty())
    throw ConfigError("data sizes leave an empty train or validation split");
  const std::vector<std::pair<std::string, const tasks::Dataset*>> files{
      {"pretrain_train", &pre_split.train}, {"pretrain_val", &pre_split.val}, {"qa_train", &qa_split.train},
      {"qa_val", &qa_split.val},           {"lm", &lm},                      {"arith", &arith}};
  ordered_json manifest;
  for (const auto& [name, d] : files) {
    tasks::write_dataset(layout::data(c, name), *d);
    manifest[name] = d->size();
  }
  write_json(c.out / "data" / "manifest.json", manifest);
  log_line("gen-data: wrote " + (c.out / "data").string());
}

void run_pretrain(const Config& c) {
  const auto train = load_data(c, "pretrain_train");
  const auto val = load_data(c, "pretrain_val");
  prepare_out(c);
  tasks::Tokenizer tok;
  auto mc = c.model;
  mc.vocab_size = tok.vocab_size();
  mc.seed = stage_seed(c, "model");
  auto m = model::build_model(mc);
  model::PretrainConfig pc{c.pretrain.steps, c.pretrain.batch, c.pretrain.lr, stage_seed(c, "pretrain"),
                           c.pretrain.eval_every, c.pretrain.max_val_examples};
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = model::pretrain(m, tok, train, val, pc);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.freeze();
  model::save_model(layout::base(c), m);

  std::map<std::size_t, double> val_at(r.val_loss.begin(), r.val_loss.end());
  analysis::CsvTable hist({"step", "train_loss", "val_loss"});
  hist.add_row({"0", "", format_number(r.initial_val_loss)});
  for (std::size_t s = 1; s <= r.train_loss.size(); ++s) {
    const auto it = val_at.find(s);
    hist.add_row({std::to_string(s), format_number(r.train_loss[s - 1]),
                  it == val_at.end() ? "" : format_number(it->second)});
  }
  hist.write(c.out / "pretrain.csv");
  ordered_json j;
  j["steps"] = r.train_loss.size();
  j["initial_val_loss"] = r.initial_val_loss;
  j["final_val_loss"] = r.final_val_loss;
  j["checksum"] = hex64(m.checksum());
  write_json(c.out / "pretrain.json", j);
  log_line("pretrain: val loss " + format_number(r.initial_val_loss) + " -> " + format_number(r.final_val_loss) +
           " in " + std::to_string(static_cast<long>(sec)) + " s");
}

namespace {

struct PriorDraw {
  nc::Tensor token;
  std::vector<nc::Tensor> deep;
  ordered_json info;
};

// Fitted Gaussians are cached per source for one command.
class GaussianCache {
 public:
  GaussianCache(const Config& c, const model::TransformerModel& m, const tasks::Tokenizer& tok)
      : c_(c), m_(m), tok_(tok) {}

  const priors::GaussianParams& get(const std::string& source) {
    auto it = cache_.find(source);
    if (it == cache_.end())
      it = cache_.emplace(source, priors::fit_gaussian(source_points(c_, m_, tok_, parse_source(source)))).first;
    return it->second;
  }

 private:
  const Config& c_;
  const model::TransformerModel& m_;
  const tasks::Tokenizer& tok_;
  std::map<std::string, priors::GaussianParams> cache_;
};

nc::Tensor draw_one(const Config& c, priors::PriorKind kind, GaussianCache& gc, std::uint64_t seed,
                    ordered_json& info) {
  const std::size_t k = c.tune.prompt_length;
  const std::size_t d = c.model.d_model;
  using priors::PriorKind;
  switch (kind) {
    case PriorKind::kExclusion: {
      const auto& g = gc.get(c.prior.fit_source);
      const auto r = priors::sample_exclusion_draws(g, c.prior.c, k, seed, c.prior.max_draws,
                                                    priors::parse_cdim_rule(c.prior.rule));
      info["acceptance_rate"].push_back(r.acceptance_rate());
      info["jitter"] = g.jitter;
      return r.samples;
    }
    case PriorKind::kInterpolation: {
      const auto& g1 = gc.get(c.prior.interpolation_first);
      const auto& g2 = gc.get(c.prior.interpolation_second);
      auto r = priors::sample_interpolation_draws(g1, g2, k, seed, c.prior.alpha);
      for (double a : r.alpha) info["alpha"].push_back(a);
      return std::move(r.samples);
    }
    default: {
      priors::PriorSpec spec;
      spec.kind = kind;
      spec.sigma = c.prior.sigma;
      spec.seed = seed;
      if (kind == PriorKind::kFitted) {
        spec.gaussian = gc.get(c.prior.fit_source);
        info["jitter"] = spec.gaussian->jitter;
      }
      return priors::sample_prior(spec, k, d);
    }
  }
}

PriorDraw draw_prior(const Config& c, const std::string& prior, const std::string& mode, GaussianCache& gc) {
  const auto kind = priors::parse_prior(prior);
  const auto pm = tuner::parse_mode(mode);
  const auto seed = stage_seed(c, "prior:" + prior + ":" + mode, c.tune.replicate);
  PriorDraw out;
  out.info["prior"] = prior;
  out.info["mode"] = mode;
  out.info["replicate"] = c.tune.replicate;
  if (kind == priors::PriorKind::kFitted || kind == priors::PriorKind::kExclusion)
    out.info["source"] = c.prior.fit_source;
  if (kind == priors::PriorKind::kInterpolation)
    out.info["sources"] = {c.prior.interpolation_first, c.prior.interpolation_second};
  out.token = draw_one(c, kind, gc, seed, out.info);
  if (pm == tuner::PromptMode::kDeep) {
    const auto layers = tuner::covered_layers(c.model.n_layers, c.tune.deep_layers);
    for (std::size_t i = 0; i < layers.size(); ++i)
      out.deep.push_back(draw_one(c, kind, gc, derive_seed(seed, "deep", layers[i]), out.info));
  }
  return out;
}

void save_prior(const Config& c, const std::string& prior, const std::string& mode, const PriorDraw& p,
                const nc::Tensor& reference) {
  fs::create_directories(c.out / "priors");
  const auto path = layout::prior(c, prior, mode);
  std::vector<model::NamedTensor> t{{"prior.token", p.token}};
  const auto layers = tuner::covered_layers(c.model.n_layers, p.deep.empty() ? 0 : c.tune.deep_layers);
  for (std::size_t i = 0; i < p.deep.size(); ++i)
    t.push_back({"prior.deep." + std::to_string(layers[i]), p.deep[i]});
  model::save_tensors(path, t);
  auto info = p.info;
  const auto nn = analysis::nearest(p.token, reference);
  double mean = 0.0;
  for (double v : nn.distance) mean += v / static_cast<double>(nn.distance.size());
  info["init_nn_distance"] = mean;
  auto json_path = path;
  json_path.replace_extension(".json");
  write_json(json_path, info);
}

PriorDraw load_prior(const Config& c, const std::string& prior, const std::string& mode) {
  const auto path = layout::prior(c, prior, mode);
  require(path, "sample-prior");
  const auto t = model::load_tensors(path);
  PriorDraw p;
  p.token = model::find_tensor(t, "prior.token");
  if (tuner::parse_mode(mode) == tuner::PromptMode::kDeep)
    for (auto l : tuner::covered_layers(c.model.n_layers, c.tune.deep_layers))
      p.deep.push_back(model::find_tensor(t, "prior.deep." + std::to_string(l)));
  if (p.token.rank() != 2 || p.token.rows() != c.tune.prompt_length || p.token.cols() != c.model.d_model)
    throw DimensionError(path.string() + " holds a " + nc::shape_str(p.token.shape()) +
                         " prompt; the config expects [" + std::to_string(c.tune.prompt_length) + "x" +
                         std::to_string(c.model.d_model) + "]");
  return p;
}

}  // namespace

void run_sample_prior(const Config& c, const std::vector<std::string>& prior_names,
                      const std::vector<std::string>& modes) {
  tasks::Tokenizer tok;
  const auto m = load_base(c);
  prepare_out(c, "priors");
  GaussianCache gc(c, m, tok);
  const auto ref = char_embeddings(m, tok);
  for (const auto& mode : modes)
    for (const auto& p : prior_names) {
      save_prior(c, p, mode, draw_prior(c, p, mode, gc), ref);
      log_line("sample-prior: wrote " + layout::prior(c, p, mode).string());
    }
}

std::string CellSpec::name() const {
  std::string n = prior + "-lr" + format_number(lr) + "-" + mode;
  if (replicate > 0) n += "-r" + std::to_string(replicate);
  return n;
}

std::vector<CellSpec> sweep_cells(const Config& c) {
  std::vector<CellSpec> out;
  for (const auto& mode : c.sweep.modes)
    for (const auto& p : c.sweep.priors)
      for (double lr : c.sweep.lrs) out.push_back({p, lr, mode, c.tune.replicate});
  return out;
}

namespace {

struct CellContext {
  const Config& c;
  const model::TransformerModel& m;
  const tasks::Tokenizer& tok;
  const tasks::Dataset& train;
  const tasks::Dataset& val;
  const nc::Tensor& reference;
};

ordered_json tune_cell(const CellContext& ctx, const CellSpec& spec) {
  const Config& c = ctx.c;
  const auto dir = layout::cell(c, spec.name());
  fs::create_directories(dir);
  const auto pm = tuner::parse_mode(spec.mode);
  const auto draw = load_prior(c, spec.prior, spec.mode);
  auto prompt = tuner::init_prompt(draw.token, pm, draw.deep, c.model.n_layers);
  prompt.truncate_token_prompt = c.tune.truncate;

  tuner::TuneConfig tc;
  tc.lr = spec.lr;
  tc.steps = c.tune.steps;
  tc.batch = c.tune.batch;
  tc.eval_every = c.tune.eval_every;
  tc.patience = c.tune.patience;
  tc.min_delta = c.tune.min_delta;
  tc.seed = stage_seed(c, "tune", spec.replicate);
  tc.max_val_examples = c.tune.max_val_examples;

  const auto before = ctx.m.checksum();
  const auto r = tuner::tune(ctx.m, prompt, ctx.tok, ctx.train, ctx.val, tc);
  const auto after = ctx.m.checksum();
  if (before != after) throw Error("base model changed while tuning cell " + spec.name());

  tuner::save_tune_result(dir / "prompt.ppl", r);
  tuner::write_history_csv(dir / "history.csv", r.history);
  const auto div = analysis::divergence_report(r.tuned.token_prompt->value, r.init_snapshot.token_prompt->value,
                                               ctx.reference);
  analysis::divergence_csv(div).write(dir / "divergence.csv");

  ordered_json j;
  j["cell"] = spec.name();
  j["prior"] = spec.prior;
  j["lr"] = spec.lr;
  j["mode"] = spec.mode;
  j["replicate"] = spec.replicate;
  j["final_val_loss"] = r.best_val_loss;
  j["exact_match"] = r.final_metrics.exact_match;
  j["token_accuracy"] = r.final_metrics.token_accuracy;
  j["best_step"] = r.best_step;
  j["steps_run"] = r.steps_run;
  j["stopped_early"] = r.stopped_early;
  j["initial_val_loss"] = r.history.front().val_loss.value_or(0.0);
  j["init_nn_distance"] = div.init_nn_distance;
  j["mean_nn_distance"] = div.mean_nn_distance;
  j["overlap_fraction"] = div.overlap_fraction;
  j["overlap_radius"] = div.overlap_radius;
  j["base_checksum_before"] = hex64(before);
  j["base_checksum_after"] = hex64(after);
  write_atomic(dir / "metrics.json", j.dump(2) + "\n");
  return j;
}

}  // namespace

SweepOutcome run_cells(const Config& c, const std::vector<CellSpec>& cells, std::size_t jobs,
                       bool write_summary) {
  tasks::Tokenizer tok;
  const auto m = load_base(c);
  const auto train = load_data(c, "qa_train");
  const auto val = load_data(c, "qa_val");
  prepare_out(c, "cells");
  const auto reference = char_embeddings(m, tok);

  SweepOutcome out;
  out.checksum_before = m.checksum();

  // Priors are drawn up front, once per (prior, mode), so cells differing
  // only in lr start from the same draw.
  {
    GaussianCache gc(c, m, tok);
    std::map<std::pair<std::string, std::string>, bool> seen;
    for (const auto& cell : cells) {
      Config cc = c;
      cc.tune.replicate = cell.replicate;
      if (!seen.emplace(std::pair{cell.prior, cell.mode}, true).second) continue;
      if (fs::exists(layout::prior(cc, cell.prior, cell.mode))) continue;
      save_prior(cc, cell.prior, cell.mode, draw_prior(cc, cell.prior, cell.mode, gc), reference);
    }
  }

  std::vector<std::optional<ordered_json>> results(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0}, reused{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Config cc = c;
      cc.tune.replicate = cells[i].replicate;
      const CellContext cctx{cc, m, tok, train, val, reference};
      const auto name = cells[i].name();
      const auto dir = layout::cell(cc, name);
      try {
        if (fs::exists(dir / "metrics.json")) {
          const auto j = read_json(dir / "metrics.json");
          results[i] = ordered_json::parse(j.dump());
          ++reused;
          log_line("cell " + name + ": already complete");
          continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        results[i] = tune_cell(cctx, cells[i]);
        fs::remove(dir / "error.json");
        ++completed;
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log_line("cell " + name + ": val " + format_number((*results[i])["final_val_loss"].get<double>()) +
                 " in " + std::to_string(static_cast<long>(sec)) + " s");
      } catch (const std::exception& e) {
        errors[i] = error_kind(e) + ": " + e.what();
        fs::create_directories(dir);
        write_json(dir / "error.json", ordered_json{{"cell", name}, {"type", error_kind(e)}, {"message", e.what()}});
        log_line("cell " + name + ": FAILED " + errors[i]);
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  out.completed = completed;
  out.reused = reused;
  out.checksum_after = m.checksum();

  analysis::CsvTable summary(
      {"prior", "lr", "mode", "final_val_loss", "exact_match", "mean_nn_distance", "overlap_fraction"});
  analysis::CsvTable failures({"prior", "lr", "mode", "error"});
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = cells[i];
    if (results[i]) {
      const auto& j = *results[i];
      summary.add_row({s.prior, format_number(s.lr), s.mode, format_number(j["final_val_loss"].get<double>()),
                       format_number(j["exact_match"].get<double>()),
                       format_number(j["mean_nn_distance"].get<double>()),
                       format_number(j["overlap_fraction"].get<double>())});
    } else {
      ++out.failed;
      summary.add_row({s.prior, format_number(s.lr), s.mode, "", "", "", ""});
      failures.add_row({s.prior, format_number(s.lr), s.mode, csv_field(errors[i])});
    }
  }
  if (write_summary) {
    fs::create_directories(c.out / "sweep");
    summary.write(c.out / "sweep" / "summary.csv");
    failures.write(c.out / "sweep" / "failures.csv");
    write_json(c.out / "sweep" / "base.json",
               ordered_json{{"checksum_before", hex64(out.checksum_before)},
                            {"checksum_after", hex64(out.checksum_after)},
                            {"unchanged", out.checksum_before == out.checksum_after}});
  }
  if (out.checksum_before != out.checksum_after) throw Error("base model checksum changed during the sweep");
  return out;
}

std::string csv_schemas() {
  return "CSV outputs:\n"
         "  data/*.tsv                    task<TAB>context<TAB>question<TAB>answer\n"
         "  pretrain.csv                  step,train_loss,val_loss\n"
         "  cells/<cell>/history.csv      step,train_loss,val_loss (step 0 = untuned prompt)\n"
         "  cells/<cell>/divergence.csv   index,nn_index,nn_distance,init_nn_distance,overlaps\n"
         "  sweep/summary.csv             prior,lr,mode,final_val_loss,exact_match,mean_nn_distance,overlap_fraction\n"
         "  sweep/failures.csv            prior,lr,mode,error\n"
         "  analysis/trajectory.csv       sentence,steps,mean,std\n"
         "  analysis/pca_embedding.csv    component,explained_variance,explained_ratio\n"
         "  analysis/divergence.csv       cell,prior,lr,mode,init_nn_distance,mean_nn_distance,overlap_fraction\n"
         "  figures/<recipe>.csv          series,index,x,y\n"
         "Exit codes: 0 ok, 2 configuration or missing input, 3 numeric failure, 4 malformed file.\n";
}

}  // namespace promptlab::cli
