// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

// Runs acceptance criteria 1-10 and prints one PASS/FAIL line each.
// Expensive artifacts (base model, tuned cells) are cached under the cache
// directory and reused on later runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "prior_stats.hpp"
#include "promptlab/analysis/pca.hpp"
#include "promptlab/analysis/report.hpp"
#include "promptlab/cli/pipeline.hpp"
#include "promptlab/error.hpp"
#include "promptlab/tasks/generators.hpp"
#include "promptlab/tuner/tune.hpp"

using namespace promptlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

struct Env {
  fs::path cache;
  std::string promptlab_bin;
  std::string small_config;
};

// Default-scale configuration shared by criteria 5-8.
cli::Config full_config(const Env& env) {
  cli::Config c;
  c.out = env.cache / "full";
  c.lr = 1e-3;
  return c;
}

void ensure_base(const cli::Config& c) {
  if (!fs::exists(c.out / "data" / "manifest.json")) cli::run_gen_data(c);
  if (!fs::exists(cli::layout::base(c))) cli::run_pretrain(c);
}

json cell_metrics(const cli::Config& c, const cli::CellSpec& s) {
  return read_json(cli::layout::cell(c, s.name()) / "metrics.json");
}

std::vector<std::pair<std::size_t, double>> val_history(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<std::size_t, double>> out;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const auto v = line.substr(b + 1);
    if (!v.empty()) out.emplace_back(std::stoul(line.substr(0, a)), std::stod(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  const auto t0 = Clock::now();
  auto results = testing::op_gradchecks();
  const auto model = testing::model_gradchecks();
  results.insert(results.end(), model.begin(), model.end());
  const double sec = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name, failed;
  std::set<std::string> names;
  for (const auto& r : results) {
    names.insert(r.name);
    if (r.max_rel_err >= worst) {
      worst = r.max_rel_err;
      worst_name = r.name;
    }
    if (!r.ok()) failed += " " + r.name;
  }
  const bool modes = names.contains("soft") && names.contains("deep");
  Verdict v;
  v.pass = failed.empty() && modes && sec < 60.0;
  v.detail = std::to_string(results.size()) + " checks, max rel err " + fmt(worst, 3) + " (" + worst_name +
             "), " + fmt(sec, 3) + " s" + (failed.empty() ? "" : "; failed:" + failed) +
             (modes ? "" : "; a tuning mode is missing");
  return v;
}

Verdict criterion2(const Env& env) {
  auto full = full_config(env);
  ensure_base(full);
  auto c = full;
  c.out = env.cache / "sweep15";
  fs::create_directories(c.out);
  for (const char* p : {"data", "base.ppl"})
    if (!fs::exists(c.out / p)) fs::copy(full.out / p, c.out / p, fs::copy_options::recursive);
  c.tune.steps = 30;
  c.tune.eval_every = 10;
  c.tune.max_val_examples = 64;
  const auto bytes_before = slurp(cli::layout::base(c));
  const auto cells = cli::sweep_cells(c);
  const auto r = cli::run_cells(c, cells, 1, true);
  const bool bytes_same = bytes_before == slurp(cli::layout::base(c));
  const auto base = read_json(c.out / "sweep" / "base.json");
  Verdict v;
  v.pass = cells.size() == 15 && r.failed == 0 && r.checksum_before == r.checksum_after &&
           bytes_same && base["unchanged"] == true;
  v.detail = std::to_string(cells.size()) + " cells (" + std::to_string(r.completed) + " tuned, " +
             std::to_string(r.reused) + " reused, " + std::to_string(r.failed) + " failed), checksum " +
             base["checksum_before"].get<std::string>() + " -> " + base["checksum_after"].get<std::string>() +
             ", checkpoint bytes " + (bytes_same ? "unchanged" : "CHANGED");
  return v;
}

Verdict criterion3() {
  const auto t0 = Clock::now();
  const auto s = testing::prior_statistics(100000, 17);
  const double sec = seconds_since(t0);
  Verdict v;
  v.pass = s.fitted_ok() && s.exclusion_ok() && s.interpolation_ok() && sec < 120.0;
  v.detail = "mean z " + fmt(s.mean_z, 3) + ", cov z " + fmt(s.cov_z, 3) + ", accept at mode " +
             fmt(s.accept_at_mode) + ", 30%-ball occupancy plain " + fmt(s.plain_ball_occupancy) + " vs exclusion " +
             fmt(s.exclusion_ball_occupancy) + ", interpolation z " + fmt(s.interpolation_z, 3) + ", " +
             fmt(sec, 3) + " s";
  return v;
}

Verdict criterion4() {
  double worst = 0.0;
  for (std::size_t d : {2u, 3u, 5u, 8u, 16u, 24u, 32u}) {
    const auto z = testing::random_tensor({500, d}, 100 + d);
    const auto mix = testing::random_tensor({d, d}, 200 + d);
    nc::Tensor pts({500, d}, 0.0);
    for (std::size_t i = 0; i < 500; ++i)
      for (std::size_t c = 0; c < d; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < d; ++p)
          s += z.at(i, p) * static_cast<double>(p + 1) / static_cast<double>(d) * mix.at(p, c);
        pts.at(i, c) = s;
      }
    const auto pca = analysis::pca_fit(pts, d);
    const auto ref = testing::jacobi_eigenvalues(testing::covariance(pts), d);
    for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(pca.explained_variance[i] - ref[i]));
  }
  Verdict v;
  v.pass = worst <= 1e-8;
  v.detail = "max |lambda - lambda_jacobi| = " + fmt(worst, 3) + " over d in {2,3,5,8,16,24,32}";
  return v;
}

const std::vector<std::string> kBandPriors{"isotropic", "fitted", "exclusion", "xavier"};

Verdict criterion5(const Env& env) {
  const auto c = full_config(env);
  ensure_base(c);
  std::vector<cli::CellSpec> cells;
  for (const auto& p : kBandPriors) cells.push_back({p, 1e-3, "soft", 0});
  const auto t0 = Clock::now();
  const auto r = cli::run_cells(c, cells, 1, false);
  const double sec = seconds_since(t0);
  double lo = INFINITY, hi = 0.0, dlo = INFINITY, dhi = 0.0;
  std::string lo_name;
  std::string per;
  for (const auto& s : cells) {
    const auto m = cell_metrics(c, s);
    const double loss = m["final_val_loss"].get<double>();
    const double dist = m["mean_nn_distance"].get<double>();
    if (loss < lo) {
      lo = loss;
      lo_name = s.prior;
    }
    hi = std::max(hi, loss);
    dlo = std::min(dlo, dist);
    dhi = std::max(dhi, dist);
    per += " " + s.prior + "=" + fmt(loss) + "/" + fmt(dist, 3);
  }
  std::string missed;
  for (const auto& s : cells) {
    const double loss = cell_metrics(c, s)["final_val_loss"].get<double>();
    if (loss / lo > 1.10)
      missed += " " + s.prior + " +" + fmt(100.0 * (loss / lo - 1.0), 3) + "% over " + lo_name;
  }
  Verdict v;
  v.pass = r.failed == 0 && hi / lo <= 1.10 && dhi / dlo >= 2.0;
  v.detail = "loss/nn-dist:" + per + "; band " + fmt(hi / lo) + " (<= 1.10), distance spread " + fmt(dhi / dlo, 3) +
             "x (>= 2)" + (missed.empty() ? "" : "; band missed by:" + missed) + "; " + fmt(sec, 3) + " s";
  return v;
}

Verdict criterion6(const Env& env) {
  auto c = full_config(env);
  ensure_base(c);
  // The most distant prior is the non-baseline prior whose draws start
  // farthest from the token-embedding table.
  const std::vector<std::string> candidates{"isotropic", "fitted", "exclusion", "interpolation"};
  std::string distant;
  double best = -1.0;
  std::string dists;
  for (const auto& p : candidates) {
    if (!fs::exists(cli::layout::prior(c, p, "soft"))) cli::run_sample_prior(c, {p}, {"soft"});
    auto json_path = cli::layout::prior(c, p, "soft");
    json_path.replace_extension(".json");
    const double d = read_json(json_path)["init_nn_distance"].get<double>();
    dists += " " + p + "=" + fmt(d, 3);
    if (d > best) {
      best = d;
      distant = p;
    }
  }
  std::vector<double> steps_far, steps_xavier;
  std::string per;
  for (std::size_t rep = 0; rep < 3; ++rep) {
    c.tune.replicate = rep;
    const std::vector<cli::CellSpec> cells{{distant, 1e-3, "soft", rep}, {"xavier", 1e-3, "soft", rep}};
    const auto r = cli::run_cells(c, cells, 1, false);
    if (r.failed) return {false, "tuning failed for replicate " + std::to_string(rep)};
    const double far_loss = cell_metrics(c, cells[0])["final_val_loss"].get<double>();
    const double xav_loss = cell_metrics(c, cells[1])["final_val_loss"].get<double>();
    const double threshold = 1.1 * std::max(far_loss, xav_loss);
    std::vector<double> steps;
    for (const auto& cell : cells) {
      const auto h = val_history(cli::layout::cell(c, cell.name()) / "history.csv");
      std::vector<tuner::HistoryEntry> entries;
      for (const auto& [s, val] : h) entries.push_back({s, std::nullopt, val});
      const auto reached = tuner::steps_to_threshold(entries, threshold);
      steps.push_back(reached ? static_cast<double>(*reached) : INFINITY);
    }
    steps_far.push_back(steps[0]);
    steps_xavier.push_back(steps[1]);
    per += " seed" + std::to_string(rep) + ": " + fmt(steps[0]) + " vs " + fmt(steps[1]) + " @" + fmt(threshold);
  }
  const double med_far = analysis::median(steps_far);
  const double med_xav = analysis::median(steps_xavier);
  Verdict v;
  v.pass = med_far >= med_xav;
  v.detail = "most distant prior " + distant + " (init nn distance" + dists + "); steps to threshold " + distant +
             " vs xavier:" + per + "; median " + fmt(med_far) + " vs " + fmt(med_xav);
  return v;
}

Verdict criterion7(const Env& env) {
  const auto c = full_config(env);
  ensure_base(c);
  cli::run_analyze(c);
  const auto j = read_json(c.out / "analysis" / "cluster.json");
  const auto& la = j["pairs"]["LM-ARITH"];
  const auto& lq = j["pairs"]["LM-QA"];
  const double s_la = la["silhouette"].get<double>();
  const double s_lq = lq["silhouette"].get<double>();
  const std::size_t n_min = std::min({la["n_a"].get<std::size_t>(), la["n_b"].get<std::size_t>(),
                                      lq["n_b"].get<std::size_t>()});
  Verdict v;
  v.pass = s_la > 0.2 && s_lq < s_la && n_min >= 500;
  v.detail = "level " + std::to_string(j["level"].get<std::size_t>()) + ", silhouette LM/ARITH " + fmt(s_la) +
             " (> 0.2), LM/QA " + fmt(s_lq) + " (< LM/ARITH), min sequences per task " + std::to_string(n_min);
  return v;
}

Verdict criterion8(const Env& env) {
  const auto c = full_config(env);
  if (!fs::exists(c.out / "analysis" / "locality.json")) {
    ensure_base(c);
    cli::run_analyze(c);
  }
  const auto j = read_json(c.out / "analysis" / "locality.json");
  const double corpus = j["corpus_mean"].get<double>();
  const double walk = j["baseline_mean"].get<double>();
  Verdict v;
  v.pass = corpus <= walk;
  v.detail = "corpus step mean " + fmt(corpus) + " vs random walk " + fmt(walk) + " over " +
             j["walk_support"].get<std::string>() + " support (" + std::to_string(j["support_size"].get<std::size_t>()) +
             " ids), z = " + fmt(j["z"].get<double>()) + ", statistical verdict " + j["verdict"].get<std::string>();
  for (const auto& [name, o] : j["other_supports"].items())
    v.detail += "; " + name + " support: walk " + fmt(o["baseline_mean"].get<double>()) + ", z = " + fmt(o["z"].get<double>());
  return v;
}

int run_pipeline(const Env& env, const fs::path& out, const std::string& jobs) {
  const std::string base = env.promptlab_bin + " --config " + env.small_config + " --out " + out.string() + " ";
  for (const std::string& sub : std::vector<std::string>{"gen-data", "pretrain", "sample-prior", "sweep --jobs " + jobs,
                                                        "analyze", "figures"}) {
    const std::string cmd = base + sub + " >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return 1;
  }
  return 0;
}

Verdict criterion9(const Env& env) {
  const auto out = env.cache / "determinism";
  const auto first = env.cache / "determinism.first";
  fs::remove_all(out);
  fs::remove_all(first);
  if (run_pipeline(env, out, "1") != 0) return {false, "first pipeline run failed"};
  fs::rename(out, first);
  if (run_pipeline(env, out, "3") != 0) return {false, "second pipeline run failed"};
  std::size_t files = 0, csv = 0, svg = 0;
  std::string diff;
  std::set<fs::path> seen;
  for (const auto& root : {first, out})
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) seen.insert(fs::relative(e.path(), root));
  for (const auto& rel : seen) {
    ++files;
    if (rel.extension() == ".csv") ++csv;
    if (rel.extension() == ".svg") ++svg;
    if (!fs::exists(first / rel) || !fs::exists(out / rel) || slurp(first / rel) != slurp(out / rel))
      diff += " " + rel.string();
  }
  Verdict v;
  v.pass = diff.empty() && csv > 0 && svg == 4;
  v.detail = std::to_string(files) + " files compared (" + std::to_string(csv) + " CSV, " + std::to_string(svg) +
             " SVG), serial vs 3-job sweep" + (diff.empty() ? ", all byte-identical" : "; differing:" + diff);
  return v;
}

Verdict criterion10() {
  tasks::Tokenizer tok;
  model::ModelConfig mc;
  mc.n_layers = 3;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.d_ff = 32;
  mc.max_seq = 96;
  mc.vocab_size = tok.vocab_size();
  mc.seed = 5;
  auto m = model::build_model(mc);
  m.freeze();
  const auto data = tasks::gen_qa_dataset(3, 24);
  std::size_t forwards = 0, checked = 0;
  std::string bad;
  for (std::size_t covered : {1u, 2u, 3u})
    for (std::size_t k : {1u, 4u, 9u}) {
      std::vector<nc::Tensor> deep;
      for (std::size_t i = 0; i < covered; ++i) deep.push_back(testing::random_tensor({k, 16}, 10 + i));
      auto p = tuner::init_prompt(testing::random_tensor({k, 16}, 1), tuner::PromptMode::kDeep, deep, 3);
      const auto layers = tuner::covered_layers(3, covered);
      for (std::size_t n : {1u, 3u}) {
        std::vector<std::vector<tasks::TokenId>> seqs;
        for (std::size_t i = 0; i < n; ++i) seqs.push_back(tasks::encode_example(tok, data[i + k]).tokens);
        const auto batch = model::TokenBatch::from_sequences(seqs);
        const std::size_t T = batch.seq_len;
        nc::Tape tape;
        model::ForwardOptions fo;
        fo.on_layer = [&](const model::LayerWidth& w) {
          if (std::find(layers.begin(), layers.end(), w.layer) == layers.end()) return;
          ++checked;
          if (w.internal != 2 * k + T || w.emitted != k + T)
            bad += " layer" + std::to_string(w.layer) + "/k" + std::to_string(k);
        };
        tuner::deep_forward(tape, m, p, batch, fo);
        ++forwards;
      }
      tuner::TuneConfig tc;
      tc.steps = 3;
      tc.batch = 4;
      tc.eval_every = 3;
      tc.patience = 0;
      const std::span<const tasks::Example> all(data);
      tuner::tune(m, p, tok, all.subspan(0, 16), all.subspan(16), tc);
    }
  Verdict v;
  v.pass = bad.empty() && checked > 0;
  v.detail = std::to_string(checked) + " covered-layer widths checked over " + std::to_string(forwards) +
             " probed forwards (k in {1,4,9}, 1-3 covered layers) plus 3 deep tuning steps per layout under the runtime width assertion" +
             (bad.empty() ? "" : "; violations:" + bad);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptlab acceptance criteria"};
  Env env;
  std::vector<int> only;
  std::string cache;
  app.add_option("--cache", cache, "directory for cached artifacts")->required();
  app.add_option("--promptlab", env.promptlab_bin, "promptlab binary")->required();
  app.add_option("--small-config", env.small_config, "small pipeline config")->required();
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  env.cache = cache;
  fs::create_directories(env.cache);

  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, [] { return criterion1(); }},
      {2, [&] { return criterion2(env); }},
      {3, [] { return criterion3(); }},
      {4, [] { return criterion4(); }},
      {5, [&] { return criterion5(env); }},
      {6, [&] { return criterion6(env); }},
      {7, [&] { return criterion7(env); }},
      {8, [&] { return criterion8(env); }},
      {9, [&] { return criterion9(env); }},
      {10, [] { return criterion10(); }},
  };
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << "CRITERION " << id << ' ' << (v.pass ? "PASS" : "FAIL") << ": " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
