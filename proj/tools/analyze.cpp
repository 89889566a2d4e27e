// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <iostream>
#include <map>
#include <set>

#include "common.hpp"
#include "promptlab/analysis/pca.hpp"
#include "promptlab/analysis/report.hpp"
#include "promptlab/cli/pipeline.hpp"
#include "promptlab/cli/svg.hpp"
#include "promptlab/error.hpp"
#include "promptlab/model/activations.hpp"
#include "promptlab/model/checkpoint.hpp"
#include "promptlab/tuner/tune.hpp"

namespace promptlab::cli {

namespace fs = std::filesystem;
using analysis::format_number;
using nlohmann::ordered_json;
using namespace detail;

namespace {

constexpr tasks::TaskId kTasks[] = {tasks::TaskId::kLm, tasks::TaskId::kQa, tasks::TaskId::kArith};

nc::Tensor task_means(const Config& c, const model::TransformerModel& m, const tasks::Tokenizer& tok,
                      tasks::TaskId task, std::size_t sequences) {
  const auto data = task_data(c, task);
  const auto set = model::capture_activations(m, tok, data, c.analysis_level(), sequences,
                                              stage_seed(c, "analysis:capture", static_cast<std::uint64_t>(task)));
  return model::sequence_means(set).vectors;
}

std::vector<std::vector<tasks::TokenId>> lm_sentences(const Config& c, const tasks::Tokenizer& tok,
                                                      std::size_t n) {
  const auto lm = load_data(c, "lm");
  std::vector<std::vector<tasks::TokenId>> out;
  for (std::size_t i = 0; i < lm.size() && out.size() < n; ++i) out.push_back(tok.encode(lm[i].context));
  return out;
}

std::vector<tasks::TokenId> char_ids(const tasks::Tokenizer& tok) {
  std::vector<tasks::TokenId> ids;
  for (auto i = tasks::Tokenizer::kFirstChar; i < static_cast<tasks::TokenId>(tok.vocab_size()); ++i)
    ids.push_back(i);
  return ids;
}

std::vector<tasks::TokenId> corpus_ids(const std::vector<std::vector<tasks::TokenId>>& sentences) {
  std::set<tasks::TokenId> ids;
  for (const auto& s : sentences) ids.insert(s.begin(), s.end());
  return {ids.begin(), ids.end()};
}

}  // namespace

void run_analyze(const Config& c) {
  tasks::Tokenizer tok;
  const auto m = load_base(c);
  const auto dir = c.out / "analysis";
  fs::create_directories(dir);

  std::map<tasks::TaskId, nc::Tensor> means;
  for (auto t : kTasks) means[t] = task_means(c, m, tok, t, c.analysis.sequences);
  ordered_json cluster;
  cluster["level"] = c.analysis_level();
  cluster["unit"] = "sequence-mean";
  const std::pair<tasks::TaskId, tasks::TaskId> pairs[] = {
      {tasks::TaskId::kLm, tasks::TaskId::kArith},
      {tasks::TaskId::kLm, tasks::TaskId::kQa},
      {tasks::TaskId::kQa, tasks::TaskId::kArith}};
  for (const auto& [a, b] : pairs) {
    const auto sep = analysis::cluster_separation(means[a], means[b]);
    cluster["pairs"][std::string(tasks::task_name(a)) + "-" + std::string(tasks::task_name(b))] =
        analysis::cluster_json(sep);
  }
  write_json(dir / "cluster.json", cluster);

  const auto& emb = m.embedding()->value;
  const auto sentences = lm_sentences(c, tok, c.analysis.trajectory_sentences);
  const auto traj = analysis::trajectory_dispersion(sentences, emb);
  analysis::trajectory_csv(traj).write(dir / "trajectory.csv");
  const std::map<std::string, std::vector<tasks::TokenId>> supports{{"corpus", corpus_ids(sentences)},
                                                                      {"alphabet", char_ids(tok)}};
  ordered_json locality;
  analysis::LocalityVerdict verdict;
  ordered_json others;
  for (const auto& [name, ids] : supports) {
    const auto walk = analysis::random_walk_baseline(emb, c.analysis.walk_steps, stage_seed(c, "analysis:walk"), ids);
    const auto v = analysis::locality_test(traj.aggregate, walk);
    auto j = analysis::locality_json(traj.aggregate, walk, v);
    j["walk_support"] = name;
    j["support_size"] = ids.size();
    if (name == c.analysis.walk_support) {
      locality = std::move(j);
      verdict = v;
    } else {
      others[name] = {{"support_size", ids.size()}, {"baseline_mean", walk.mean}, {"baseline_std", walk.std},
                      {"z", v.z}, {"verdict", v.lower ? "lower" : "not-lower"}};
    }
  }
  locality["other_supports"] = others;
  write_json(dir / "locality.json", locality);

  const auto chars = char_embeddings(m, tok);
  const auto pca = analysis::pca_fit(chars, std::min<std::size_t>(10, chars.cols()));
  analysis::pca_csv(pca).write(dir / "pca_embedding.csv");

  analysis::CsvTable div({"cell", "prior", "lr", "mode", "init_nn_distance", "mean_nn_distance", "overlap_fraction"});
  if (fs::exists(c.out / "cells")) {
    std::vector<fs::path> cells;
    for (const auto& e : fs::directory_iterator(c.out / "cells"))
      if (fs::exists(e.path() / "metrics.json")) cells.push_back(e.path());
    std::sort(cells.begin(), cells.end());
    for (const auto& p : cells) {
      const auto j = read_json(p / "metrics.json");
      div.add_row({j["cell"].get<std::string>(), j["prior"].get<std::string>(), format_number(j["lr"].get<double>()),
                   j["mode"].get<std::string>(), format_number(j["init_nn_distance"].get<double>()),
                   format_number(j["mean_nn_distance"].get<double>()),
                   format_number(j["overlap_fraction"].get<double>())});
    }
  }
  div.write(dir / "divergence.csv");
  std::cerr << "analyze: locality z " << format_number(verdict.z) << ", LM-ARITH silhouette "
            << format_number(cluster["pairs"]["LM-ARITH"]["silhouette"].get<double>()) << '\n';
}

std::vector<std::string> figure_recipes() { return {"fig1", "fig5", "fig10", "fig12"}; }

namespace {

Series scatter(std::string label, nc::Tensor points) {
  Series s;
  s.label = std::move(label);
  s.points = std::move(points);
  return s;
}

nc::Tensor project2(const nc::Tensor& pts, const analysis::PcaModel& pca) {
  if (pts.rows() == 0) return nc::Tensor({0, 2});
  return analysis::project(pts, pca);
}

nc::Tensor subsample(const nc::Tensor& pts, std::size_t n) {
  if (pts.rows() <= n) return pts;
  std::vector<nc::Tensor> rows;
  const double stride = static_cast<double>(pts.rows()) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back(nc::slice_rows(pts, static_cast<std::size_t>(static_cast<double>(i) * stride), 1));
  return nc::concat_rows(rows);
}

void emit(const Config& c, const std::string& name, const std::vector<Series>& series, const PlotSpec& spec) {
  const auto dir = c.out / "figures";
  fs::create_directories(dir);
  analysis::write_text(dir / (name + ".svg"), emit_scatter(series, spec));
  analysis::write_text(dir / (name + ".csv"), scatter_csv(series));
  std::cerr << "figures: wrote " << (dir / (name + ".svg")).string() << '\n';
}

fs::path figure_cell(const Config& c, const std::string& prior, const std::string& recipe) {
  const CellSpec spec{prior, c.lr, c.tune.mode, c.tune.replicate};
  const auto dir = layout::cell(c, spec.name());
  if (!fs::exists(dir / "metrics.json"))
    throw MissingArtifactError("figure " + recipe + " needs tuned cell " + dir.string() +
                               "; run `promptlab tune --prior " + prior + "` (or a sweep covering it) first");
  return dir;
}

void fig1(const Config& c, const model::TransformerModel& m, const tasks::Tokenizer& tok) {
  const auto chars = char_embeddings(m, tok);
  const auto pca = analysis::pca_fit(chars, 2);
  std::vector<Series> s{scatter("tokens", project2(chars, pca))};
  const auto& emb = m.embedding()->value;
  const auto sentences = lm_sentences(c, tok, 5);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    nc::Tensor pts({sentences[i].size(), emb.cols()});
    for (std::size_t t = 0; t < sentences[i].size(); ++t) {
      const auto row = emb.row(static_cast<std::size_t>(sentences[i][t]));
      std::copy(row.begin(), row.end(), pts.row(t).begin());
    }
    auto path = scatter("sentence " + std::to_string(i), project2(pts, pca));
    path.group = "sentence trajectory";
    path.path = true;
    s.push_back(std::move(path));
  }
  emit(c, "fig1", s, {"Token embeddings and sentence trajectories"});
}

void fig5(const Config& c, const model::TransformerModel& m, const tasks::Tokenizer& tok) {
  std::vector<nc::Tensor> clouds;
  for (auto t : kTasks) clouds.push_back(task_means(c, m, tok, t, std::min<std::size_t>(c.analysis.sequences, 300)));
  const auto pca = analysis::pca_fit(nc::concat_rows(clouds), 2);
  std::vector<Series> s;
  for (std::size_t i = 0; i < clouds.size(); ++i)
    s.push_back(scatter(std::string(tasks::task_name(kTasks[i])), project2(clouds[i], pca)));
  emit(c, "fig5", s, {"Task clusters at level " + std::to_string(c.analysis_level())});
}

void fig10(const Config& c, const model::TransformerModel& m, const tasks::Tokenizer& tok) {
  const auto dir = figure_cell(c, "fitted", "fig10");
  const auto saved = tuner::load_tune_result(dir / "prompt.ppl");
  const auto chars = char_embeddings(m, tok);
  const auto& prior = saved.init.token_prompt->value;
  const auto& post = saved.tuned.token_prompt->value;
  const auto pca = analysis::pca_fit(nc::concat_rows(std::vector<nc::Tensor>{chars, prior, post}), 2);
  emit(c, "fig10",
       {scatter("token embeddings", project2(chars, pca)),
        scatter("prior draws", project2(prior, pca)),
        scatter("tuned prompt", project2(post, pca))},
       {"Fitted prior and tuned prompt"});
}

void fig12(const Config& c, const model::TransformerModel& m, const tasks::Tokenizer& tok) {
  const auto dir = figure_cell(c, "interpolation", "fig12");
  const auto saved = tuner::load_tune_result(dir / "prompt.ppl");
  const auto src1 = parse_source(c.prior.interpolation_first);
  const auto src2 = parse_source(c.prior.interpolation_second);
  const auto a = subsample(source_points(c, m, tok, src1), 400);
  const auto b = subsample(source_points(c, m, tok, src2), 400);
  const auto& prior = saved.init.token_prompt->value;
  const auto& post = saved.tuned.token_prompt->value;
  const auto pca = analysis::pca_fit(nc::concat_rows(std::vector<nc::Tensor>{a, b}), 2);
  emit(c, "fig12",
       {scatter(src1.str(), project2(a, pca)),
        scatter(src2.str(), project2(b, pca)),
        scatter("prior draws", project2(prior, pca)),
        scatter("tuned prompt", project2(post, pca))},
       {"Interpolated prior between two activation clouds"});
}

}  // namespace

void run_figures(const Config& c, const std::vector<std::string>& recipes) {
  const auto all = figure_recipes();
  for (const auto& r : recipes)
    if (std::find(all.begin(), all.end(), r) == all.end())
      throw ConfigError("unknown figure recipe '" + r + "' (known: fig1, fig5, fig10, fig12)");
  tasks::Tokenizer tok;
  const auto m = load_base(c);
  for (const auto& r : recipes) {
    if (r == "fig1") fig1(c, m, tok);
    if (r == "fig5") fig5(c, m, tok);
    if (r == "fig10") fig10(c, m, tok);
    if (r == "fig12") fig12(c, m, tok);
  }
}

}  // namespace promptlab::cli
