// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "promptlab/cli/pipeline.hpp"
#include "promptlab/error.hpp"
#include "promptlab/priors/samplers.hpp"

using namespace promptlab;

namespace {

int exit_code(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const FormatError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const MissingArtifactError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e))
    return 2;
  return 1;
}

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> lr;
};

cli::Config resolve(const Overrides& o) {
  cli::Config c;
  if (!o.config.empty()) c = cli::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.lr) c.lr = *o.lr;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptlab: pretrain a small transformer, tune prompts from different priors, and "
               "measure where the tuned prompts land."};
  app.require_subcommand(1);
  app.footer(cli::csv_schemas());
  Overrides o;
  app.add_option("--config", o.config, "JSON config (schema_version 1); defaults apply without one")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed; every stage seed derives from it");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--lr", o.lr, "tuning learning rate for tune and figure cells");

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic LM, QA and ARITH datasets");
  auto* pre = app.add_subcommand("pretrain", "pretrain the base model on the generated corpus");

  auto* sp = app.add_subcommand("sample-prior", "draw prompt initializations from priors");
  std::vector<std::string> sp_priors, sp_modes;
  sp->add_option("--prior", sp_priors, "prior kinds (default: sweep.priors)");
  sp->add_option("--mode", sp_modes, "prompt modes (default: tune.mode)");

  auto* tune = app.add_subcommand("tune", "tune one prompt on QA with the frozen base model");
  std::optional<std::string> tune_prior, tune_mode;
  tune->add_option("--prior", tune_prior, "prior kind (default: tune.prior)");
  tune->add_option("--mode", tune_mode, "soft or deep (default: tune.mode)");

  auto* sweep = app.add_subcommand("sweep", "tune the prior x lr x mode grid; resumes finished cells");
  std::size_t jobs = 1;
  sweep->add_option("--jobs", jobs, "cells tuned concurrently")->check(CLI::PositiveNumber);

  auto* ana = app.add_subcommand("analyze", "cluster, locality, trajectory and divergence reports");

  auto* fig = app.add_subcommand("figures", "render deterministic SVG+CSV figures");
  std::vector<std::string> recipes;
  fig->add_option("--recipe", recipes, "fig1, fig5, fig10 or fig12 (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto c = resolve(o);
    if (*gen) {
      cli::run_gen_data(c);
    } else if (*pre) {
      cli::run_pretrain(c);
    } else if (*sp) {
      cli::run_sample_prior(c, sp_priors.empty() ? c.sweep.priors : sp_priors,
                            sp_modes.empty() ? std::vector<std::string>{c.tune.mode} : sp_modes);
    } else if (*tune) {
      if (tune_prior) c.tune.prior = *tune_prior;
      if (tune_mode) c.tune.mode = *tune_mode;
      c.validate();
      const auto r = cli::run_cells(c, {{c.tune.prior, c.lr, c.tune.mode, c.tune.replicate}}, 1, false);
      if (r.failed > 0) throw NumericError("tuning failed; see the cell's error.json");
    } else if (*sweep) {
      const auto r = cli::run_cells(c, cli::sweep_cells(c), jobs, true);
      std::cerr << "sweep: " << r.completed << " tuned, " << r.reused << " reused, " << r.failed << " failed\n";
    } else if (*ana) {
      cli::run_analyze(c);
    } else if (*fig) {
      cli::run_figures(c, recipes.empty() ? cli::figure_recipes() : recipes);
    }
  } catch (const std::exception& e) {
    std::cerr << "promptlab: " << e.what() << '\n';
    return exit_code(e);
  }
  return 0;
}
