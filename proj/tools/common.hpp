// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "promptlab/cli/config.hpp"
#include "promptlab/model/transformer.hpp"
#include "promptlab/priors/gaussian.hpp"
#include "promptlab/tasks/dataset.hpp"
#include "promptlab/tasks/tokenizer.hpp"

namespace promptlab::cli::detail {

std::string hex64(std::uint64_t v);

// Throws MissingArtifactError naming the subcommand that produces `path`.
void require(const std::filesystem::path& path, const std::string& producer);

tasks::Dataset load_data(const Config& c, const std::string& name);
model::TransformerModel load_base(const Config& c);
tasks::Dataset task_data(const Config& c, tasks::TaskId task);

// Character rows of the token-embedding table.
nc::Tensor char_embeddings(const model::TransformerModel& m, const tasks::Tokenizer& tok);

// Points behind a fitted Gaussian for an activation source.
nc::Tensor source_points(const Config& c, const model::TransformerModel& m,
                         const tasks::Tokenizer& tok, const ActivationSource& src);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames into place.
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace promptlab::cli::detail
