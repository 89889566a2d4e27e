// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "promptlab/model/transformer.hpp"
#include "promptlab/numcore/tensor.hpp"

// Tensor container:
//   "PPL1" | u32 version | u32 count |
//   count x ( u16 name_len | name | u8 rank | rank x u64 extent | f64 values )
// All integers and doubles little-endian.
namespace promptlab::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  nc::Tensor tensor;

  bool operator==(const NamedTensor&) const = default;
};

std::vector<std::uint8_t> encode_tensors(std::span<const NamedTensor> tensors);

// Throws FormatError with the byte offset of the first inconsistency; no
// partial result is returned.
std::vector<NamedTensor> decode_tensors(std::span<const std::uint8_t> bytes);

void save_tensors(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

const nc::Tensor& find_tensor(std::span<const NamedTensor> tensors, std::string_view name);

void save_model(const std::filesystem::path& path, const TransformerModel& model);
// Restores parameters and the frozen flag.
TransformerModel load_model(const std::filesystem::path& path);

}  // namespace promptlab::model
