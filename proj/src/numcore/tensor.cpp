// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/numcore/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <malloc.h>
#include <numeric>
#include <sstream>

#include "promptlab/error.hpp"
#include "promptlab/kernels/kernels.hpp"

namespace promptlab::nc {

namespace {

// Activation buffers of a few MB are created and released on every step;
// keep them on the heap so freed pages are reused instead of refaulted.
const bool kHeapTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
  return true;
}();

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void check_extents(const Shape& shape) {
  for (auto e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (shape_numel(shape_) != data_.size())
    throw DimensionError("shape " + shape_str(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) throw DimensionError("axis out of range");
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : data_.size() / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

std::span<double> Tensor::row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

std::span<const double> Tensor::row(std::size_t r) const {
  return {data_.data() + r * cols(), cols()};
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size())
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::check_finite(std::string_view where) const {
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw NumericError("non-finite value " + std::to_string(data_[i]) + " at index " +
                         std::to_string(i) + " in " + std::string(where));
}

Tensor transpose(const Tensor& t) {
  if (t.rank() != 2) throw DimensionError("transpose expects a matrix, got " + shape_str(t.shape()));
  Tensor out({t.cols(), t.rows()});
  kernels::transpose(t.values(), out.values(), t.rows(), t.cols());
  return out;
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t count) {
  if (begin + count > t.rows()) throw DimensionError("row slice out of range");
  const auto first = t.values().begin() + static_cast<std::ptrdiff_t>(begin * t.cols());
  return Tensor({count, t.cols()},
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * t.cols())));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows needs at least one part");
  const std::size_t cols = parts.front().cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_rows column mismatch");
    data.insert(data.end(), p.values().begin(), p.values().end());
    rows += p.rows();
  }
  return Tensor({rows, cols}, std::move(data));
}

std::uint64_t checksum(const Tensor& t, std::uint64_t h) {
  for (double v : t.values()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace promptlab::nc
