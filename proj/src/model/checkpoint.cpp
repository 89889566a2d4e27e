// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "promptlab/error.hpp"

namespace promptlab::model {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'L', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
      out_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos_) + " while reading " +
                        what + " (" + std::to_string(n) + " bytes needed, " +
                        std::to_string(in_.size() - pos_) + " left)");
  }
  template <typename U>
  U uint(const char* what) {
    need(sizeof(U), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>("tensor values")); }
  std::string str(std::size_t n) {
    need(n, "tensor name");
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void magic() {
    need(4, "magic");
    if (std::memcmp(in_.data(), kMagic, 4) != 0)
      throw FormatError("bad checkpoint magic at byte 0 (expected \"PPL1\")");
    pos_ = 4;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensors(std::span<const NamedTensor> tensors) {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw FormatError("tensor name too long: " + t.name.substr(0, 32) + "...");
    if (t.tensor.rank() == 0 || t.tensor.rank() > 255)
      throw FormatError("tensor '" + t.name + "' has unsupported rank");
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.tensor.rank()));
    for (auto e : t.tensor.shape()) w.uint<std::uint64_t>(e);
    for (double v : t.tensor.values()) w.f64(v);
  }
  return w.take();
}

std::vector<NamedTensor> decode_tensors(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.magic();
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " at byte 4, expected " +
                      std::to_string(kCheckpointVersion));
  const auto count = r.uint<std::uint32_t>("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.offset();
    NamedTensor t;
    t.name = r.str(r.uint<std::uint16_t>("name length"));
    const auto rank = r.uint<std::uint8_t>("rank");
    if (rank == 0) throw FormatError("tensor '" + t.name + "' at byte " + std::to_string(start) + " has rank 0");
    nc::Shape shape;
    std::size_t numel = 1;
    for (unsigned a = 0; a < rank; ++a) {
      const auto e = r.uint<std::uint64_t>("extent");
      if (e == 0 || numel > (std::numeric_limits<std::size_t>::max() / 8) / e)
        throw FormatError("tensor '" + t.name + "' at byte " + std::to_string(start) +
                          " has an invalid extent");
      numel *= e;
      shape.push_back(e);
    }
    r.need(numel * 8, "tensor values");
    std::vector<double> data(numel);
    for (auto& v : data) v = r.f64();
    t.tensor = nc::Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  if (!r.done())
    throw FormatError("trailing bytes after tensor " + std::to_string(count) + " at byte " +
                      std::to_string(r.offset()));
  return out;
}

void save_tensors(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  const auto bytes = encode_tensors(tensors);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("write failed for " + path.string());
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("checkpoint " + path.string() + " not found");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_tensors(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

const nc::Tensor& find_tensor(std::span<const NamedTensor> tensors, std::string_view name) {
  for (const auto& t : tensors)
    if (t.name == name) return t.tensor;
  throw FormatError("checkpoint has no tensor named '" + std::string(name) + "'");
}

void save_model(const std::filesystem::path& path, const TransformerModel& model) {
  const auto& c = model.config();
  std::vector<NamedTensor> tensors;
  tensors.push_back({"meta.config",
                     nc::Tensor({8}, {double(c.n_layers), double(c.d_model), double(c.n_heads),
                                      double(c.d_ff), double(c.vocab_size), double(c.max_seq),
                                      double(c.seed & 0xffffffffULL), double(c.seed >> 32)})});
  tensors.push_back({"meta.frozen", nc::Tensor({1}, {model.frozen() ? 1.0 : 0.0})});
  for (auto& [name, v] : model.named_parameters()) tensors.push_back({name, v->value});
  save_tensors(path, tensors);
}

TransformerModel load_model(const std::filesystem::path& path) {
  const auto tensors = load_tensors(path);
  const auto& meta = find_tensor(tensors, "meta.config");
  if (meta.size() != 8) throw FormatError("meta.config must hold 8 values");
  ModelConfig c;
  c.n_layers = static_cast<std::size_t>(meta[0]);
  c.d_model = static_cast<std::size_t>(meta[1]);
  c.n_heads = static_cast<std::size_t>(meta[2]);
  c.d_ff = static_cast<std::size_t>(meta[3]);
  c.vocab_size = static_cast<std::size_t>(meta[4]);
  c.max_seq = static_cast<std::size_t>(meta[5]);
  c.seed = static_cast<std::uint64_t>(meta[6]) | (static_cast<std::uint64_t>(meta[7]) << 32);
  TransformerModel model(c);
  for (auto& [name, v] : model.named_parameters()) {
    const auto& t = find_tensor(tensors, name);
    if (t.shape() != v->value.shape())
      throw FormatError("tensor '" + name + "' has shape " + nc::shape_str(t.shape()) +
                        ", model expects " + nc::shape_str(v->value.shape()));
    v->value = t;
  }
  if (find_tensor(tensors, "meta.frozen")[0] != 0.0) model.freeze();
  return model;
}

}  // namespace promptlab::model
