// SPDX-License-Identifier: Apache-2.0
#include "harness/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace awdlm {
namespace {

constexpr std::string_view kMagic = "AWDLM01";
constexpr std::uint8_t kF32 = 1;
constexpr std::uint8_t kF64 = 2;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void array(std::string_view name, const Shape& shape, std::span<const float> data) {
    str(name);
    u8(kF32);
    dims(shape);
    for (float v : data) u32(std::bit_cast<std::uint32_t>(v));
  }
  void array(std::string_view name, const Shape& shape, std::span<const double> data) {
    str(name);
    u8(kF64);
    dims(shape);
    for (double v : data) f64(v);
  }
  std::string& bytes() { return out_; }

 private:
  void dims(const Shape& shape) {
    u32(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) u64(d);
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : in_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Shape header(std::string_view expected_name, std::uint8_t expected_type) {
    const std::string name = str();
    if (name != expected_name)
      fail(ErrorCode::format, "checkpoint: expected array '" + std::string(expected_name) + "', found '" + name + "'");
    const std::uint8_t type = u8();
    if (type != expected_type) fail(ErrorCode::format, "checkpoint: array '" + name + "' has the wrong element type");
    const std::uint32_t rank = u32();
    if (rank == 0 || rank > 8) fail(ErrorCode::format, "checkpoint: array '" + name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = u64();
    return shape;
  }
  Tensor<float> f32_array(std::string_view name, const Shape& expected) {
    const Shape shape = header(name, kF32);
    if (shape != expected)
      fail(ErrorCode::format, "checkpoint: array '" + std::string(name) + "' has shape " + to_string(shape) +
                                  ", expected " + to_string(expected));
    std::vector<float> data(element_count(shape));
    need(data.size() * 4);
    for (float& v : data) v = std::bit_cast<float>(u32());
    return Tensor<float>(shape, std::move(data));
  }
  std::vector<double> f64_array(std::string_view name, std::size_t expected) {
    const Shape shape = header(name, kF64);
    if (element_count(shape) != expected)
      fail(ErrorCode::format, "checkpoint: array '" + std::string(name) + "' has " +
                                  std::to_string(element_count(shape)) + " elements, expected " +
                                  std::to_string(expected));
    std::vector<double> data(expected);
    need(data.size() * 8);
    for (double& v : data) v = f64();
    return data;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) fail(ErrorCode::format, "checkpoint: payload ends early (corrupt length field)");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

constexpr std::size_t kHeaderSize = 7 + 4 + 8;

}  // namespace

std::string format_metric_row(const MetricRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.4f\t%.4f\t%.6g\t%d", row.epoch, row.train_ppl, row.valid_ppl, row.lr,
                row.triggered ? 1 : 0);
  return buf;
}

LMParameters<float> assemble_parameters(const ModelShape& shape, std::vector<Tensor<float>> tensors) {
  LMParameters<float> p = zero_parameters<float>(shape);
  auto slots = p.tensors();
  AWDLM_REQUIRE(slots.size() == tensors.size(), "assemble_parameters: expected " + std::to_string(slots.size()) +
                                                    " tensors, got " + std::to_string(tensors.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    AWDLM_REQUIRE(slots[i]->shape() == tensors[i].shape(), "assemble_parameters: shape mismatch at tensor " +
                                                               std::to_string(i));
    *slots[i] = std::move(tensors[i]);
  }
  return p;
}

LMParameters<float> Checkpoint::model() const {
  auto ptrs = params.tensors();
  AveragedIterate<float> avg = finalize<float>(state, ptrs);
  return assemble_parameters(params.shape, std::move(avg.tensors));
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.str(ckpt.config);
  w.str(ckpt.phase);

  w.u64(ckpt.vocab.size());
  for (const auto& t : ckpt.vocab) w.str(t);

  const ModelShape& s = ckpt.params.shape;
  w.u64(s.vocab);
  w.u64(s.embed);
  w.u64(s.hidden);
  w.u64(s.layers);
  const auto names = ckpt.params.names();
  const auto tensors = ckpt.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) w.array(names[i], tensors[i]->shape(), tensors[i]->data());

  const TrainerState& st = ckpt.state;
  w.u64(st.k);
  w.u64(st.t);
  w.u64(st.trigger);
  w.u8(st.triggered ? 1 : 0);
  w.u64(st.avg_count);
  w.u64(st.logs.size());
  for (double v : st.logs) w.f64(v);
  w.u64(st.iterate_sum.size());
  for (std::size_t i = 0; i < st.iterate_sum.size(); ++i)
    w.array("avg." + names.at(i), Shape{st.iterate_sum[i].size()}, std::span<const double>(st.iterate_sum[i]));

  w.u64(ckpt.rng_seed);
  w.u64(ckpt.rng_counter);
  w.u64(ckpt.epoch);
  w.f64(ckpt.lr);
  w.f64(ckpt.best_valid);
  w.u8(ckpt.stopped ? 1 : 0);
  w.u64(ckpt.metrics.size());
  for (const auto& m : ckpt.metrics) {
    w.u64(m.epoch);
    w.f64(m.train_ppl);
    w.f64(m.valid_ppl);
    w.f64(m.lr);
    w.u8(m.triggered ? 1 : 0);
  }

  Writer file;
  for (char c : kMagic) file.u8(static_cast<std::uint8_t>(c));
  file.u32(kCheckpointVersion);
  file.u64(w.bytes().size());
  file.bytes() += w.bytes();
  file.u32(crc_of(file.bytes()));
  return std::move(file.bytes());
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic)
    fail(ErrorCode::format, "not a checkpoint: bad magic (expected \"AWDLM01\")");
  if (bytes.size() < kHeaderSize)
    fail(ErrorCode::format, "truncated checkpoint: " + std::to_string(bytes.size()) + " bytes, header incomplete");
  Reader head(bytes.substr(kMagic.size(), 12));
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion)
    fail(ErrorCode::format, "unsupported checkpoint version " + std::to_string(version) + " (this build reads " +
                                std::to_string(kCheckpointVersion) + ")");
  const std::uint64_t payload = head.u64();
  const std::uint64_t expected = kHeaderSize + payload + 4;
  if (payload > bytes.size() || bytes.size() < expected)
    fail(ErrorCode::format, "truncated checkpoint: " + std::to_string(bytes.size()) + " bytes, expected " +
                                std::to_string(expected));
  if (bytes.size() > expected)
    fail(ErrorCode::format, "corrupt checkpoint: " + std::to_string(bytes.size() - expected) +
                                " unexpected trailing bytes");
  Reader tail(bytes.substr(expected - 4));
  if (tail.u32() != crc_of(bytes.substr(0, expected - 4)))
    fail(ErrorCode::format, "corrupt checkpoint: CRC mismatch");

  Reader r(bytes.substr(kHeaderSize, payload));
  Checkpoint c;
  c.config = r.str();
  c.phase = r.str();
  if (c.phase != "train" && c.phase != "finetune") fail(ErrorCode::format, "checkpoint: unknown phase '" + c.phase + "'");

  const std::uint64_t vocab_size = r.u64();
  for (std::uint64_t i = 0; i < vocab_size; ++i) c.vocab.push_back(r.str());

  ModelShape s;
  s.vocab = r.u64();
  s.embed = r.u64();
  s.hidden = r.u64();
  s.layers = r.u64();
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("checkpoint: invalid model shape: ") + e.what());
  }
  if (s.vocab != c.vocab.size()) fail(ErrorCode::format, "checkpoint: vocabulary size does not match the model");
  c.params = zero_parameters<float>(s);
  const auto names = c.params.names();
  auto slots = c.params.tensors();
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = r.f32_array(names[i], slots[i]->shape());

  TrainerState& st = c.state;
  st.k = r.u64();
  st.t = r.u64();
  st.trigger = r.u64();
  st.triggered = r.u8() != 0;
  st.avg_count = r.u64();
  const std::uint64_t nlogs = r.u64();
  if (nlogs > payload) fail(ErrorCode::format, "checkpoint: corrupt log length");
  st.logs.resize(nlogs);
  for (double& v : st.logs) v = r.f64();
  const std::uint64_t nsum = r.u64();
  if (nsum != 0 && nsum != slots.size()) fail(ErrorCode::format, "checkpoint: averaging state has the wrong arity");
  for (std::uint64_t i = 0; i < nsum; ++i) st.iterate_sum.push_back(r.f64_array("avg." + names[i], slots[i]->size()));

  c.rng_seed = r.u64();
  c.rng_counter = r.u64();
  c.epoch = r.u64();
  c.lr = r.f64();
  c.best_valid = r.f64();
  c.stopped = r.u8() != 0;
  const std::uint64_t nrows = r.u64();
  if (nrows > payload) fail(ErrorCode::format, "checkpoint: corrupt metrics length");
  for (std::uint64_t i = 0; i < nrows; ++i) {
    MetricRow m;
    m.epoch = r.u64();
    m.train_ppl = r.f64();
    m.valid_ppl = r.f64();
    m.lr = r.f64();
    m.triggered = r.u8() != 0;
    c.metrics.push_back(m);
  }
  if (!r.done()) fail(ErrorCode::format, "checkpoint: unread bytes at end of payload");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace awdlm
