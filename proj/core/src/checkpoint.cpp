// SPDX-License-Identifier: Apache-2.0
#include "atf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "atf/atfnet.hpp"
#include "atf/error.hpp"

namespace atf {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'T', 'F', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  template <typename T> void put(T v) {
    const auto *p = reinterpret_cast<const char *>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void *data, std::size_t n) {
    const auto *p = static_cast<const char *>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::string &bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  template <typename T> T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const char *take(std::size_t n) {
    if (n > bytes_.size() - pos_)
      fail(ErrorKind::kCorrupt, source_ + ": truncated at byte " + std::to_string(pos_));
    const char *p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

} // namespace

const CheckpointTensor *Checkpoint::find(const std::string &name,
                                         TensorKind kind) const {
  for (const auto &t : tensors)
    if (t.kind == kind && t.name == name)
      return &t;
  return nullptr;
}

void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path) {
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put<std::uint16_t>(Checkpoint::kMajor);
  w.put<std::uint16_t>(Checkpoint::kMinor);
  w.put<std::uint16_t>(Checkpoint::kPatch);
  w.put<std::uint16_t>(0);
  const std::string text = ckpt.config.to_text();
  w.put<std::uint64_t>(fnv1a64(text));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text.data(), text.size());
  w.put<std::uint64_t>(ckpt.seed);
  w.put<std::uint64_t>(ckpt.epoch);
  w.put<std::uint64_t>(ckpt.step);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto &t : ckpt.tensors) {
    if (t.name.size() > 0xffff || t.value.rank() > 0xff)
      fail(ErrorKind::kConfig, "tensor " + t.name + " cannot be serialized");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes(t.name.data(), t.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.kind));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.value.rank()));
    for (const auto d : t.value.shape())
      w.put<std::uint64_t>(d);
    w.put_bytes(t.value.ptr(), t.value.size() * sizeof(real));
  }
  w.put<std::uint64_t>(fnv1a64(w.bytes()));

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out)
      fail(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::kMissingFile, "cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const std::string src = path.string();
  if (bytes.size() < sizeof kMagic + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    fail(ErrorKind::kCorrupt, src + ": not a checkpoint");

  Reader r(bytes, src);
  r.take(sizeof kMagic);
  const auto major = r.get<std::uint16_t>();
  const auto minor = r.get<std::uint16_t>();
  r.get<std::uint16_t>();
  r.get<std::uint16_t>();
  if (major != Checkpoint::kMajor)
    fail(ErrorKind::kVersionMismatch,
         src + ": format " + std::to_string(major) + "." + std::to_string(minor) +
             ", this build reads " + std::to_string(Checkpoint::kMajor) + ".x");
  if (bytes.size() < sizeof kMagic + 16)
    fail(ErrorKind::kCorrupt, src + ": truncated");
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a64(std::string_view(bytes).substr(0, bytes.size() - 8)) != stored_sum)
    fail(ErrorKind::kCorrupt, src + ": checksum mismatch (truncated or damaged)");

  Checkpoint ck;
  const auto digest = r.get<std::uint64_t>();
  const auto text_len = r.get<std::uint32_t>();
  const std::string text(r.take(text_len), text_len);
  if (fnv1a64(text) != digest)
    fail(ErrorKind::kCorrupt, src + ": config digest mismatch");
  try {
    ck.config = model_config_from(KeyValues::parse(text, src));
  } catch (const Error &e) {
    fail(ErrorKind::kCorrupt, src + ": unreadable config: " + e.what());
  }
  ck.seed = r.get<std::uint64_t>();
  ck.epoch = r.get<std::uint64_t>();
  ck.step = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const auto name_len = r.get<std::uint16_t>();
    t.name.assign(r.take(name_len), name_len);
    const auto kind = r.get<std::uint8_t>();
    if (kind > 3)
      fail(ErrorKind::kCorrupt, src + ": bad tensor kind for " + t.name);
    t.kind = static_cast<TensorKind>(kind);
    const auto rank = r.get<std::uint8_t>();
    Shape shape(rank);
    for (auto &d : shape)
      d = r.get<std::uint64_t>();
    const std::size_t numel = shape_numel(shape);
    if (numel > r.remaining() / sizeof(real))
      fail(ErrorKind::kCorrupt, src + ": tensor " + t.name + " overruns the file");
    std::vector<real> data(numel);
    std::memcpy(data.data(), r.take(numel * sizeof(real)), numel * sizeof(real));
    t.value = Tensor(std::move(shape), std::move(data));
    ck.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 8)
    fail(ErrorKind::kCorrupt, src + ": trailing bytes");
  return ck;
}

Checkpoint capture_model(const AtfNet &model) {
  Checkpoint ck;
  ck.config = model.config();
  ck.seed = model.seed();
  for (const auto &e : model.params().entries())
    ck.tensors.push_back({e.name, e.trainable ? TensorKind::kParam : TensorKind::kBuffer,
                          e.var.value()});
  return ck;
}

void restore_model(AtfNet &model, const Checkpoint &ckpt) {
  if (!(ckpt.config == model.config()))
    fail(ErrorKind::kConfig, "checkpoint config differs from the model config:\n" +
                                 ckpt.config.to_text() + "vs\n" +
                                 model.config().to_text());
  std::size_t matched = 0;
  for (const auto &e : model.params().entries()) {
    const auto kind = e.trainable ? TensorKind::kParam : TensorKind::kBuffer;
    const CheckpointTensor *t = ckpt.find(e.name, kind);
    if (!t)
      fail(ErrorKind::kConfig, "checkpoint lacks tensor " + e.name);
    if (t->value.shape() != e.var.shape())
      fail(ErrorKind::kConfig, "tensor " + e.name + " has shape " +
                                   shape_str(t->value.shape()) + ", model expects " +
                                   shape_str(e.var.shape()));
    ++matched;
  }
  for (const auto &t : ckpt.tensors)
    if (t.kind == TensorKind::kParam || t.kind == TensorKind::kBuffer)
      --matched;
  if (matched != 0)
    fail(ErrorKind::kConfig, "checkpoint holds tensors the model does not have");
  for (const auto &e : model.params().entries()) {
    const auto kind = e.trainable ? TensorKind::kParam : TensorKind::kBuffer;
    Var handle = e.var;
    handle.mutable_value() = ckpt.find(e.name, kind)->value;
  }
}

} // namespace atf
