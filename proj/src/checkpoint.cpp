#include "rmx/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rmx/error.hpp"

namespace rmx {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'M', 'X', 'C'};

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(U));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  template <typename U>
  U get() {
    U v;
    std::memcpy(&v, take(sizeof(U)), sizeof(U));
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) throw CheckpointError("truncated file");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const MotionModel<float>& model,
                                               std::uint64_t seed) {
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  nlohmann::json meta;
  meta["config"] = model.config();
  meta["seed"] = seed;
  const std::string text = meta.dump();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text.data(), text.size());

  const auto& entries = model.parameters().entries();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, var] : entries) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    const nn::Shape& shape = var->value.shape();
    w.put<std::uint8_t>(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put_bytes(var->value.data(), var->value.size() * sizeof(float));
  }
  w.put<std::uint32_t>(crc32_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                  std::optional<Architecture> expected) {
  if (bytes.size() < 16) throw CheckpointError("truncated file");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("bad magic");
  Reader r(bytes.data() + 4, bytes.size() - 4);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported version " + std::to_string(version));
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  if (crc32_of(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw CheckpointError("checksum mismatch");
  }
  Reader body(bytes.data() + 8, bytes.size() - 12);

  Checkpoint ck;
  const auto meta_len = body.get<std::uint32_t>();
  const auto* meta_bytes = body.take(meta_len);
  try {
    const auto meta = nlohmann::json::parse(meta_bytes, meta_bytes + meta_len);
    ck.config = meta.at("config").get<ModelConfig>();
    ck.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad metadata: ") + e.what());
  }
  if (expected && *expected != ck.config.arch) {
    throw ConfigError("checkpoint holds a '" + to_string(ck.config.arch) +
                      "' model, expected '" + to_string(*expected) + "'");
  }
  ck.model = make_model<float>(ck.config, ck.seed);

  const auto& entries = ck.model->parameters().entries();
  const auto count = body.get<std::uint32_t>();
  if (count != entries.size()) throw CheckpointError("parameter count mismatch");
  for (const auto& [name, var] : entries) {
    const auto name_len = body.get<std::uint16_t>();
    const auto* name_bytes = body.take(name_len);
    if (std::string(reinterpret_cast<const char*>(name_bytes), name_len) != name) {
      throw CheckpointError("unexpected parameter, wanted '" + name + "'");
    }
    const auto rank = body.get<std::uint8_t>();
    nn::Shape shape(rank);
    for (auto& d : shape) d = body.get<std::uint32_t>();
    if (shape != var->value.shape()) {
      throw CheckpointError("shape mismatch for '" + name + "'");
    }
    std::memcpy(var->value.data(), body.take(var->value.size() * sizeof(float)),
                var->value.size() * sizeof(float));
  }
  if (body.remaining() != 0) throw CheckpointError("trailing bytes");
  return ck;
}

void save_checkpoint(const MotionModel<float>& model, std::uint64_t seed,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model, seed);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<Architecture> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected);
}

}  // namespace rmx
