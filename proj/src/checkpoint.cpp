#include "macs/checkpoint.hpp"

#include "macs/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace macs {

namespace binio {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw CorruptCheckpoint("checkpoint is truncated");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u8(std::ostream& out, std::uint8_t v) { write_le(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }
std::uint8_t read_u8(std::istream& in) { return read_le<std::uint8_t>(in); }
std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

}  // namespace binio

void save_checkpoint(const DenseNet& net, const CheckpointMeta& meta, std::ostream& sink) {
  using namespace binio;
  sink.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u8(sink, kCheckpointVersion);
  write_u8(sink, static_cast<std::uint8_t>(net.output_activation()));
  write_u64(sink, meta.config_hash);
  write_u64(sink, meta.episode_count);
  write_u32(sink, static_cast<std::uint32_t>(meta.tag.size()));
  sink.write(meta.tag.data(), static_cast<std::streamsize>(meta.tag.size()));
  write_u32(sink, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) write_u32(sink, static_cast<std::uint32_t>(s));
  write_u64(sink, static_cast<std::uint64_t>(net.parameter_count()));
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) write_f64(sink, net.parameters()[i]);
  if (!sink) throw Error("failed writing checkpoint");
}

DenseNet load_checkpoint(std::istream& source, CheckpointMeta* meta) {
  using namespace binio;
  char magic[sizeof(kCheckpointMagic)];
  source.read(magic, sizeof(magic));
  if (source.gcount() != static_cast<std::streamsize>(sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw CorruptCheckpoint("bad checkpoint magic");
  }
  const std::uint8_t version = read_u8(source);
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint8_t act = read_u8(source);
  if (act > 1) throw CorruptCheckpoint("unknown output activation");
  CheckpointMeta m;
  m.config_hash = read_u64(source);
  m.episode_count = read_u64(source);
  const std::uint32_t tag_len = read_u32(source);
  if (tag_len > (1u << 20)) throw CorruptCheckpoint("implausible tag length");
  m.tag.resize(tag_len);
  source.read(m.tag.data(), tag_len);
  if (source.gcount() != static_cast<std::streamsize>(tag_len)) {
    throw CorruptCheckpoint("checkpoint is truncated");
  }
  const std::uint32_t n_layers = read_u32(source);
  if (n_layers < 2 || n_layers > 64) throw CorruptCheckpoint("implausible layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t s = read_u32(source);
    if (s < 1 || s > (1u << 20)) throw CorruptCheckpoint("implausible layer size");
    sizes.push_back(static_cast<int>(s));
  }
  const std::uint64_t count = read_u64(source);
  if (count != static_cast<std::uint64_t>(parameter_count_for(sizes))) {
    throw CorruptCheckpoint("parameter count does not match layer sizes");
  }
  Eigen::VectorXd params(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = read_f64(source);
  if (meta) *meta = std::move(m);
  return DenseNet(std::move(sizes), static_cast<OutputActivation>(act), std::move(params));
}

void save_checkpoint_file(const DenseNet& net, const CheckpointMeta& meta,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  save_checkpoint(net, meta, out);
}

DenseNet load_checkpoint_file(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("cannot open checkpoint: " + path);
  return load_checkpoint(in, meta);
}

}  // namespace macs
