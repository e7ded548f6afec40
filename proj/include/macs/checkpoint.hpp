#pragma once

#include "macs/dense_net.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace macs {

// Binary, little-endian:
//   "MACSCKPT" | u8 version | u8 output activation | u64 config hash |
//   u64 episode count | u32 tag length, tag bytes | u32 layer count,
//   u32 sizes... | u64 parameter count | f64 parameters...
inline constexpr char kCheckpointMagic[8] = {'M', 'A', 'C', 'S', 'C', 'K', 'P', 'T'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t episode_count = 0;
  std::string tag;

  bool operator==(const CheckpointMeta&) const = default;
};

void save_checkpoint(const DenseNet& net, const CheckpointMeta& meta, std::ostream& sink);
DenseNet load_checkpoint(std::istream& source, CheckpointMeta* meta = nullptr);

void save_checkpoint_file(const DenseNet& net, const CheckpointMeta& meta, const std::string& path);
DenseNet load_checkpoint_file(const std::string& path, CheckpointMeta* meta = nullptr);

namespace binio {
void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
// Readers throw CorruptCheckpoint on a short read.
std::uint8_t read_u8(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
}  // namespace binio

}  // namespace macs
