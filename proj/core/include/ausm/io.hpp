#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ausm/tensor.hpp"

namespace ausm {

using Bytes = std::vector<std::byte>;
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Tensor bundle file "ATB1":
///   "ATB1" | u64 LE manifest length | JSON manifest | zero pad | blob
/// The manifest is {version, entries: [{name, shape, dtype: "f32", byte_offset,
/// byte_len}], metadata}. The blob starts on a 64-byte boundary and every
/// entry offset (relative to the blob) is 64-byte aligned.
inline constexpr std::size_t kBlobAlignment = 64;

struct AtbContents {
  NamedTensors tensors;
  std::string metadata_json = "{}";  // serialized JSON object
};

Bytes encode_atb(const NamedTensors& tensors, const std::string& metadata_json = "{}");
AtbContents decode_atb(std::span<const std::byte> bytes);

/// Raw video / mask stack file "AVR1": same layout with manifest
/// {T, height, width, channels} and frames stored as f32 [T, height, width, channels].
Bytes encode_avr(const Tensor& frames);
Tensor decode_avr(std::span<const std::byte> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

inline void write_atb(const std::filesystem::path& path, const NamedTensors& tensors,
                      const std::string& metadata_json = "{}") {
  write_file(path, encode_atb(tensors, metadata_json));
}
inline AtbContents read_atb(const std::filesystem::path& path) { return decode_atb(read_file(path)); }
inline void write_avr(const std::filesystem::path& path, const Tensor& frames) {
  write_file(path, encode_avr(frames));
}
inline Tensor read_avr(const std::filesystem::path& path) { return decode_avr(read_file(path)); }

}  // namespace ausm
