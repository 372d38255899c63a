#include "ausm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "ausm/error.hpp"

namespace ausm {

using nlohmann::json;

namespace {

constexpr std::size_t kHeaderSize = 12;  // magic + u64 length

std::size_t align_up(std::size_t n) { return (n + kBlobAlignment - 1) / kBlobAlignment * kBlobAlignment; }

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::span<const std::byte> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

void put_floats(Bytes& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[start + 4 * i + b] = static_cast<std::byte>((u >> (8 * b)) & 0xff);
  }
}

void get_floats(std::span<const std::byte> in, std::size_t at, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(in[at + 4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(u);
  }
}

Bytes frame(const char* magic, const json& manifest, std::span<const float> blob_values,
            const std::vector<std::size_t>* offsets = nullptr, const std::vector<std::span<const float>>* parts = nullptr) {
  const std::string text = manifest.dump();
  Bytes out;
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>(magic[i]));
  put_u64(out, text.size());
  for (char c : text) out.push_back(static_cast<std::byte>(c));
  out.resize(align_up(out.size()));
  const std::size_t blob = out.size();
  if (parts) {
    for (std::size_t i = 0; i < parts->size(); ++i) {
      out.resize(blob + (*offsets)[i]);
      put_floats(out, (*parts)[i]);
    }
  } else {
    put_floats(out, blob_values);
  }
  return out;
}

struct Parsed {
  json manifest;
  std::size_t blob_start;
};

Parsed parse(std::span<const std::byte> bytes, const char* magic) {
  if (bytes.size() < kHeaderSize) throw FormatError("file too short for header", bytes.size());
  for (int i = 0; i < 4; ++i) {
    if (static_cast<char>(bytes[i]) != magic[i]) {
      throw FormatError(std::string("bad magic, expected ") + magic, static_cast<std::size_t>(i));
    }
  }
  const std::uint64_t len = get_u64(bytes, 4);
  if (len > bytes.size() - kHeaderSize) throw FormatError("manifest length exceeds file size", 4);
  const char* text = reinterpret_cast<const char*>(bytes.data() + kHeaderSize);
  Parsed p;
  try {
    p.manifest = json::parse(text, text + len);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), kHeaderSize + e.byte);
  }
  if (!p.manifest.is_object()) throw FormatError("manifest is not a JSON object", kHeaderSize);
  p.blob_start = align_up(kHeaderSize + len);
  return p;
}

std::size_t need_uint(const json& obj, const char* key, std::size_t at) {
  if (!obj.contains(key) || !obj[key].is_number_unsigned()) {
    throw FormatError(std::string("manifest field '") + key + "' missing or not a non-negative integer", at);
  }
  return obj[key].get<std::size_t>();
}

}  // namespace

Bytes encode_atb(const NamedTensors& tensors, const std::string& metadata_json) {
  json entries = json::array();
  std::vector<std::size_t> offsets;
  std::vector<std::span<const float>> parts;
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    entries.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"dtype", "f32"},
                       {"byte_offset", offset},
                       {"byte_len", t.byte_size()}});
    offsets.push_back(offset);
    parts.push_back(t.data());
    offset = align_up(offset + t.byte_size());
  }
  json manifest = {{"version", 1}, {"entries", entries}, {"metadata", json::parse(metadata_json)}};
  return frame("ATB1", manifest, {}, &offsets, &parts);
}

AtbContents decode_atb(std::span<const std::byte> bytes) {
  const Parsed p = parse(bytes, "ATB1");
  const json& m = p.manifest;
  if (need_uint(m, "version", kHeaderSize) != 1) throw FormatError("unsupported ATB version", kHeaderSize);
  if (!m.contains("entries") || !m["entries"].is_array()) throw FormatError("manifest has no entries array", kHeaderSize);
  AtbContents out;
  if (m.contains("metadata")) out.metadata_json = m["metadata"].dump();
  for (const json& e : m["entries"]) {
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string() || !e.contains("shape") ||
        !e["shape"].is_array()) {
      throw FormatError("malformed manifest entry", kHeaderSize);
    }
    if (e.value("dtype", "") != "f32") throw FormatError("entry '" + e["name"].get<std::string>() + "' is not f32", kHeaderSize);
    const Shape shape = e["shape"].get<Shape>();
    const std::size_t off = need_uint(e, "byte_offset", kHeaderSize);
    const std::size_t len = need_uint(e, "byte_len", kHeaderSize);
    const std::size_t abs = p.blob_start + off;
    if (off % kBlobAlignment != 0) throw FormatError("entry offset is not 64-byte aligned", abs);
    if (len != shape_numel(shape) * 4) throw FormatError("entry byte_len does not match its shape", abs);
    if (abs + len > bytes.size()) throw FormatError("entry extends past end of file", abs);
    Tensor t(shape);
    get_floats(bytes, abs, t.data());
    out.tensors.emplace_back(e["name"].get<std::string>(), std::move(t));
  }
  return out;
}

Bytes encode_avr(const Tensor& frames) {
  if (frames.rank() != 4) throw DimensionError("AVR1 frames must be [T, height, width, channels], got " + shape_str(frames.shape()));
  json manifest = {{"T", frames.dim(0)}, {"height", frames.dim(1)}, {"width", frames.dim(2)}, {"channels", frames.dim(3)}};
  return frame("AVR1", manifest, frames.data());
}

Tensor decode_avr(std::span<const std::byte> bytes) {
  const Parsed p = parse(bytes, "AVR1");
  const json& m = p.manifest;
  const std::size_t T = need_uint(m, "T", kHeaderSize);
  const std::size_t h = need_uint(m, "height", kHeaderSize);
  const std::size_t w = need_uint(m, "width", kHeaderSize);
  const std::size_t c = m.contains("channels") ? need_uint(m, "channels", kHeaderSize) : 3;
  Tensor t({T, h, w, c});
  if (p.blob_start + t.byte_size() > bytes.size()) {
    throw FormatError("frame data truncated: need " + std::to_string(t.byte_size()) + " bytes", p.blob_start);
  }
  get_floats(bytes, p.blob_start, t.data());
  return t;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes out(size);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace ausm
