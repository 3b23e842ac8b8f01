#include "vw4c/blob.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "vw4c/errors.hpp"

namespace vw4c::io {

namespace {

constexpr char kMagic[4] = {'V', 'W', '4', 'C'};

const std::array<uint32_t, 256>& crc_table() {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

struct BlobBody {
  std::vector<uint64_t> extents;
  std::vector<uint8_t> payload;
};

void write_blob(const std::string& path, const std::vector<uint64_t>& extents,
                const uint8_t* payload, size_t payload_len) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(kMagic, 4);
  const uint32_t version = kBlobVersion;
  const uint32_t dims = uint32_t(extents.size());
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&dims), 4);
  for (uint64_t e : extents) f.write(reinterpret_cast<const char*>(&e), 8);
  f.write(reinterpret_cast<const char*>(payload), std::streamsize(payload_len));
  const uint32_t crc = crc32(payload, payload_len);
  f.write(reinterpret_cast<const char*>(&crc), 4);
  if (!f) throw IoError("write failed: " + path);
}

BlobBody read_blob(const std::string& path, size_t payload_len_for_count) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("bad magic in blob: " + path);
  }
  uint32_t version = 0, dims = 0;
  if (!f.read(reinterpret_cast<char*>(&version), 4)) throw IoError("truncated blob: " + path);
  if (version != kBlobVersion) {
    throw IoError("blob version mismatch in " + path + ": file has " + std::to_string(version) +
                  ", expected " + std::to_string(kBlobVersion));
  }
  if (!f.read(reinterpret_cast<char*>(&dims), 4)) throw IoError("truncated blob: " + path);
  if (dims > 16) throw IoError("implausible blob rank in " + path);

  BlobBody body;
  body.extents.resize(dims);
  uint64_t count = 1;
  for (uint32_t i = 0; i < dims; ++i) {
    if (!f.read(reinterpret_cast<char*>(&body.extents[i]), 8)) {
      throw IoError("truncated blob: " + path);
    }
    count *= body.extents[i];
  }
  const size_t payload_len =
      payload_len_for_count == 0 ? size_t(count) : payload_len_for_count;
  body.payload.resize(payload_len);
  if (!f.read(reinterpret_cast<char*>(body.payload.data()), std::streamsize(payload_len))) {
    throw IoError("truncated blob: " + path);
  }
  uint32_t stored_crc = 0;
  if (!f.read(reinterpret_cast<char*>(&stored_crc), 4)) throw IoError("truncated blob: " + path);
  const uint32_t actual = crc32(body.payload.data(), body.payload.size());
  if (stored_crc != actual) {
    throw IoError("checksum mismatch in " + path + ": stored " + std::to_string(stored_crc) +
                  ", computed " + std::to_string(actual));
  }
  return body;
}

uint64_t extent_count(const std::vector<uint64_t>& extents) {
  uint64_t n = 1;
  for (uint64_t e : extents) n *= e;
  return n;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len) {
  uint32_t c = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = crc_table()[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void write_f32_blob(const std::string& path, const std::vector<uint64_t>& extents,
                    const float* values) {
  const uint64_t n = extent_count(extents);
  write_blob(path, extents, reinterpret_cast<const uint8_t*>(values), size_t(n) * 4);
}

std::vector<float> read_f32_blob(const std::string& path, std::vector<uint64_t>* extents_out) {
  // payload length derives from extents: count * sizeof(float)
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open: " + path);
  probe.seekg(8);
  uint32_t dims = 0;
  if (!probe.read(reinterpret_cast<char*>(&dims), 4)) throw IoError("truncated blob: " + path);
  std::vector<uint64_t> extents(dims);
  uint64_t count = 1;
  for (uint32_t i = 0; i < dims; ++i) {
    if (!probe.read(reinterpret_cast<char*>(&extents[i]), 8)) {
      throw IoError("truncated blob: " + path);
    }
    count *= extents[i];
  }
  probe.close();

  BlobBody body = read_blob(path, size_t(count) * 4);
  std::vector<float> values(size_t(count), 0.0f);
  std::memcpy(values.data(), body.payload.data(), size_t(count) * 4);
  if (extents_out) *extents_out = std::move(body.extents);
  return values;
}

void write_mask_blob(const std::string& path, const std::vector<uint64_t>& extents,
                     const uint8_t* mask01) {
  const uint64_t n = extent_count(extents);
  std::vector<uint8_t> packed((size_t(n) + 7) / 8, 0);
  for (uint64_t i = 0; i < n; ++i) {
    if (mask01[i]) packed[size_t(i / 8)] |= uint8_t(1u << (i % 8));
  }
  write_blob(path, extents, packed.data(), packed.size());
}

std::vector<uint8_t> read_mask_blob(const std::string& path, std::vector<uint64_t>* extents_out) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open: " + path);
  probe.seekg(8);
  uint32_t dims = 0;
  if (!probe.read(reinterpret_cast<char*>(&dims), 4)) throw IoError("truncated blob: " + path);
  std::vector<uint64_t> extents(dims);
  uint64_t count = 1;
  for (uint32_t i = 0; i < dims; ++i) {
    if (!probe.read(reinterpret_cast<char*>(&extents[i]), 8)) {
      throw IoError("truncated blob: " + path);
    }
    count *= extents[i];
  }
  probe.close();

  BlobBody body = read_blob(path, (size_t(count) + 7) / 8);
  std::vector<uint8_t> mask(size_t(count), 0);
  for (uint64_t i = 0; i < count; ++i) {
    mask[size_t(i)] = (body.payload[size_t(i / 8)] >> (i % 8)) & 1u;
  }
  if (extents_out) *extents_out = std::move(body.extents);
  return mask;
}

uint32_t blob_payload_crc(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open: " + path);
  const std::streamoff size = f.tellg();
  if (size < 4) throw IoError("truncated blob: " + path);
  f.seekg(size - 4);
  uint32_t crc = 0;
  if (!f.read(reinterpret_cast<char*>(&crc), 4)) throw IoError("truncated blob: " + path);
  return crc;
}

}  // namespace vw4c::io
