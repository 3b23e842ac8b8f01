#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Little-endian tensor blob files. Layout:
//   bytes 0..3   magic "VW4C"
//   u32          format version (1)
//   u32          number of dimensions
//   u64 * dims   extents
//   payload      raw values (float32) or bit-packed mask (LSB first)
//   u32          CRC32 of the payload bytes
namespace vw4c::io {

constexpr uint32_t kBlobVersion = 1;

uint32_t crc32(const uint8_t* data, size_t len);

void write_f32_blob(const std::string& path, const std::vector<uint64_t>& extents,
                    const float* values);
std::vector<float> read_f32_blob(const std::string& path, std::vector<uint64_t>* extents_out);

void write_mask_blob(const std::string& path, const std::vector<uint64_t>& extents,
                     const uint8_t* mask01);
std::vector<uint8_t> read_mask_blob(const std::string& path, std::vector<uint64_t>* extents_out);

// CRC of a blob file's payload, as stored in its trailer (used for manifests).
uint32_t blob_payload_crc(const std::string& path);

}  // namespace vw4c::io
