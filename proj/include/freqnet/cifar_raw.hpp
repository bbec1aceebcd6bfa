#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace freqnet {

// Byte-level access to the official CIFAR binary format.
//
// CIFAR-10: records of 3073 bytes (1 label byte + 3072 pixel bytes), five
// train files of 10000 records plus one test file. CIFAR-100: records of
// 3074 bytes (coarse label, fine label, 3072 pixel bytes), one train file of
// 50000 records and one test file of 10000. Pixels are stored row-major as a
// full red plane, then green, then blue.

enum class CifarVariant { c10, c100 };

inline constexpr std::size_t kCifarPixelBytes = 3072;

struct CifarRecord {
  std::uint8_t fine = 0;
  std::uint8_t coarse = 0;  // CIFAR-100 only
  std::array<std::uint8_t, kCifarPixelBytes> pixels{};
};

std::size_t cifar_record_bytes(CifarVariant v);
int cifar_class_count(CifarVariant v);
std::vector<std::string> cifar_train_files(CifarVariant v);
std::string cifar_test_file(CifarVariant v);

// Parses one record from `bytes` (must be exactly cifar_record_bytes long).
CifarRecord decode_cifar_record(const std::uint8_t* bytes, CifarVariant v);

// Inverse of decode_cifar_record; appends the record's byte layout.
void encode_cifar_record(const CifarRecord& rec, CifarVariant v, std::vector<std::uint8_t>& out);

// Reads and validates one file. Throws IoError if missing, DataError with
// expected/found byte counts if the length is not an exact multiple of the
// record size or does not hold `expected_records` (when nonzero).
std::vector<CifarRecord> read_cifar_file(const std::string& path, CifarVariant v,
                                         std::size_t expected_records);

}  // namespace freqnet
