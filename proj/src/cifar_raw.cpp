#include "freqnet/cifar_raw.hpp"

#include <cstring>
#include <fstream>

#include "freqnet/error.hpp"

namespace freqnet {

std::size_t cifar_record_bytes(CifarVariant v) {
  return v == CifarVariant::c10 ? 1 + kCifarPixelBytes : 2 + kCifarPixelBytes;
}

int cifar_class_count(CifarVariant v) { return v == CifarVariant::c10 ? 10 : 100; }

std::vector<std::string> cifar_train_files(CifarVariant v) {
  if (v == CifarVariant::c10) {
    return {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
            "data_batch_5.bin"};
  }
  return {"train.bin"};
}

std::string cifar_test_file(CifarVariant v) {
  return v == CifarVariant::c10 ? "test_batch.bin" : "test.bin";
}

CifarRecord decode_cifar_record(const std::uint8_t* bytes, CifarVariant v) {
  CifarRecord rec;
  if (v == CifarVariant::c10) {
    rec.fine = bytes[0];
    std::memcpy(rec.pixels.data(), bytes + 1, kCifarPixelBytes);
  } else {
    rec.coarse = bytes[0];
    rec.fine = bytes[1];
    std::memcpy(rec.pixels.data(), bytes + 2, kCifarPixelBytes);
  }
  return rec;
}

void encode_cifar_record(const CifarRecord& rec, CifarVariant v, std::vector<std::uint8_t>& out) {
  if (v == CifarVariant::c10) {
    out.push_back(rec.fine);
  } else {
    out.push_back(rec.coarse);
    out.push_back(rec.fine);
  }
  out.insert(out.end(), rec.pixels.begin(), rec.pixels.end());
}

std::vector<CifarRecord> read_cifar_file(const std::string& path, CifarVariant v,
                                         std::size_t expected_records) {
  std::ifstream file(path, std::ios::binary | std::ios::ate);
  if (!file.is_open()) throw IoError("cannot open CIFAR file '" + path + "'");
  const auto end = file.tellg();
  if (end < 0) throw IoError("cannot stat CIFAR file '" + path + "'");
  const std::size_t found = static_cast<std::size_t>(end);
  const std::size_t rec_bytes = cifar_record_bytes(v);
  if (expected_records != 0) {
    const std::size_t expected = expected_records * rec_bytes;
    if (found != expected) {
      throw DataError("CIFAR file '" + path + "': expected " + std::to_string(expected) +
                      " bytes (" + std::to_string(expected_records) + " records of " +
                      std::to_string(rec_bytes) + " bytes), found " + std::to_string(found));
    }
  } else if (found % rec_bytes != 0) {
    throw DataError("CIFAR file '" + path + "': " + std::to_string(found) +
                    " bytes is not a multiple of the record size " + std::to_string(rec_bytes));
  }

  std::vector<std::uint8_t> buffer(found);
  file.seekg(0, std::ios::beg);
  file.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(found));
  if (!file) throw IoError("short read on CIFAR file '" + path + "'");

  const std::size_t n = found / rec_bytes;
  std::vector<CifarRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    records.push_back(decode_cifar_record(buffer.data() + i * rec_bytes, v));
  return records;
}

}  // namespace freqnet
