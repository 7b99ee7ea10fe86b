#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metashift/common/error.hpp"

namespace metashift::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

/// Writes `bytes` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Reads a whole file; throws MissingArtifactError when it does not exist.
std::string read_file(const std::filesystem::path& path);

/// Append-only little-endian encoder.
class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  template <class T>
  void scalar(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.append(raw, sizeof(T));
  }
  void floats(std::span<const float> v) {
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

/// Bounds-checked little-endian decoder. Every read past the end raises a
/// FormatError naming what was being read and how many bytes are missing.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string source)
      : data_(data), source_(std::move(source)) {}

  std::string_view bytes(std::size_t n, std::string_view what) {
    require(n, what);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  template <class T>
  T scalar(std::string_view what) {
    auto raw = bytes(sizeof(T), what);
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }
  void floats(std::span<float> out, std::string_view what) {
    auto raw = bytes(out.size_bytes(), what);
    std::memcpy(out.data(), raw.data(), raw.size());
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw FormatError(source_ + ": truncated while reading " + std::string(what) + " (missing " +
                        std::to_string(n - remaining()) + " bytes)");
    }
  }

  std::string_view data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace metashift::io
