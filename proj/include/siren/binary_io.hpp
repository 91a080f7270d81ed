/* Copyright 2026 The siren Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Little-endian primitives shared by the activation container, the bundle,
// and the ensemble file.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "siren/error.hpp"

namespace siren::io {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian targets are not supported");

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

class Writer {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    const T le = to_little(v);
    const auto* p = reinterpret_cast<const char*>(&le);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void put_array(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const char*>(values.data());
      buf_.insert(buf_.end(), p, p + values.size_bytes());
    } else {
      for (const T& v : values) put(v);
    }
  }

  void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  // u32 length prefix followed by the bytes.
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }

  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::span<const char> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }

  template <typename T>
  void get_array(std::span<T> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
    if constexpr (std::endian::native == std::endian::big) {
      for (T& v : out) v = to_little(v);
    }
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  std::string get_string() { return get_bytes(get<std::uint32_t>()); }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::kTruncated,
                  what_ + ": truncated file (needed " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos_) + ")");
    }
  }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<char> read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const char> bytes);

void write_text(const std::filesystem::path& path, std::string_view text);

// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::span<const char> bytes);

}  // namespace siren::io
