#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmcmc/errors.hpp"

namespace pmcmc {

using Bytes = std::vector<std::byte>;

/// Appends fixed-width little-endian fields to a byte buffer.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { buffer_.reserve(reserve); }

  void u8(std::uint8_t v) { buffer_.push_back(static_cast<std::byte>(v)); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u64(s.size());
    for (char c : s) buffer_.push_back(static_cast<std::byte>(c));
  }

  void bytes(std::span<const std::byte> b) {
    u64(b.size());
    buffer_.insert(buffer_.end(), b.begin(), b.end());
  }

  [[nodiscard]] Bytes take() && { return std::move(buffer_); }
  [[nodiscard]] const Bytes& view() const noexcept { return buffer_; }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buffer_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }
  }

  Bytes buffer_;
};

/// Reads what ByteWriter wrote. Every read is bounds-checked and throws
/// DeserializationError instead of reading past the end.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> data) noexcept : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le<std::uint8_t>()); }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get_le<std::uint64_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string str() {
    const std::size_t n = length();
    std::string s(n, '\0');
    std::memcpy(s.data(), data_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  Bytes bytes() {
    const std::size_t n = length();
    Bytes b(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
            data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return b;
  }

  /// Element count for a following sequence whose items take at least
  /// `min_item_size` bytes each; rejects counts the buffer cannot hold.
  std::size_t count(std::size_t min_item_size) {
    const std::uint64_t n = u64();
    if (min_item_size > 0 && n > remaining() / min_item_size) {
      throw DeserializationError("sequence length " + std::to_string(n) + " exceeds buffer");
    }
    return static_cast<std::size_t>(n);
  }

  [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }

  void expect_end() const {
    if (pos_ != data_.size()) {
      throw DeserializationError(std::to_string(remaining()) + " trailing bytes");
    }
  }

 private:
  std::size_t length() {
    const std::uint64_t n = u64();
    if (n > remaining()) {
      throw DeserializationError("length prefix " + std::to_string(n) + " exceeds buffer");
    }
    return static_cast<std::size_t>(n);
  }

  template <typename T>
  T get_le() {
    if (remaining() < sizeof(T)) {
      throw DeserializationError("truncated input at byte " + std::to_string(pos_));
    }
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(std::to_integer<std::uint8_t>(data_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

}  // namespace pmcmc
