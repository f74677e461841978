#pragma once

// Canonical byte encoding shared by every hashed or signed record:
// little-endian integers, IEEE-754 binary64 doubles, u32 length prefixes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string_view>

#include "mneme/error.hpp"
#include "mneme/types.hpp"

namespace mneme {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void boolean(bool v) { u8(v ? 1 : 0); }
  void point(const Point& p) {
    f64(p.x);
    f64(p.y);
  }

  /// Length-prefixed byte field.
  void blob(ByteView bytes) {
    u32(static_cast<std::uint32_t>(bytes.size()));
    raw(bytes);
  }
  void text(std::string_view s) {
    blob({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }
  template <std::size_t N, typename T>
  void fixed(const FixedBytes<N, T>& v) {
    raw(v.view());
  }
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get_le<std::uint64_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  bool boolean() {
    auto v = u8();
    if (v > 1) throw DecodeError("boolean out of range");
    return v == 1;
  }
  Point point() {
    Point p;
    p.x = f64();
    p.y = f64();
    return p;
  }
  Bytes blob() {
    auto n = u32();
    auto s = take(n);
    return {s.begin(), s.end()};
  }
  template <typename F>
  F fixed() {
    F v;
    auto s = take(F::size());
    std::memcpy(v.bytes.data(), s.data(), F::size());
    return v;
  }

  bool done() const { return pos_ == in_.size(); }
  void expect_done() const {
    if (!done()) throw DecodeError("trailing bytes");
  }

 private:
  ByteView take(std::size_t n) {
    if (in_.size() - pos_ < n) throw DecodeError("truncated input");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename U>
  U get_le() {
    auto s = take(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(s[i]) << (8 * i);
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace mneme
