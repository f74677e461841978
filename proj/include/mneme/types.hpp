#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mneme {

/// Smallest indivisible unit of value. Never floating point.
using Credits = std::int64_t;

/// Discrete simulation time.
using Slot = std::int64_t;

inline constexpr Slot kNeverSlot = std::numeric_limits<Slot>::max();

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::string to_hex(ByteView bytes);

/// Fixed-width byte string with value semantics and total ordering.
template <std::size_t N, typename Tag>
struct FixedBytes {
  std::array<std::uint8_t, N> bytes{};

  static constexpr std::size_t size() { return N; }
  ByteView view() const { return {bytes.data(), bytes.size()}; }
  std::string hex() const { return to_hex(view()); }
  bool is_zero() const {
    for (auto b : bytes)
      if (b != 0) return false;
    return true;
  }

  friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
  friend bool operator==(const FixedBytes&, const FixedBytes&) = default;
};

struct Hash256Tag {};
struct PublicKeyTag {};
struct SecretKeyTag {};
struct SignatureTag {};
struct PrfKeyTag {};

using Hash256 = FixedBytes<32, Hash256Tag>;
using PublicKey = FixedBytes<32, PublicKeyTag>;
/// Ed25519 expanded secret key (seed followed by public key).
using SecretKey = FixedBytes<64, SecretKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;
/// Key of the network-wide pseudo-random function, published in genesis.
using PrfKey = FixedBytes<32, PrfKeyTag>;

struct FixedBytesHash {
  template <std::size_t N, typename T>
  std::size_t operator()(const FixedBytes<N, T>& v) const noexcept {
    std::size_t h = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t) && i < N; ++i)
      h = (h << 8) | v.bytes[i];
    return h;
  }
};

/// Reserved account that sources and sinks netting transfers.
PublicKey virtual_user();
/// Reserved account receiving burned deposits; its balance is never counted.
PublicKey burn_account();
bool is_reserved_account(const PublicKey& pk);

}  // namespace mneme
