#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace idmob {

  using Bytes = std::vector<std::uint8_t>;
  using ByteView = std::span<const std::uint8_t>;

  std::string to_hex(ByteView bytes);
  /// Lowercase or uppercase hex; throws Error(MalformedKey) on odd length or a
  /// non-hex character. Callers that need a different code catch and rethrow.
  Bytes from_hex(std::string_view hex);
  bool is_lower_hex(std::string_view text);

  inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t *>(s.data()), s.size()};
  }

  template <std::size_t N>
  struct FixedBytes {
    std::array<std::uint8_t, N> bytes{};

    static constexpr std::size_t size() {
      return N;
    }
    std::string hex() const {
      return to_hex(bytes);
    }
    auto operator<=>(const FixedBytes &) const = default;
  };

  /// Opaque 20-byte account identifier.
  struct Address : FixedBytes<20> {
    static Address from_hex(std::string_view hex);
    bool is_zero() const;
    auto operator<=>(const Address &) const = default;
  };

  /// SHA-256 digest of a blob's content; the blob store's key.
  struct Handle : FixedBytes<32> {
    static Handle from_hex(std::string_view hex);
    auto operator<=>(const Handle &) const = default;
  };

  /// The single hash function used across the artifact (handles, addresses).
  inline void append_be64(Bytes &out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  inline constexpr std::string_view kHashFunctionName = "sha256";
  std::array<std::uint8_t, 32> sha256(ByteView data);

  struct FixedBytesHash {
    template <std::size_t N>
    std::size_t operator()(const FixedBytes<N> &v) const noexcept {
      std::size_t h = 0;
      for (std::size_t i = 0; i < sizeof(std::size_t) && i < N; ++i) {
        h = (h << 8) | v.bytes[i];
      }
      return h;
    }
  };

}  // namespace idmob

template <>
struct std::hash<idmob::Address> : idmob::FixedBytesHash {};
template <>
struct std::hash<idmob::Handle> : idmob::FixedBytesHash {};
