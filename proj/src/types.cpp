#include "idmob/types.hpp"

#include <algorithm>

#include <sodium.h>

#include "idmob/error.hpp"

namespace idmob {

  namespace {
    constexpr char kDigits[] = "0123456789abcdef";

    int nibble(char c) {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      return -1;
    }

    template <typename T>
    T fixed_from_hex(std::string_view hex) {
      T out;
      if (hex.size() != 2 * T::size()) {
        throw Error(Errc::MalformedKey, "expected " + std::to_string(2 * T::size()) + " hex chars");
      }
      auto raw = from_hex(hex);
      std::copy(raw.begin(), raw.end(), out.bytes.begin());
      return out;
    }
  }  // namespace

  std::string to_hex(ByteView bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
      out.push_back(kDigits[b >> 4]);
      out.push_back(kDigits[b & 0x0f]);
    }
    return out;
  }

  Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
      throw Error(Errc::MalformedKey, "odd-length hex string");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
      int hi = nibble(hex[2 * i]);
      int lo = nibble(hex[2 * i + 1]);
      if (hi < 0 || lo < 0) {
        throw Error(Errc::MalformedKey, "non-hex character");
      }
      out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
  }

  bool is_lower_hex(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](char c) {
      return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
  }

  Address Address::from_hex(std::string_view hex) {
    return fixed_from_hex<Address>(hex);
  }

  bool Address::is_zero() const {
    return std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
  }

  Handle Handle::from_hex(std::string_view hex) {
    return fixed_from_hex<Handle>(hex);
  }

  std::array<std::uint8_t, 32> sha256(ByteView data) {
    std::array<std::uint8_t, 32> out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
  }

}  // namespace idmob
