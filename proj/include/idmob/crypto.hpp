#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "idmob/types.hpp"

namespace idmob::crypto {

  using Key32 = std::array<std::uint8_t, 32>;

  /// Stable on-wire ids. Both schemes are authenticated.
  enum class EncryptionScheme : std::uint8_t {
    StreamAead = 1,  ///< ChaCha20-Poly1305 (IETF)
    BlockAead = 2,   ///< AES-256-GCM
  };

  EncryptionScheme scheme_from_id(std::uint64_t id);
  std::string_view scheme_name(EncryptionScheme scheme);
  EncryptionScheme parse_scheme(std::string_view name);

  /// Per-device root secret. Deliberately has no hex or stream rendering.
  class MasterKey {
   public:
    explicit MasterKey(const Key32 &secret) : secret_(secret) {}

    static MasterKey generate();
    /// Deterministic provisioning for reproducible simulations.
    static MasterKey from_seed(ByteView seed);

    std::span<const std::uint8_t, 32> secret() const {
      return secret_;
    }

   private:
    Key32 secret_;
  };

  struct SymKey {
    Key32 key{};
    std::uint64_t index = 0;
    EncryptionScheme scheme = EncryptionScheme::StreamAead;
  };

  /// key = HMAC-SHA256(master, big-endian u64 index)
  SymKey derive_key(const MasterKey &master,
                    std::uint64_t index,
                    EncryptionScheme scheme = EncryptionScheme::StreamAead);

  /// Layout: scheme id (1) | nonce (12) | ciphertext | tag (16). The nonce is
  /// synthetic (keyed hash of the plaintext), so output is deterministic.
  inline constexpr std::size_t kCiphertextOverhead = 1 + 12 + 16;

  Bytes encrypt(const SymKey &key, ByteView plaintext);
  Bytes decrypt(const SymKey &key, ByteView ciphertext);

  struct PublicKey : FixedBytes<32> {
    /// Lowercase hex of a valid Ed25519 point; throws MalformedPublicKey.
    static PublicKey parse(std::string_view hex);
    auto operator<=>(const PublicKey &) const = default;
  };

  struct PrivateKey {
    std::array<std::uint8_t, 64> bytes{};
    /// Throws MalformedKey unless the embedded public half matches.
    static PrivateKey from_bytes(ByteView raw);
    PublicKey public_key() const;
  };

  struct KeyPair {
    PublicKey public_key;
    PrivateKey private_key;
  };

  inline constexpr std::size_t kMinSeedLength = 16;

  KeyPair generate_keypair(ByteView seed);

  struct WrappedKey {
    Bytes ciphertext;
    Address recipient;
    bool empty() const {
      return ciphertext.empty();
    }
    bool operator==(const WrappedKey &) const = default;
  };

  /// Sealed-box format: ephemeral pk (32) | mac (16) | key (32).
  inline constexpr std::size_t kWrappedKeySize = 80;

  /// Ephemeral key material comes from `ephemeral_seed`, which must be unique
  /// per wrap; the simulator derives it from its run seed.
  WrappedKey wrap_key(const PublicKey &recipient_key,
                      const Key32 &key,
                      const Address &recipient,
                      std::span<const std::uint8_t, 32> ephemeral_seed);
  WrappedKey wrap_key(const PublicKey &recipient_key, const Key32 &key, const Address &recipient);
  Key32 unwrap_key(const PrivateKey &private_key, const WrappedKey &wrapped);

  struct Signature : FixedBytes<64> {
    auto operator<=>(const Signature &) const = default;
  };

  Signature sign(const PrivateKey &private_key, ByteView message);
  bool verify(const PublicKey &public_key, ByteView message, const Signature &signature);

}  // namespace idmob::crypto
