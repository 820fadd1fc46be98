#include "idmob/crypto.hpp"

#include <algorithm>
#include <memory>

#include <openssl/evp.h>
#include <sodium.h>

#include "idmob/error.hpp"

namespace idmob::crypto {

  namespace {
    constexpr std::size_t kNonceSize = 12;
    constexpr std::size_t kTagSize = 16;

    void ensure_sodium() {
      static const bool ready = sodium_init() >= 0;
      if (!ready) {
        throw std::runtime_error("libsodium initialisation failed");
      }
    }

    Key32 hmac_sha256(ByteView key, ByteView message) {
      Key32 out{};
      crypto_auth_hmacsha256_state st;
      crypto_auth_hmacsha256_init(&st, key.data(), key.size());
      crypto_auth_hmacsha256_update(&st, message.data(), message.size());
      crypto_auth_hmacsha256_final(&st, out.data());
      return out;
    }

    Key32 tagged_hash(std::string_view tag, ByteView data) {
      crypto_hash_sha256_state st;
      Key32 out{};
      crypto_hash_sha256_init(&st);
      crypto_hash_sha256_update(&st, as_bytes(tag).data(), tag.size());
      crypto_hash_sha256_update(&st, data.data(), data.size());
      crypto_hash_sha256_final(&st, out.data());
      return out;
    }

    void check_scheme(EncryptionScheme scheme) {
      scheme_from_id(static_cast<std::uint8_t>(scheme));
    }

    struct CipherCtxFree {
      void operator()(EVP_CIPHER_CTX *ctx) const {
        EVP_CIPHER_CTX_free(ctx);
      }
    };
    using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

    void gcm_seal(const Key32 &key,
                  const std::uint8_t *nonce,
                  ByteView aad,
                  ByteView plaintext,
                  std::uint8_t *out) {
      CipherCtx ctx(EVP_CIPHER_CTX_new());
      int len = 0;
      bool ok = ctx && EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr)
                && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr)
                && EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce)
                && EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size()));
      if (ok && !plaintext.empty()) {
        ok = EVP_EncryptUpdate(ctx.get(), out, &len, plaintext.data(), static_cast<int>(plaintext.size()));
      }
      ok = ok && EVP_EncryptFinal_ex(ctx.get(), out + plaintext.size(), &len)
           && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize, out + plaintext.size());
      if (!ok) {
        throw std::runtime_error("AES-256-GCM encryption failed");
      }
    }

    bool gcm_open(const Key32 &key,
                  const std::uint8_t *nonce,
                  ByteView aad,
                  ByteView sealed,
                  std::uint8_t *out) {
      const auto body = sealed.size() - kTagSize;
      std::array<std::uint8_t, kTagSize> tag{};
      std::copy_n(sealed.data() + body, kTagSize, tag.begin());
      CipherCtx ctx(EVP_CIPHER_CTX_new());
      int len = 0;
      bool ok = ctx && EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr)
                && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr)
                && EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce)
                && EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size()));
      if (ok && body > 0) {
        ok = EVP_DecryptUpdate(ctx.get(), out, &len, sealed.data(), static_cast<int>(body));
      }
      ok = ok && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize, tag.data())
           && EVP_DecryptFinal_ex(ctx.get(), out + body, &len) > 0;
      return ok;
    }

    Key32 curve_public(const PublicKey &pk) {
      Key32 out{};
      if (crypto_sign_ed25519_pk_to_curve25519(out.data(), pk.bytes.data()) != 0) {
        throw Error(Errc::MalformedPublicKey, pk.hex());
      }
      return out;
    }
  }  // namespace

  EncryptionScheme scheme_from_id(std::uint64_t id) {
    switch (id) {
      case 1: return EncryptionScheme::StreamAead;
      case 2: return EncryptionScheme::BlockAead;
      default: throw Error(Errc::UnsupportedScheme, "scheme id " + std::to_string(id));
    }
  }

  std::string_view scheme_name(EncryptionScheme scheme) {
    switch (scheme) {
      case EncryptionScheme::StreamAead: return "chacha20-poly1305";
      case EncryptionScheme::BlockAead: return "aes-256-gcm";
    }
    throw Error(Errc::UnsupportedScheme);
  }

  EncryptionScheme parse_scheme(std::string_view name) {
    if (name == "chacha20-poly1305" || name == "A" || name == "1") return EncryptionScheme::StreamAead;
    if (name == "aes-256-gcm" || name == "B" || name == "2") return EncryptionScheme::BlockAead;
    throw Error(Errc::UnsupportedScheme, std::string(name));
  }

  MasterKey MasterKey::generate() {
    ensure_sodium();
    Key32 secret{};
    randombytes_buf(secret.data(), secret.size());
    return MasterKey(secret);
  }

  MasterKey MasterKey::from_seed(ByteView seed) {
    return MasterKey(tagged_hash("idmob/master", seed));
  }

  SymKey derive_key(const MasterKey &master, std::uint64_t index, EncryptionScheme scheme) {
    std::array<std::uint8_t, 8> be{};
    for (int i = 0; i < 8; ++i) {
      be[i] = static_cast<std::uint8_t>(index >> (56 - 8 * i));
    }
    return SymKey{hmac_sha256(master.secret(), be), index, scheme};
  }

  Bytes encrypt(const SymKey &key, ByteView plaintext) {
    ensure_sodium();
    check_scheme(key.scheme);

    Bytes out(kCiphertextOverhead + plaintext.size());
    out[0] = static_cast<std::uint8_t>(key.scheme);
    crypto_auth_hmacsha256_state st;
    Key32 mac{};
    constexpr std::string_view tag = "idmob/nonce";
    crypto_auth_hmacsha256_init(&st, key.key.data(), key.key.size());
    crypto_auth_hmacsha256_update(&st, as_bytes(tag).data(), tag.size());
    crypto_auth_hmacsha256_update(&st, plaintext.data(), plaintext.size());
    crypto_auth_hmacsha256_final(&st, mac.data());
    std::copy_n(mac.begin(), kNonceSize, out.begin() + 1);

    const ByteView aad(out.data(), 1);
    const std::uint8_t *nonce = out.data() + 1;
    std::uint8_t *body = out.data() + 1 + kNonceSize;
    if (key.scheme == EncryptionScheme::StreamAead) {
      unsigned long long written = 0;
      crypto_aead_chacha20poly1305_ietf_encrypt(body, &written, plaintext.data(), plaintext.size(),
                                                aad.data(), aad.size(), nullptr, nonce, key.key.data());
    } else {
      gcm_seal(key.key, nonce, aad, plaintext, body);
    }
    return out;
  }

  Bytes decrypt(const SymKey &key, ByteView ciphertext) {
    ensure_sodium();
    check_scheme(key.scheme);
    if (ciphertext.size() < kCiphertextOverhead) {
      throw Error(Errc::AuthenticationFailure, "ciphertext too short");
    }
    if (ciphertext[0] != static_cast<std::uint8_t>(key.scheme)) {
      throw Error(Errc::AuthenticationFailure, "scheme header mismatch");
    }
    const ByteView aad(ciphertext.data(), 1);
    const std::uint8_t *nonce = ciphertext.data() + 1;
    const ByteView sealed = ciphertext.subspan(1 + kNonceSize);
    Bytes out(sealed.size() - kTagSize);
    bool ok = false;
    if (key.scheme == EncryptionScheme::StreamAead) {
      unsigned long long written = 0;
      ok = crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &written, nullptr, sealed.data(),
                                                     sealed.size(), aad.data(), aad.size(), nonce,
                                                     key.key.data())
           == 0;
    } else {
      ok = gcm_open(key.key, nonce, aad, sealed, out.data());
    }
    if (!ok) {
      throw Error(Errc::AuthenticationFailure);
    }
    return out;
  }

  PublicKey PublicKey::parse(std::string_view hex) {
    if (hex.size() != 64 || !is_lower_hex(hex)) {
      throw Error(Errc::MalformedPublicKey, "expected 64 lowercase hex chars");
    }
    PublicKey pk;
    auto raw = from_hex(hex);
    std::copy(raw.begin(), raw.end(), pk.bytes.begin());
    Key32 probe{};
    if (crypto_sign_ed25519_pk_to_curve25519(probe.data(), pk.bytes.data()) != 0) {
      throw Error(Errc::MalformedPublicKey, "not a curve point");
    }
    return pk;
  }

  PrivateKey PrivateKey::from_bytes(ByteView raw) {
    if (raw.size() != 64) {
      throw Error(Errc::MalformedKey, "private key must be 64 bytes");
    }
    PrivateKey sk;
    std::copy(raw.begin(), raw.end(), sk.bytes.begin());
    Key32 seed{};
    crypto_sign_ed25519_sk_to_seed(seed.data(), sk.bytes.data());
    std::array<std::uint8_t, 32> pk{};
    std::array<std::uint8_t, 64> regenerated{};
    crypto_sign_seed_keypair(pk.data(), regenerated.data(), seed.data());
    sodium_memzero(seed.data(), seed.size());
    if (regenerated != sk.bytes) {
      throw Error(Errc::MalformedKey, "inconsistent private key");
    }
    return sk;
  }

  PublicKey PrivateKey::public_key() const {
    PublicKey pk;
    crypto_sign_ed25519_sk_to_pk(pk.bytes.data(), bytes.data());
    return pk;
  }

  KeyPair generate_keypair(ByteView seed) {
    ensure_sodium();
    if (seed.size() < kMinSeedLength) {
      throw Error(Errc::SeedTooShort, std::to_string(seed.size()) + " bytes");
    }
    auto material = tagged_hash("idmob/keypair", seed);
    KeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.bytes.data(), kp.private_key.bytes.data(), material.data());
    sodium_memzero(material.data(), material.size());
    return kp;
  }

  WrappedKey wrap_key(const PublicKey &recipient_key,
                      const Key32 &key,
                      const Address &recipient,
                      std::span<const std::uint8_t, 32> ephemeral_seed) {
    ensure_sodium();
    const auto curve_pk = curve_public(recipient_key);

    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> eph_pk{};
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> eph_sk{};
    crypto_box_seed_keypair(eph_pk.data(), eph_sk.data(), ephemeral_seed.data());

    // Same nonce derivation as crypto_box_seal, so crypto_box_seal_open
    // accepts the result.
    std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, nonce.size());
    crypto_generichash_update(&st, eph_pk.data(), eph_pk.size());
    crypto_generichash_update(&st, curve_pk.data(), curve_pk.size());
    crypto_generichash_final(&st, nonce.data(), nonce.size());

    WrappedKey out;
    out.recipient = recipient;
    out.ciphertext.resize(kWrappedKeySize);
    std::copy(eph_pk.begin(), eph_pk.end(), out.ciphertext.begin());
    if (crypto_box_easy(out.ciphertext.data() + eph_pk.size(), key.data(), key.size(), nonce.data(),
                        curve_pk.data(), eph_sk.data())
        != 0) {
      throw Error(Errc::MalformedPublicKey, "key agreement failed");
    }
    sodium_memzero(eph_sk.data(), eph_sk.size());
    return out;
  }

  WrappedKey wrap_key(const PublicKey &recipient_key, const Key32 &key, const Address &recipient) {
    ensure_sodium();
    Key32 seed{};
    randombytes_buf(seed.data(), seed.size());
    return wrap_key(recipient_key, key, recipient, seed);
  }

  Key32 unwrap_key(const PrivateKey &private_key, const WrappedKey &wrapped) {
    ensure_sodium();
    if (wrapped.ciphertext.size() != kWrappedKeySize) {
      throw Error(Errc::UnwrapFailure, "wrapped key has wrong length");
    }
    const auto curve_pk = curve_public(private_key.public_key());
    Key32 curve_sk{};
    crypto_sign_ed25519_sk_to_curve25519(curve_sk.data(), private_key.bytes.data());
    Key32 out{};
    const int rc = crypto_box_seal_open(out.data(), wrapped.ciphertext.data(), wrapped.ciphertext.size(),
                                        curve_pk.data(), curve_sk.data());
    sodium_memzero(curve_sk.data(), curve_sk.size());
    if (rc != 0) {
      throw Error(Errc::UnwrapFailure);
    }
    return out;
  }

  Signature sign(const PrivateKey &private_key, ByteView message) {
    ensure_sodium();
    Signature sig;
    crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                         private_key.bytes.data());
    return sig;
  }

  bool verify(const PublicKey &public_key, ByteView message, const Signature &signature) {
    ensure_sodium();
    return crypto_sign_verify_detached(signature.bytes.data(), message.data(), message.size(),
                                       public_key.bytes.data())
           == 0;
  }

}  // namespace idmob::crypto
