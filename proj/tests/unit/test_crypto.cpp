#include <sodium.h>

#include <set>
#include <sstream>

#include "idmob/crypto.hpp"
#include "support.hpp"

using namespace idmob;
using namespace idmob::crypto;

namespace {
  MasterKey master_from_hex(const std::string &hex) {
    const auto raw = from_hex(hex);
    Key32 k{};
    std::copy(raw.begin(), raw.end(), k.begin());
    return MasterKey(k);
  }

  KeyPair pair(std::string_view tag) {
    return generate_keypair(as_bytes(std::string("seed material for ") + std::string(tag)));
  }
}  // namespace

TEST_CASE("sha256 of empty input is the standard digest") {
  CHECK(to_hex(sha256({})) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(to_hex(sha256(as_bytes("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("derive_key matches the committed vector file") {
  std::ifstream in(test::data_path("derive_vectors.txt"));
  REQUIRE(in);
  std::string master, key;
  std::uint64_t index = 0;
  int rows = 0;
  while (in >> master >> index >> key) {
    const auto sym = derive_key(master_from_hex(master), index);
    CHECK_MESSAGE(to_hex(sym.key) == key, master << " " << index);
    CHECK(sym.index == index);
    ++rows;
  }
  CHECK(rows >= 2);
}

TEST_CASE("derive_key is deterministic and separates indices") {
  const auto m = MasterKey::from_seed(as_bytes("device-1"));
  CHECK(derive_key(m, 0).key == derive_key(m, 0).key);
  CHECK(derive_key(m, 0).key != derive_key(m, 1).key);
  const auto same = MasterKey::from_seed(as_bytes("device-1"));
  CHECK(derive_key(same, 77).key == derive_key(m, 77).key);

  std::mt19937_64 rng(99);
  std::set<Key32> keys;
  std::set<std::uint64_t> indices;
  while (indices.size() < 10000) indices.insert(rng());
  for (auto i : indices) keys.insert(derive_key(m, i).key);
  CHECK(keys.size() == 10000);
}

TEST_CASE("encrypt/decrypt roundtrip for both schemes") {
  const auto m = MasterKey::from_seed(as_bytes("roundtrip"));
  std::mt19937_64 rng(1);
  for (auto scheme : {EncryptionScheme::StreamAead, EncryptionScheme::BlockAead}) {
    CAPTURE(scheme_name(scheme));
    const auto k = derive_key(m, 3, scheme);
    CHECK(decrypt(k, encrypt(k, {})).empty());
    const auto big = test::random_bytes(rng, 1 << 20);
    const auto ct = encrypt(k, big);
    CHECK(ct.size() == big.size() + kCiphertextOverhead);
    CHECK(decrypt(k, ct) == big);
    CHECK(encrypt(k, big) == ct);

    auto wrong = derive_key(m, 4, scheme);
    CHECK_ERRC(decrypt(wrong, ct), Errc::AuthenticationFailure);
  }
}

TEST_CASE("ciphertexts are bound to their scheme") {
  const auto m = MasterKey::from_seed(as_bytes("schemes"));
  const auto a = derive_key(m, 0, EncryptionScheme::StreamAead);
  auto b = a;
  b.scheme = EncryptionScheme::BlockAead;
  CHECK_ERRC(decrypt(b, encrypt(a, as_bytes("hello"))), Errc::AuthenticationFailure);
}

TEST_CASE("tampering is always detected") {
  const auto m = MasterKey::from_seed(as_bytes("tamper"));
  std::mt19937_64 rng(5);
  for (auto scheme : {EncryptionScheme::StreamAead, EncryptionScheme::BlockAead}) {
    const auto k = derive_key(m, 9, scheme);
    const auto ct = encrypt(k, test::random_bytes(rng, 300));
    int rejected = 0;
    for (int trial = 0; trial < 500; ++trial) {
      auto bad = ct;
      const auto bit = rng() % (bad.size() * 8);
      bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      try {
        decrypt(k, bad);
      } catch (const Error &e) {
        if (e.code() == Errc::AuthenticationFailure) ++rejected;
      }
    }
    CHECK(rejected == 500);
    for (std::size_t cut = 0; cut < ct.size(); cut += 37) {
      CHECK_ERRC(decrypt(k, ByteView(ct.data(), cut)), Errc::AuthenticationFailure);
    }
  }
}

TEST_CASE("scheme ids") {
  CHECK(scheme_from_id(1) == EncryptionScheme::StreamAead);
  CHECK(scheme_from_id(2) == EncryptionScheme::BlockAead);
  CHECK_ERRC(scheme_from_id(0), Errc::UnsupportedScheme);
  CHECK_ERRC(scheme_from_id(3), Errc::UnsupportedScheme);
  CHECK(parse_scheme("aes-256-gcm") == EncryptionScheme::BlockAead);
  CHECK_ERRC(parse_scheme("des"), Errc::UnsupportedScheme);
}

TEST_CASE("keypairs are seed deterministic") {
  CHECK(pair("x").public_key == pair("x").public_key);
  CHECK(pair("x").public_key != pair("y").public_key);
  CHECK_ERRC(generate_keypair(as_bytes("short")), Errc::SeedTooShort);
  CHECK(PrivateKey::from_bytes(pair("x").private_key.bytes).public_key() == pair("x").public_key);
}

TEST_CASE("public key parsing") {
  const auto kp = pair("parse");
  CHECK(PublicKey::parse(kp.public_key.hex()) == kp.public_key);
  CHECK_ERRC(PublicKey::parse("zz"), Errc::MalformedPublicKey);
  CHECK_ERRC(PublicKey::parse(std::string(64, 'A')), Errc::MalformedPublicKey);
  CHECK_ERRC(PublicKey::parse(kp.public_key.hex() + "00"), Errc::MalformedPublicKey);
}

TEST_CASE("wrap and unwrap") {
  const auto alice = pair("alice");
  const auto bob = pair("bob");
  const Address to{};
  std::mt19937_64 rng(11);
  std::set<std::size_t> sizes;
  for (int i = 0; i < 100; ++i) {
    Key32 k{};
    for (auto &b : k) b = static_cast<std::uint8_t>(rng());
    const auto w = wrap_key(alice.public_key, k, to);
    sizes.insert(w.ciphertext.size());
    CHECK(unwrap_key(alice.private_key, w) == k);
    if (i < 10) CHECK_ERRC(unwrap_key(bob.private_key, w), Errc::UnwrapFailure);
  }
  CHECK(sizes == std::set<std::size_t>{kWrappedKeySize});
}

TEST_CASE("deterministic wrap opens with the standard sealed box") {
  const auto alice = pair("sealed");
  Key32 k{};
  k.fill(0x42);
  std::array<std::uint8_t, 32> eph{};
  eph.fill(7);
  const auto w1 = wrap_key(alice.public_key, k, Address{}, eph);
  const auto w2 = wrap_key(alice.public_key, k, Address{}, eph);
  CHECK(w1 == w2);

  std::array<std::uint8_t, 32> curve_pk{}, curve_sk{};
  REQUIRE(crypto_sign_ed25519_pk_to_curve25519(curve_pk.data(), alice.public_key.bytes.data()) == 0);
  REQUIRE(crypto_sign_ed25519_sk_to_curve25519(curve_sk.data(), alice.private_key.bytes.data()) == 0);
  Key32 opened{};
  REQUIRE(crypto_box_seal_open(opened.data(), w1.ciphertext.data(), w1.ciphertext.size(), curve_pk.data(),
                               curve_sk.data())
          == 0);
  CHECK(opened == k);
}

TEST_CASE("signatures") {
  const auto kp = pair("signer");
  const auto other = pair("other");
  const auto msg = as_bytes("channel state 7");
  const auto sig = sign(kp.private_key, msg);
  CHECK(verify(kp.public_key, msg, sig));
  CHECK_FALSE(verify(other.public_key, msg, sig));

  std::mt19937_64 rng(3);
  Bytes m(msg.begin(), msg.end());
  for (int i = 0; i < 200; ++i) {
    auto bad = m;
    const auto bit = rng() % (bad.size() * 8);
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    CHECK_FALSE(verify(kp.public_key, bad, sig));
    auto bad_sig = sig;
    const auto sbit = rng() % 512;
    bad_sig.bytes[sbit / 8] ^= static_cast<std::uint8_t>(1u << (sbit % 8));
    CHECK_FALSE(verify(kp.public_key, msg, bad_sig));
  }
  CHECK_ERRC(PrivateKey::from_bytes(Bytes(10, 1)), Errc::MalformedKey);
}

TEST_CASE("full handshake is the identity on payloads") {
  const auto m = MasterKey::from_seed(as_bytes("gateway"));
  const auto buyer = pair("buyer");
  std::mt19937_64 rng(8);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto data = test::random_bytes(rng, 1 + rng() % 5000);
    const auto k = derive_key(m, i * 1000003);
    const auto ct = encrypt(k, data);
    const auto w = wrap_key(buyer.public_key, k.key, Address{});
    const SymKey recovered{unwrap_key(buyer.private_key, w), k.index, k.scheme};
    CHECK(decrypt(recovered, ct) == data);
  }
}
