#include <random>
#include <set>
#include <sstream>

#include "idmob/marketplace.hpp"
#include "support.hpp"

using namespace idmob;

namespace {
  struct Market {
    Ledger ledger{{.seed = 3}};
    BlobStore store;
    EventLog log;
    ChannelRegistry channels{ledger, &log};
    Marketplace m{ledger, store, log, &channels};

    crypto::KeyPair ck = crypto::generate_keypair(as_bytes("customer key seed 1"));
    crypto::KeyPair ck2 = crypto::generate_keypair(as_bytes("customer key seed 2"));
    crypto::MasterKey master = crypto::MasterKey::from_seed(as_bytes("device"));
    Address vendor = ledger.create_account();
    Address device = ledger.create_account();
    Address customer = ledger.create_account();
    Address customer2 = ledger.create_account();
    std::uint64_t next_index = 0;

    void setup(std::uint64_t price = 10) {
      const std::vector<SensorType> types{1};
      const std::vector<std::uint64_t> prices{price};
      m.vendor_register(vendor, "AcmeWear", types, prices);
      m.add_valid_device(vendor, device);
      m.customer_register(customer, ck.public_key.hex());
      m.customer_register(customer2, ck2.public_key.hex());
    }

    Handle push(const std::string &text = "reading", SensorType type = 1) {
      const auto idx = next_index++;
      const auto k = crypto::derive_key(master, idx);
      const auto h = store.put(crypto::encrypt(k, as_bytes(text + std::to_string(idx))));
      m.sensor_data_push(device, vendor, type, "schema", 1000 + idx, "XM566370240", h, idx,
                         crypto::EncryptionScheme::StreamAead);
      return h;
    }

    crypto::WrappedKey wrap_for(const crypto::KeyPair &kp, const Address &to, std::uint64_t idx) {
      return crypto::wrap_key(kp.public_key, crypto::derive_key(master, idx).key, to);
    }
  };

  struct Snapshot {
    ContractState contract;
    Ledger::State ledger;
    std::size_t events;
    bool operator==(const Snapshot &) const = default;
  };

  Snapshot snap(const Market &x) {
    return {x.m.state(), x.ledger.state(), x.log.size()};
  }
}  // namespace

TEST_CASE("vendor registration") {
  Market x;
  const std::vector<SensorType> one{1};
  const std::vector<std::uint64_t> ten{10};
  CHECK(x.m.vendor_register(x.vendor, "AcmeWear", one, ten) == x.vendor);
  CHECK(x.m.get_vendor(x.vendor) == "AcmeWear");
  CHECK_ERRC(x.m.vendor_register(x.vendor, "again", one, ten), Errc::AlreadyRegistered);
  const std::vector<SensorType> dup{1, 1};
  const std::vector<std::uint64_t> two{1, 2};
  CHECK_ERRC(x.m.vendor_register(x.customer, "dup", dup, two), Errc::InvalidSensorType);
  const std::vector<SensorType> zero{0};
  CHECK_ERRC(x.m.vendor_register(x.customer, "zero", zero, ten), Errc::InvalidSensorType);
  const std::vector<SensorType> pair{1, 2};
  const std::vector<std::uint64_t> three{1, 2, 3};
  CHECK_ERRC(x.m.vendor_register(x.customer, "len", pair, three), Errc::LengthMismatch);
  CHECK(x.m.vendor_length() == 1);
  CHECK_ERRC(x.m.get_vendor(x.customer), Errc::UnknownVendor);
}

TEST_CASE("customer registration") {
  Market x;
  CHECK(x.m.customer_register(x.customer, x.ck.public_key.hex()) == x.customer);
  CHECK(x.m.customer(x.customer).pub_key == x.ck.public_key.hex());
  CHECK_ERRC(x.m.customer_register(x.customer, x.ck.public_key.hex()), Errc::AlreadyRegistered);
  CHECK_ERRC(x.m.customer_register(x.customer2, "zz"), Errc::MalformedPublicKey);
}

TEST_CASE("device whitelist and push") {
  Market x;
  x.setup();
  CHECK_ERRC(x.m.add_valid_device(x.customer, x.device), Errc::NotAVendor);
  x.m.add_valid_device(x.vendor, x.device);
  CHECK(x.m.vendor(x.vendor).devices.size() == 1);
  CHECK(x.m.sensor_data_length(x.vendor, 1) == 0);
  x.push();
  CHECK(x.m.sensor_data_length(x.vendor, 1) == 1);

  const auto h = x.store.put(as_bytes("blob"));
  auto push_as = [&](const Address &who, SensorType t, const std::string &spatial, const Handle &handle) {
    return x.m.sensor_data_push(who, x.vendor, t, "s", 1, spatial, handle, 0, crypto::EncryptionScheme::StreamAead);
  };
  const auto before = snap(x);
  CHECK_ERRC(push_as(x.customer, 1, "XM", h), Errc::UnauthorizedDevice);
  CHECK(snap(x) == before);
  CHECK_ERRC(push_as(x.device, 2, "XM", h), Errc::UnsupportedSensorType);
  CHECK_ERRC(push_as(x.device, 1, "X!", h), Errc::InvalidGeoCode);
  CHECK_ERRC(push_as(x.device, 1, "XM", Handle{}), Errc::UnknownHandle);
  CHECK(snap(x) == before);
  CHECK(x.m.sensor_data_length(x.vendor, 1) == 1);
  CHECK_ERRC(x.m.sensor_data_length(x.vendor, 2), Errc::UnsupportedSensorType);
  CHECK_ERRC(x.m.sensor_data_length(x.customer, 1), Errc::UnknownVendor);
}

TEST_CASE("query enumerates vendors per type in registration order") {
  Market x;
  std::vector<Address> vendors;
  std::mt19937_64 rng(6);
  for (int i = 0; i < 12; ++i) {
    const auto v = x.ledger.create_account();
    std::vector<SensorType> types;
    std::vector<std::uint64_t> prices;
    for (SensorType t = 1; t <= 4; ++t) {
      if (rng() % 2) {
        types.push_back(t);
        prices.push_back(t);
      }
    }
    x.m.vendor_register(v, "v" + std::to_string(i), types, prices);
    vendors.push_back(v);
  }
  for (SensorType t = 1; t <= 5; ++t) {
    std::vector<Address> expected;
    for (const auto &v : vendors) {
      if (x.m.vendor(v).supports(t)) expected.push_back(v);
    }
    std::vector<Address> got;
    for (std::uint64_t i = 0;; ++i) {
      try {
        got.push_back(x.m.query_sensor(t, i));
      } catch (const Error &e) {
        CHECK(e.code() == Errc::IndexOutOfRange);
        break;
      }
    }
    CHECK(got == expected);
  }
  CHECK_ERRC(x.m.query_sensor(99, 0), Errc::IndexOutOfRange);
}

TEST_CASE("pull returns metadata and the current price, never the handle") {
  Market x;
  x.setup(10);
  const auto h = x.push();
  auto r = x.m.sensor_data_pull(x.vendor, 1, 0);
  CHECK(r.schema == "schema");
  CHECK(r.timestamp == 1000);
  CHECK(r.spatial == "XM566370240");
  CHECK(r.price == 10);
  const auto text = r.schema + r.spatial + std::to_string(r.timestamp);
  CHECK(text.find(h.hex()) == std::string::npos);
  x.m.update_sensor_price(x.vendor, 1, 3);
  CHECK(x.m.sensor_data_pull(x.vendor, 1, 0).price == 3);
  CHECK(x.m.get_sensor_price(x.vendor, 1) == 3);
  CHECK_ERRC(x.m.sensor_data_pull(x.vendor, 1, 1), Errc::IndexOutOfRange);
  CHECK_ERRC(x.m.sensor_data_pull(x.customer, 1, 0), Errc::UnknownVendor);
  CHECK_ERRC(x.m.update_sensor_price(x.customer, 1, 3), Errc::NotAVendor);
  CHECK_ERRC(x.m.update_sensor_price(x.vendor, 7, 3), Errc::UnsupportedSensorType);
  CHECK_ERRC(x.m.get_sensor_price(x.vendor, 7), Errc::UnsupportedSensorType);
}

TEST_CASE("request pays exactly and atomically") {
  Market x;
  x.setup(10);
  x.push();
  x.ledger.mint(x.customer, 0, 10);
  x.ledger.mint(x.customer2, 0, 9);
  CHECK(x.m.request_for_data(x.customer, x.vendor, 1, 0) == x.vendor);
  CHECK(x.ledger.balance_of(x.customer).tokens == 0);
  CHECK(x.ledger.balance_of(x.vendor).tokens == 10);
  CHECK(x.m.customer(x.customer).purchases.size() == 1);
  CHECK(x.m.customer(x.customer).vote_rights.at(x.vendor));

  const auto before = snap(x);
  CHECK_ERRC(x.m.request_for_data(x.customer2, x.vendor, 1, 0), Errc::InsufficientFunds);
  CHECK(snap(x) == before);
  CHECK(x.m.customer(x.customer2).vote_rights.empty());
  CHECK_ERRC(x.m.request_for_data(x.vendor, x.vendor, 1, 0), Errc::NotACustomer);
  CHECK_ERRC(x.m.request_for_data(x.customer2, x.vendor, 1, 5), Errc::IndexOutOfRange);
}

TEST_CASE("repeat purchases pay again, price snapshot at request") {
  Market x;
  x.setup(10);
  x.push();
  x.ledger.mint(x.customer, 0, 100);
  x.m.request_for_data(x.customer, x.vendor, 1, 0);
  x.m.update_sensor_price(x.vendor, 1, 0);
  x.m.request_for_data(x.customer, x.vendor, 1, 0);
  x.m.update_sensor_price(x.vendor, 1, 7);
  x.m.request_for_data(x.customer, x.vendor, 1, 0);
  CHECK(x.ledger.balance_of(x.customer).tokens == 83);
  const auto &p = x.m.customer(x.customer).purchases;
  REQUIRE(p.size() == 3);
  CHECK(p[0].price == 10);
  CHECK(p[1].price == 0);
  CHECK(p[2].price == 7);
}

TEST_CASE("key delivery") {
  Market x;
  x.setup(10);
  const auto h = x.push("secret");
  x.ledger.mint(x.customer, 0, 100);
  CHECK_ERRC(x.m.transfer_key_and_data(x.vendor, x.wrap_for(x.ck, x.customer, 0), x.customer, 1, 0),
             Errc::NoMatchingPurchase);
  x.m.request_for_data(x.customer, x.vendor, 1, 0);
  CHECK(x.m.payload(x.vendor, 1, 0).encrypted_key.empty());
  CHECK_ERRC(x.m.transfer_key_and_data(x.customer, x.wrap_for(x.ck, x.customer, 0), x.customer, 1, 0),
             Errc::NotAVendor);
  const auto w = x.wrap_for(x.ck, x.customer, 0);
  CHECK(x.m.transfer_key_and_data(x.vendor, w, x.customer, 1, 0) == h.hex());
  CHECK(x.m.payload(x.vendor, 1, 0).encrypted_key == w);
  CHECK_ERRC(x.m.transfer_key_and_data(x.vendor, w, x.customer, 1, 0), Errc::AlreadyDelivered);

  // the buyer's end of the handshake
  const auto ev = x.log.all().back();
  const auto *kt = ev.as<events::KeyTransferred>();
  REQUIRE(kt);
  const auto key = crypto::unwrap_key(x.ck.private_key, crypto::WrappedKey{kt->wrapped, x.customer});
  const auto pt = crypto::decrypt(crypto::SymKey{key, 0, crypto::EncryptionScheme::StreamAead},
                                  x.store.get(kt->handle).content);
  CHECK(std::string(pt.begin(), pt.end()) == "secret0");
}

TEST_CASE("voting") {
  Market x;
  x.setup(1);
  x.push();
  x.ledger.mint(x.customer, 0, 10);
  x.ledger.mint(x.customer2, 0, 10);
  CHECK_ERRC(x.m.vote_for_vendor(x.customer, x.vendor, Vote::Up), Errc::NoVoteRight);
  x.m.request_for_data(x.customer, x.vendor, 1, 0);
  CHECK(x.m.vote_for_vendor(x.customer, x.vendor, Vote::Up) == 1);
  CHECK_ERRC(x.m.vote_for_vendor(x.customer, x.vendor, Vote::Up), Errc::NoVoteRight);
  CHECK_ERRC(x.m.vote_for_vendor(x.customer, x.customer2, Vote::Up), Errc::UnknownVendor);
  x.m.request_for_data(x.customer, x.vendor, 1, 0);
  x.m.request_for_data(x.customer2, x.vendor, 1, 0);
  CHECK(x.m.vote_for_vendor(x.customer, x.vendor, Vote::Down) == 0);
  CHECK(x.m.vote_for_vendor(x.customer2, x.vendor, Vote::Down) == -1);
  CHECK(x.m.get_votes(x.vendor) == -1);
}

TEST_CASE("poll sees events only after a tick") {
  Market x;
  CHECK(x.m.poll_events(0).empty());
  x.setup();
  x.ledger.tick();
  const auto seen = x.log.last_seq();
  x.push();
  CHECK(x.m.poll_events(seen).empty());
  x.ledger.tick();
  const auto after = x.m.poll_events(seen);
  REQUIRE(after.size() == 1);
  CHECK(after[0].kind() == "DataPushed");
}

TEST_CASE("every success appends one event, every failure one receipt") {
  Market x;
  const auto events = x.log.size();
  const auto receipts = x.ledger.receipts().size();
  x.setup();
  CHECK(x.log.size() == events + 4);
  CHECK(x.ledger.receipts().size() == receipts + 4);
  x.m.add_valid_device(x.vendor, x.device);
  CHECK(x.log.size() == events + 5);
  CHECK(x.m.vendor(x.vendor).devices.size() == 1);
  CHECK_ERRC(x.m.add_valid_device(x.customer, x.device), Errc::NotAVendor);
  CHECK(x.log.size() == events + 5);
  CHECK(x.ledger.receipts().size() == receipts + 6);
  CHECK(x.ledger.receipts().back().cost_units == x.ledger.costs().base_tx_units);
  CHECK(x.ledger.receipts().back().error == Errc::NotAVendor);
}

TEST_CASE("the contract state can be rebuilt from its log") {
  Market x;
  x.setup(4);
  for (int i = 0; i < 5; ++i) x.push();
  x.ledger.mint(x.customer, 0, 100);
  x.ledger.mint(x.customer2, 0, 100);
  for (std::uint64_t i = 0; i < 5; ++i) {
    x.m.request_for_data(i % 2 ? x.customer : x.customer2, x.vendor, 1, i);
  }
  x.m.transfer_key_and_data(x.vendor, x.wrap_for(x.ck2, x.customer2, 0), x.customer2, 1, 0);
  x.m.transfer_key_and_data(x.vendor, x.wrap_for(x.ck, x.customer, 1), x.customer, 1, 1);
  x.m.vote_for_vendor(x.customer, x.vendor, Vote::Down);
  x.m.update_sensor_price(x.vendor, 1, 9);
  try {
    x.m.vote_for_vendor(x.customer, x.vendor, Vote::Down);
  } catch (const Error &) {
  }

  std::stringstream buf;
  write_event_log(buf, x.log.all());
  const auto parsed = read_event_log(buf);
  CHECK(replay_contract(parsed) == x.m.state());
}

TEST_CASE("cost units do not depend on catalog size") {
  auto measure = [](std::size_t existing) {
    Market x;
    x.setup(2);
    for (std::size_t i = 0; i < existing; ++i) x.push();
    x.ledger.mint(x.customer, 0, 100);
    auto cost = [&](auto &&fn) {
      const auto n = x.ledger.receipts().size();
      fn();
      REQUIRE(x.ledger.receipts().size() == n + 1);
      return x.ledger.receipts().back().cost_units;
    };
    std::vector<std::uint64_t> costs;
    const auto other = x.ledger.create_account();
    const std::vector<SensorType> t{1};
    const std::vector<std::uint64_t> p{1};
    costs.push_back(cost([&] { x.m.vendor_register(other, "o", t, p); }));
    const auto cust = x.ledger.create_account();
    costs.push_back(cost([&] { x.m.customer_register(cust, x.ck.public_key.hex()); }));
    costs.push_back(cost([&] { x.m.add_valid_device(x.vendor, x.ledger.create_account()); }));
    costs.push_back(cost([&] { x.push(); }));
    costs.push_back(cost([&] { x.m.update_sensor_price(x.vendor, 1, 2); }));
    costs.push_back(cost([&] { x.m.request_for_data(x.customer, x.vendor, 1, existing); }));
    costs.push_back(cost([&] {
      x.m.transfer_key_and_data(x.vendor, x.wrap_for(x.ck, x.customer, existing), x.customer, 1, existing);
    }));
    costs.push_back(cost([&] { x.m.vote_for_vendor(x.customer, x.vendor, Vote::Up); }));
    return costs;
  };
  CHECK(measure(10) == measure(1000));
}
