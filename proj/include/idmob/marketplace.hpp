#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "idmob/blobstore.hpp"
#include "idmob/channels.hpp"
#include "idmob/crypto.hpp"
#include "idmob/events.hpp"
#include "idmob/geohex.hpp"
#include "idmob/ledger.hpp"

namespace idmob {

  /// Sensor category id; 0 is reserved as "unset".
  using SensorType = std::uint64_t;

  enum class Vote { Up, Down };

  struct Payload {
    Address device_id;
    std::uint64_t timestamp = 0;
    Handle handle;
    std::string schema;
    geohex::GeoCode spatial;
    std::uint64_t key_index = 0;
    crypto::EncryptionScheme scheme = crypto::EncryptionScheme::StreamAead;
    /// Latest key delivered for this payload, whichever buyer it was for.
    crypto::WrappedKey encrypted_key;

    bool operator==(const Payload &) const = default;
  };

  struct VendorRecord {
    std::string prefix;
    /// Registration order.
    std::vector<SensorType> types;
    std::map<SensorType, std::uint64_t> prices;
    std::map<SensorType, std::vector<Payload>> payloads;
    std::set<Address> devices;
    std::int64_t votes = 0;

    bool supports(SensorType type) const {
      return prices.contains(type);
    }
    bool operator==(const VendorRecord &) const = default;
  };

  struct Purchase {
    Address vendor;
    SensorType sensor_type = 0;
    std::uint64_t index = 0;
    std::uint64_t price = 0;
    /// 0 when paid on the ledger.
    std::uint64_t channel = 0;
    bool operator==(const Purchase &) const = default;
  };

  struct CustomerRecord {
    std::vector<Purchase> purchases;
    std::map<Address, bool> vote_rights;
    std::string pub_key;
    bool operator==(const CustomerRecord &) const = default;
  };

  /// (customer, vendor, sensor type, payload index)
  using DeliveryKey = std::tuple<Address, Address, SensorType, std::uint64_t>;

  struct DeliveryRecord {
    std::uint64_t purchased = 0;
    std::vector<crypto::WrappedKey> delivered;
    bool operator==(const DeliveryRecord &) const = default;
  };

  struct PullResult {
    std::string schema;
    std::uint64_t timestamp = 0;
    std::string spatial;
    std::uint64_t price = 0;
    bool operator==(const PullResult &) const = default;
  };

  /// Everything the contract stores. Rebuildable from the event log alone via
  /// apply(), which is how replay is checked.
  struct ContractState {
    std::map<Address, VendorRecord> vendors;
    std::vector<Address> vendor_order;
    std::map<SensorType, std::vector<Address>> vendors_by_type;
    std::map<Address, CustomerRecord> customers;
    std::map<DeliveryKey, DeliveryRecord> deliveries;
    /// Price already consumed from each channel's vendor-side balance.
    std::map<std::uint64_t, std::uint64_t> channel_spent;

    /// Applies a marketplace event without validation; other kinds are
    /// ignored.
    void apply(const Event &event);
    bool operator==(const ContractState &) const = default;
  };

  ContractState replay_contract(std::span<const Event> events);

  /// Write-slot counts per operation, charged as
  /// base + per_write * slots + per_event. None depend on catalog size.
  namespace slots {
    inline constexpr std::uint64_t kVendorRegisterBase = 2;
    inline constexpr std::uint64_t kVendorRegisterPerSensor = 3;
    inline constexpr std::uint64_t kCustomerRegister = 2;
    inline constexpr std::uint64_t kAddDevice = 1;
    inline constexpr std::uint64_t kPush = 2;
    inline constexpr std::uint64_t kUpdatePrice = 1;
    inline constexpr std::uint64_t kRequest = 4;
    inline constexpr std::uint64_t kRequestViaChannel = 3;
    inline constexpr std::uint64_t kTransferKey = 2;
    inline constexpr std::uint64_t kVote = 2;
  }  // namespace slots

  /// The data marketplace contract.
  ///
  /// Mutating calls take the caller explicitly, check its role, charge cost
  /// units on the ledger and append exactly one event. A rejected call
  /// changes nothing except the receipt journal, where it is charged the
  /// base transaction cost. View calls are free and const.
  class Marketplace {
   public:
    Marketplace(Ledger &ledger, BlobStore &store, EventLog &log, ChannelRegistry *channels = nullptr);

    Address vendor_register(const Address &caller,
                            const std::string &prefix,
                            std::span<const SensorType> sensors,
                            std::span<const std::uint64_t> costs);
    Address customer_register(const Address &caller, const std::string &pub_key);
    Address add_valid_device(const Address &caller, const Address &device);
    Address sensor_data_push(const Address &caller,
                             const Address &vendor,
                             SensorType sensor_type,
                             const std::string &schema,
                             std::uint64_t timestamp,
                             const std::string &spatial,
                             const Handle &handle,
                             std::uint64_t key_index,
                             crypto::EncryptionScheme scheme);
    std::uint64_t update_sensor_price(const Address &caller, SensorType sensor_type, std::uint64_t price);
    /// Pays the current price in tokens on the ledger. Returns the vendor.
    Address request_for_data(const Address &caller, const Address &vendor, SensorType sensor_type, std::uint64_t index);
    /// Pays with a channel balance proof: the vendor's balance in `proof`
    /// above its deposit must cover everything already bought through the
    /// channel plus this price.
    Address request_for_data_via_channel(const Address &caller,
                                         const Address &vendor,
                                         SensorType sensor_type,
                                         std::uint64_t index,
                                         const ChannelState &proof);
    /// The vendor is the caller. Returns the payload's blob handle (hex).
    std::string transfer_key_and_data(const Address &caller,
                                      const crypto::WrappedKey &wrapped,
                                      const Address &to,
                                      SensorType sensor_type,
                                      std::uint64_t index);
    std::int64_t vote_for_vendor(const Address &caller, const Address &vendor, Vote vote);

    // views
    Address query_sensor(SensorType sensor_type, std::uint64_t index) const;
    PullResult sensor_data_pull(const Address &vendor, SensorType sensor_type, std::uint64_t index) const;
    std::uint64_t sensor_data_length(const Address &vendor, SensorType sensor_type) const;
    std::uint64_t vendor_length() const;
    std::string get_vendor(const Address &vendor) const;
    std::uint64_t get_sensor_price(const Address &vendor, SensorType sensor_type) const;
    std::int64_t get_votes(const Address &vendor) const;
    std::vector<Event> poll_events(std::uint64_t since_seq) const;

    const ContractState &state() const {
      return state_;
    }
    const VendorRecord &vendor(const Address &vendor) const;
    const CustomerRecord &customer(const Address &customer) const;
    bool is_vendor(const Address &addr) const {
      return state_.vendors.contains(addr);
    }
    bool is_customer(const Address &addr) const {
      return state_.customers.contains(addr);
    }
    const Payload &payload(const Address &vendor, SensorType sensor_type, std::uint64_t index) const;

   private:
    template <typename Body>
    auto transact(const Address &caller, Body &&body);
    void commit(const Address &caller, std::uint64_t writes, EventBody event);
    Address record_purchase(const Address &caller,
                            const Address &vendor,
                            SensorType sensor_type,
                            std::uint64_t index,
                            std::uint64_t price,
                            std::uint64_t channel,
                            std::uint64_t writes);

    Ledger &ledger_;
    BlobStore &store_;
    EventLog &log_;
    ChannelRegistry *channels_;
    ContractState state_;
  };

}  // namespace idmob
