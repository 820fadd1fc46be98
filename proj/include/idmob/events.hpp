#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "idmob/crypto.hpp"
#include "idmob/ledger.hpp"
#include "idmob/types.hpp"

namespace idmob {

  /// Event bodies. Each exposes tie() listing its fields in wire order; the
  /// line codec below is driven entirely by those tuples.
  namespace events {

    struct RunStarted {
      std::uint64_t seed = 0;
      std::uint64_t block_interval_s = 0;
      std::uint64_t push_interval_s = 0;
      std::uint64_t genesis_offset_s = 0;
      std::string hash_function;
      auto tie() { return std::tie(seed, block_interval_s, push_interval_s, genesis_offset_s, hash_function); }
    };

    struct RunFinished {
      std::uint64_t height = 0;
      auto tie() { return std::tie(height); }
    };

    struct ActorCreated {
      std::string name;
      std::string role;
      Address address;
      auto tie() { return std::tie(name, role, address); }
    };

    struct Minted {
      Address to;
      std::uint64_t native = 0;
      std::uint64_t tokens = 0;
      auto tie() { return std::tie(to, native, tokens); }
    };

    struct Transferred {
      Address from;
      Address to;
      std::uint64_t amount = 0;
      AssetKind kind = AssetKind::Native;
      auto tie() { return std::tie(from, to, amount, kind); }
    };

    struct VendorRegistered {
      Address vendor;
      std::string prefix;
      std::vector<std::uint64_t> sensors;
      std::vector<std::uint64_t> prices;
      auto tie() { return std::tie(vendor, prefix, sensors, prices); }
    };

    struct CustomerRegistered {
      Address customer;
      std::string pub_key;
      auto tie() { return std::tie(customer, pub_key); }
    };

    struct DeviceAdded {
      Address vendor;
      Address device;
      auto tie() { return std::tie(vendor, device); }
    };

    struct DataPushed {
      Address vendor;
      Address device;
      std::uint64_t sensor_type = 0;
      std::uint64_t index = 0;
      Handle handle;
      std::string schema;
      std::uint64_t timestamp = 0;
      std::string spatial;
      std::uint64_t key_index = 0;
      crypto::EncryptionScheme scheme = crypto::EncryptionScheme::StreamAead;
      auto tie() {
        return std::tie(vendor, device, sensor_type, index, handle, schema, timestamp, spatial, key_index, scheme);
      }
    };

    /// channel == 0 means paid on the ledger; otherwise the channel id whose
    /// balance proof covered the price.
    struct DataRequested {
      Address customer;
      Address vendor;
      std::uint64_t sensor_type = 0;
      std::uint64_t index = 0;
      std::uint64_t price = 0;
      std::uint64_t channel = 0;
      auto tie() { return std::tie(customer, vendor, sensor_type, index, price, channel); }
    };

    struct KeyTransferred {
      Address vendor;
      Address customer;
      std::uint64_t sensor_type = 0;
      std::uint64_t index = 0;
      Handle handle;
      Bytes wrapped;
      auto tie() { return std::tie(vendor, customer, sensor_type, index, handle, wrapped); }
    };

    struct VoteCast {
      Address customer;
      Address vendor;
      std::int64_t delta = 0;
      std::int64_t tally = 0;
      auto tie() { return std::tie(customer, vendor, delta, tally); }
    };

    struct PriceUpdated {
      Address vendor;
      std::uint64_t sensor_type = 0;
      std::uint64_t price = 0;
      auto tie() { return std::tie(vendor, sensor_type, price); }
    };

    struct ChannelOpened {
      std::uint64_t channel = 0;
      Address party_a;
      Address party_b;
      std::uint64_t deposit_a = 0;
      std::uint64_t deposit_b = 0;
      auto tie() { return std::tie(channel, party_a, party_b, deposit_a, deposit_b); }
    };

    struct ChannelClosed {
      std::uint64_t channel = 0;
      std::uint64_t nonce = 0;
      std::uint64_t balance_a = 0;
      std::uint64_t balance_b = 0;
      std::uint64_t deadline = 0;
      auto tie() { return std::tie(channel, nonce, balance_a, balance_b, deadline); }
    };

    struct ChannelChallenged {
      std::uint64_t channel = 0;
      std::uint64_t nonce = 0;
      std::uint64_t balance_a = 0;
      std::uint64_t balance_b = 0;
      auto tie() { return std::tie(channel, nonce, balance_a, balance_b); }
    };

    struct ChannelSettled {
      std::uint64_t channel = 0;
      std::uint64_t nonce = 0;
      std::uint64_t payout_a = 0;
      std::uint64_t payout_b = 0;
      bool cooperative = false;
      auto tie() { return std::tie(channel, nonce, payout_a, payout_b, cooperative); }
    };

    struct PayloadVerified {
      Address customer;
      Address vendor;
      std::uint64_t sensor_type = 0;
      std::uint64_t index = 0;
      bool ok = false;
      auto tie() { return std::tie(customer, vendor, sensor_type, index, ok); }
    };

    struct StepFailed {
      std::string actor;
      std::string op;
      std::string error;
      auto tie() { return std::tie(actor, op, error); }
    };

  }  // namespace events

  using EventBody = std::variant<events::RunStarted,
                                 events::RunFinished,
                                 events::ActorCreated,
                                 events::Minted,
                                 events::Transferred,
                                 events::VendorRegistered,
                                 events::CustomerRegistered,
                                 events::DeviceAdded,
                                 events::DataPushed,
                                 events::DataRequested,
                                 events::KeyTransferred,
                                 events::VoteCast,
                                 events::PriceUpdated,
                                 events::ChannelOpened,
                                 events::ChannelClosed,
                                 events::ChannelChallenged,
                                 events::ChannelSettled,
                                 events::PayloadVerified,
                                 events::StepFailed>;

  std::string_view event_kind_name(const EventBody &body);
  std::span<const std::string_view> event_kind_names();

  struct Event {
    std::uint64_t seq = 0;
    std::uint64_t block = 0;
    /// Account charged for the transaction that produced the event.
    Address caller;
    std::uint64_t cost = 0;
    EventBody body;

    std::string_view kind() const {
      return event_kind_name(body);
    }
    template <typename T>
    const T *as() const {
      return std::get_if<T>(&body);
    }
  };

  bool operator==(const Event &a, const Event &b);

  /// Append-only, block-gated log. seq starts at 1, so poll(0) sees everything
  /// visible.
  class EventLog {
   public:
    const Event &append(std::uint64_t block, const Address &caller, std::uint64_t cost, EventBody body);

    /// Events with seq > since_seq and block <= visible_height, in seq order.
    std::vector<Event> poll(std::uint64_t since_seq, std::uint64_t visible_height) const;

    const std::vector<Event> &all() const {
      return events_;
    }
    std::size_t size() const {
      return events_.size();
    }
    std::uint64_t last_seq() const {
      return events_.empty() ? 0 : events_.back().seq;
    }

   private:
    std::vector<Event> events_;
  };

  /// `seq block Kind caller cost field...`; strings double-quoted with
  /// backslash escapes, lists comma-joined, empty lists and byte strings "-".
  std::string format_event(const Event &event);
  Event parse_event(std::string_view line);

  void write_event_log(std::ostream &out, std::span<const Event> events);
  std::vector<Event> read_event_log(std::istream &in);

}  // namespace idmob
