#include "idmob/marketplace.hpp"

#include <algorithm>

namespace idmob {

  namespace {
    DeliveryKey delivery_key(const Address &customer,
                             const Address &vendor,
                             SensorType type,
                             std::uint64_t index) {
      return {customer, vendor, type, index};
    }

    template <typename Map>
    auto &at_or_throw(Map &map, const typename Map::key_type &key, Errc code, const std::string &what) {
      auto it = map.find(key);
      if (it == map.end()) {
        throw Error(code, what);
      }
      return it->second;
    }
  }  // namespace

  // -- event sourcing ---------------------------------------------------------

  void ContractState::apply(const Event &event) {
    using namespace events;
    std::visit(
        [this](const auto &e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, VendorRegistered>) {
            auto &rec = vendors[e.vendor];
            rec.prefix = e.prefix;
            rec.types.assign(e.sensors.begin(), e.sensors.end());
            for (std::size_t i = 0; i < e.sensors.size(); ++i) {
              rec.prices[e.sensors[i]] = e.prices[i];
              vendors_by_type[e.sensors[i]].push_back(e.vendor);
            }
            vendor_order.push_back(e.vendor);
          } else if constexpr (std::is_same_v<T, CustomerRegistered>) {
            customers[e.customer].pub_key = e.pub_key;
          } else if constexpr (std::is_same_v<T, DeviceAdded>) {
            vendors[e.vendor].devices.insert(e.device);
          } else if constexpr (std::is_same_v<T, DataPushed>) {
            vendors[e.vendor].payloads[e.sensor_type].push_back(Payload{e.device,
                                                                        e.timestamp,
                                                                        e.handle,
                                                                        e.schema,
                                                                        geohex::GeoCode::parse(e.spatial),
                                                                        e.key_index,
                                                                        e.scheme,
                                                                        {}});
          } else if constexpr (std::is_same_v<T, PriceUpdated>) {
            vendors[e.vendor].prices[e.sensor_type] = e.price;
          } else if constexpr (std::is_same_v<T, DataRequested>) {
            auto &cust = customers[e.customer];
            cust.purchases.push_back(Purchase{e.vendor, e.sensor_type, e.index, e.price, e.channel});
            cust.vote_rights[e.vendor] = true;
            ++deliveries[delivery_key(e.customer, e.vendor, e.sensor_type, e.index)].purchased;
            if (e.channel != 0) {
              channel_spent[e.channel] += e.price;
            }
          } else if constexpr (std::is_same_v<T, KeyTransferred>) {
            crypto::WrappedKey wrapped{e.wrapped, e.customer};
            deliveries[delivery_key(e.customer, e.vendor, e.sensor_type, e.index)].delivered.push_back(wrapped);
            vendors[e.vendor].payloads[e.sensor_type].at(e.index).encrypted_key = wrapped;
          } else if constexpr (std::is_same_v<T, VoteCast>) {
            vendors[e.vendor].votes = e.tally;
            customers[e.customer].vote_rights[e.vendor] = false;
          }
        },
        event.body);
  }

  ContractState replay_contract(std::span<const Event> events) {
    ContractState state;
    for (const auto &ev : events) {
      state.apply(ev);
    }
    return state;
  }

  // -- contract ---------------------------------------------------------------

  Marketplace::Marketplace(Ledger &ledger, BlobStore &store, EventLog &log, ChannelRegistry *channels)
      : ledger_(ledger), store_(store), log_(log), channels_(channels) {}

  template <typename Body>
  auto Marketplace::transact(const Address &caller, Body &&body) {
    try {
      return body();
    } catch (const Error &e) {
      ledger_.charge(caller, ledger_.costs().base_tx_units, e.code());
      throw;
    }
  }

  void Marketplace::commit(const Address &caller, std::uint64_t writes, EventBody body) {
    const auto cost = ledger_.costs().tx_cost(writes, 1);
    ledger_.charge(caller, cost);
    state_.apply(log_.append(ledger_.pending_block(), caller, cost, std::move(body)));
  }

  Address Marketplace::vendor_register(const Address &caller,
                                       const std::string &prefix,
                                       std::span<const SensorType> sensors,
                                       std::span<const std::uint64_t> costs) {
    return transact(caller, [&] {
      if (is_vendor(caller)) {
        throw Error(Errc::AlreadyRegistered, caller.hex());
      }
      if (sensors.size() != costs.size()) {
        throw Error(Errc::LengthMismatch,
                    std::to_string(sensors.size()) + " sensors, " + std::to_string(costs.size()) + " costs");
      }
      std::set<SensorType> seen;
      for (auto s : sensors) {
        if (s == 0 || !seen.insert(s).second) {
          throw Error(Errc::InvalidSensorType, std::to_string(s));
        }
      }
      commit(caller,
             slots::kVendorRegisterBase + slots::kVendorRegisterPerSensor * sensors.size(),
             events::VendorRegistered{caller,
                                      prefix,
                                      {sensors.begin(), sensors.end()},
                                      {costs.begin(), costs.end()}});
      return caller;
    });
  }

  Address Marketplace::customer_register(const Address &caller, const std::string &pub_key) {
    return transact(caller, [&] {
      if (is_customer(caller)) {
        throw Error(Errc::AlreadyRegistered, caller.hex());
      }
      crypto::PublicKey::parse(pub_key);
      commit(caller, slots::kCustomerRegister, events::CustomerRegistered{caller, pub_key});
      return caller;
    });
  }

  Address Marketplace::add_valid_device(const Address &caller, const Address &device) {
    return transact(caller, [&] {
      if (!is_vendor(caller)) {
        throw Error(Errc::NotAVendor, caller.hex());
      }
      commit(caller, slots::kAddDevice, events::DeviceAdded{caller, device});
      return device;
    });
  }

  Address Marketplace::sensor_data_push(const Address &caller,
                                        const Address &vendor,
                                        SensorType sensor_type,
                                        const std::string &schema,
                                        std::uint64_t timestamp,
                                        const std::string &spatial,
                                        const Handle &handle,
                                        std::uint64_t key_index,
                                        crypto::EncryptionScheme scheme) {
    return transact(caller, [&] {
      auto it = state_.vendors.find(vendor);
      if (it == state_.vendors.end() || !it->second.devices.contains(caller)) {
        throw Error(Errc::UnauthorizedDevice, caller.hex());
      }
      const auto &rec = it->second;
      if (!rec.supports(sensor_type)) {
        throw Error(Errc::UnsupportedSensorType, std::to_string(sensor_type));
      }
      try {
        geohex::GeoCode::parse(spatial);
      } catch (const Error &) {
        throw Error(Errc::InvalidGeoCode, spatial);
      }
      if (!store_.has(handle)) {
        throw Error(Errc::UnknownHandle, handle.hex());
      }
      crypto::scheme_name(scheme);
      const auto index = rec.payloads.contains(sensor_type) ? rec.payloads.at(sensor_type).size() : 0;
      commit(caller,
             slots::kPush,
             events::DataPushed{vendor, caller, sensor_type, index, handle, schema, timestamp, spatial, key_index, scheme});
      return vendor;
    });
  }

  std::uint64_t Marketplace::update_sensor_price(const Address &caller, SensorType sensor_type, std::uint64_t price) {
    return transact(caller, [&] {
      if (!is_vendor(caller)) {
        throw Error(Errc::NotAVendor, caller.hex());
      }
      if (!state_.vendors.at(caller).supports(sensor_type)) {
        throw Error(Errc::UnsupportedSensorType, std::to_string(sensor_type));
      }
      commit(caller, slots::kUpdatePrice, events::PriceUpdated{caller, sensor_type, price});
      return price;
    });
  }

  Address Marketplace::record_purchase(const Address &caller,
                                       const Address &vendor,
                                       SensorType sensor_type,
                                       std::uint64_t index,
                                       std::uint64_t price,
                                       std::uint64_t channel,
                                       std::uint64_t writes) {
    commit(caller, writes, events::DataRequested{caller, vendor, sensor_type, index, price, channel});
    return vendor;
  }

  Address Marketplace::request_for_data(const Address &caller,
                                        const Address &vendor,
                                        SensorType sensor_type,
                                        std::uint64_t index) {
    return transact(caller, [&] {
      if (!is_customer(caller)) {
        throw Error(Errc::NotACustomer, caller.hex());
      }
      payload(vendor, sensor_type, index);
      const auto price = state_.vendors.at(vendor).prices.at(sensor_type);
      if (ledger_.balance_of(caller).tokens < price) {
        throw Error(Errc::InsufficientFunds, std::to_string(price) + " tokens");
      }
      ledger_.move_funds(caller, vendor, price, AssetKind::Token);
      return record_purchase(caller, vendor, sensor_type, index, price, 0, slots::kRequest);
    });
  }

  Address Marketplace::request_for_data_via_channel(const Address &caller,
                                                    const Address &vendor,
                                                    SensorType sensor_type,
                                                    std::uint64_t index,
                                                    const ChannelState &proof) {
    return transact(caller, [&] {
      if (!is_customer(caller)) {
        throw Error(Errc::NotACustomer, caller.hex());
      }
      payload(vendor, sensor_type, index);
      const auto price = state_.vendors.at(vendor).prices.at(sensor_type);
      if (!channels_) {
        throw Error(Errc::UnknownChannel, "no channel registry");
      }
      const auto &ch = channels_->channel(proof.channel_id);
      if (ch.status != ChannelStatus::Open) {
        throw Error(Errc::ChannelNotOpen, std::to_string(ch.id));
      }
      const auto buyer_side = ch.side_of(caller);
      const auto vendor_side = ch.side_of(vendor);
      if (!buyer_side || !vendor_side || *buyer_side == *vendor_side) {
        throw Error(Errc::NotAParty, "channel is not between buyer and vendor");
      }
      if (!channels_->is_valid(ch, proof)) {
        throw Error(Errc::BadSignature, "channel proof");
      }
      const auto deposit = *vendor_side == Side::A ? ch.escrow_a : ch.escrow_b;
      const auto received = proof.balance(*vendor_side) > deposit ? proof.balance(*vendor_side) - deposit : 0;
      const auto spent = state_.channel_spent.contains(ch.id) ? state_.channel_spent.at(ch.id) : 0;
      if (received < spent + price) {
        throw Error(Errc::InsufficientChannelBalance,
                    "proof covers " + std::to_string(received) + ", need " + std::to_string(spent + price));
      }
      return record_purchase(caller, vendor, sensor_type, index, price, ch.id, slots::kRequestViaChannel);
    });
  }

  std::string Marketplace::transfer_key_and_data(const Address &caller,
                                                 const crypto::WrappedKey &wrapped,
                                                 const Address &to,
                                                 SensorType sensor_type,
                                                 std::uint64_t index) {
    return transact(caller, [&] {
      if (!is_vendor(caller)) {
        throw Error(Errc::NotAVendor, caller.hex());
      }
      auto it = state_.deliveries.find(delivery_key(to, caller, sensor_type, index));
      if (it == state_.deliveries.end() || it->second.purchased == 0) {
        throw Error(Errc::NoMatchingPurchase, to.hex());
      }
      if (it->second.delivered.size() >= it->second.purchased) {
        throw Error(Errc::AlreadyDelivered, to.hex());
      }
      const auto handle = payload(caller, sensor_type, index).handle;
      commit(caller,
             slots::kTransferKey,
             events::KeyTransferred{caller, to, sensor_type, index, handle, wrapped.ciphertext});
      return handle.hex();
    });
  }

  std::int64_t Marketplace::vote_for_vendor(const Address &caller, const Address &vendor, Vote vote) {
    return transact(caller, [&] {
      if (!is_vendor(vendor)) {
        throw Error(Errc::UnknownVendor, vendor.hex());
      }
      auto cust = state_.customers.find(caller);
      if (cust == state_.customers.end()) {
        throw Error(Errc::NoVoteRight, "not a customer");
      }
      auto right = cust->second.vote_rights.find(vendor);
      if (right == cust->second.vote_rights.end() || !right->second) {
        throw Error(Errc::NoVoteRight, caller.hex());
      }
      const std::int64_t delta = vote == Vote::Up ? 1 : -1;
      const auto tally = state_.vendors.at(vendor).votes + delta;
      commit(caller, slots::kVote, events::VoteCast{caller, vendor, delta, tally});
      return tally;
    });
  }

  // -- views ------------------------------------------------------------------

  const VendorRecord &Marketplace::vendor(const Address &vendor) const {
    return at_or_throw(state_.vendors, vendor, Errc::UnknownVendor, vendor.hex());
  }

  const CustomerRecord &Marketplace::customer(const Address &customer) const {
    return at_or_throw(state_.customers, customer, Errc::NotACustomer, customer.hex());
  }

  const Payload &Marketplace::payload(const Address &vendor_addr,
                                      SensorType sensor_type,
                                      std::uint64_t index) const {
    const auto &rec = vendor(vendor_addr);
    if (!rec.supports(sensor_type)) {
      throw Error(Errc::UnsupportedSensorType, std::to_string(sensor_type));
    }
    auto it = rec.payloads.find(sensor_type);
    if (it == rec.payloads.end() || index >= it->second.size()) {
      throw Error(Errc::IndexOutOfRange, "payload " + std::to_string(index));
    }
    return it->second[index];
  }

  Address Marketplace::query_sensor(SensorType sensor_type, std::uint64_t index) const {
    auto it = state_.vendors_by_type.find(sensor_type);
    if (it == state_.vendors_by_type.end() || index >= it->second.size()) {
      throw Error(Errc::IndexOutOfRange,
                  "sensor " + std::to_string(sensor_type) + " vendor " + std::to_string(index));
    }
    return it->second[index];
  }

  PullResult Marketplace::sensor_data_pull(const Address &vendor_addr,
                                           SensorType sensor_type,
                                           std::uint64_t index) const {
    const auto &p = payload(vendor_addr, sensor_type, index);
    return PullResult{p.schema, p.timestamp, p.spatial.str(), vendor(vendor_addr).prices.at(sensor_type)};
  }

  std::uint64_t Marketplace::sensor_data_length(const Address &vendor_addr, SensorType sensor_type) const {
    const auto &rec = vendor(vendor_addr);
    if (!rec.supports(sensor_type)) {
      throw Error(Errc::UnsupportedSensorType, std::to_string(sensor_type));
    }
    auto it = rec.payloads.find(sensor_type);
    return it == rec.payloads.end() ? 0 : it->second.size();
  }

  std::uint64_t Marketplace::vendor_length() const {
    return state_.vendor_order.size();
  }

  std::string Marketplace::get_vendor(const Address &vendor_addr) const {
    return vendor(vendor_addr).prefix;
  }

  std::uint64_t Marketplace::get_sensor_price(const Address &vendor_addr, SensorType sensor_type) const {
    const auto &rec = vendor(vendor_addr);
    auto it = rec.prices.find(sensor_type);
    if (it == rec.prices.end()) {
      throw Error(Errc::UnsupportedSensorType, std::to_string(sensor_type));
    }
    return it->second;
  }

  std::int64_t Marketplace::get_votes(const Address &vendor_addr) const {
    return vendor(vendor_addr).votes;
  }

  std::vector<Event> Marketplace::poll_events(std::uint64_t since_seq) const {
    return log_.poll(since_seq, ledger_.height());
  }

}  // namespace idmob
