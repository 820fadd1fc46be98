#include "idmob/sim/runner.hpp"

#include <sodium.h>

#include <algorithm>
#include <future>

#include "idmob/error.hpp"
#include "idmob/geohex.hpp"

namespace idmob::sim {

  namespace {
    constexpr std::uint64_t kDefaultPayloadBytes = 256;
    constexpr std::string_view kDefaultSchema = "raw";

    constexpr std::string_view kListing[] = {
        "vendor_register",
        "customer_register",
        "add_valid_device",
        "vendor_length",
        "get_vendor",
        "vote_for_vendor",
        "query_sensor",
        "sensor_data_push",
        "sensor_data_pull",
        "sensor_data_length",
        "get_sensor_price",
        "update_sensor_price",
        "request_for_data",
        "transfer_key_and_data",
    };

    std::string op_for(const std::string &verb) {
      static const std::map<std::string, std::string> ops = {
          {"register_vendor", "vendor_register"},
          {"register_customer", "customer_register"},
          {"add_device", "add_valid_device"},
          {"price", "update_sensor_price"},
          {"deliver", "transfer_key_and_data"},
          {"push", "sensor_data_push"},
          {"query", "query_sensor"},
          {"pull", "sensor_data_pull"},
          {"length", "sensor_data_length"},
          {"vendors", "vendor_length"},
          {"get_vendor", "get_vendor"},
          {"get_price", "get_sensor_price"},
          {"votes", "get_votes"},
          {"request", "request_for_data"},
          {"vote", "vote_for_vendor"},
      };
      auto it = ops.find(verb);
      return it == ops.end() ? verb : it->second;
    }
  }  // namespace

  std::span<const std::string_view> listing_functions() {
    return kListing;
  }

  World::World(const LedgerConfig &ledger_config, const BlobStoreConfig &store_config, std::uint64_t dispute_window)
      : ledger(ledger_config),
        store(store_config),
        channels(ledger, &log, dispute_window),
        market(ledger, store, log, &channels) {}

  Runner::Runner(Scenario scenario, RunOptions options)
      : scenario_(std::move(scenario)), options_(std::move(options)) {
    if (options_.seed) scenario_.seed = *options_.seed;
    if (options_.block_interval_s) {
      if (*options_.block_interval_s == 0) {
        throw Error(Errc::ValidationError, "block interval must be positive");
      }
      scenario_.block_interval_s = *options_.block_interval_s;
    }
    LedgerConfig lc;
    lc.seed = scenario_.seed;
    lc.block_interval_s = scenario_.block_interval_s;
    lc.genesis_offset_s = scenario_.genesis_offset_s;
    lc.costs = scenario_.costs;
    BlobStoreConfig bc;
    bc.base_latency_ms = scenario_.base_latency_ms;
    bc.root = options_.blob_root;
    world_ = std::make_unique<World>(lc, bc, scenario_.dispute_window);
    steps_ = expand_steps(scenario_);
    setup();
  }

  Runner::~Runner() = default;

  Bytes Runner::seeded(std::string_view label, std::string_view name, std::uint64_t n) const {
    Bytes pre;
    const std::string tag = "idmob/sim/" + std::string(label);
    pre.insert(pre.end(), tag.begin(), tag.end());
    append_be64(pre, scenario_.seed);
    append_be64(pre, name.size());
    pre.insert(pre.end(), name.begin(), name.end());
    append_be64(pre, n);
    const auto digest = sha256(pre);
    return Bytes(digest.begin(), digest.end());
  }

  void Runner::append(const Address &caller, std::uint64_t cost, EventBody body) {
    world_->log.append(world_->ledger.pending_block(), caller, cost, std::move(body));
  }

  void Runner::setup() {
    auto &ledger = world_->ledger;
    append(Address{},
           0,
           events::RunStarted{scenario_.seed,
                              scenario_.block_interval_s,
                              scenario_.push_interval_s,
                              scenario_.genesis_offset_s,
                              std::string(kHashFunctionName)});
    for (const auto &spec : scenario_.actors) {
      const auto addr = ledger.create_account();
      addresses_[spec.name] = addr;
      names_[addr] = spec.name;
      switch (spec.role) {
        case Role::Device:
          devices_.push_back(DeviceActor{spec.name,
                                         addr,
                                         spec.vendor,
                                         spec.scheme,
                                         crypto::MasterKey::from_seed(seeded("device-master", spec.name, 0)),
                                         {}});
          break;
        case Role::Vendor:
          vendors_.push_back(VendorActor{
              spec.name, addr, spec.key_service, crypto::generate_keypair(seeded("vendor-signer", spec.name, 0))});
          break;
        case Role::Customer:
          customers_.push_back(
              CustomerActor{spec.name, addr, crypto::generate_keypair(seeded("customer-keys", spec.name, 0)), {}});
          break;
      }
      append(addr, 0, events::ActorCreated{spec.name, std::string(role_name(spec.role)), addr});
      if (spec.native || spec.tokens) {
        const auto r = ledger.mint(addr, spec.native, spec.tokens);
        append(addr, r.cost_units, events::Minted{addr, spec.native, spec.tokens});
      }
    }
  }

  Address Runner::address_of(const std::string &name) const {
    auto it = addresses_.find(name);
    if (it == addresses_.end()) throw Error(Errc::ValidationError, "unknown actor " + name);
    return it->second;
  }

  const std::string &Runner::name_of(const Address &address) const {
    auto it = names_.find(address);
    if (it == names_.end()) throw Error(Errc::UnknownAddress, address.hex());
    return it->second;
  }

  const DeviceActor *Runner::device_by_address(const Address &address) const {
    for (const auto &d : devices_) {
      if (d.address == address) return &d;
    }
    return nullptr;
  }

  ChannelParty Runner::party(const std::string &name) const {
    for (const auto &v : vendors_) {
      if (v.name == name) return {v.address, v.channel_signer.public_key};
    }
    for (const auto &c : customers_) {
      if (c.name == name) return {c.address, c.keys.public_key};
    }
    throw Error(Errc::NotAParty, name + " cannot hold a channel");
  }

  const crypto::PrivateKey &Runner::signing_key(const std::string &name) const {
    for (const auto &v : vendors_) {
      if (v.name == name) return v.channel_signer.private_key;
    }
    for (const auto &c : customers_) {
      if (c.name == name) return c.keys.private_key;
    }
    throw Error(Errc::NotAParty, name + " cannot sign channel states");
  }

  void Runner::record_failure(const std::string &actor,
                              const std::string &op,
                              const Error &error,
                              std::size_t receipts_before) {
    const auto &receipts = world_->ledger.receipts();
    std::uint64_t cost = 0;
    for (auto i = receipts_before; i < receipts.size(); ++i) cost += receipts[i].cost_units;
    append(address_of(actor), cost, events::StepFailed{actor, op, std::string(errc_name(error.code()))});
    failures_.push_back(StepFailure{actor, op, error.code(), error.what()});
  }

  Runner::Prepared Runner::prepare(const Step &step) const {
    auto dev = std::find_if(devices_.begin(), devices_.end(), [&](const DeviceActor &d) {
      return d.name == step.actor;
    });
    const auto key_index = step.number("key_index");
    Prepared p;
    if (step.has("data")) {
      const auto &data = step.arg("data");
      p.plaintext.assign(data.begin(), data.end());
    } else {
      p.plaintext.resize(step.number_or("bytes", kDefaultPayloadBytes));
      const auto seed = seeded("payload", dev->name, key_index);
      randombytes_buf_deterministic(p.plaintext.data(), p.plaintext.size(), seed.data());
    }
    p.ciphertext = crypto::encrypt(dev->derive(key_index, dev->scheme), p.plaintext);
    if (step.has("spatial")) {
      p.spatial = step.arg("spatial");
    } else {
      p.spatial = geohex::encode({step.real("lat"), step.real("lon")}, static_cast<int>(step.number("level"))).str();
    }
    return p;
  }

  void Runner::prepare_block(std::size_t from) {
    const auto block = steps_[from].block;
    std::vector<std::pair<std::size_t, std::future<Prepared>>> jobs;
    for (auto i = from; i < steps_.size() && steps_[i].block == block; ++i) {
      if (steps_[i].verb != "push" || prepared_.contains(i)) continue;
      jobs.emplace_back(i, std::async(std::launch::async, [this, i] { return prepare(steps_[i]); }));
    }
    for (auto &[i, job] : jobs) {
      try {
        prepared_.emplace(i, job.get());
      } catch (const Error &) {
        // Left unprepared; execute() reproduces the failure in order.
      }
    }
  }

  void Runner::step() {
    if (finished_) {
      throw Error(Errc::RunFinished, "height " + std::to_string(world_->ledger.height()));
    }
    if (cursor_ < steps_.size() && steps_[cursor_].block <= world_->ledger.pending_block()) {
      const auto index = cursor_++;
      if (options_.concurrent && steps_[index].verb == "push" && !prepared_.contains(index)) {
        prepare_block(index);
      }
      execute(steps_[index], index);
      return;
    }
    tick();
  }

  Report Runner::run() {
    while (!finished_) step();
    return report();
  }

  void Runner::tick() {
    world_->ledger.tick();
    const auto actions = react();
    if (actions == 0 && cursor_ == steps_.size()) {
      append(Address{}, 0, events::RunFinished{world_->ledger.pending_block()});
      world_->ledger.tick();
      finished_ = true;
    }
  }

  void Runner::execute(const Step &step, std::size_t index) {
    auto &w = *world_;
    const auto before = w.ledger.receipts().size();
    const auto self = address_of(step.actor);
    const auto op = step.verb == "request" && step.has("channel") ? std::string("request_for_data_via_channel")
                                                                     : op_for(step.verb);
    try {
      const auto &verb = step.verb;
      if (verb == "register_vendor") {
        const auto *spec = scenario_.actor(step.actor);
        std::vector<SensorType> types;
        std::vector<std::uint64_t> prices;
        for (const auto &s : spec->sensors) {
          types.push_back(s.type);
          prices.push_back(s.price);
        }
        call(op);
        w.market.vendor_register(self, spec->prefix, types, prices);
      } else if (verb == "register_customer") {
        const auto &c = *std::find_if(customers_.begin(), customers_.end(), [&](const CustomerActor &x) {
          return x.name == step.actor;
        });
        call(op);
        w.market.customer_register(self, c.keys.public_key.hex());
      } else if (verb == "add_device") {
        call(op);
        w.market.add_valid_device(self, address_of(step.arg("device")));
      } else if (verb == "price") {
        call(op);
        w.market.update_sensor_price(self, step.number("type"), step.number("price"));
      } else if (verb == "deliver") {
        const auto &v = *std::find_if(vendors_.begin(), vendors_.end(), [&](const VendorActor &x) {
          return x.name == step.actor;
        });
        deliver(v, address_of(step.arg("customer")), step.number("type"), step.number("index"), (1ULL << 63) | index);
      } else if (verb == "push") {
        auto node = prepared_.extract(index);
        const auto prepared = node.empty() ? prepare(step) : std::move(node.mapped());
        auto &dev = *std::find_if(devices_.begin(), devices_.end(), [&](const DeviceActor &d) {
          return d.name == step.actor;
        });
        const auto key_index = step.number("key_index");
        dev.retained[key_index] = prepared.plaintext;
        const auto handle = w.store.put(prepared.ciphertext, w.ledger.height());
        const auto vendor = address_of(step.has("vendor") ? step.arg("vendor") : dev.vendor);
        call(op);
        w.market.sensor_data_push(self,
                                  vendor,
                                  step.number("type"),
                                  step.has("schema") ? step.arg("schema") : std::string(kDefaultSchema),
                                  step.number("ts"),
                                  prepared.spatial,
                                  handle,
                                  key_index,
                                  dev.scheme);
      } else if (verb == "query") {
        call(op);
        w.market.query_sensor(step.number("type"), step.number("index"));
      } else if (verb == "pull") {
        call(op);
        w.market.sensor_data_pull(address_of(step.arg("vendor")), step.number("type"), step.number("index"));
      } else if (verb == "length") {
        call(op);
        w.market.sensor_data_length(address_of(step.arg("vendor")), step.number("type"));
      } else if (verb == "vendors") {
        call(op);
        w.market.vendor_length();
      } else if (verb == "get_vendor") {
        call(op);
        w.market.get_vendor(address_of(step.arg("vendor")));
      } else if (verb == "get_price") {
        call(op);
        w.market.get_sensor_price(address_of(step.arg("vendor")), step.number("type"));
      } else if (verb == "votes") {
        call(op);
        w.market.get_votes(address_of(step.arg("vendor")));
      } else if (verb == "request") {
        const auto vendor = address_of(step.arg("vendor"));
        if (step.has("channel")) {
          const auto &view = channel_views_.at(step.arg("channel"));
          call(op);
          w.market.request_for_data_via_channel(
              self, vendor, step.number("type"), step.number("index"), view.states.back());
        } else {
          call(op);
          w.market.request_for_data(self, vendor, step.number("type"), step.number("index"));
        }
      } else if (verb == "vote") {
        call(op);
        w.market.vote_for_vendor(self,
                                 address_of(step.arg("vendor")),
                                 step.arg("dir") == "up" ? Vote::Up : Vote::Down);
      } else if (verb == "channel_open") {
        const auto &ch = w.channels.open(
            party(step.actor), party(step.arg("with")), step.number("deposit"), step.number_or("their_deposit", 0));
        channel_views_[step.arg("as")] = ChannelView{ch.id, {w.channels.initial_state(ch.id)}};
      } else if (verb == "channel_pay") {
        auto &view = channel_views_.at(step.arg("channel"));
        const auto &ch = w.channels.channel(view.id);
        const auto side = ch.side_of(self);
        if (!side) throw Error(Errc::NotAParty, step.actor);
        const auto &payee = name_of(*side == Side::A ? ch.b.address : ch.a.address);
        auto next = w.channels.pay(view.id, view.states.back(), *side, step.number("amount"), signing_key(step.actor));
        view.states.push_back(w.channels.countersign(view.id, next, signing_key(payee)));
      } else if (verb == "channel_close" || verb == "channel_challenge") {
        const auto &view = channel_views_.at(step.arg("channel"));
        const auto nonce = step.number_or("nonce", view.states.size() - 1);
        if (nonce >= view.states.size()) {
          throw Error(Errc::StaleNonce, "no state with nonce " + std::to_string(nonce));
        }
        if (verb == "channel_close") {
          w.channels.close(view.id, view.states[nonce], self);
        } else {
          w.channels.challenge(view.id, view.states[nonce], self);
        }
      } else if (verb == "channel_settle") {
        w.channels.settle(channel_views_.at(step.arg("channel")).id, self);
      } else if (verb == "channel_coop_close") {
        const auto &view = channel_views_.at(step.arg("channel"));
        const auto &ch = w.channels.channel(view.id);
        const auto &last = view.states.back();
        w.channels.cooperative_close(view.id,
                                     last,
                                     sign_close(last, signing_key(name_of(ch.a.address))),
                                     sign_close(last, signing_key(name_of(ch.b.address))),
                                     self);
      } else if (verb == "transfer") {
        const auto kind = step.has("kind") ? parse_asset_kind(step.arg("kind")) : AssetKind::Token;
        const auto to = address_of(step.arg("to"));
        const auto r = w.ledger.transfer(self, to, step.number("amount"), kind);
        append(self, r.cost_units, events::Transferred{self, to, step.number("amount"), kind});
      } else if (verb == "mint") {
        const auto native = step.number_or("native", 0);
        const auto tokens = step.number_or("tokens", 0);
        const auto r = w.ledger.mint(self, native, tokens);
        append(self, r.cost_units, events::Minted{self, native, tokens});
      } else {
        throw Error(Errc::ValidationError, "unknown verb " + verb);
      }
    } catch (const Error &e) {
      if (e.code() == Errc::ValidationError) throw;
      record_failure(step.actor, op, e, before);
    }
  }

  void Runner::deliver(const VendorActor &vendor,
                       const Address &customer,
                       SensorType type,
                       std::uint64_t index,
                       std::uint64_t entropy) {
    auto &w = *world_;
    const auto before = w.ledger.receipts().size();
    try {
      crypto::WrappedKey wrapped;
      const Payload *pay = nullptr;
      try {
        pay = &w.market.payload(vendor.address, type, index);
      } catch (const Error &) {
        // No such payload; the contract call below reports it.
      }
      if (pay) {
        const auto *dev = device_by_address(pay->device_id);
        if (!dev) throw Error(Errc::NotFound, "no device holds the key for this payload");
        const auto sym = dev->derive(pay->key_index, pay->scheme);
        const auto pub = crypto::PublicKey::parse(w.market.customer(customer).pub_key);
        const auto seed = seeded("wrap", vendor.name, entropy);
        wrapped = crypto::wrap_key(pub, sym.key, customer, std::span<const std::uint8_t, 32>(seed.data(), 32));
      }
      call("transfer_key_and_data");
      w.market.transfer_key_and_data(vendor.address, wrapped, customer, type, index);
    } catch (const Error &e) {
      record_failure(vendor.name, "transfer_key_and_data", e, before);
    }
  }

  std::size_t Runner::react() {
    auto &w = *world_;
    const auto visible = w.market.poll_events(seen_seq_);
    if (visible.empty()) return 0;
    seen_seq_ = visible.back().seq;

    struct Outcome {
      const CustomerActor *customer = nullptr;
      Bytes plaintext;
      bool ok = false;
    };
    auto verify = [this](const events::KeyTransferred &e) {
      Outcome out;
      for (const auto &c : customers_) {
        if (c.address == e.customer) out.customer = &c;
      }
      if (!out.customer) return out;
      try {
        const auto &pay = world_->market.payload(e.vendor, e.sensor_type, e.index);
        const auto key = crypto::unwrap_key(out.customer->keys.private_key, crypto::WrappedKey{e.wrapped, e.customer});
        const auto blob = world_->store.get(e.handle);
        out.plaintext = crypto::decrypt(crypto::SymKey{key, pay.key_index, pay.scheme}, blob.content);
        const auto *dev = device_by_address(pay.device_id);
        out.ok = dev && dev->retained.contains(pay.key_index) && dev->retained.at(pay.key_index) == out.plaintext;
      } catch (const Error &) {
        out.ok = false;
      }
      return out;
    };

    std::map<std::size_t, Outcome> outcomes;
    if (options_.concurrent) {
      std::vector<std::pair<std::size_t, std::future<Outcome>>> jobs;
      for (std::size_t i = 0; i < visible.size(); ++i) {
        if (const auto *e = visible[i].as<events::KeyTransferred>()) {
          jobs.emplace_back(i, std::async(std::launch::async, verify, *e));
        }
      }
      for (auto &[i, job] : jobs) outcomes.emplace(i, job.get());
    }

    std::size_t actions = 0;
    for (std::size_t i = 0; i < visible.size(); ++i) {
      const auto &ev = visible[i];
      if (const auto *e = ev.as<events::DataRequested>()) {
        for (const auto &v : vendors_) {
          if (v.address == e->vendor && v.key_service) {
            deliver(v, e->customer, e->sensor_type, e->index, ev.seq);
            ++actions;
          }
        }
      } else if (const auto *e = ev.as<events::KeyTransferred>()) {
        auto out = options_.concurrent ? std::move(outcomes.at(i)) : verify(*e);
        if (!out.customer) continue;
        auto &cust = *std::find_if(customers_.begin(), customers_.end(), [&](const CustomerActor &c) {
          return c.address == e->customer;
        });
        if (out.ok) {
          ++verified_;
          cust.received[{e->vendor, e->sensor_type, e->index}] = std::move(out.plaintext);
        } else {
          ++verify_failed_;
        }
        append(cust.address, 0, events::PayloadVerified{e->customer, e->vendor, e->sensor_type, e->index, out.ok});
        ++actions;
      }
    }
    return actions;
  }

  std::map<std::string, std::string> Runner::serialized_actors() const {
    std::map<std::string, std::string> out;
    for (const auto &d : devices_) {
      const auto secret = d.master.secret();
      out[d.name] = "role=device address=" + d.address.hex() + " master=" + to_hex({secret.data(), secret.size()});
    }
    for (const auto &v : vendors_) {
      out[v.name] = "role=vendor address=" + v.address.hex() + " channel_public=" + v.channel_signer.public_key.hex()
                    + " channel_private=" + to_hex(v.channel_signer.private_key.bytes);
    }
    for (const auto &c : customers_) {
      out[c.name] = "role=customer address=" + c.address.hex() + " public=" + c.keys.public_key.hex()
                    + " private=" + to_hex(c.keys.private_key.bytes);
    }
    return out;
  }

  Report Runner::report() const {
    const auto &w = *world_;
    const auto &state = w.market.state();
    Report r;
    r.set("hash_function", std::string(kHashFunctionName));
    r.set("seed", scenario_.seed);
    r.set("block_interval_s", scenario_.block_interval_s);
    r.set("push_interval_s", scenario_.push_interval_s);
    r.set("genesis_offset_s", scenario_.genesis_offset_s);
    r.set("final_height", w.ledger.height());
    r.set("final_timestamp_s", w.ledger.clock().timestamp_s());
    for (const auto &[name, addr] : addresses_) {
      const auto bal = w.ledger.balance_of(addr);
      r.set("balance." + name + ".native", bal.native);
      r.set("balance." + name + ".tokens", bal.tokens);
      r.set("cost." + name, w.ledger.spent_by(addr));
    }
    std::uint64_t requested = 0;
    for (const auto &[addr, rec] : state.customers) requested += rec.purchases.size();
    std::uint64_t delivered = 0;
    for (const auto &[key, rec] : state.deliveries) delivered += rec.delivered.size();

    std::map<Address, std::vector<std::uint64_t>> push_times;
    for (const auto &[addr, rec] : state.vendors) {
      const auto &name = name_of(addr);
      r.set_signed("votes." + name, rec.votes);
      for (auto t : rec.types) {
        auto it = rec.payloads.find(t);
        r.set("catalog." + name + ".type" + std::to_string(t),
              static_cast<std::uint64_t>(it == rec.payloads.end() ? 0 : it->second.size()));
      }
      for (const auto &[t, list] : rec.payloads) {
        for (const auto &p : list) push_times[p.device_id].push_back(p.timestamp);
      }
    }
    std::map<std::string, std::uint64_t> kinds;
    for (const auto &ev : w.log.all()) ++kinds[std::string(ev.kind())];
    for (const auto &[kind, n] : kinds) r.set("events." + kind, n);
    r.set("events.total", static_cast<std::uint64_t>(w.log.size()));
    r.set("escrow.tokens", w.ledger.escrow(AssetKind::Token));
    r.set("purchases.requested", requested);
    r.set("purchases.delivered", delivered);
    r.set("purchases.verified", verified_);
    r.set("purchases.verify_failed", verify_failed_);
    r.set("failures.total", static_cast<std::uint64_t>(failures_.size()));
    std::map<std::string, std::uint64_t> by_code;
    for (const auto &f : failures_) ++by_code[std::string(errc_name(f.code))];
    for (const auto &[code, n] : by_code) r.set("failures." + code, n);

    std::optional<std::uint64_t> lo, hi;
    for (auto &[dev, times] : push_times) {
      std::sort(times.begin(), times.end());
      for (std::size_t i = 1; i < times.size(); ++i) {
        const auto gap = times[i] - times[i - 1];
        lo = lo ? std::min(*lo, gap) : gap;
        hi = hi ? std::max(*hi, gap) : gap;
      }
    }
    if (lo) {
      r.set("push_spacing_min_s", *lo);
      r.set("push_spacing_max_s", *hi);
    }
    return r;
  }

}  // namespace idmob::sim
