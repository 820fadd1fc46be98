#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "idmob/blobstore.hpp"
#include "idmob/channels.hpp"
#include "idmob/crypto.hpp"
#include "idmob/events.hpp"
#include "idmob/ledger.hpp"
#include "idmob/marketplace.hpp"
#include "idmob/sim/report.hpp"
#include "idmob/sim/scenario.hpp"

namespace idmob::sim {

  struct World {
    World(const LedgerConfig &ledger_config, const BlobStoreConfig &store_config, std::uint64_t dispute_window);

    Ledger ledger;
    BlobStore store;
    EventLog log;
    ChannelRegistry channels;
    Marketplace market;
  };

  /// Device: holds the master key, keeps its own plaintexts for later audit.
  struct DeviceActor {
    std::string name;
    Address address;
    std::string vendor;
    crypto::EncryptionScheme scheme = crypto::EncryptionScheme::StreamAead;
    crypto::MasterKey master;
    std::map<std::uint64_t, Bytes> retained;

    crypto::SymKey derive(std::uint64_t index, crypto::EncryptionScheme s) const {
      return crypto::derive_key(master, index, s);
    }
  };

  /// Vendor: no decryption keys of its own. It signs channel states with a
  /// dedicated Ed25519 key and asks its devices for payload keys.
  struct VendorActor {
    std::string name;
    Address address;
    bool key_service = true;
    crypto::KeyPair channel_signer;
  };

  /// Customer: keypair for key unwrap and channel signing; stores what it
  /// decrypted.
  struct CustomerActor {
    std::string name;
    Address address;
    crypto::KeyPair keys;
    std::map<std::tuple<Address, SensorType, std::uint64_t>, Bytes> received;
  };

  struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> block_interval_s;
    /// Prepare pushes and verify deliveries on worker threads; submission
    /// order stays the same as in serial mode.
    bool concurrent = false;
    std::optional<std::filesystem::path> blob_root;
  };

  struct StepFailure {
    std::string actor;
    std::string op;
    Errc code;
    std::string message;
  };

  class Runner {
   public:
    explicit Runner(Scenario scenario, RunOptions options = {});
    ~Runner();
    Runner(const Runner &) = delete;
    Runner &operator=(const Runner &) = delete;

    bool finished() const {
      return finished_;
    }
    /// Executes the next scheduled step, or one tick plus the actor
    /// reactions it triggers. Throws RunFinished once the run is over.
    void step();
    Report run();
    Report report() const;

    const Scenario &scenario() const {
      return scenario_;
    }
    const World &world() const {
      return *world_;
    }
    const EventLog &log() const {
      return world_->log;
    }
    /// Marketplace functions called so far, in call order.
    const std::vector<std::string> &call_trace() const {
      return trace_;
    }
    const std::vector<StepFailure> &failures() const {
      return failures_;
    }
    std::size_t steps_remaining() const {
      return steps_.size() - cursor_;
    }

    const std::vector<DeviceActor> &devices() const {
      return devices_;
    }
    const std::vector<VendorActor> &vendors() const {
      return vendors_;
    }
    const std::vector<CustomerActor> &customers() const {
      return customers_;
    }
    /// Every key byte each actor holds, hex encoded, one entry per actor.
    std::map<std::string, std::string> serialized_actors() const;

   private:
    struct Prepared {
      Bytes plaintext;
      Bytes ciphertext;
      std::string spatial;
    };
    struct ChannelView {
      std::uint64_t id = 0;
      std::vector<ChannelState> states;
    };

    void setup();
    void execute(const Step &step, std::size_t index);
    void tick();
    std::size_t react();
    void deliver(const VendorActor &vendor,
                 const Address &customer,
                 SensorType type,
                 std::uint64_t index,
                 std::uint64_t entropy);
    void record_failure(const std::string &actor, const std::string &op, const Error &error, std::size_t receipts_before);
    void call(const std::string &fn) {
      trace_.push_back(fn);
    }
    Prepared prepare(const Step &step) const;
    void prepare_block(std::size_t from);
    Address address_of(const std::string &name) const;
    const std::string &name_of(const Address &address) const;
    ChannelParty party(const std::string &name) const;
    const crypto::PrivateKey &signing_key(const std::string &name) const;
    const DeviceActor *device_by_address(const Address &address) const;
    Bytes seeded(std::string_view label, std::string_view name, std::uint64_t n) const;
    void append(const Address &caller, std::uint64_t cost, EventBody body);

    Scenario scenario_;
    RunOptions options_;
    std::unique_ptr<World> world_;
    std::vector<Step> steps_;
    std::size_t cursor_ = 0;
    bool finished_ = false;
    std::uint64_t seen_seq_ = 0;

    std::vector<DeviceActor> devices_;
    std::vector<VendorActor> vendors_;
    std::vector<CustomerActor> customers_;
    std::map<std::string, Address> addresses_;
    std::map<Address, std::string> names_;
    std::map<std::string, ChannelView> channel_views_;
    std::map<std::size_t, Prepared> prepared_;

    std::vector<std::string> trace_;
    std::vector<StepFailure> failures_;
    std::uint64_t verified_ = 0;
    std::uint64_t verify_failed_ = 0;
  };

  /// The fourteen core marketplace function names.
  std::span<const std::string_view> listing_functions();

}  // namespace idmob::sim
