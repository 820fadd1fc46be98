#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "idmob/crypto.hpp"
#include "idmob/ledger.hpp"

namespace idmob::sim {

  enum class Role { Vendor, Device, Customer };

  std::string_view role_name(Role role);

  struct SensorOffer {
    std::uint64_t type = 0;
    std::uint64_t price = 0;
  };

  struct ActorSpec {
    std::string name;
    Role role = Role::Customer;
    int line = 0;

    // vendor
    std::string prefix;
    std::vector<SensorOffer> sensors;
    bool key_service = true;

    // device
    std::string vendor;
    crypto::EncryptionScheme scheme = crypto::EncryptionScheme::StreamAead;

    // customer
    std::uint64_t native = 0;
    std::uint64_t tokens = 0;
  };

  struct Step {
    std::uint64_t block = 0;
    std::string actor;
    std::string verb;
    std::map<std::string, std::string> args;
    int line = 0;

    bool has(const std::string &key) const {
      return args.contains(key);
    }
    const std::string &arg(const std::string &key) const;
    std::uint64_t number(const std::string &key) const;
    std::uint64_t number_or(const std::string &key, std::uint64_t fallback) const;
    double real(const std::string &key) const;
  };

  struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    std::uint64_t block_interval_s = kDefaultBlockIntervalS;
    std::uint64_t push_interval_s = 1800;
    std::uint64_t genesis_offset_s = 0;
    std::uint64_t dispute_window = 10;
    double base_latency_ms = 200.0;
    CostSchedule costs;
    std::vector<ActorSpec> actors;
    /// Stably sorted by block.
    std::vector<Step> steps;

    const ActorSpec *actor(std::string_view name) const;
    std::size_t count(Role role) const;
  };

  /// Line-oriented text format; see README for the grammar. Throws
  /// ParseError for syntax problems and ValidationError for semantic ones,
  /// both naming the line.
  Scenario parse_scenario(std::string_view text, std::string name = {});
  Scenario load_scenario(const std::filesystem::path &path);

  void validate(const Scenario &scenario);

  /// Expands `push count=N` series into single pushes spaced by the push
  /// interval and assigns each push a timestamp and key index. The result is
  /// what the runner executes.
  std::vector<Step> expand_steps(const Scenario &scenario);

}  // namespace idmob::sim
