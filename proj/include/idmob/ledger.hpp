#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "idmob/error.hpp"
#include "idmob/types.hpp"

namespace idmob {

  enum class AssetKind : std::uint8_t { Native, Token };

  std::string_view asset_kind_name(AssetKind kind);
  AssetKind parse_asset_kind(std::string_view name);

  struct Balance {
    std::uint64_t native = 0;
    std::uint64_t tokens = 0;

    std::uint64_t of(AssetKind kind) const {
      return kind == AssetKind::Native ? native : tokens;
    }
    bool operator==(const Balance &) const = default;
  };

  struct Account {
    Address address;
    Balance balance;
    bool operator==(const Account &) const = default;
  };

  /// Abstract stand-in for gas. Views are free; every mutating call pays
  /// base + per_write * slots_written + per_event * events_emitted.
  struct CostSchedule {
    std::uint64_t per_write_units = 20;
    std::uint64_t per_event_units = 8;
    std::uint64_t base_tx_units = 21;

    std::uint64_t tx_cost(std::uint64_t writes, std::uint64_t events) const {
      return base_tx_units + per_write_units * writes + per_event_units * events;
    }
    bool operator==(const CostSchedule &) const = default;
  };

  inline constexpr std::uint64_t kDefaultBlockIntervalS = 14;

  struct BlockClock {
    std::uint64_t height = 0;
    std::uint64_t block_interval_s = kDefaultBlockIntervalS;
    std::uint64_t genesis_offset_s = 0;

    std::uint64_t timestamp_s() const {
      return timestamp_at(height);
    }
    std::uint64_t timestamp_at(std::uint64_t h) const {
      return h * block_interval_s + genesis_offset_s;
    }
    bool operator==(const BlockClock &) const = default;
  };

  struct Receipt {
    std::uint64_t tx_id = 0;
    /// Block the transaction is included in (height of the next tick).
    std::uint64_t block = 0;
    std::uint64_t cost_units = 0;
    Address payer;
    std::optional<Errc> error;

    bool ok() const {
      return !error.has_value();
    }
    bool operator==(const Receipt &) const = default;
  };

  struct LedgerConfig {
    std::uint64_t seed = 0;
    std::uint64_t block_interval_s = kDefaultBlockIntervalS;
    std::uint64_t genesis_offset_s = 0;
    CostSchedule costs;
  };

  /// Block-clocked account ledger with a native currency and a data token.
  ///
  /// All mutations go through one thread; the ledger is a plain value, so a
  /// copy is a consistent snapshot that readers on other threads may use.
  class Ledger {
   public:
    explicit Ledger(LedgerConfig config = {});

    Address create_account();
    bool exists(const Address &addr) const;

    Receipt mint(const Address &addr, std::uint64_t native, std::uint64_t tokens);
    Receipt transfer(const Address &from,
                     const Address &to,
                     std::uint64_t amount,
                     AssetKind kind);
    Balance balance_of(const Address &addr) const;

    /// Balance move without a receipt of its own, for contract calls that
    /// charge for the whole transaction themselves.
    void move_funds(const Address &from, const Address &to, std::uint64_t amount, AssetKind kind);

    /// Closes the pending block. Everything submitted since the previous tick
    /// carries block == new height.
    BlockClock tick();
    const BlockClock &clock() const {
      return clock_;
    }
    std::uint64_t height() const {
      return clock_.height;
    }
    std::uint64_t pending_block() const {
      return clock_.height + 1;
    }

    // Escrow is part of total supply. Used by the channel registry; no receipt
    // of its own, the caller charges for the surrounding transaction.
    void lock_escrow(const Address &from, std::uint64_t amount, AssetKind kind);
    void release_escrow(const Address &to, std::uint64_t amount, AssetKind kind);
    std::uint64_t escrow(AssetKind kind) const;

    /// Sum of all balances plus escrow.
    std::uint64_t total_supply(AssetKind kind) const;

    /// Records a contract call's receipt. Failed calls pass their error code.
    Receipt charge(const Address &payer,
                   std::uint64_t cost_units,
                   std::optional<Errc> error = std::nullopt);

    const std::vector<Receipt> &receipts() const {
      return receipts_;
    }
    std::uint64_t spent_by(const Address &payer) const;
    const CostSchedule &costs() const {
      return costs_;
    }
    /// Accounts in creation order.
    std::vector<Account> accounts() const;

    /// Balances, escrow and clock; excludes the receipt journal.
    struct State {
      std::vector<Account> accounts;
      Balance escrow;
      BlockClock clock;
      bool operator==(const State &) const = default;
    };
    State state() const;

   private:
    Account &account(const Address &addr);
    const Account &account(const Address &addr) const;
    [[noreturn]] void fail(const Address &payer, Errc code, const std::string &detail);

    std::uint64_t seed_;
    std::uint64_t next_account_ = 0;
    BlockClock clock_;
    CostSchedule costs_;
    std::unordered_map<Address, std::size_t> index_;
    std::vector<Account> accounts_;
    Balance escrow_;
    std::vector<Receipt> receipts_;
  };

}  // namespace idmob
