#include "idmob/ledger.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace idmob {

  namespace {
    void put_be64(std::uint8_t *out, std::uint64_t v) {
      for (int i = 7; i >= 0; --i) {
        out[i] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
      }
    }

    std::uint64_t &slot(Balance &b, AssetKind kind) {
      return kind == AssetKind::Native ? b.native : b.tokens;
    }

    bool add_overflows(std::uint64_t a, std::uint64_t b) {
      return a > std::numeric_limits<std::uint64_t>::max() - b;
    }
  }  // namespace

  std::string_view asset_kind_name(AssetKind kind) {
    return kind == AssetKind::Native ? "native" : "token";
  }

  AssetKind parse_asset_kind(std::string_view name) {
    if (name == "native") return AssetKind::Native;
    if (name == "token") return AssetKind::Token;
    throw Error(Errc::ParseError, "asset kind '" + std::string(name) + "'");
  }

  Ledger::Ledger(LedgerConfig config)
      : seed_(config.seed),
        clock_{0, config.block_interval_s, config.genesis_offset_s},
        costs_(config.costs) {
    if (clock_.block_interval_s == 0) {
      throw Error(Errc::InvalidAmount, "block interval must be positive");
    }
  }

  Address Ledger::create_account() {
    // "idmob/address" || seed || counter, hashed; first 20 bytes.
    constexpr std::string_view tag = "idmob/address";
    std::array<std::uint8_t, tag.size() + 16> preimage{};
    std::copy(tag.begin(), tag.end(), preimage.begin());
    put_be64(preimage.data() + tag.size(), seed_);
    put_be64(preimage.data() + tag.size() + 8, next_account_++);
    auto digest = sha256(preimage);

    Address addr;
    std::copy_n(digest.begin(), addr.bytes.size(), addr.bytes.begin());
    index_.emplace(addr, accounts_.size());
    accounts_.push_back(Account{addr, {}});
    return addr;
  }

  bool Ledger::exists(const Address &addr) const {
    return index_.contains(addr);
  }

  Account &Ledger::account(const Address &addr) {
    auto it = index_.find(addr);
    if (it == index_.end()) {
      throw Error(Errc::UnknownAddress, addr.hex());
    }
    return accounts_[it->second];
  }

  const Account &Ledger::account(const Address &addr) const {
    auto it = index_.find(addr);
    if (it == index_.end()) {
      throw Error(Errc::UnknownAddress, addr.hex());
    }
    return accounts_[it->second];
  }

  void Ledger::fail(const Address &payer, Errc code, const std::string &detail) {
    charge(payer, costs_.base_tx_units, code);
    throw Error(code, detail);
  }

  Receipt Ledger::mint(const Address &addr, std::uint64_t native, std::uint64_t tokens) {
    if (!exists(addr)) {
      fail(addr, Errc::UnknownAddress, addr.hex());
    }
    auto &acct = account(addr);
    if (add_overflows(acct.balance.native, native) || add_overflows(acct.balance.tokens, tokens)
        || add_overflows(total_supply(AssetKind::Native), native)
        || add_overflows(total_supply(AssetKind::Token), tokens)) {
      fail(addr, Errc::InvalidAmount, "mint overflows supply");
    }
    acct.balance.native += native;
    acct.balance.tokens += tokens;
    return charge(addr, costs_.tx_cost(2, 0));
  }

  Receipt Ledger::transfer(const Address &from,
                           const Address &to,
                           std::uint64_t amount,
                           AssetKind kind) {
    if (!exists(from)) {
      fail(from, Errc::UnknownAddress, from.hex());
    }
    if (!exists(to)) {
      fail(from, Errc::UnknownAddress, to.hex());
    }
    if (slot(account(from).balance, kind) < amount) {
      fail(from, Errc::InsufficientFunds, std::string(asset_kind_name(kind)));
    }
    move_funds(from, to, amount, kind);
    return charge(from, costs_.tx_cost(2, 0));
  }

  void Ledger::move_funds(const Address &from, const Address &to, std::uint64_t amount, AssetKind kind) {
    auto &src = slot(account(from).balance, kind);
    auto &dst = slot(account(to).balance, kind);
    if (src < amount) {
      throw Error(Errc::InsufficientFunds, std::string(asset_kind_name(kind)));
    }
    src -= amount;
    dst += amount;
  }

  Balance Ledger::balance_of(const Address &addr) const {
    return account(addr).balance;
  }

  BlockClock Ledger::tick() {
    ++clock_.height;
    return clock_;
  }

  void Ledger::lock_escrow(const Address &from, std::uint64_t amount, AssetKind kind) {
    auto &src = slot(account(from).balance, kind);
    if (src < amount) {
      throw Error(Errc::InsufficientFunds, "escrow deposit");
    }
    src -= amount;
    slot(escrow_, kind) += amount;
  }

  void Ledger::release_escrow(const Address &to, std::uint64_t amount, AssetKind kind) {
    auto &dst = slot(account(to).balance, kind);
    auto &pool = slot(escrow_, kind);
    if (pool < amount) {
      throw Error(Errc::InsufficientFunds, "escrow pool");
    }
    pool -= amount;
    dst += amount;
  }

  std::uint64_t Ledger::escrow(AssetKind kind) const {
    return escrow_.of(kind);
  }

  std::uint64_t Ledger::total_supply(AssetKind kind) const {
    return std::accumulate(accounts_.begin(),
                           accounts_.end(),
                           escrow_.of(kind),
                           [kind](std::uint64_t acc, const Account &a) {
                             return acc + a.balance.of(kind);
                           });
  }

  Receipt Ledger::charge(const Address &payer,
                         std::uint64_t cost_units,
                         std::optional<Errc> error) {
    Receipt r{receipts_.size(), pending_block(), cost_units, payer, error};
    receipts_.push_back(r);
    return r;
  }

  std::uint64_t Ledger::spent_by(const Address &payer) const {
    std::uint64_t total = 0;
    for (const auto &r : receipts_) {
      if (r.payer == payer) total += r.cost_units;
    }
    return total;
  }

  std::vector<Account> Ledger::accounts() const {
    return accounts_;
  }

  Ledger::State Ledger::state() const {
    return State{accounts_, escrow_, clock_};
  }

}  // namespace idmob
