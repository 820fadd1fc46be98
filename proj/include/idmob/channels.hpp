#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "idmob/crypto.hpp"
#include "idmob/events.hpp"
#include "idmob/ledger.hpp"

namespace idmob {

  enum class ChannelStatus { Open, Closing, Settled };
  enum class Side { A, B };

  std::string_view channel_status_name(ChannelStatus status);

  struct ChannelParty {
    Address address;
    crypto::PublicKey key;
  };

  /// Off-ledger balance proof. Valid when both parties signed it; the nonce-0
  /// state mirrors the on-ledger deposits and needs no signatures.
  struct ChannelState {
    std::uint64_t channel_id = 0;
    std::uint64_t nonce = 0;
    std::uint64_t balance_a = 0;
    std::uint64_t balance_b = 0;
    std::optional<crypto::Signature> sig_a;
    std::optional<crypto::Signature> sig_b;

    std::uint64_t balance(Side side) const {
      return side == Side::A ? balance_a : balance_b;
    }
    /// Bytes covered by both signatures.
    Bytes signing_message() const;
    /// Bytes both parties sign to agree on an immediate close at this state.
    Bytes close_message() const;
  };

  struct Channel {
    std::uint64_t id = 0;
    ChannelParty a;
    ChannelParty b;
    std::uint64_t escrow_a = 0;
    std::uint64_t escrow_b = 0;
    ChannelStatus status = ChannelStatus::Open;
    /// Meaningful while Closing: last block at which challenges are refused.
    std::uint64_t deadline = 0;
    std::optional<ChannelState> candidate;

    std::uint64_t total() const {
      return escrow_a + escrow_b;
    }
    const ChannelParty &party(Side side) const {
      return side == Side::A ? a : b;
    }
    std::optional<Side> side_of(const Address &addr) const;
  };

  inline constexpr std::uint64_t kDefaultDisputeWindow = 10;

  /// Two-party token channels settling on the ledger.
  ///
  /// open and settle move funds; close and challenge only record the dispute.
  /// pay and countersign never touch the ledger.
  class ChannelRegistry {
   public:
    explicit ChannelRegistry(Ledger &ledger,
                             EventLog *log = nullptr,
                             std::uint64_t dispute_window = kDefaultDisputeWindow);

    /// Returns the new channel; its nonce-0 state is initial_state(id).
    const Channel &open(const ChannelParty &a,
                        const ChannelParty &b,
                        std::uint64_t deposit_a,
                        std::uint64_t deposit_b);
    ChannelState initial_state(std::uint64_t channel_id) const;

    /// New state moving `amount` from payer to payee, signed by the payer.
    ChannelState pay(std::uint64_t channel_id,
                     const ChannelState &latest,
                     Side payer,
                     std::uint64_t amount,
                     const crypto::PrivateKey &payer_key);
    /// Counterparty acceptance: checks the payer's signature and adds the
    /// missing one.
    ChannelState countersign(std::uint64_t channel_id,
                             const ChannelState &state,
                             const crypto::PrivateKey &signer_key);

    const Channel &close(std::uint64_t channel_id, const ChannelState &state, const Address &closer);
    const Channel &challenge(std::uint64_t channel_id, const ChannelState &newer, const Address &challenger);
    Receipt settle(std::uint64_t channel_id, const Address &caller);
    /// Both parties signed close_message(); pays out immediately.
    Receipt cooperative_close(std::uint64_t channel_id,
                              const ChannelState &state,
                              const crypto::Signature &close_sig_a,
                              const crypto::Signature &close_sig_b,
                              const Address &caller);

    const Channel &channel(std::uint64_t channel_id) const;
    bool is_valid(const Channel &ch, const ChannelState &state) const;
    std::uint64_t open_escrow() const;
    std::uint64_t dispute_window() const {
      return dispute_window_;
    }
    const std::map<std::uint64_t, Channel> &channels() const {
      return channels_;
    }

   private:
    Channel &mutable_channel(std::uint64_t channel_id);
    [[noreturn]] void fail(const Address &payer, Errc code, const std::string &detail = {});
    void emit(const Address &caller, std::uint64_t cost, EventBody body);
    Receipt payout(Channel &ch, const ChannelState &state, const Address &caller, bool cooperative);

    Ledger &ledger_;
    EventLog *log_;
    std::uint64_t dispute_window_;
    std::uint64_t next_id_ = 1;
    std::map<std::uint64_t, Channel> channels_;
    /// Highest nonce each channel's parties have countersigned (client view).
    std::map<std::uint64_t, std::uint64_t> acknowledged_;
  };

  crypto::Signature sign_state(const ChannelState &state, const crypto::PrivateKey &key);
  crypto::Signature sign_close(const ChannelState &state, const crypto::PrivateKey &key);

}  // namespace idmob
