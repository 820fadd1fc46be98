#include "idmob/channels.hpp"

namespace idmob {

  namespace {
    Bytes tagged_state(std::string_view tag, const ChannelState &s) {
      Bytes out(tag.begin(), tag.end());
      append_be64(out, s.channel_id);
      append_be64(out, s.nonce);
      append_be64(out, s.balance_a);
      append_be64(out, s.balance_b);
      return out;
    }

    // Channel ops write: status/escrow/candidate slots.
    constexpr std::uint64_t kOpenWrites = 4;
    constexpr std::uint64_t kCloseWrites = 3;
    constexpr std::uint64_t kChallengeWrites = 1;
    constexpr std::uint64_t kSettleWrites = 3;
  }  // namespace

  std::string_view channel_status_name(ChannelStatus status) {
    switch (status) {
      case ChannelStatus::Open: return "open";
      case ChannelStatus::Closing: return "closing";
      case ChannelStatus::Settled: return "settled";
    }
    return "?";
  }

  Bytes ChannelState::signing_message() const {
    return tagged_state("idmob/channel-state", *this);
  }

  Bytes ChannelState::close_message() const {
    return tagged_state("idmob/channel-close", *this);
  }

  std::optional<Side> Channel::side_of(const Address &addr) const {
    if (addr == a.address) return Side::A;
    if (addr == b.address) return Side::B;
    return std::nullopt;
  }

  crypto::Signature sign_state(const ChannelState &state, const crypto::PrivateKey &key) {
    return crypto::sign(key, state.signing_message());
  }

  crypto::Signature sign_close(const ChannelState &state, const crypto::PrivateKey &key) {
    return crypto::sign(key, state.close_message());
  }

  ChannelRegistry::ChannelRegistry(Ledger &ledger, EventLog *log, std::uint64_t dispute_window)
      : ledger_(ledger), log_(log), dispute_window_(dispute_window) {}

  void ChannelRegistry::fail(const Address &payer, Errc code, const std::string &detail) {
    if (ledger_.exists(payer)) {
      ledger_.charge(payer, ledger_.costs().base_tx_units, code);
    }
    throw Error(code, detail);
  }

  void ChannelRegistry::emit(const Address &caller, std::uint64_t cost, EventBody body) {
    if (log_) {
      log_->append(ledger_.pending_block(), caller, cost, std::move(body));
    }
  }

  const Channel &ChannelRegistry::channel(std::uint64_t channel_id) const {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) {
      throw Error(Errc::UnknownChannel, std::to_string(channel_id));
    }
    return it->second;
  }

  Channel &ChannelRegistry::mutable_channel(std::uint64_t channel_id) {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) {
      throw Error(Errc::UnknownChannel, std::to_string(channel_id));
    }
    return it->second;
  }

  bool ChannelRegistry::is_valid(const Channel &ch, const ChannelState &s) const {
    if (s.channel_id != ch.id || s.balance_a + s.balance_b != ch.total()) {
      return false;
    }
    if (s.nonce == 0) {
      return s.balance_a == ch.escrow_a && s.balance_b == ch.escrow_b;
    }
    const auto msg = s.signing_message();
    return s.sig_a && s.sig_b && crypto::verify(ch.a.key, msg, *s.sig_a)
           && crypto::verify(ch.b.key, msg, *s.sig_b);
  }

  std::uint64_t ChannelRegistry::open_escrow() const {
    std::uint64_t total = 0;
    for (const auto &[_, ch] : channels_) {
      if (ch.status != ChannelStatus::Settled) total += ch.total();
    }
    return total;
  }

  const Channel &ChannelRegistry::open(const ChannelParty &a,
                                       const ChannelParty &b,
                                       std::uint64_t deposit_a,
                                       std::uint64_t deposit_b) {
    if (!ledger_.exists(a.address)) fail(a.address, Errc::UnknownAddress, a.address.hex());
    if (!ledger_.exists(b.address)) fail(a.address, Errc::UnknownAddress, b.address.hex());
    if (a.address == b.address) fail(a.address, Errc::NotAParty, "channel needs two parties");
    if (ledger_.balance_of(a.address).tokens < deposit_a || ledger_.balance_of(b.address).tokens < deposit_b) {
      fail(a.address, Errc::InsufficientFunds, "channel deposit");
    }
    ledger_.lock_escrow(a.address, deposit_a, AssetKind::Token);
    ledger_.lock_escrow(b.address, deposit_b, AssetKind::Token);

    const auto id = next_id_++;
    auto &ch = channels_[id];
    ch = Channel{id, a, b, deposit_a, deposit_b, ChannelStatus::Open, 0, std::nullopt};
    acknowledged_[id] = 0;
    const auto cost = ledger_.costs().tx_cost(kOpenWrites, 1);
    ledger_.charge(a.address, cost);
    emit(a.address, cost, events::ChannelOpened{id, a.address, b.address, deposit_a, deposit_b});
    return ch;
  }

  ChannelState ChannelRegistry::initial_state(std::uint64_t channel_id) const {
    const auto &ch = channel(channel_id);
    return ChannelState{ch.id, 0, ch.escrow_a, ch.escrow_b, std::nullopt, std::nullopt};
  }

  ChannelState ChannelRegistry::pay(std::uint64_t channel_id,
                                    const ChannelState &latest,
                                    Side payer,
                                    std::uint64_t amount,
                                    const crypto::PrivateKey &payer_key) {
    const auto &ch = channel(channel_id);
    if (ch.status != ChannelStatus::Open) {
      throw Error(Errc::ChannelNotOpen, std::to_string(channel_id));
    }
    if (!is_valid(ch, latest)) {
      throw Error(Errc::BadSignature, "latest state not fully signed");
    }
    if (latest.nonce < acknowledged_[channel_id]) {
      throw Error(Errc::StaleNonce, std::to_string(latest.nonce) + " < " + std::to_string(acknowledged_[channel_id]));
    }
    if (payer_key.public_key() != ch.party(payer).key) {
      throw Error(Errc::BadSignature, "payer key does not match channel party");
    }
    if (latest.balance(payer) < amount) {
      throw Error(Errc::InsufficientChannelBalance,
                  std::to_string(amount) + " > " + std::to_string(latest.balance(payer)));
    }
    ChannelState next{channel_id, latest.nonce + 1, latest.balance_a, latest.balance_b, std::nullopt, std::nullopt};
    if (payer == Side::A) {
      next.balance_a -= amount;
      next.balance_b += amount;
      next.sig_a = sign_state(next, payer_key);
    } else {
      next.balance_b -= amount;
      next.balance_a += amount;
      next.sig_b = sign_state(next, payer_key);
    }
    return next;
  }

  ChannelState ChannelRegistry::countersign(std::uint64_t channel_id,
                                            const ChannelState &state,
                                            const crypto::PrivateKey &signer_key) {
    const auto &ch = channel(channel_id);
    if (ch.status != ChannelStatus::Open) {
      throw Error(Errc::ChannelNotOpen, std::to_string(channel_id));
    }
    if (state.channel_id != ch.id || state.balance_a + state.balance_b != ch.total()) {
      throw Error(Errc::BadSignature, "state does not match channel");
    }
    const auto signer = signer_key.public_key();
    const auto msg = state.signing_message();
    ChannelState out = state;
    if (signer == ch.b.key && state.sig_a && crypto::verify(ch.a.key, msg, *state.sig_a)) {
      out.sig_b = crypto::sign(signer_key, msg);
    } else if (signer == ch.a.key && state.sig_b && crypto::verify(ch.b.key, msg, *state.sig_b)) {
      out.sig_a = crypto::sign(signer_key, msg);
    } else {
      throw Error(Errc::BadSignature, "counterparty signature missing or invalid");
    }
    if (out.nonce <= acknowledged_[channel_id]) {
      throw Error(Errc::StaleNonce, std::to_string(out.nonce));
    }
    acknowledged_[channel_id] = out.nonce;
    return out;
  }

  const Channel &ChannelRegistry::close(std::uint64_t channel_id,
                                        const ChannelState &state,
                                        const Address &closer) {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) fail(closer, Errc::UnknownChannel, std::to_string(channel_id));
    auto &ch = it->second;
    if (!ch.side_of(closer)) fail(closer, Errc::NotAParty, closer.hex());
    if (ch.status != ChannelStatus::Open) fail(closer, Errc::ChannelNotOpen);
    if (!is_valid(ch, state)) fail(closer, Errc::BadSignature, "close state");

    ch.status = ChannelStatus::Closing;
    ch.deadline = ledger_.height() + dispute_window_;
    ch.candidate = state;
    const auto cost = ledger_.costs().tx_cost(kCloseWrites, 1);
    ledger_.charge(closer, cost);
    emit(closer, cost,
         events::ChannelClosed{ch.id, state.nonce, state.balance_a, state.balance_b, ch.deadline});
    return ch;
  }

  const Channel &ChannelRegistry::challenge(std::uint64_t channel_id,
                                            const ChannelState &newer,
                                            const Address &challenger) {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) fail(challenger, Errc::UnknownChannel, std::to_string(channel_id));
    auto &ch = it->second;
    if (!ledger_.exists(challenger)) fail(challenger, Errc::UnknownAddress, challenger.hex());
    if (ch.status != ChannelStatus::Closing) fail(challenger, Errc::ChannelNotClosing);
    if (ledger_.height() >= ch.deadline) {
      fail(challenger, Errc::DeadlinePassed,
           "height " + std::to_string(ledger_.height()) + " >= " + std::to_string(ch.deadline));
    }
    if (!is_valid(ch, newer)) fail(challenger, Errc::BadSignature, "challenge state");
    if (newer.nonce <= ch.candidate->nonce) {
      fail(challenger, Errc::NotNewer,
           std::to_string(newer.nonce) + " <= " + std::to_string(ch.candidate->nonce));
    }
    ch.candidate = newer;
    const auto cost = ledger_.costs().tx_cost(kChallengeWrites, 1);
    ledger_.charge(challenger, cost);
    emit(challenger, cost,
         events::ChannelChallenged{ch.id, newer.nonce, newer.balance_a, newer.balance_b});
    return ch;
  }

  Receipt ChannelRegistry::payout(Channel &ch,
                                  const ChannelState &state,
                                  const Address &caller,
                                  bool cooperative) {
    ledger_.release_escrow(ch.a.address, state.balance_a, AssetKind::Token);
    ledger_.release_escrow(ch.b.address, state.balance_b, AssetKind::Token);
    ch.status = ChannelStatus::Settled;
    ch.candidate = state;
    const auto cost = ledger_.costs().tx_cost(kSettleWrites, 1);
    auto receipt = ledger_.charge(caller, cost);
    emit(caller, cost,
         events::ChannelSettled{ch.id, state.nonce, state.balance_a, state.balance_b, cooperative});
    return receipt;
  }

  Receipt ChannelRegistry::settle(std::uint64_t channel_id, const Address &caller) {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) fail(caller, Errc::UnknownChannel, std::to_string(channel_id));
    auto &ch = it->second;
    if (!ledger_.exists(caller)) fail(caller, Errc::UnknownAddress, caller.hex());
    if (ch.status == ChannelStatus::Settled) fail(caller, Errc::AlreadySettled);
    if (ch.status != ChannelStatus::Closing) fail(caller, Errc::ChannelNotClosing);
    if (ledger_.height() < ch.deadline) {
      fail(caller, Errc::TooEarly,
           "height " + std::to_string(ledger_.height()) + " < " + std::to_string(ch.deadline));
    }
    const auto state = *ch.candidate;
    return payout(ch, state, caller, false);
  }

  Receipt ChannelRegistry::cooperative_close(std::uint64_t channel_id,
                                             const ChannelState &state,
                                             const crypto::Signature &close_sig_a,
                                             const crypto::Signature &close_sig_b,
                                             const Address &caller) {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) fail(caller, Errc::UnknownChannel, std::to_string(channel_id));
    auto &ch = it->second;
    if (!ch.side_of(caller)) fail(caller, Errc::NotAParty, caller.hex());
    if (ch.status == ChannelStatus::Settled) fail(caller, Errc::AlreadySettled);
    if (ch.status != ChannelStatus::Open) fail(caller, Errc::ChannelNotOpen);
    const auto msg = state.close_message();
    if (state.channel_id != ch.id || state.balance_a + state.balance_b != ch.total()
        || !crypto::verify(ch.a.key, msg, close_sig_a) || !crypto::verify(ch.b.key, msg, close_sig_b)) {
      fail(caller, Errc::BadSignature, "cooperative close");
    }
    return payout(ch, state, caller, true);
  }

}  // namespace idmob
