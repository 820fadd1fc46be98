#include <algorithm>
#include <functional>

#include "idmob/channels.hpp"
#include "support.hpp"

using namespace idmob;

namespace {
  struct Fixture {
    Ledger ledger;
    EventLog log;
    ChannelRegistry reg{ledger, &log};
    crypto::KeyPair ka = crypto::generate_keypair(as_bytes("channel party a seed"));
    crypto::KeyPair kb = crypto::generate_keypair(as_bytes("channel party b seed"));
    crypto::KeyPair kc = crypto::generate_keypair(as_bytes("channel party c seed"));
    Address a = ledger.create_account();
    Address b = ledger.create_account();
    Address c = ledger.create_account();

    Fixture() {
      ledger.mint(a, 0, 100);
      ledger.mint(b, 0, 100);
      ledger.mint(c, 0, 100);
    }
    ChannelParty pa() const {
      return {a, ka.public_key};
    }
    ChannelParty pb() const {
      return {b, kb.public_key};
    }
    std::uint64_t supply() const {
      return ledger.total_supply(AssetKind::Token);
    }
    void ticks(int n) {
      for (int i = 0; i < n; ++i) ledger.tick();
    }
    // a pays b `amount` and b countersigns.
    ChannelState pay_ab(std::uint64_t id, const ChannelState &s, std::uint64_t amount) {
      return reg.countersign(id, reg.pay(id, s, Side::A, amount, ka.private_key), kb.private_key);
    }
  };
}  // namespace

TEST_CASE("open locks deposits") {
  Fixture f;
  const auto supply = f.supply();
  const auto &ch = f.reg.open(f.pa(), f.pb(), 10, 0);
  CHECK(f.ledger.balance_of(f.a).tokens == 90);
  CHECK(f.ledger.escrow(AssetKind::Token) == 10);
  CHECK(f.supply() == supply);
  const auto s0 = f.reg.initial_state(ch.id);
  CHECK(s0.nonce == 0);
  CHECK(s0.balance_a == 10);
  CHECK(f.reg.is_valid(ch, s0));
  CHECK_ERRC(f.reg.open(f.pa(), f.pb(), 1000, 0), Errc::InsufficientFunds);
  CHECK_ERRC(f.reg.open(f.pa(), f.pa(), 1, 0), Errc::NotAParty);
}

TEST_CASE("payments are off-ledger") {
  Fixture f;
  const auto id = f.reg.open(f.pa(), f.pb(), 100, 0).id;
  const auto receipts = f.ledger.receipts().size();
  const auto events = f.log.size();
  auto s = f.reg.initial_state(id);
  for (int i = 0; i < 100; ++i) {
    s = f.pay_ab(id, s, 1);
    CHECK(f.reg.is_valid(f.reg.channel(id), s));
  }
  CHECK(s.nonce == 100);
  CHECK(s.balance_b == 100);
  CHECK(f.ledger.receipts().size() == receipts);
  CHECK(f.log.size() == events);
  CHECK_ERRC(f.reg.pay(id, s, Side::A, 1, f.ka.private_key), Errc::InsufficientChannelBalance);
}

TEST_CASE("pay rejects forged, tampered and stale states") {
  Fixture f;
  const auto id = f.reg.open(f.pa(), f.pb(), 50, 50).id;
  auto s0 = f.reg.initial_state(id);
  auto s1 = f.pay_ab(id, s0, 5);
  auto tampered = s1;
  tampered.balance_a += 1;
  tampered.balance_b -= 1;
  CHECK_ERRC(f.reg.pay(id, tampered, Side::A, 1, f.ka.private_key), Errc::BadSignature);
  CHECK_ERRC(f.reg.countersign(id, f.reg.pay(id, s1, Side::A, 1, f.kc.private_key), f.kb.private_key),
             Errc::BadSignature);
  auto s2 = f.pay_ab(id, s1, 5);
  CHECK_ERRC(f.reg.pay(id, s1, Side::A, 1, f.ka.private_key), Errc::StaleNonce);
  (void)s2;
}

TEST_CASE("close, wait, settle") {
  Fixture f;
  const auto supply = f.supply();
  const auto id = f.reg.open(f.pa(), f.pb(), 30, 10).id;
  auto s = f.pay_ab(id, f.reg.initial_state(id), 12);
  CHECK_ERRC(f.reg.close(id, s, f.c), Errc::NotAParty);
  const auto &ch = f.reg.close(id, s, f.a);
  CHECK(ch.status == ChannelStatus::Closing);
  CHECK(ch.deadline == f.ledger.height() + kDefaultDisputeWindow);
  CHECK_ERRC(f.reg.close(id, s, f.a), Errc::ChannelNotOpen);
  CHECK_ERRC(f.reg.pay(id, s, Side::A, 1, f.ka.private_key), Errc::ChannelNotOpen);
  CHECK_ERRC(f.reg.settle(id, f.b), Errc::TooEarly);
  f.ticks(10);
  f.reg.settle(id, f.b);
  CHECK(f.ledger.balance_of(f.a).tokens == 70 + 18);
  CHECK(f.ledger.balance_of(f.b).tokens == 90 + 22);
  CHECK(f.supply() == supply);
  CHECK(f.ledger.escrow(AssetKind::Token) == 0);
  CHECK_ERRC(f.reg.settle(id, f.b), Errc::AlreadySettled);
  CHECK_ERRC(f.reg.challenge(id, s, f.b), Errc::ChannelNotClosing);
}

TEST_CASE("challenge rules") {
  Fixture f;
  const auto id = f.reg.open(f.pa(), f.pb(), 20, 0).id;
  std::vector<ChannelState> states{f.reg.initial_state(id)};
  for (int i = 0; i < 9; ++i) states.push_back(f.pay_ab(id, states.back(), 1));
  CHECK_ERRC(f.reg.challenge(id, states[9], f.b), Errc::ChannelNotClosing);
  f.reg.close(id, states[5], f.a);
  CHECK_ERRC(f.reg.challenge(id, states[5], f.b), Errc::NotNewer);
  CHECK_ERRC(f.reg.challenge(id, states[3], f.b), Errc::NotNewer);
  auto forged = states[9];
  forged.balance_a = 20;
  forged.balance_b = 0;
  CHECK_ERRC(f.reg.challenge(id, forged, f.b), Errc::BadSignature);
  const auto deadline = f.reg.channel(id).deadline;
  f.reg.challenge(id, states[9], f.b);
  CHECK(f.reg.channel(id).deadline == deadline);
  f.ticks(10);
  f.reg.settle(id, f.a);
  CHECK(f.ledger.balance_of(f.b).tokens == 109);
  CHECK(f.ledger.balance_of(f.a).tokens == 91);
}

TEST_CASE("challenge after the deadline is refused") {
  Fixture f;
  const auto id = f.reg.open(f.pa(), f.pb(), 20, 0).id;
  const auto s0 = f.reg.initial_state(id);
  const auto s1 = f.pay_ab(id, s0, 4);
  f.reg.close(id, s0, f.a);
  f.ticks(10);
  CHECK_ERRC(f.reg.challenge(id, s1, f.b), Errc::DeadlinePassed);
}

TEST_CASE("cooperative close pays out at once") {
  Fixture f;
  const auto id = f.reg.open(f.pa(), f.pb(), 20, 0).id;
  const auto s = f.pay_ab(id, f.reg.initial_state(id), 7);
  CHECK_ERRC(f.reg.cooperative_close(id, s, sign_close(s, f.ka.private_key), sign_close(s, f.kc.private_key), f.a),
             Errc::BadSignature);
  f.reg.cooperative_close(id, s, sign_close(s, f.ka.private_key), sign_close(s, f.kb.private_key), f.a);
  CHECK(f.reg.channel(id).status == ChannelStatus::Settled);
  CHECK(f.ledger.balance_of(f.b).tokens == 107);
}

TEST_CASE("exactly two balance-moving ledger transactions per channel") {
  Fixture f;
  const auto id = f.reg.open(f.pa(), f.pb(), 20, 0).id;
  auto s = f.reg.initial_state(id);
  for (int i = 0; i < 20; ++i) s = f.pay_ab(id, s, 1);
  f.reg.close(id, s, f.a);
  f.ticks(10);
  f.reg.settle(id, f.b);
  int moving = 0;
  for (const auto &ev : f.log.all()) {
    if (ev.as<events::ChannelOpened>() || ev.as<events::ChannelSettled>()) ++moving;
  }
  CHECK(moving == 2);
}

// Every subset of up to 4 signed states, presented in every order, first as a
// close and then as challenges at arbitrary blocks inside or past the window:
// settlement pays the highest nonce presented before the deadline.
TEST_CASE("settlement pays the highest nonce presented in time") {
  std::size_t cases = 0;
  for (int count = 1; count <= 4; ++count) {
    for (unsigned mask = 1; mask < 16; ++mask) {
      if (__builtin_popcount(mask) != count) continue;
      std::vector<int> chosen;
      for (int i = 0; i < 4; ++i) {
        if (mask & (1u << i)) chosen.push_back(i);
      }
      std::vector<int> order = chosen;
      std::sort(order.begin(), order.end());
      do {
        for (int delay_pattern = 0; delay_pattern < (1 << (count - 1)); ++delay_pattern) {
          Fixture f;
          const auto id = f.reg.open(f.pa(), f.pb(), 40, 0).id;
          std::vector<ChannelState> states{f.reg.initial_state(id)};
          for (int i = 0; i < 3; ++i) states.push_back(f.pay_ab(id, states.back(), 5 + i));
          const auto before_a = f.ledger.balance_of(f.a).tokens;
          const auto before_b = f.ledger.balance_of(f.b).tokens;

          f.reg.close(id, states[order[0]], order[0] % 2 ? f.b : f.a);
          std::uint64_t best = states[order[0]].nonce;
          for (int k = 1; k < count; ++k) {
            // bit k-1 set: challenge at once; unset: let the window lapse first
            const bool inside = (delay_pattern >> (k - 1)) & 1;
            if (!inside) f.ticks(11);
            const auto &st = states[order[k]];
            const bool in_time = f.ledger.height() < f.reg.channel(id).deadline;
            try {
              f.reg.challenge(id, st, f.b);
              CHECK(in_time);
              CHECK(st.nonce > best);
              best = st.nonce;
            } catch (const Error &e) {
              CHECK((e.code() == Errc::DeadlinePassed || e.code() == Errc::NotNewer));
              if (e.code() == Errc::NotNewer) CHECK(st.nonce <= best);
              if (e.code() == Errc::DeadlinePassed) CHECK_FALSE(in_time);
            }
          }
          f.ticks(11);
          f.reg.settle(id, f.a);
          const auto &final_state = states[best];
          CHECK(f.ledger.balance_of(f.a).tokens == before_a + final_state.balance_a);
          CHECK(f.ledger.balance_of(f.b).tokens == before_b + final_state.balance_b);
          ++cases;
        }
      } while (std::next_permutation(order.begin(), order.end()));
    }
  }
  CHECK(cases > 100);
}

TEST_CASE("stale close by the payer recovers nothing extra") {
  Fixture f;
  const auto id = f.reg.open(f.pa(), f.pb(), 30, 0).id;
  const auto s0 = f.reg.initial_state(id);
  const auto s1 = f.pay_ab(id, s0, 25);
  f.reg.close(id, s0, f.a);
  f.reg.challenge(id, s1, f.b);
  f.ticks(10);
  f.reg.settle(id, f.a);
  CHECK(f.ledger.balance_of(f.a).tokens == 70 + 5);
  CHECK(f.ledger.balance_of(f.b).tokens == 100 + 25);
}
