#include "idmob/sim/report.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "idmob/error.hpp"

namespace idmob::sim {

  std::optional<std::string> Report::get(const std::string &key) const {
    auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    return it->second;
  }

  std::string Report::to_text() const {
    std::string out;
    for (const auto &[k, v] : fields) {
      out += k;
      out += '=';
      out += v;
      out += '\n';
    }
    return out;
  }

  Report Report::parse(std::string_view text) {
    Report r;
    std::istringstream in{std::string(text)};
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw Error(Errc::ParseError, "report line " + std::to_string(n) + ": missing '='");
      }
      r.fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return r;
  }

  std::vector<std::string> report_diff(const Report &a, const Report &b) {
    std::set<std::string> keys;
    for (const auto &[k, v] : a.fields) keys.insert(k);
    for (const auto &[k, v] : b.fields) keys.insert(k);
    std::vector<std::string> out;
    for (const auto &k : keys) {
      if (a.get(k) != b.get(k)) out.push_back(k);
    }
    return out;
  }

  Report report_from_events(std::span<const Event> events) {
    using namespace events;
    struct Funds {
      std::uint64_t native = 0;
      std::uint64_t tokens = 0;
    };
    std::map<Address, std::string> names;
    std::map<std::string, Funds> balances;
    std::map<std::string, std::uint64_t> cost;
    std::map<std::string, std::int64_t> votes;
    std::map<std::string, std::map<std::uint64_t, std::uint64_t>> catalog;
    std::map<std::string, std::uint64_t> kinds;
    std::map<std::string, std::uint64_t> failures;
    std::map<std::uint64_t, std::pair<Address, Address>> channel_parties;
    std::map<Address, std::vector<std::uint64_t>> push_times;
    std::uint64_t escrow = 0;
    std::uint64_t requested = 0, delivered = 0, verified = 0, verify_failed = 0, failed = 0;
    std::uint64_t final_height = 0;
    Report r;

    auto name_of = [&](const Address &a) -> const std::string & {
      auto it = names.find(a);
      if (it == names.end()) throw Error(Errc::ValidationError, "event references unknown actor " + a.hex());
      return it->second;
    };
    auto funds = [&](const Address &a) -> Funds & { return balances[name_of(a)]; };

    RunStarted started;
    for (const auto &ev : events) {
      ++kinds[std::string(ev.kind())];
      if (names.contains(ev.caller)) cost[names.at(ev.caller)] += ev.cost;
      std::visit(
          [&](const auto &e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, RunStarted>) {
              started = e;
            } else if constexpr (std::is_same_v<T, RunFinished>) {
              final_height = e.height;
            } else if constexpr (std::is_same_v<T, ActorCreated>) {
              names[e.address] = e.name;
              balances[e.name];
              cost[e.name];
            } else if constexpr (std::is_same_v<T, Minted>) {
              funds(e.to).native += e.native;
              funds(e.to).tokens += e.tokens;
            } else if constexpr (std::is_same_v<T, Transferred>) {
              auto &from = funds(e.from);
              auto &to = funds(e.to);
              if (e.kind == AssetKind::Native) {
                from.native -= e.amount;
                to.native += e.amount;
              } else {
                from.tokens -= e.amount;
                to.tokens += e.amount;
              }
            } else if constexpr (std::is_same_v<T, VendorRegistered>) {
              votes[name_of(e.vendor)] = 0;
              for (auto s : e.sensors) catalog[name_of(e.vendor)][s] = 0;
            } else if constexpr (std::is_same_v<T, DataPushed>) {
              ++catalog[name_of(e.vendor)][e.sensor_type];
              push_times[e.device].push_back(e.timestamp);
            } else if constexpr (std::is_same_v<T, DataRequested>) {
              ++requested;
              if (e.channel == 0) {
                funds(e.customer).tokens -= e.price;
                funds(e.vendor).tokens += e.price;
              }
            } else if constexpr (std::is_same_v<T, KeyTransferred>) {
              ++delivered;
            } else if constexpr (std::is_same_v<T, VoteCast>) {
              votes[name_of(e.vendor)] = e.tally;
            } else if constexpr (std::is_same_v<T, ChannelOpened>) {
              channel_parties[e.channel] = {e.party_a, e.party_b};
              funds(e.party_a).tokens -= e.deposit_a;
              funds(e.party_b).tokens -= e.deposit_b;
              escrow += e.deposit_a + e.deposit_b;
            } else if constexpr (std::is_same_v<T, ChannelSettled>) {
              const auto &[a, b] = channel_parties.at(e.channel);
              funds(a).tokens += e.payout_a;
              funds(b).tokens += e.payout_b;
              escrow -= e.payout_a + e.payout_b;
            } else if constexpr (std::is_same_v<T, PayloadVerified>) {
              ++(e.ok ? verified : verify_failed);
            } else if constexpr (std::is_same_v<T, StepFailed>) {
              ++failed;
              ++failures[e.error];
            }
          },
          ev.body);
    }

    r.set("hash_function", started.hash_function);
    r.set("seed", started.seed);
    r.set("block_interval_s", started.block_interval_s);
    r.set("push_interval_s", started.push_interval_s);
    r.set("genesis_offset_s", started.genesis_offset_s);
    r.set("final_height", final_height);
    r.set("final_timestamp_s", started.genesis_offset_s + final_height * started.block_interval_s);
    for (const auto &[name, f] : balances) {
      r.set("balance." + name + ".native", f.native);
      r.set("balance." + name + ".tokens", f.tokens);
    }
    for (const auto &[name, units] : cost) r.set("cost." + name, units);
    for (const auto &[name, tally] : votes) r.set_signed("votes." + name, tally);
    for (const auto &[name, types] : catalog) {
      for (const auto &[t, n] : types) r.set("catalog." + name + ".type" + std::to_string(t), n);
    }
    for (const auto &[kind, n] : kinds) r.set("events." + kind, n);
    r.set("events.total", static_cast<std::uint64_t>(events.size()));
    r.set("escrow.tokens", escrow);
    r.set("purchases.requested", requested);
    r.set("purchases.delivered", delivered);
    r.set("purchases.verified", verified);
    r.set("purchases.verify_failed", verify_failed);
    r.set("failures.total", failed);
    for (const auto &[code, n] : failures) r.set("failures." + code, n);

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
