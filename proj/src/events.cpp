#include "idmob/events.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>

#include "idmob/error.hpp"

namespace idmob {

  namespace {
    template <typename T>
    struct KindName;
#define IDMOB_EVENT_NAME(T)                          \
  template <>                                        \
  struct KindName<events::T> {                       \
    static constexpr std::string_view value = #T;    \
  };
    IDMOB_EVENT_NAME(RunStarted)
    IDMOB_EVENT_NAME(RunFinished)
    IDMOB_EVENT_NAME(ActorCreated)
    IDMOB_EVENT_NAME(Minted)
    IDMOB_EVENT_NAME(Transferred)
    IDMOB_EVENT_NAME(VendorRegistered)
    IDMOB_EVENT_NAME(CustomerRegistered)
    IDMOB_EVENT_NAME(DeviceAdded)
    IDMOB_EVENT_NAME(DataPushed)
    IDMOB_EVENT_NAME(DataRequested)
    IDMOB_EVENT_NAME(KeyTransferred)
    IDMOB_EVENT_NAME(VoteCast)
    IDMOB_EVENT_NAME(PriceUpdated)
    IDMOB_EVENT_NAME(ChannelOpened)
    IDMOB_EVENT_NAME(ChannelClosed)
    IDMOB_EVENT_NAME(ChannelChallenged)
    IDMOB_EVENT_NAME(ChannelSettled)
    IDMOB_EVENT_NAME(PayloadVerified)
    IDMOB_EVENT_NAME(StepFailed)
#undef IDMOB_EVENT_NAME

    template <std::size_t... I>
    constexpr auto all_names(std::index_sequence<I...>) {
      return std::array<std::string_view, sizeof...(I)>{
          KindName<std::variant_alternative_t<I, EventBody>>::value...};
    }
    constexpr auto kNames = all_names(std::make_index_sequence<std::variant_size_v<EventBody>>{});

    // -- field encoding -------------------------------------------------------

    void put(std::string &out, std::uint64_t v) {
      out += std::to_string(v);
    }
    void put(std::string &out, std::int64_t v) {
      out += std::to_string(v);
    }
    void put(std::string &out, bool v) {
      out += v ? '1' : '0';
    }
    void put(std::string &out, const std::string &v) {
      out += '"';
      for (char c : v) {
        switch (c) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          default: out += c;
        }
      }
      out += '"';
    }
    void put(std::string &out, const Address &v) {
      out += v.hex();
    }
    void put(std::string &out, const Handle &v) {
      out += v.hex();
    }
    void put(std::string &out, const Bytes &v) {
      out += v.empty() ? "-" : to_hex(v);
    }
    void put(std::string &out, const std::vector<std::uint64_t> &v) {
      if (v.empty()) {
        out += '-';
        return;
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
      }
    }
    void put(std::string &out, AssetKind v) {
      out += asset_kind_name(v);
    }
    void put(std::string &out, crypto::EncryptionScheme v) {
      out += crypto::scheme_name(v);
    }

    [[noreturn]] void bad(std::string_view token, std::string_view what) {
      throw Error(Errc::ParseError, "bad " + std::string(what) + " '" + std::string(token) + "'");
    }

    template <typename Int>
    Int parse_int(std::string_view token) {
      Int v{};
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size()) bad(token, "integer");
      return v;
    }

    void get(std::string_view t, std::uint64_t &v) {
      v = parse_int<std::uint64_t>(t);
    }
    void get(std::string_view t, std::int64_t &v) {
      v = parse_int<std::int64_t>(t);
    }
    void get(std::string_view t, bool &v) {
      if (t != "0" && t != "1") bad(t, "flag");
      v = t == "1";
    }
    void get(std::string_view t, std::string &v) {
      if (t.size() < 2 || t.front() != '"' || t.back() != '"') bad(t, "string");
      v.clear();
      for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        if (t[i] == '\\' && i + 2 < t.size()) {
          ++i;
          v += t[i] == 'n' ? '\n' : t[i];
        } else {
          v += t[i];
        }
      }
    }
    template <typename Fixed>
    void get_fixed(std::string_view t, Fixed &v, std::string_view what) {
      try {
        v = Fixed::from_hex(t);
      } catch (const Error &) {
        bad(t, what);
      }
    }
    void get(std::string_view t, Address &v) {
      get_fixed(t, v, "address");
    }
    void get(std::string_view t, Handle &v) {
      get_fixed(t, v, "handle");
    }
    void get(std::string_view t, Bytes &v) {
      if (t == "-") {
        v.clear();
        return;
      }
      try {
        v = from_hex(t);
      } catch (const Error &) {
        bad(t, "hex bytes");
      }
    }
    void get(std::string_view t, std::vector<std::uint64_t> &v) {
      v.clear();
      if (t == "-") return;
      std::size_t start = 0;
      while (start <= t.size()) {
        auto comma = t.find(',', start);
        auto piece = t.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        v.push_back(parse_int<std::uint64_t>(piece));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
    void get(std::string_view t, AssetKind &v) {
      v = parse_asset_kind(t);
    }
    void get(std::string_view t, crypto::EncryptionScheme &v) {
      try {
        v = crypto::parse_scheme(t);
      } catch (const Error &) {
        bad(t, "scheme");
      }
    }

    std::vector<std::string_view> tokenize(std::string_view line) {
      std::vector<std::string_view> out;
      std::size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        if (i >= line.size()) break;
        std::size_t start = i;
        if (line[i] == '"') {
          ++i;
          while (i < line.size() && line[i] != '"') {
            if (line[i] == '\\') ++i;
            ++i;
          }
          if (i >= line.size()) throw Error(Errc::ParseError, "unterminated string");
          ++i;
        } else {
          while (i < line.size() && line[i] != ' ') ++i;
        }
        out.push_back(line.substr(start, i - start));
      }
      return out;
    }

    template <std::size_t I = 0>
    EventBody make_body(std::string_view kind) {
      if constexpr (I == std::variant_size_v<EventBody>) {
        throw Error(Errc::ParseError, "unknown event kind '" + std::string(kind) + "'");
      } else {
        if (kNames[I] == kind) return EventBody(std::in_place_index<I>);
        return make_body<I + 1>(kind);
      }
    }
  }  // namespace

  std::string_view event_kind_name(const EventBody &body) {
    return kNames[body.index()];
  }

  std::span<const std::string_view> event_kind_names() {
    return kNames;
  }

  bool operator==(const Event &a, const Event &b) {
    return format_event(a) == format_event(b);
  }

  const Event &EventLog::append(std::uint64_t block,
                                const Address &caller,
                                std::uint64_t cost,
                                EventBody body) {
    events_.push_back(Event{last_seq() + 1, block, caller, cost, std::move(body)});
    return events_.back();
  }

  std::vector<Event> EventLog::poll(std::uint64_t since_seq, std::uint64_t visible_height) const {
    std::vector<Event> out;
    // seq == position + 1, so skip straight to the first candidate.
    for (auto i = static_cast<std::size_t>(std::min<std::uint64_t>(since_seq, events_.size()));
         i < events_.size(); ++i) {
      if (events_[i].block > visible_height) break;
      out.push_back(events_[i]);
    }
    return out;
  }

  std::string format_event(const Event &event) {
    std::string out;
    put(out, event.seq);
    out += ' ';
    put(out, event.block);
    out += ' ';
    out += event.kind();
    out += ' ';
    put(out, event.caller);
    out += ' ';
    put(out, event.cost);
    std::visit(
        [&out](auto body) {
          std::apply([&out](auto &...field) { ((out += ' ', put(out, field)), ...); }, body.tie());
        },
        event.body);
    return out;
  }

  Event parse_event(std::string_view line) {
    const auto tokens = tokenize(line);
    if (tokens.size() < 5) {
      throw Error(Errc::ParseError, "event line has " + std::to_string(tokens.size()) + " fields");
    }
    Event ev;
    get(tokens[0], ev.seq);
    get(tokens[1], ev.block);
    ev.body = make_body(tokens[2]);
    get(tokens[3], ev.caller);
    get(tokens[4], ev.cost);
    std::visit(
        [&](auto &body) {
          auto fields = body.tie();
          constexpr auto n = std::tuple_size_v<decltype(fields)>;
          if (tokens.size() != 5 + n) {
            throw Error(Errc::ParseError, std::string(tokens[2]) + " expects " + std::to_string(n)
                                              + " fields, got " + std::to_string(tokens.size() - 5));
          }
          std::size_t i = 5;
          std::apply([&](auto &...field) { (get(tokens[i++], field), ...); }, fields);
        },
        ev.body);
    return ev;
  }

  void write_event_log(std::ostream &out, std::span<const Event> events) {
    for (const auto &ev : events) {
      out << format_event(ev) << '\n';
    }
  }

  std::vector<Event> read_event_log(std::istream &in) {
    std::vector<Event> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        out.push_back(parse_event(line));
      } catch (const Error &e) {
        throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return out;
  }

}  // namespace idmob
