#include "idmob/sim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "idmob/error.hpp"
#include "idmob/geohex.hpp"

namespace idmob::sim {

  namespace {
    enum RoleMask : unsigned { V = 1, D = 2, C = 4, Any = V | D | C };

    unsigned mask_of(Role role) {
      switch (role) {
        case Role::Vendor: return V;
        case Role::Device: return D;
        case Role::Customer: return C;
      }
      return 0;
    }

    struct VerbRule {
      std::string_view verb;
      unsigned roles;
      std::vector<std::string_view> required;
      std::vector<std::string_view> optional;
    };

    const std::vector<VerbRule> &verb_rules() {
      static const std::vector<VerbRule> rules = {
          {"register_vendor", V, {}, {}},
          {"register_customer", C, {}, {}},
          {"add_device", V, {"device"}, {}},
          {"price", V, {"type", "price"}, {}},
          {"deliver", V, {"customer", "type", "index"}, {}},
          {"push",
           D,
           {"type", "level"},
           {"lat", "lon", "spatial", "bytes", "data", "schema", "ts", "count", "key_index", "vendor"}},
          {"query", Any, {"type", "index"}, {}},
          {"pull", Any, {"vendor", "type", "index"}, {}},
          {"length", Any, {"vendor", "type"}, {}},
          {"vendors", Any, {}, {}},
          {"get_vendor", Any, {"vendor"}, {}},
          {"get_price", Any, {"vendor", "type"}, {}},
          {"votes", Any, {"vendor"}, {}},
          {"request", C, {"vendor", "type", "index"}, {"channel"}},
          {"vote", C, {"vendor", "dir"}, {}},
          {"channel_open", V | C, {"with", "deposit", "as"}, {"their_deposit"}},
          {"channel_pay", V | C, {"channel", "amount"}, {}},
          {"channel_close", V | C, {"channel"}, {"nonce"}},
          {"channel_challenge", V | C, {"channel"}, {"nonce"}},
          {"channel_settle", V | C, {"channel"}, {}},
          {"channel_coop_close", V | C, {"channel"}, {}},
          {"transfer", Any, {"to", "amount"}, {"kind"}},
          {"mint", Any, {}, {"native", "tokens"}},
      };
      return rules;
    }

    const std::set<std::string_view> kNumericArgs = {
        "type", "index", "price", "level", "bytes", "ts", "count", "key_index",
        "deposit", "their_deposit", "amount", "nonce", "native", "tokens"};

    [[noreturn]] void parse_error(int line, const std::string &what) {
      throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + what);
    }

    [[noreturn]] void invalid(const Step &step, const std::string &what) {
      throw Error(Errc::ValidationError,
                  "line " + std::to_string(step.line) + " step '" + step.verb + "' by " + step.actor + ": "
                      + what);
    }

    std::optional<std::uint64_t> to_u64(std::string_view text) {
      std::uint64_t value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        return std::nullopt;
      }
      return value;
    }

    std::optional<double> to_double(const std::string &text) {
      try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) return std::nullopt;
        return v;
      } catch (const std::exception &) {
        return std::nullopt;
      }
    }

    std::uint64_t require_u64(std::string_view text, int line, std::string_view what) {
      auto v = to_u64(text);
      if (!v) {
        parse_error(line, std::string(what) + " must be a non-negative integer, got '" + std::string(text) + "'");
      }
      return *v;
    }

    // Whitespace-separated words; double quotes group, backslash escapes
    // inside quotes, '#' starts a comment outside quotes.
    std::vector<std::string> tokenize(std::string_view text, int line) {
      std::vector<std::string> out;
      std::string cur;
      bool in_word = false;
      bool quoted = false;
      for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
          if (c == '\\' && i + 1 < text.size()) {
            cur.push_back(text[++i]);
          } else if (c == '"') {
            quoted = false;
          } else {
            cur.push_back(c);
          }
          continue;
        }
        if (c == '#') break;
        if (c == '"') {
          quoted = true;
          in_word = true;
        } else if (c == ' ' || c == '\t' || c == '\r') {
          if (in_word) out.push_back(std::move(cur));
          cur.clear();
          in_word = false;
        } else {
          cur.push_back(c);
          in_word = true;
        }
      }
      if (quoted) parse_error(line, "unterminated quote");
      if (in_word) out.push_back(std::move(cur));
      return out;
    }

    std::map<std::string, std::string> key_values(const std::vector<std::string> &words,
                                                  std::size_t from,
                                                  int line) {
      std::map<std::string, std::string> out;
      for (std::size_t i = from; i < words.size(); ++i) {
        const auto eq = words[i].find('=');
        if (eq == std::string::npos || eq == 0) {
          parse_error(line, "expected key=value, got '" + words[i] + "'");
        }
        auto key = words[i].substr(0, eq);
        if (out.contains(key)) parse_error(line, "duplicate key '" + key + "'");
        out.emplace(std::move(key), words[i].substr(eq + 1));
      }
      return out;
    }

    void allow_only(const std::map<std::string, std::string> &kv,
                    std::initializer_list<std::string_view> allowed,
                    int line) {
      for (const auto &[k, v] : kv) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
          parse_error(line, "unknown key '" + k + "'");
        }
      }
    }

    std::vector<SensorOffer> parse_sensors(const std::string &text, int line) {
      std::vector<SensorOffer> out;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) parse_error(line, "sensor entry must be type:price, got '" + item + "'");
        out.push_back({require_u64(item.substr(0, colon), line, "sensor type"),
                       require_u64(item.substr(colon + 1), line, "sensor price")});
      }
      return out;
    }

    bool bool_word(const std::string &text, int line) {
      if (text == "on" || text == "true" || text == "1") return true;
      if (text == "off" || text == "false" || text == "0") return false;
      parse_error(line, "expected on/off, got '" + text + "'");
    }

    void parse_actor(Scenario &sc, const std::vector<std::string> &words, int line) {
      if (words.size() < 2) parse_error(line, "actor needs a name");
      ActorSpec a;
      a.name = words[1];
      a.line = line;
      const auto kv = key_values(words, 2, line);
      auto get = [&](const char *k) -> const std::string * {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
      };
      if (words[0] == "vendor") {
        a.role = Role::Vendor;
        allow_only(kv, {"prefix", "sensors", "key_service"}, line);
        a.prefix = get("prefix") ? *get("prefix") : a.name;
        if (!get("sensors")) parse_error(line, "vendor needs sensors=type:price,...");
        a.sensors = parse_sensors(*get("sensors"), line);
        if (get("key_service")) a.key_service = bool_word(*get("key_service"), line);
      } else if (words[0] == "device") {
        a.role = Role::Device;
        allow_only(kv, {"vendor", "scheme"}, line);
        if (!get("vendor")) parse_error(line, "device needs vendor=<name>");
        a.vendor = *get("vendor");
        if (get("scheme")) {
          try {
            a.scheme = crypto::parse_scheme(*get("scheme"));
          } catch (const Error &e) {
            parse_error(line, e.what());
          }
        }
      } else {
        a.role = Role::Customer;
        allow_only(kv, {"native", "tokens"}, line);
        if (get("native")) a.native = require_u64(*get("native"), line, "native");
        if (get("tokens")) a.tokens = require_u64(*get("tokens"), line, "tokens");
      }
      if (sc.actor(a.name)) parse_error(line, "actor '" + a.name + "' defined twice");
      sc.actors.push_back(std::move(a));
    }

    void parse_step(Scenario &sc, const std::vector<std::string> &words, int line) {
      if (words.size() < 4) parse_error(line, "expected: at <block> <actor> <verb> [key=value ...]");
      Step s;
      s.line = line;
      s.block = require_u64(words[1], line, "block");
      s.actor = words[2];
      s.verb = words[3];
      s.args = key_values(words, 4, line);
      for (const auto &[k, v] : s.args) {
        if (kNumericArgs.contains(k) && !to_u64(v)) {
          parse_error(line, k + " must be a non-negative integer, got '" + v + "'");
        }
        if ((k == "lat" || k == "lon") && !to_double(v)) {
          parse_error(line, k + " must be a number, got '" + v + "'");
        }
      }
      sc.steps.push_back(std::move(s));
    }

    void expect_role(const Scenario &sc, const Step &step, const std::string &key, unsigned roles) {
      const auto &name = step.arg(key);
      const auto *a = sc.actor(name);
      if (!a) invalid(step, key + "=" + name + " is not a defined actor");
      if (!(mask_of(a->role) & roles)) {
        invalid(step, key + "=" + name + " has the wrong role (" + std::string(role_name(a->role)) + ")");
      }
    }
  }  // namespace

  std::string_view role_name(Role role) {
    switch (role) {
      case Role::Vendor: return "vendor";
      case Role::Device: return "device";
      case Role::Customer: return "customer";
    }
    return "?";
  }

  const std::string &Step::arg(const std::string &key) const {
    auto it = args.find(key);
    if (it == args.end()) {
      throw Error(Errc::ValidationError, "line " + std::to_string(line) + ": missing " + key);
    }
    return it->second;
  }

  std::uint64_t Step::number(const std::string &key) const {
    return *to_u64(arg(key));
  }

  std::uint64_t Step::number_or(const std::string &key, std::uint64_t fallback) const {
    return has(key) ? number(key) : fallback;
  }

  double Step::real(const std::string &key) const {
    return *to_double(arg(key));
  }

  const ActorSpec *Scenario::actor(std::string_view name) const {
    for (const auto &a : actors) {
      if (a.name == name) return &a;
    }
    return nullptr;
  }

  std::size_t Scenario::count(Role role) const {
    return static_cast<std::size_t>(
        std::count_if(actors.begin(), actors.end(), [&](const ActorSpec &a) { return a.role == role; }));
  }

  Scenario parse_scenario(std::string_view text, std::string name) {
    Scenario sc;
    sc.name = std::move(name);
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto words = tokenize(raw, line);
      if (words.empty()) continue;
      const auto &head = words[0];
      auto single = [&]() -> const std::string & {
        if (words.size() != 2) parse_error(line, head + " takes one value");
        return words[1];
      };
      if (head == "name") {
        sc.name = single();
      } else if (head == "seed") {
        sc.seed = require_u64(single(), line, "seed");
      } else if (head == "block_interval") {
        sc.block_interval_s = require_u64(single(), line, "block_interval");
        if (sc.block_interval_s == 0) parse_error(line, "block_interval must be positive");
      } else if (head == "push_interval") {
        sc.push_interval_s = require_u64(single(), line, "push_interval");
      } else if (head == "genesis_offset") {
        sc.genesis_offset_s = require_u64(single(), line, "genesis_offset");
      } else if (head == "dispute_window") {
        sc.dispute_window = require_u64(single(), line, "dispute_window");
      } else if (head == "base_latency_ms") {
        auto v = to_double(single());
        if (!v || *v < 0) parse_error(line, "base_latency_ms must be a non-negative number");
        sc.base_latency_ms = *v;
      } else if (head == "cost") {
        const auto kv = key_values(words, 1, line);
        allow_only(kv, {"base", "write", "event"}, line);
        if (kv.contains("base")) sc.costs.base_tx_units = require_u64(kv.at("base"), line, "base");
        if (kv.contains("write")) sc.costs.per_write_units = require_u64(kv.at("write"), line, "write");
        if (kv.contains("event")) sc.costs.per_event_units = require_u64(kv.at("event"), line, "event");
      } else if (head == "vendor" || head == "device" || head == "customer") {
        parse_actor(sc, words, line);
      } else if (head == "at") {
        parse_step(sc, words, line);
      } else {
        parse_error(line, "unknown directive '" + head + "'");
      }
    }
    std::stable_sort(sc.steps.begin(), sc.steps.end(), [](const Step &a, const Step &b) {
      return a.block < b.block;
    });
    validate(sc);
    return sc;
  }

  Scenario load_scenario(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
      throw Error(Errc::ParseError, "cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.stem().string());
  }

  void validate(const Scenario &sc) {
    for (const auto &a : sc.actors) {
      auto fail = [&](const std::string &what) {
        throw Error(Errc::ValidationError, "line " + std::to_string(a.line) + " actor " + a.name + ": " + what);
      };
      if (a.role == Role::Vendor) {
        std::set<std::uint64_t> seen;
        for (const auto &s : a.sensors) {
          if (s.type == 0 || !seen.insert(s.type).second) fail("sensor types must be positive and distinct");
        }
      }
      if (a.role == Role::Device) {
        const auto *v = sc.actor(a.vendor);
        if (!v || v->role != Role::Vendor) fail("vendor=" + a.vendor + " is not a defined vendor");
      }
    }

    std::set<std::string> channels;
    for (const auto &step : sc.steps) {
      const auto *actor = sc.actor(step.actor);
      if (!actor) invalid(step, "undefined actor");
      const auto &rules = verb_rules();
      auto rule = std::find_if(rules.begin(), rules.end(), [&](const VerbRule &r) { return r.verb == step.verb; });
      if (rule == rules.end()) invalid(step, "unknown verb");
      if (!(rule->roles & mask_of(actor->role))) {
        invalid(step, "not allowed for a " + std::string(role_name(actor->role)));
      }
      for (auto key : rule->required) {
        if (!step.has(std::string(key))) invalid(step, "missing " + std::string(key) + "=");
      }
      for (const auto &[k, v] : step.args) {
        const bool known = std::find(rule->required.begin(), rule->required.end(), k) != rule->required.end()
                           || std::find(rule->optional.begin(), rule->optional.end(), k) != rule->optional.end();
        if (!known) invalid(step, "unexpected " + k + "=");
      }

      if (step.has("vendor")) expect_role(sc, step, "vendor", V);
      if (step.has("device")) expect_role(sc, step, "device", D);
      if (step.has("customer")) expect_role(sc, step, "customer", C);
      if (step.has("to")) expect_role(sc, step, "to", Any);
      if (step.has("with")) {
        expect_role(sc, step, "with", V | C);
        if (step.arg("with") == step.actor) invalid(step, "a channel needs two distinct parties");
      }
      if (step.has("kind")) {
        try {
          parse_asset_kind(step.arg("kind"));
        } catch (const Error &e) {
          invalid(step, e.what());
        }
      }
      if (step.has("dir") && step.arg("dir") != "up" && step.arg("dir") != "down") {
        invalid(step, "dir must be up or down");
      }
      if (step.verb == "channel_open") {
        if (!channels.insert(step.arg("as")).second) invalid(step, "channel alias reused");
      } else if (step.has("channel") && !channels.contains(step.arg("channel"))) {
        invalid(step, "channel " + step.arg("channel") + " is not opened by an earlier step");
      }
      if (step.verb == "push") {
        const auto level = step.number("level");
        if (level > static_cast<std::uint64_t>(geohex::kMaxLevel)) invalid(step, "level out of range");
        const bool point = step.has("lat") || step.has("lon");
        if (point == step.has("spatial")) invalid(step, "give either lat= and lon= or spatial=");
        if (point) {
          if (!step.has("lat") || !step.has("lon")) invalid(step, "give both lat= and lon=");
          if (!geohex::in_bounds({step.real("lat"), step.real("lon")})) invalid(step, "point out of bounds");
        } else {
          try {
            const auto code = geohex::GeoCode::parse(step.arg("spatial"));
            if (static_cast<std::uint64_t>(code.level()) != level) invalid(step, "spatial level differs from level=");
          } catch (const Error &e) {
            if (e.code() == Errc::ValidationError) throw;
            invalid(step, e.what());
          }
        }
        if (step.has("data") && step.has("bytes")) invalid(step, "give either data= or bytes=");
        if (step.has("count") && step.number("count") == 0) invalid(step, "count must be positive");
      }
    }
  }

  std::vector<Step> expand_steps(const Scenario &sc) {
    std::vector<Step> out;
    std::map<std::string, std::uint64_t> next_index;
    for (const auto &step : sc.steps) {
      if (step.verb != "push") {
        out.push_back(step);
        continue;
      }
      const auto count = step.number_or("count", 1);
      const auto start_ts = step.number_or("ts", sc.genesis_offset_s + step.block * sc.block_interval_s);
      for (std::uint64_t k = 0; k < count; ++k) {
        Step s = step;
        s.args.erase("count");
        const auto offset = k * sc.push_interval_s;
        s.block = step.block + (offset + sc.block_interval_s - 1) / sc.block_interval_s;
        s.args["ts"] = std::to_string(start_ts + offset);
        if (!step.has("key_index")) {
          s.args["key_index"] = std::to_string(next_index[step.actor]++);
        } else if (count > 1) {
          s.args["key_index"] = std::to_string(step.number("key_index") + k);
        }
        out.push_back(std::move(s));
      }
    }
    std::stable_sort(out.begin(), out.end(), [](const Step &a, const Step &b) { return a.block < b.block; });
    return out;
  }

}  // namespace idmob::sim
