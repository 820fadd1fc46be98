#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "idmob/crypto.hpp"
#include "idmob/geohex.hpp"
#include "idmob/marketplace.hpp"
#include "idmob/sim/runner.hpp"

namespace py = pybind11;
using namespace idmob;

namespace {

  py::bytes to_py(ByteView b) {
    return py::bytes(reinterpret_cast<const char *>(b.data()), b.size());
  }

  Bytes from_py(const py::bytes &b) {
    const std::string_view s = b;
    return Bytes(s.begin(), s.end());
  }

  crypto::Key32 key32(const py::bytes &b) {
    const std::string_view s = b;
    if (s.size() != 32) throw Error(Errc::MalformedKey, "expected 32 bytes, got " + std::to_string(s.size()));
    crypto::Key32 k{};
    std::copy(s.begin(), s.end(), k.begin());
    return k;
  }

  crypto::SymKey sym(const py::bytes &key, const std::string &scheme) {
    return {key32(key), 0, crypto::parse_scheme(scheme)};
  }

  Address addr(const std::string &hex) {
    return Address::from_hex(hex);
  }

  py::dict report_dict(const sim::Report &r) {
    py::dict d;
    for (const auto &[k, v] : r.fields) d[py::str(k)] = v;
    return d;
  }

  std::string log_text(std::span<const Event> events) {
    std::ostringstream out;
    write_event_log(out, events);
    return out.str();
  }

  // One ledger, blob store, event log, channel registry and contract.
  class Market {
   public:
    explicit Market(std::uint64_t seed, std::uint64_t block_interval_s)
        : world_(LedgerConfig{.seed = seed, .block_interval_s = block_interval_s}, BlobStoreConfig{},
                 kDefaultDisputeWindow) {}

    sim::World &w() {
      return world_;
    }

   private:
    sim::World world_;
  };

}  // namespace

PYBIND11_MODULE(_idmob, m) {
  m.doc() = "IoT data marketplace core";

  static py::handle error_type = py::exception<Error>(m, "Error").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error &e) {
      py::object err = error_type(py::str(e.what()));
      err.attr("code") = py::str(std::string(errc_name(e.code())));
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  m.attr("HASH_FUNCTION") = std::string(kHashFunctionName);
  m.attr("DEFAULT_BLOCK_INTERVAL_S") = kDefaultBlockIntervalS;

  // geohex
  m.def("geohex_encode", [](double lat, double lon, int level) { return geohex::encode({lat, lon}, level).str(); },
        py::arg("lat"), py::arg("lon"), py::arg("level"));
  m.def(
      "geohex_decode",
      [](const std::string &code) {
        const auto c = geohex::decode(code);
        return py::make_tuple(c.center.lat, c.center.lon, c.level);
      },
      "(lat, lon, level) of the cell center");
  m.def("geohex_contains", [](const std::string &coarse, const std::string &fine) {
    return geohex::contains(geohex::GeoCode::parse(coarse), geohex::GeoCode::parse(fine));
  });
  m.def("spatial_filter", [](const std::string &query, const std::vector<std::string> &codes) {
    std::vector<geohex::GeoCode> parsed;
    for (const auto &c : codes) parsed.push_back(geohex::GeoCode::parse(c));
    std::vector<std::string> out;
    for (const auto &c : geohex::spatial_filter(geohex::GeoCode::parse(query), parsed)) out.push_back(c.str());
    return out;
  });

  // crypto
  m.def("sha256", [](const py::bytes &data) {
    const auto d = sha256(from_py(data));
    return to_hex(d);
  });
  m.def("master_from_seed", [](const py::bytes &seed) {
    const auto s = crypto::MasterKey::from_seed(from_py(seed)).secret();
    return to_py(s);
  });
  m.def(
      "derive_key", [](const py::bytes &master, std::uint64_t index) {
        return to_py(crypto::derive_key(crypto::MasterKey(key32(master)), index).key);
      },
      py::arg("master"), py::arg("index"));
  m.def(
      "encrypt",
      [](const py::bytes &key, const py::bytes &plaintext, const std::string &scheme) {
        return to_py(crypto::encrypt(sym(key, scheme), from_py(plaintext)));
      },
      py::arg("key"), py::arg("plaintext"), py::arg("scheme") = "chacha20-poly1305");
  m.def(
      "decrypt",
      [](const py::bytes &key, const py::bytes &ciphertext, const std::string &scheme) {
        return to_py(crypto::decrypt(sym(key, scheme), from_py(ciphertext)));
      },
      py::arg("key"), py::arg("ciphertext"), py::arg("scheme") = "chacha20-poly1305");
  m.def(
      "generate_keypair",
      [](const py::bytes &seed) {
        const auto kp = crypto::generate_keypair(from_py(seed));
        return py::make_tuple(kp.public_key.hex(), to_py(kp.private_key.bytes));
      },
      "(public key hex, 64-byte private key)");
  m.def("wrap_key", [](const std::string &public_key, const py::bytes &key, const std::string &recipient) {
    return to_py(crypto::wrap_key(crypto::PublicKey::parse(public_key), key32(key), addr(recipient)).ciphertext);
  });
  m.def("unwrap_key", [](const py::bytes &private_key, const py::bytes &wrapped, const std::string &recipient) {
    const auto priv = crypto::PrivateKey::from_bytes(from_py(private_key));
    return to_py(crypto::unwrap_key(priv, crypto::WrappedKey{from_py(wrapped), addr(recipient)}));
  });

  // contract world
  py::class_<Market>(m, "Market")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed") = 0,
           py::arg("block_interval_s") = kDefaultBlockIntervalS)
      .def("create_account", [](Market &x) { return x.w().ledger.create_account().hex(); })
      .def(
          "mint",
          [](Market &x, const std::string &a, std::uint64_t native, std::uint64_t tokens) {
            x.w().ledger.mint(addr(a), native, tokens);
          },
          py::arg("address"), py::arg("native") = 0, py::arg("tokens") = 0)
      .def(
          "transfer",
          [](Market &x, const std::string &from, const std::string &to, std::uint64_t amount, const std::string &kind) {
            x.w().ledger.transfer(addr(from), addr(to), amount, parse_asset_kind(kind));
          },
          py::arg("sender"), py::arg("recipient"), py::arg("amount"), py::arg("kind") = "token")
      .def("balance",
           [](Market &x, const std::string &a) {
             const auto b = x.w().ledger.balance_of(addr(a));
             py::dict d;
             d["native"] = b.native;
             d["tokens"] = b.tokens;
             return d;
           })
      .def("spent_by", [](Market &x, const std::string &a) { return x.w().ledger.spent_by(addr(a)); })
      .def("last_cost", [](Market &x) {
        const auto &r = x.w().ledger.receipts();
        return r.empty() ? std::uint64_t{0} : r.back().cost_units;
      })
      .def("tick", [](Market &x) { return x.w().ledger.tick().height; })
      .def_property_readonly("height", [](Market &x) { return x.w().ledger.height(); })
      .def_property_readonly("timestamp", [](Market &x) { return x.w().ledger.clock().timestamp_s(); })
      .def("put", [](Market &x, const py::bytes &data) { return x.w().store.put(from_py(data), x.w().ledger.height()).hex(); })
      .def("get",
           [](Market &x, const std::string &handle) {
             const auto r = x.w().store.get(Handle::from_hex(handle));
             return py::make_tuple(to_py(r.content), r.latency_ms);
           })
      .def("vendor_register",
           [](Market &x, const std::string &caller, const std::string &prefix, const std::vector<SensorType> &sensors,
              const std::vector<std::uint64_t> &prices) {
             return x.w().market.vendor_register(addr(caller), prefix, sensors, prices).hex();
           })
      .def("customer_register",
           [](Market &x, const std::string &caller, const std::string &pub_key) {
             return x.w().market.customer_register(addr(caller), pub_key).hex();
           })
      .def("add_valid_device",
           [](Market &x, const std::string &caller, const std::string &device) {
             return x.w().market.add_valid_device(addr(caller), addr(device)).hex();
           })
      .def(
          "sensor_data_push",
          [](Market &x, const std::string &caller, const std::string &vendor, SensorType type, const std::string &schema,
             std::uint64_t timestamp, const std::string &spatial, const std::string &handle, std::uint64_t key_index,
             const std::string &scheme) {
            return x.w()
                .market
                .sensor_data_push(addr(caller), addr(vendor), type, schema, timestamp, spatial,
                                  Handle::from_hex(handle), key_index, crypto::parse_scheme(scheme))
                .hex();
          },
          py::arg("caller"), py::arg("vendor"), py::arg("sensor_type"), py::arg("schema"), py::arg("timestamp"),
          py::arg("spatial"), py::arg("handle"), py::arg("key_index"), py::arg("scheme") = "chacha20-poly1305")
      .def("update_sensor_price",
           [](Market &x, const std::string &caller, SensorType type, std::uint64_t price) {
             return x.w().market.update_sensor_price(addr(caller), type, price);
           })
      .def("request_for_data",
           [](Market &x, const std::string &caller, const std::string &vendor, SensorType type, std::uint64_t index) {
             return x.w().market.request_for_data(addr(caller), addr(vendor), type, index).hex();
           })
      .def("transfer_key_and_data",
           [](Market &x, const std::string &caller, const py::bytes &wrapped, const std::string &to, SensorType type,
              std::uint64_t index) {
             return x.w().market.transfer_key_and_data(addr(caller), crypto::WrappedKey{from_py(wrapped), addr(to)},
                                                        addr(to), type, index);
           })
      .def("vote_for_vendor",
           [](Market &x, const std::string &caller, const std::string &vendor, const std::string &dir) {
             if (dir != "up" && dir != "down") throw py::value_error("dir must be 'up' or 'down'");
             return x.w().market.vote_for_vendor(addr(caller), addr(vendor), dir == "up" ? Vote::Up : Vote::Down);
           })
      .def("query_sensor",
           [](Market &x, SensorType type, std::uint64_t index) { return x.w().market.query_sensor(type, index).hex(); })
      .def("sensor_data_pull",
           [](Market &x, const std::string &vendor, SensorType type, std::uint64_t index) {
             const auto r = x.w().market.sensor_data_pull(addr(vendor), type, index);
             py::dict d;
             d["schema"] = r.schema;
             d["timestamp"] = r.timestamp;
             d["spatial"] = r.spatial;
             d["price"] = r.price;
             return d;
           })
      .def("sensor_data_length",
           [](Market &x, const std::string &vendor, SensorType type) {
             return x.w().market.sensor_data_length(addr(vendor), type);
           })
      .def("vendor_length", [](Market &x) { return x.w().market.vendor_length(); })
      .def("get_vendor", [](Market &x, const std::string &vendor) { return x.w().market.get_vendor(addr(vendor)); })
      .def("get_sensor_price",
           [](Market &x, const std::string &vendor, SensorType type) {
             return x.w().market.get_sensor_price(addr(vendor), type);
           })
      .def("get_votes", [](Market &x, const std::string &vendor) { return x.w().market.get_votes(addr(vendor)); })
      .def("delivered_key",
           [](Market &x, const std::string &vendor, SensorType type, std::uint64_t index) {
             return to_py(x.w().market.payload(addr(vendor), type, index).encrypted_key.ciphertext);
           })
      .def(
          "poll_events",
          [](Market &x, std::uint64_t since) {
            std::vector<std::string> out;
            for (const auto &e : x.w().market.poll_events(since)) out.push_back(format_event(e));
            return out;
          },
          py::arg("since") = 0)
      .def("event_log", [](Market &x) { return log_text(x.w().log.all()); });

  // simulator
  m.def(
      "run_scenario",
      [](const std::string &text, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> block_interval,
         bool concurrent) {
        sim::RunOptions opts;
        opts.seed = seed;
        opts.block_interval_s = block_interval;
        opts.concurrent = concurrent;
        sim::Runner runner(sim::parse_scenario(text), opts);
        const auto report = runner.run();
        return py::make_tuple(report_dict(report), log_text(runner.log().all()));
      },
      "Runs scenario text; returns (report, event log text).", py::arg("text"), py::arg("seed") = py::none(),
      py::arg("block_interval") = py::none(), py::arg("concurrent") = false);
  m.def("replay", [](const std::string &log) {
    std::istringstream in(log);
    const auto events = read_event_log(in);
    replay_contract(events);
    return report_dict(sim::report_from_events(events));
  });
}
