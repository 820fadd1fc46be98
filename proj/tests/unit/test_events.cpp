#include <set>
#include <sstream>

#include "idmob/events.hpp"
#include "support.hpp"

using namespace idmob;
using namespace idmob::events;

namespace {
  Address addr(std::uint8_t b) {
    Address a;
    a.bytes.fill(b);
    return a;
  }
}  // namespace

TEST_CASE("every kind survives a format/parse roundtrip") {
  Handle h;
  h.bytes.fill(0xab);
  std::vector<EventBody> bodies = {
      RunStarted{7, 14, 1800, 0, "sha256"},
      RunFinished{12},
      ActorCreated{"alice \"the buyer\"", "customer", addr(1)},
      Minted{addr(1), 5, 6},
      Transferred{addr(1), addr(2), 9, AssetKind::Token},
      VendorRegistered{addr(2), "Acme \\ Co", {1, 2}, {10, 25}},
      VendorRegistered{addr(3), "", {}, {}},
      CustomerRegistered{addr(1), "00ff"},
      DeviceAdded{addr(2), addr(4)},
      DataPushed{addr(2), addr(4), 1, 0, h, "hr:u16", 1800, "XM566370240", 3, crypto::EncryptionScheme::BlockAead},
      DataRequested{addr(1), addr(2), 1, 0, 10, 0},
      KeyTransferred{addr(2), addr(1), 1, 0, h, Bytes{1, 2, 3}},
      KeyTransferred{addr(2), addr(1), 1, 0, h, Bytes{}},
      VoteCast{addr(1), addr(2), -1, -3},
      PriceUpdated{addr(2), 1, 0},
      ChannelOpened{1, addr(1), addr(2), 20, 0},
      ChannelClosed{1, 5, 15, 5, 20},
      ChannelChallenged{1, 9, 11, 9},
      ChannelSettled{1, 9, 11, 9, true},
      PayloadVerified{addr(1), addr(2), 1, 0, false},
      StepFailed{"rogue", "sensor_data_push", "UnauthorizedDevice"},
  };
  EventLog log;
  for (auto &b : bodies) log.append(3, addr(9), 42, b);
  std::set<std::string> kinds;
  for (const auto &ev : log.all()) {
    const auto line = format_event(ev);
    CHECK(line.find('\n') == std::string::npos);
    const auto back = parse_event(line);
    CHECK(back == ev);
    CHECK(format_event(back) == line);
    kinds.insert(std::string(ev.kind()));
  }
  CHECK(kinds.size() == event_kind_names().size());

  std::stringstream buf;
  write_event_log(buf, log.all());
  const auto read = read_event_log(buf);
  REQUIRE(read.size() == log.size());
  for (std::size_t i = 0; i < read.size(); ++i) CHECK(read[i] == log.all()[i]);
}

TEST_CASE("line layout starts with seq, block, kind") {
  EventLog log;
  const auto &ev = log.append(4, addr(1), 61, PriceUpdated{addr(2), 1, 30});
  const auto line = format_event(ev);
  CHECK(line.rfind("1 4 PriceUpdated ", 0) == 0);
}

TEST_CASE("malformed lines are rejected") {
  CHECK_ERRC(parse_event(""), Errc::ParseError);
  CHECK_ERRC(parse_event("1 1 NoSuchKind 00 0"), Errc::ParseError);
  CHECK_ERRC(parse_event("1 1 RunFinished 0000000000000000000000000000000000000000 0"), Errc::ParseError);
  CHECK_ERRC(parse_event("1 1 RunFinished 0000000000000000000000000000000000000000 0 5 6"), Errc::ParseError);
  CHECK_ERRC(parse_event("x 1 RunFinished 0000000000000000000000000000000000000000 0 5"), Errc::ParseError);
  std::stringstream bad("1 1 RunFinished 0000000000000000000000000000000000000000 0 5\nbroken\n");
  try {
    read_event_log(bad);
    FAIL("expected ParseError");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("poll respects block visibility") {
  EventLog log;
  CHECK(log.poll(0, 0).empty());
  log.append(1, addr(1), 0, RunFinished{1});
  log.append(2, addr(1), 0, RunFinished{2});
  CHECK(log.poll(0, 0).empty());
  CHECK(log.poll(0, 1).size() == 1);
  CHECK(log.poll(0, 2).size() == 2);
  CHECK(log.poll(1, 2).size() == 1);
  CHECK(log.poll(1, 2).front().seq == 2);
  CHECK(log.last_seq() == 2);
}
