#pragma once

#include <doctest.h>

#include <fstream>
#include <random>
#include <string>

#include "idmob/error.hpp"
#include "idmob/types.hpp"

#define CHECK_ERRC(expr, errc)                                                                   \
  do {                                                                                           \
    try {                                                                                        \
      (void)(expr);                                                                              \
      FAIL_CHECK("expected " << idmob::errc_name(errc) << " from " #expr);                      \
    } catch (const idmob::Error &e_) {                                                           \
      CHECK_MESSAGE(e_.code() == (errc), "got " << idmob::errc_name(e_.code()) << ": " << e_.what()); \
    }                                                                                            \
  } while (0)

namespace test {
  inline std::string data_path(const std::string &name) {
    return std::string(IDMOB_TEST_DATA) + "/" + name;
  }

  inline idmob::Bytes random_bytes(std::mt19937_64 &rng, std::size_t n) {
    idmob::Bytes out(n);
    for (auto &b : out) b = static_cast<std::uint8_t>(rng());
    return out;
  }
}  // namespace test
