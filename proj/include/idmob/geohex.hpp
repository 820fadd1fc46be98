#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace idmob::geohex {

  /// Hexagonal geocoding compatible with GeoHex v3.
  ///
  /// A code is two letters followed by `level` digits in 0..8; levels run
  /// 0..15, so codes are 2..17 characters. Each level splits a hexagon's
  /// lattice step by three.

  inline constexpr int kMinLevel = 0;
  inline constexpr int kMaxLevel = 15;
  inline constexpr std::size_t kMaxCodeLength = kMaxLevel + 2;
  /// Web-Mercator latitude limit.
  inline constexpr double kMaxLatitude = 85.0511;

  struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
  };

  bool in_bounds(GeoPoint p);

  class GeoCode {
   public:
    GeoCode() = default;

    /// Syntactic and canonical check; throws Error(MalformedCode).
    static GeoCode parse(std::string_view text);

    const std::string &str() const {
      return code_;
    }
    int level() const {
      return static_cast<int>(code_.size()) - 2;
    }

    auto operator<=>(const GeoCode &) const = default;

   private:
    explicit GeoCode(std::string code) : code_(std::move(code)) {}
    friend GeoCode make_code(std::string);

    std::string code_;
  };

  struct Cell {
    GeoPoint center;
    int level = 0;
    GeoCode code;
    /// Lattice coordinates at `level`.
    std::int64_t x = 0;
    std::int64_t y = 0;
  };

  GeoCode encode(GeoPoint p, int level);
  Cell decode(const GeoCode &code);
  Cell decode(std::string_view text);

  /// True iff `fine`'s hexagon overlaps `coarse`'s hexagon with positive area,
  /// so every point that encodes to `fine` at its level is a candidate for
  /// `coarse`. At equal levels this is equality. Throws LevelOrderViolation
  /// when coarse is the finer of the two.
  bool contains(const GeoCode &coarse, const GeoCode &fine);

  /// Candidates contained in `query`, in input order.
  std::vector<GeoCode> spatial_filter(const GeoCode &query, std::span<const GeoCode> candidates);

}  // namespace idmob::geohex
