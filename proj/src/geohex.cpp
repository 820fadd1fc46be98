#include "idmob/geohex.hpp"

#include <array>
#include <cmath>
#include <optional>

#include "idmob/error.hpp"

namespace idmob::geohex {

  GeoCode make_code(std::string s) {
    return GeoCode(std::move(s));
  }

  namespace {
    // Only the first 30 letters are reachable: the leading pair encodes a
    // three-digit base-10 number built from base-9 digits (max 888).
    constexpr std::string_view kKey = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    constexpr int kHeadRadix = 30;
    constexpr double kBase = 20037508.34;
    const double kPi = std::acos(-1.0);
    const double kSlope = std::tan(kPi * (30.0 / 180.0));

    std::int64_t pow3(int e) {
      std::int64_t v = 1;
      for (int i = 0; i < e; ++i) v *= 3;
      return v;
    }

    double hex_size(int level) {
      return kBase / std::pow(3.0, level + 3);
    }

    struct Xy {
      std::int64_t x;
      std::int64_t y;
      bool operator==(const Xy &) const = default;
    };

    void check_level(int level) {
      if (level < kMinLevel || level > kMaxLevel) {
        throw Error(Errc::LevelOutOfRange, std::to_string(level));
      }
    }

    // Folds coordinates that crossed the antimeridian back into the
    // canonical strip.
    Xy adjust(std::int64_t x, std::int64_t y, int level) {
      const auto max_steps = pow3(level + 2);
      const auto steps = std::llabs(x - y);
      if (steps == max_steps && x > y) {
        std::swap(x, y);
      } else if (steps > max_steps) {
        const auto dif = steps - max_steps;
        const auto dif_x = dif / 2;
        const auto dif_y = dif - dif_x;
        if (x > y) {
          auto edge_x = x - dif_x;
          auto edge_y = y + dif_y;
          std::swap(edge_x, edge_y);
          x = edge_x + dif_x;
          y = edge_y - dif_y;
        } else if (y > x) {
          auto edge_x = x + dif_x;
          auto edge_y = y - dif_y;
          std::swap(edge_x, edge_y);
          x = edge_x - dif_x;
          y = edge_y + dif_y;
        }
      }
      return {x, y};
    }

    Xy xy_of(GeoPoint p, int level) {
      const double size = hex_size(level);
      const double mx = p.lon * kBase / 180.0;
      double my = std::log(std::tan((90.0 + p.lat) * kPi / 360.0)) / (kPi / 180.0);
      my *= kBase / 180.0;
      const double unit_x = 6 * size;
      const double unit_y = 6 * size * kSlope;
      const double pos_x = (mx + my / kSlope) / unit_x;
      const double pos_y = (my - kSlope * mx) / unit_y;
      const double x0 = std::floor(pos_x);
      const double y0 = std::floor(pos_y);
      const double qx = pos_x - x0;
      const double qy = pos_y - y0;
      double hx = std::floor(pos_x + 0.5);
      double hy = std::floor(pos_y + 0.5);
      if (qy > -qx + 1) {
        if (qy < 2 * qx && qy > 0.5 * qx) {
          hx = x0 + 1;
          hy = y0 + 1;
        }
      } else if (qy < -qx + 1) {
        if (qy > 2 * qx - 1 && qy < 0.5 * qx + 0.5) {
          hx = x0;
          hy = y0;
        }
      }
      return adjust(static_cast<std::int64_t>(hx), static_cast<std::int64_t>(hy), level);
    }

    GeoPoint center_of(Xy xy, int level) {
      const double size = hex_size(level);
      const double unit_x = 6 * size;
      const double unit_y = 6 * size * kSlope;
      const double my = (kSlope * static_cast<double>(xy.x) * unit_x
                         + static_cast<double>(xy.y) * unit_y)
                        / 2;
      const double mx = (my - static_cast<double>(xy.y) * unit_y) / kSlope;
      GeoPoint p;
      p.lon = (mx / kBase) * 180.0;
      const double lat = (my / kBase) * 180.0;
      p.lat = 180.0 / kPi * (2.0 * std::atan(std::exp(lat * kPi / 180.0)) - kPi / 2.0);
      if (std::llabs(xy.x - xy.y) == pow3(level + 2)) {
        p.lon = -180.0;
      }
      return p;
    }

    std::string code_of(Xy xy, int level) {
      const GeoPoint center = center_of(xy, level);
      auto hx = xy.x;
      auto hy = xy.y;
      if (std::llabs(hx - hy) == pow3(level + 2) && hx > hy) {
        std::swap(hx, hy);
      }

      std::array<int, kMaxLevel + 3> cx{};
      std::array<int, kMaxLevel + 3> cy{};
      auto split = [](std::int64_t &mod, std::int64_t step) {
        const auto half = (step + 1) / 2;
        if (mod >= half) {
          mod -= step;
          return 2;
        }
        if (mod <= -half) {
          mod += step;
          return 0;
        }
        return 1;
      };
      for (int i = 0; i <= level + 2; ++i) {
        const auto step = pow3(level + 2 - i);
        cx[i] = split(hx, step);
        cy[i] = split(hy, step);
        if (i == 2 && (center.lon == -180.0 || center.lon >= 0)) {
          if (cx[1] == cy[1] && cx[2] == cy[2]) {
            if (cx[0] == 2 && cy[0] == 1) {
              cx[0] = 1;
              cy[0] = 2;
            } else if (cx[0] == 1 && cy[0] == 0) {
              cx[0] = 0;
              cy[0] = 1;
            }
          }
        }
      }

      const int head = (cx[0] * 3 + cy[0]) * 100 + (cx[1] * 3 + cy[1]) * 10 + (cx[2] * 3 + cy[2]);
      std::string out;
      out.reserve(level + 2);
      out.push_back(kKey[head / kHeadRadix]);
      out.push_back(kKey[head % kHeadRadix]);
      for (int i = 3; i <= level + 2; ++i) {
        out.push_back(static_cast<char>('0' + cx[i] * 3 + cy[i]));
      }
      return out;
    }

    Xy xy_from_digits(const std::array<int, kMaxLevel + 3> &digits, int level) {
      std::int64_t x = 0;
      std::int64_t y = 0;
      for (int i = 0; i <= level + 2; ++i) {
        const auto step = pow3(level + 2 - i);
        const int dx = digits[i] / 3;
        const int dy = digits[i] % 3;
        x += (dx - 1) * step;
        y += (dy - 1) * step;
      }
      return adjust(x, y, level);
    }

    std::optional<int> key_index(char c) {
      auto pos = kKey.find(c);
      if (pos == std::string_view::npos || pos >= static_cast<std::size_t>(kHeadRadix)) {
        return std::nullopt;
      }
      return static_cast<int>(pos);
    }

    // Returns lattice coordinates for a well-formed, canonical code.
    Xy locate(std::string_view text) {
      if (text.size() < 2 || text.size() > kMaxCodeLength) {
        throw Error(Errc::MalformedCode, "length " + std::to_string(text.size()));
      }
      const int level = static_cast<int>(text.size()) - 2;
      const auto a1 = key_index(text[0]);
      const auto a2 = key_index(text[1]);
      if (!a1 || !a2) {
        throw Error(Errc::MalformedCode, "bad leading symbol in '" + std::string(text) + "'");
      }
      const int head = *a1 * kHeadRadix + *a2;
      std::array<int, kMaxLevel + 3> digits{};
      digits[0] = head / 100;
      digits[1] = (head / 10) % 10;
      digits[2] = head % 10;
      for (int i = 2; i < static_cast<int>(text.size()); ++i) {
        const char c = text[i];
        if (c < '0' || c > '8') {
          throw Error(Errc::MalformedCode, "bad digit in '" + std::string(text) + "'");
        }
        digits[i + 1] = c - '0';
      }
      if (digits[0] > 8 || digits[1] > 8 || digits[2] > 8) {
        throw Error(Errc::MalformedCode, "head out of range in '" + std::string(text) + "'");
      }

      // The encoder rewrites a leading 7 to 5 and 3 to 1 on the eastern
      // half when the next two digits lie on the diagonal; try both readings.
      std::array<std::array<int, kMaxLevel + 3>, 2> readings{digits, digits};
      auto diagonal = [](int d) { return d == 0 || d == 4 || d == 8; };
      if (diagonal(digits[1]) && diagonal(digits[2])) {
        if (digits[0] == 5) readings[1][0] = 7;
        if (digits[0] == 1) readings[1][0] = 3;
      }
      for (const auto &r : readings) {
        const auto xy = xy_from_digits(r, level);
        if (code_of(xy, level) == text) {
          return xy;
        }
      }
      throw Error(Errc::MalformedCode, "non-canonical code '" + std::string(text) + "'");
    }
  }  // namespace

  bool in_bounds(GeoPoint p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -kMaxLatitude
           && p.lat <= kMaxLatitude && p.lon >= -180.0 && p.lon <= 180.0;
  }

  GeoCode GeoCode::parse(std::string_view text) {
    locate(text);
    return GeoCode(std::string(text));
  }

  GeoCode encode(GeoPoint p, int level) {
    check_level(level);
    if (!in_bounds(p)) {
      throw Error(Errc::PointOutOfBounds,
                  "(" + std::to_string(p.lat) + ", " + std::to_string(p.lon) + ")");
    }
    return make_code(code_of(xy_of(p, level), level));
  }

  Cell decode(const GeoCode &code) {
    return decode(std::string_view(code.str()));
  }

  Cell decode(std::string_view text) {
    const auto xy = locate(text);
    const int level = static_cast<int>(text.size()) - 2;
    return Cell{center_of(xy, level), level, make_code(std::string(text)), xy.x, xy.y};
  }

  bool contains(const GeoCode &coarse, const GeoCode &fine) {
    if (coarse.level() > fine.level()) {
      throw Error(Errc::LevelOrderViolation, coarse.str() + " finer than " + fine.str());
    }
    if (coarse.level() == fine.level()) {
      return coarse == fine;
    }
    // Hexagons of every level share orientation, so two cells overlap iff
    // their centers are closer than the sum of inradii along each of the
    // three edge normals. In fine-lattice units a lattice point (a, b)
    // projects onto the normals as a+b, 2a-b and 2b-a; a fine inradius is 1
    // and a coarse one is 3^d. Integer arithmetic keeps this exact.
    const auto c = decode(coarse);
    const auto f = decode(fine);
    const auto scale = pow3(fine.level() - coarse.level());
    const auto reach = scale + 1;
    const auto period = pow3(fine.level() + 2);
    for (int wrap = -1; wrap <= 1; ++wrap) {
      const auto dx = f.x + wrap * period - c.x * scale;
      const auto dy = f.y - wrap * period - c.y * scale;
      if (std::llabs(dx + dy) < reach && std::llabs(2 * dx - dy) < reach
          && std::llabs(2 * dy - dx) < reach) {
        return true;
      }
    }
    return false;
  }

  std::vector<GeoCode> spatial_filter(const GeoCode &query, std::span<const GeoCode> candidates) {
    for (const auto &c : candidates) {
      if (c.level() < query.level()) {
        throw Error(Errc::LevelOrderViolation, c.str());
      }
    }
    std::vector<GeoCode> out;
    for (const auto &c : candidates) {
      if (contains(query, c)) out.push_back(c);
    }
    return out;
  }

}  // namespace idmob::geohex
