#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "idmob/events.hpp"

namespace idmob::sim {

  /// Flat key=value summary of a run, written as report.txt.
  struct Report {
    std::map<std::string, std::string> fields;

    void set(const std::string &key, const std::string &value) {
      fields[key] = value;
    }
    void set(const std::string &key, std::uint64_t value) {
      fields[key] = std::to_string(value);
    }
    void set_signed(const std::string &key, std::int64_t value) {
      fields[key] = std::to_string(value);
    }
    std::optional<std::string> get(const std::string &key) const;

    std::string to_text() const;
    static Report parse(std::string_view text);

    bool operator==(const Report &) const = default;
  };

  /// Rebuilds the report from an event log alone.
  Report report_from_events(std::span<const Event> events);

  /// Keys present in one report and missing or different in the other.
  std::vector<std::string> report_diff(const Report &a, const Report &b);

}  // namespace idmob::sim
