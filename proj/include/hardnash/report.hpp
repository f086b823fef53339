// Deterministic structured run records: one check entry per line, stable
// formatting, no wall-clock content.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hardnash/bits.hpp"

namespace hardnash {

inline constexpr const char* kFormatVersion = "hardnash-forge/1";

struct CheckEntry {
  std::string name;
  std::string measured;   // already formatted
  std::string threshold;  // already formatted; may be empty
  bool pass = false;
  std::string note;  // counterexample or context; may be empty

  static CheckEntry num(const std::string& name, double measured, double threshold, bool pass,
                        const std::string& note = "") {
    return CheckEntry{name, fmt_double(measured), fmt_double(threshold), pass, note};
  }
  static CheckEntry flag(const std::string& name, bool pass, const std::string& note = "") {
    return CheckEntry{name, pass ? "1" : "0", "", pass, note};
  }
};

struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;  // echoed key/value pairs
  std::vector<CheckEntry> checks;
  std::map<std::string, std::uint64_t> counters;  // deterministic work counters

  void config_kv(const std::string& k, const std::string& v) { config.emplace_back(k, v); }
  void add(CheckEntry e) { checks.push_back(std::move(e)); }
  void bump(const std::string& k, std::uint64_t by = 1) { counters[k] += by; }

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  std::string render() const {
    std::string out;
    out += std::string("format_version: ") + kFormatVersion + "\n";
    out += "command: " + command + "\n";
    for (const auto& [k, v] : config) out += "config: " + k + "=" + v + "\n";
    for (const auto& c : checks) {
      out += "check: name=" + c.name + " measured=" + c.measured;
      if (!c.threshold.empty()) out += " threshold=" + c.threshold;
      out += std::string(" verdict=") + (c.pass ? "pass" : "fail");
      if (!c.note.empty()) out += " note=" + c.note;
      out += "\n";
    }
    for (const auto& [k, v] : counters) out += "counter: " + k + "=" + std::to_string(v) + "\n";
    out += std::string("result: ") + (all_pass() ? "pass" : "fail") + "\n";
    return out;
  }
};

}  // namespace hardnash
