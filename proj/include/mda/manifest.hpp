#pragma once
// Run manifest: one JSON file per CLI invocation recording what ran, with
// which inputs and limits, what it concluded, and which files it wrote.
// Everything except wall_ms is a pure function of (inputs, seed, version).

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "version.hpp"

namespace mda {

struct RunManifest {
  std::string command;
  std::string config_hash;  // 16 hex digits, same rendering as trace headers
  std::vector<std::uint64_t> seeds;
  nlohmann::json limits = nlohmann::json::object();
  nlohmann::json verdicts = nlohmann::json::object();
  std::vector<std::string> artifacts;  // files written, manifest excluded
  std::uint64_t wall_ms = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seeds"] = seeds;
    j["limits"] = limits;
    j["tool_version"] = tool_version;
    j["verdicts"] = verdicts;
    j["artifacts"] = artifacts;
    j["wall_ms"] = wall_ms;
    return j;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << to_json().dump(2) << "\n";
  }
};

}  // namespace mda
