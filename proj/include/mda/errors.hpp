#pragma once
#include <stdexcept>
#include <string>

namespace mda {

// bad configuration or schema (caught at lint/load time where possible)
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// an agent was driven outside its protocol (wrong phase, unknown attribute, ...)
struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// a send with no channel between the endpoints
struct TopologyError : std::runtime_error {
  explicit TopologyError(const std::string& what) : std::runtime_error(what) {}
};

// a trace file that cannot be parsed
struct TraceError : std::runtime_error {
  explicit TraceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mda
