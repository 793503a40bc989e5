#pragma once
// Trace files: one event per line between a small header and footer.
//
//   # mda-trace v1
//   # config-hash <16 hex digits>
//   # seed <decimal>
//   <event line per step, as TraceEvent::to_line()>
//   # steps <decimal>
//   # trace-hash <16 hex digits>
//   # outcome terminated|deadlock|timeout|violation
//
// Replaying a file re-applies each recorded action to a fresh initial
// state and demands that every regenerated event line match the recorded
// one byte for byte; the first mismatch is reported with its step number.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "simulate.hpp"

namespace mda {

struct TraceFile {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t trace_hash = 0;
  std::string outcome;
  std::vector<std::string> lines;
};

namespace detail {

inline std::string hex16(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::uint64_t parse_hex64(const std::string& s, std::size_t line_no) {
  if (s.empty() || s.size() > 16)
    throw TraceError("trace line " + std::to_string(line_no) +
                     ": bad hex value '" + s + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else
      throw TraceError("trace line " + std::to_string(line_no) +
                       ": bad hex value '" + s + "'");
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line_no) {
  if (s.empty())
    throw TraceError("trace line " + std::to_string(line_no) +
                     ": bad number ''");
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9')
      throw TraceError("trace line " + std::to_string(line_no) +
                       ": bad number '" + s + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

// "<step> <actor>/<lane>[<src] ..." -> (step, action); throws TraceError
inline std::pair<std::uint64_t, Action> parse_event_action(
    const std::string& line, std::size_t line_no) {
  std::istringstream is(line);
  std::string step_tok, act_tok;
  if (!(is >> step_tok >> act_tok))
    throw TraceError("trace line " + std::to_string(line_no) +
                     ": bad event line");
  std::uint64_t step_no = parse_u64(step_tok, line_no);
  auto slash = act_tok.find('/');
  if (slash == std::string::npos)
    throw TraceError("trace line " + std::to_string(line_no) +
                     ": bad actor token '" + act_tok + "'");
  auto parse_id = [&](const std::string& tok) {
    try {
      return parse_agent_id(tok);
    } catch (const ConfigError& e) {
      throw TraceError("trace line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  };
  Action a;
  a.agent = parse_id(act_tok.substr(0, slash));
  std::string lane = act_tok.substr(slash + 1);
  auto angle = lane.find('<');
  if (angle != std::string::npos) {
    a.from = parse_id(lane.substr(angle + 1));
    lane.resize(angle);
  }
  if (lane == "main") a.lane = Lane::main;
  else if (lane == "result") a.lane = Lane::result;
  else if (lane == "flush") a.lane = Lane::flush;
  else
    throw TraceError("trace line " + std::to_string(line_no) +
                     ": bad lane '" + lane + "'");
  return {step_no, a};
}

}  // namespace detail

// Header and footer are split out so a long run can stream its event lines
// straight to disk between the two calls.
inline void write_trace_header(std::ostream& out, const SystemConfig& cfg,
                               std::uint64_t seed) {
  out << "# mda-trace v1\n";
  out << "# config-hash " << detail::hex16(cfg.hash()) << "\n";
  out << "# seed " << seed << "\n";
}

inline void write_trace_footer(std::ostream& out, std::uint64_t steps,
                               std::uint64_t trace_hash,
                               const std::string& outcome) {
  out << "# steps " << steps << "\n";
  out << "# trace-hash " << detail::hex16(trace_hash) << "\n";
  out << "# outcome " << outcome << "\n";
}

inline void write_trace(std::ostream& out, const SystemConfig& cfg,
                        const SimParams& params, const SimResult& result) {
  write_trace_header(out, cfg, params.seed);
  for (const auto& ev : result.trace) out << ev.to_line() << "\n";
  write_trace_footer(out, result.steps, result.trace_hash,
                     to_string(result.kind));
}

// Runs a fixed action sequence from the initial state and records the event
// lines plus their rolling hash; used to turn an explored counterexample
// path into a replayable trace file.
struct RecordedPath {
  std::vector<std::string> lines;
  std::uint64_t trace_hash = 14695981039346656037ull;
  GlobalState final_state;
};

inline RecordedPath record_path(const SystemConfig& cfg,
                                const std::vector<Action>& path) {
  RecordedPath rp;
  GlobalState s = init_state(cfg);
  for (const auto& a : path) {
    TraceEvent ev = step(s, cfg, a);
    std::string line = ev.to_line();
    rp.trace_hash = fnv1a64(line, rp.trace_hash);
    rp.trace_hash = fnv1a64("\n", rp.trace_hash);
    rp.lines.push_back(std::move(line));
  }
  rp.final_state = std::move(s);
  return rp;
}

inline TraceFile read_trace(std::istream& in) {
  TraceFile tf;
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  auto demand = [&](const std::string& what) {
    if (!next())
      throw TraceError("trace line " + std::to_string(line_no + 1) +
                       ": missing " + what);
  };
  auto field = [&](const std::string& key) -> std::string {
    std::string prefix = "# " + key + " ";
    if (line.rfind(prefix, 0) != 0)
      throw TraceError("trace line " + std::to_string(line_no) +
                       ": expected '# " + key + " ...', got '" + line + "'");
    return line.substr(prefix.size());
  };

  demand("header");
  if (line != "# mda-trace v1")
    throw TraceError("trace line 1: not a trace file (bad header '" + line +
                     "')");
  demand("config-hash");
  tf.config_hash = detail::parse_hex64(field("config-hash"), line_no);
  demand("seed");
  tf.seed = detail::parse_u64(field("seed"), line_no);

  bool saw_steps = false;
  while (true) {
    demand("footer");
    if (line.rfind("# steps ", 0) == 0) {
      tf.steps = detail::parse_u64(field("steps"), line_no);
      saw_steps = true;
      break;
    }
    detail::parse_event_action(line, line_no);  // shape check
    tf.lines.push_back(line);
  }
  if (!saw_steps || tf.steps != tf.lines.size())
    throw TraceError("trace line " + std::to_string(line_no) +
                     ": step count does not match the event lines");
  demand("trace-hash");
  tf.trace_hash = detail::parse_hex64(field("trace-hash"), line_no);
  demand("outcome");
  tf.outcome = field("outcome");
  if (tf.outcome != "terminated" && tf.outcome != "deadlock" &&
      tf.outcome != "timeout" && tf.outcome != "violation")
    throw TraceError("trace line " + std::to_string(line_no) +
                     ": unknown outcome '" + tf.outcome + "'");
  return tf;
}

struct ReplayResult {
  bool ok = false;
  std::uint64_t first_divergence = 0;  // 1-based step of the first mismatch
  std::string reason;
  std::string expected;
  std::string got;
  GlobalState final_state;
};

inline ReplayResult replay_trace(const SystemConfig& cfg, const TraceFile& tf) {
  ReplayResult rr;
  if (tf.config_hash != cfg.hash()) {
    rr.reason = "config hash mismatch: trace was recorded on a different "
                "configuration";
    return rr;
  }
  GlobalState s = init_state(cfg);
  for (std::size_t i = 0; i < tf.lines.size(); ++i) {
    rr.first_divergence = i + 1;
    Action a;
    try {
      a = detail::parse_event_action(tf.lines[i], i + 1).second;
    } catch (const TraceError& e) {
      rr.reason = e.what();
      rr.final_state = std::move(s);
      return rr;
    }
    auto acts = enabled(s, cfg);
    if (std::find(acts.begin(), acts.end(), a) == acts.end()) {
      rr.reason = "recorded action " + to_string(a) +
                  " is not enabled at step " + std::to_string(i + 1);
      rr.final_state = std::move(s);
      return rr;
    }
    TraceEvent ev;
    try {
      ev = step(s, cfg, a);
    } catch (const std::exception& e) {
      rr.reason = std::string("replay step failed: ") + e.what();
      rr.final_state = std::move(s);
      return rr;
    }
    if (ev.to_line() != tf.lines[i]) {
      rr.reason = "snapshot mismatch";
      rr.expected = tf.lines[i];
      rr.got = ev.to_line();
      rr.final_state = std::move(s);
      return rr;
    }
  }
  rr.ok = true;
  rr.first_divergence = 0;
  rr.final_state = std::move(s);
  return rr;
}

}  // namespace mda
