#pragma once
// Seeded random simulation.
//
// Picks uniformly among the enabled actions with a counter-based generator
// keyed by (seed, step), so a run is a pure function of configuration and
// seed: no generator state to carry, any step's choice can be recomputed
// in isolation. Inline monitors watch the counter predicate, update and
// generation monotonicity, and the accounting ledger while the run goes.

#include <cstdint>
#include <functional>
#include <vector>

#include "explore.hpp"

namespace mda {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct SimParams {
  std::uint64_t seed = 1;
  std::uint64_t max_steps = 1000000;
  bool capture_trace = false;
};

struct SimResult {
  enum class Kind : std::uint8_t { terminated, deadlock, timeout };
  Kind kind = Kind::timeout;
  std::uint64_t steps = 0;
  std::uint64_t trace_hash = 0;
  bool stop_broadcast = false;
  bool residual_work = false;
  bool spawn_capped = false;
  bool ledger_violation = false;
  bool cc_violated = false;
  std::uint64_t cc_violation_step = 0;
  bool operability_met = false;
  bool monotone_ok = true;
  std::uint64_t ledger_checks = 0;
  GlobalState final_state;
  std::vector<TraceEvent> trace;
};

inline const char* to_string(SimResult::Kind k) {
  switch (k) {
    case SimResult::Kind::terminated: return "terminated";
    case SimResult::Kind::deadlock: return "deadlock";
    case SimResult::Kind::timeout: return "timeout";
  }
  return "?";
}

namespace detail {

inline std::uint64_t update_count(const GlobalState& s) {
  std::uint64_t n = 0;
  for (const auto& a : s.instances) n += a.was_upd ? 1 : 0;
  for (const auto& a : s.relations) n += a.was_upd ? 1 : 0;
  return n;
}

inline std::uint64_t generation_total(const GlobalState& s) {
  std::uint64_t n = 0;
  for (const auto& r : s.rules) n += r.gen;
  return n;
}

inline bool work_left(const GlobalState& s) {
  for (const auto& [id, ch] : s.mail)
    for (const auto& [src, q] : ch)
      for (const auto& m : q)
        if (is_work(m)) return true;
  for (const auto& [id, ob] : s.outboxes)
    for (const auto& e : ob.q)
      if (is_work(e.msg)) return true;
  return false;
}

}  // namespace detail

inline SimResult run_random(
    const SystemConfig& cfg, const SimParams& p = {},
    const std::function<void(const TraceEvent&)>& sink = {}) {
  GlobalState s = init_state(cfg);
  SimResult r;
  bool faithful = !cfg.flags.fault_notify_after && !cfg.flags.fault_drop_minus_one;
  std::uint64_t h = 14695981039346656037ull;
  std::uint64_t upd_prev = detail::update_count(s);
  std::uint64_t gen_prev = detail::generation_total(s);

  bool out_of_moves = false;
  while (r.steps < p.max_steps) {
    auto acts = enabled(s, cfg);
    if (acts.empty()) {
      out_of_moves = true;
      break;
    }
    const auto& pick =
        acts[mix64(p.seed ^ mix64(r.steps + 1)) % acts.size()];
    TraceEvent ev = step(s, cfg, pick);
    ++r.steps;
    if (faithful) ++r.ledger_checks;

    h = fnv1a64(ev.to_line(), h);
    h = fnv1a64("\n", h);
    if (sink) sink(ev);
    if (p.capture_trace) r.trace.push_back(ev);

    bool box_empty = mail_empty(s, controller_id());
    if (s.ctrl.seen_first && s.ctrl.act == 0 && box_empty &&
        !all_agents_inactive(s) && !r.cc_violated) {
      r.cc_violated = true;
      r.cc_violation_step = r.steps;
    }

    std::uint64_t upd = detail::update_count(s);
    std::uint64_t gen = detail::generation_total(s);
    if (upd < upd_prev || gen < gen_prev) r.monotone_ok = false;
    upd_prev = upd;
    gen_prev = gen;
  }

  if (out_of_moves)
    r.kind = (s.stop_broadcast && all_stopped(s)) ? SimResult::Kind::terminated
                                                  : SimResult::Kind::deadlock;
  else
    r.kind = SimResult::Kind::timeout;

  r.trace_hash = h;
  r.stop_broadcast = s.stop_broadcast;
  r.residual_work = detail::work_left(s);
  r.spawn_capped = s.spawn_cap_hit;
  r.ledger_violation = s.ledger_violation;
  r.operability_met = any_update(s);
  r.final_state = std::move(s);
  return r;
}

}  // namespace mda
