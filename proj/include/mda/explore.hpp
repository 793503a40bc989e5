#pragma once
// Exhaustive interleaving exploration with visited-state hashing.
//
// Builds the reachable state graph of a configuration by trying every
// enabled action at every state. Nodes keep a hash, a parent edge (for
// counterexample paths) and a set of cheap predicate flags; full states
// are only held in the search frontier. A debug mode stores serialized
// states for small graphs and cross-checks hash collisions.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "runtime.hpp"

namespace mda {

// ---- activity ------------------------------------------------------------
// An agent is active while it still owes protocol work: it has not finished
// its opening announcements, holds undelivered output, or has a pending
// input other than the stop signal. Stopped lanes are never active, even
// with residual mail.

namespace detail {

inline bool mail_has_non_stop(const GlobalState& s, const AgentId& id) {
  const Channels* ch = channels_of(s, id);
  if (!ch) return false;
  for (const auto& [src, q] : *ch)
    for (const auto& m : q)
      if (!is_stop(m)) return true;
  return false;
}

}  // namespace detail

inline bool agent_active(const GlobalState& s, const InstanceState& a) {
  AgentId id = instance_id(a.id);
  if (detail::outbox_nonempty(s, id)) return true;
  switch (a.phase) {
    case Phase::initial_burst:
    case Phase::deferred_announce:
      return true;
    case Phase::listening:
      return detail::mail_has_non_stop(s, id);
    case Phase::stopped:
      return false;
  }
  return false;
}

inline bool agent_active(const GlobalState& s, const RelationState& a) {
  AgentId id = relation_id(a.id);
  if (detail::outbox_nonempty(s, id)) return true;
  switch (a.phase) {
    case Phase::initial_burst:
      return true;
    case Phase::listening:
      return detail::mail_has_non_stop(s, id);
    default:
      return false;
  }
}

inline bool agent_active(const GlobalState& s, const RuleState& a) {
  AgentId id = rule_id(a.id);
  if (detail::outbox_nonempty(s, id)) return true;
  if (a.in_phase == Phase::listening && detail::mail_has_non_stop(s, id))
    return true;
  if (a.res_phase == Phase::listening) {
    for (const auto& item : a.internal)
      if (std::holds_alternative<ArgVector>(item)) return true;
  }
  return false;
}

inline bool all_agents_inactive(const GlobalState& s) {
  for (const auto& a : s.instances)
    if (agent_active(s, a)) return false;
  for (const auto& a : s.relations)
    if (agent_active(s, a)) return false;
  for (const auto& a : s.rules)
    if (agent_active(s, a)) return false;
  return true;
}

// True iff the whole system is at rest: every non-controller agent is
// inactive and nothing but counter updates is in flight anywhere.
inline bool quiescence_oracle(const GlobalState& s) {
  if (!all_agents_inactive(s)) return false;
  for (const auto& [id, ch] : s.mail)
    for (const auto& [src, q] : ch)
      for (const auto& m : q)
        if (!is_act_delta(m)) return false;
  for (const auto& [id, ob] : s.outboxes)
    for (const auto& e : ob.q)
      if (!is_act_delta(e.msg)) return false;
  return true;
}

inline bool any_update(const GlobalState& s) {
  for (const auto& a : s.instances)
    if (a.was_upd) return true;
  for (const auto& a : s.relations)
    if (a.was_upd) return true;
  return false;
}

// Antecedent of the bounded-termination property for one rule: generation
// stays strictly below (distinct points seen) * limit. With no points yet,
// nothing may have been generated; a zero limit can never be satisfied.
inline bool bounded_generation_antecedent(const RuleState& r,
                                          std::uint32_t hom_lim) {
  if (hom_lim == 0) return false;
  if (r.pnt.empty()) return r.gen == 0;
  return r.gen < static_cast<std::uint64_t>(r.pnt.size()) * hom_lim;
}

inline bool bounded_generation_antecedent(const GlobalState& s,
                                          const SystemConfig& cfg) {
  for (const auto& r : s.rules)
    if (!bounded_generation_antecedent(r, cfg.hom_lim)) return false;
  return true;
}

// ---- state graph ----------------------------------------------------------

struct NodeFlags {
  bool terminal = false;       // no enabled action
  bool deadlock = false;       // terminal without the stop broadcast
  bool post_stop = false;      // terminal after the stop broadcast
  bool break_eligible = false; // counter at zero, box empty, still counting
  bool drained_counting = false;  // box empty while counting (any counter)
  bool cc_evaluated = false;   // counter at zero + box empty, post first msg
  bool unguarded_evaluated = false;  // counter at zero + box empty, any phase
  bool all_inactive = false;
  bool quiescent = false;
  bool any_upd = false;
  bool antecedent = true;      // bounded-generation antecedent, all rules
  bool spawn_cap = false;
  bool ledger_violation = false;
  bool bound_violation = false;
  bool act_negative = false;
};

inline NodeFlags compute_flags(const GlobalState& s, const SystemConfig& cfg,
                               bool terminal) {
  NodeFlags f;
  f.terminal = terminal;
  f.post_stop = f.terminal && s.stop_broadcast;
  f.deadlock = f.terminal && !s.stop_broadcast;

  bool box_empty = mail_empty(s, controller_id());
  f.break_eligible = controller_can_break(s.ctrl, box_empty);
  f.drained_counting = s.ctrl.phase == CtrlPhase::counting && box_empty;
  f.cc_evaluated = s.ctrl.seen_first && s.ctrl.act == 0 && box_empty;
  f.unguarded_evaluated = s.ctrl.act == 0 && box_empty;

  f.all_inactive = all_agents_inactive(s);
  f.quiescent = quiescence_oracle(s);
  f.any_upd = any_update(s);
  f.antecedent = bounded_generation_antecedent(s, cfg);
  f.spawn_cap = s.spawn_cap_hit;
  f.ledger_violation = s.ledger_violation;
  for (const auto& r : s.rules)
    if (r.bound_violation) f.bound_violation = true;
  f.act_negative = s.ctrl.saw_negative || (s.ctrl.act < 0 && box_empty);
  return f;
}

inline NodeFlags compute_flags(const GlobalState& s, const SystemConfig& cfg) {
  return compute_flags(s, cfg, enabled(s, cfg).empty());
}

struct ExploreLimits {
  std::size_t max_states = 200000;
  std::uint32_t max_depth = 1u << 30;
  bool debug_exact = true;  // store small graphs verbatim, catch hash clashes
  // Expand a pending controller consumption alone (first nonempty channel).
  // Counter consumption commutes with every other action and changes nothing
  // outside the controller; the counter fold is commutative, so the drain
  // order across channels is unobservable too. Every checked predicate
  // (break eligibility, zero-counter reads, terminals, deadlocks) requires
  // an empty controller inbox, which is reached in the same configurations
  // either way. Draining eagerly merges the otherwise-exponential
  // arrival-order x drain-progress states.
  bool reduce_controller = true;
  // While startup bursts are owed, they are the only schedulable actions and
  // each touches only its own agent plus its own outgoing channels, so any
  // two of them commute and every order joins at the same state. No break,
  // no terminal and no counter read can happen mid-lockout, and if some
  // interleaved state were a violation, the lockout-entry state already is
  // one (boxes only grow and activity persists until the last burst). Firing
  // them in one fixed order is therefore exhaustive.
  bool reduce_bursts = true;
  // Expand a single pending worker step (a non-controller consumption, or a
  // result dispatch when no consumption is pending anywhere) alone instead
  // of branching over all of them. Why this preserves every checked verdict:
  //   - any two such steps at different agents touch disjoint agent state
  //     and, channels being per-sender, distinct queues; a push to a queue
  //     another step pops commutes with the pop while the pop is enabled;
  //   - per-agent state is arrival-order-insensitive by construction (rule
  //     pools and pending vectors are sorted bags, attribute and position
  //     stores grow by set union, phases and counters are monotone), so
  //     reorderings land in the same states, not merely similar ones;
  //   - each checked predicate reads only controller-side facts (counter
  //     value, empty inbox, break guard), per-agent activity, and update
  //     flags. A postponed step keeps its agent's queue nonempty, so the
  //     activity and quiescence verdicts at the skipped in-between states
  //     match those of the expanded state itself; counter-side predicates
  //     are all gated on an empty controller inbox, which worker steps
  //     never make empty (they only add deltas or leave it alone);
  //   - spontaneous announcements (deferred delta sends under fault) and
  //     the controller's break stay outside the singleton and are expanded
  //     in full once no worker step remains, so violation windows that need
  //     a late announcement survive, and a break-eligible state is flagged
  //     by its own predicate whether or not the break edge is walked.
  // Exhaustive runs with this off cross-check runs with it on in the test
  // suite on every configuration small enough to do both.
  bool reduce_workers = true;
};

struct ExploreNode {
  std::uint64_t hash = 0;
  std::int32_t parent = -1;
  Action via{};
  std::uint32_t depth = 0;
  NodeFlags flags;
  std::vector<std::uint32_t> succ;
};

struct ExploreResult {
  std::vector<ExploreNode> nodes;
  bool complete = true;
  bool states_capped = false;
  bool depth_capped = false;
  std::size_t n_terminal = 0;
  std::size_t n_deadlock = 0;
  std::size_t n_post_stop = 0;

  std::vector<Action> path_to(std::size_t idx) const {
    std::vector<Action> path;
    std::int64_t cur = static_cast<std::int64_t>(idx);
    while (cur >= 0 && nodes[static_cast<std::size_t>(cur)].parent >= 0) {
      path.push_back(nodes[static_cast<std::size_t>(cur)].via);
      cur = nodes[static_cast<std::size_t>(cur)].parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }
};

namespace detail {

inline bool urgent_action(const GlobalState& s, const Action& a) {
  if (a.lane == Lane::flush) return outbox_urgent(s, a.agent);
  if (a.from || a.lane != Lane::main) return false;
  if (a.agent.kind == AgentKind::instance) {
    const InstanceState* i = s.find_instance(a.agent.index);
    return i && i->phase == Phase::initial_burst;
  }
  if (a.agent.kind == AgentKind::relation)
    return s.relations.at(a.agent.index - 1).phase == Phase::initial_burst;
  return false;
}

}  // namespace detail

// Depth-first search over the reachable graph. The stack holds full states
// only along the current path; everything visited is kept as a slim node.
inline ExploreResult explore(const SystemConfig& cfg,
                             const ExploreLimits& lim = {}) {
  ExploreResult res;
  std::unordered_map<std::uint64_t, std::uint32_t> seen;
  std::unordered_map<std::uint64_t, std::string> exact;
  std::size_t exact_bytes = 0;
  constexpr std::size_t exact_budget = 64u << 20;

  auto note_exact = [&](std::uint64_t h, const GlobalState& st) {
    if (!lim.debug_exact) return;
    auto it = exact.find(h);
    std::string ser = serialize(st);
    if (it != exact.end()) {
      if (it->second != ser)
        throw std::runtime_error("state hash collision detected");
      return;
    }
    if (exact_bytes + ser.size() > exact_budget) return;
    exact_bytes += ser.size();
    exact.emplace(h, std::move(ser));
  };

  auto expansion = [&](const GlobalState& st) {
    auto acts = enabled(st, cfg);
    if (acts.size() > 1) {
      const Action& front = acts.front();
      // consume actions sort first (controller id precedes all others), so
      // a pending drain, if any, is at the front
      if (lim.reduce_controller && front.agent == controller_id() &&
          front.from)
        acts = {front};
      else if (lim.reduce_bursts && detail::urgent_action(st, front))
        acts = {front};  // enabled() yields urgent actions exclusively
      else if (lim.reduce_workers) {
        // first a consumption; failing that a result dispatch, which is
        // only independent of consumptions at its own rule, so it may be
        // singled out only when no consumption is pending at all
        const Action* pick = nullptr;
        for (const auto& a : acts)
          if (a.agent != controller_id() && a.lane == Lane::main && a.from) {
            pick = &a;
            break;
          }
        if (!pick)
          for (const auto& a : acts)
            if (a.lane == Lane::result) {
              pick = &a;
              break;
            }
        if (pick) acts = {*pick};
      }
    }
    return acts;
  };

  auto add_node = [&](const GlobalState& st, std::uint64_t h,
                      std::int32_t parent, const Action& via,
                      std::uint32_t depth, bool terminal) {
    ExploreNode n;
    n.hash = h;
    n.parent = parent;
    n.via = via;
    n.depth = depth;
    n.flags = compute_flags(st, cfg, terminal);
    if (n.flags.terminal) ++res.n_terminal;
    if (n.flags.deadlock) ++res.n_deadlock;
    if (n.flags.post_stop) ++res.n_post_stop;
    std::uint32_t idx = static_cast<std::uint32_t>(res.nodes.size());
    res.nodes.push_back(std::move(n));
    seen.emplace(h, idx);
    return idx;
  };

  struct Frame {
    GlobalState st;
    std::vector<Action> acts;
    std::size_t next = 0;
    std::uint32_t node = 0;
  };
  std::deque<Frame> stack;

  {
    GlobalState s0 = init_state(cfg);
    std::uint64_t h0 = state_hash(s0);
    note_exact(h0, s0);
    auto acts0 = expansion(s0);
    std::uint32_t n0 = add_node(s0, h0, -1, Action{}, 0, acts0.empty());
    stack.push_back(Frame{std::move(s0), std::move(acts0), 0, n0});
  }

  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next >= f.acts.size()) {
      stack.pop_back();
      continue;
    }
    if (res.nodes[f.node].depth >= lim.max_depth) {
      res.depth_capped = true;
      res.complete = false;
      stack.pop_back();
      continue;
    }
    const Action a = f.acts[f.next++];
    GlobalState nxt = f.st;
    step(nxt, cfg, a);
    std::uint64_t h = state_hash(nxt);
    auto it = seen.find(h);
    if (it != seen.end()) {
      note_exact(h, nxt);
      res.nodes[f.node].succ.push_back(it->second);
      continue;
    }
    if (res.nodes.size() >= lim.max_states) {
      res.states_capped = true;
      res.complete = false;
      return res;
    }
    note_exact(h, nxt);
    auto acts = expansion(nxt);
    std::uint32_t child =
        add_node(nxt, h, static_cast<std::int32_t>(f.node), a,
                 res.nodes[f.node].depth + 1, acts.empty());
    res.nodes[f.node].succ.push_back(child);
    stack.push_back(Frame{std::move(nxt), std::move(acts), 0, child});
  }
  return res;
}

// Re-run a recorded action sequence from the initial state.
inline GlobalState replay_path(const SystemConfig& cfg,
                               const std::vector<Action>& path) {
  GlobalState s = init_state(cfg);
  for (const auto& a : path) step(s, cfg, a);
  return s;
}

}  // namespace mda
