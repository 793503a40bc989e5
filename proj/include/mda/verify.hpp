#pragma once
// Property checks over the explored state graph.
//
// Each check explores the configuration's reachable states and scans the
// node predicates. Verdicts are three-valued: a violated verdict always
// carries a shortest-found replayable counterexample; an exploration that
// hit its limits can only be inconclusive, never a pass.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "explore.hpp"

namespace mda {

enum class Verdict : std::uint8_t { holds, violated, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct PropertyReport {
  std::string property;
  Verdict verdict = Verdict::inconclusive;
  std::string detail;
  std::vector<Action> counterexample;
  std::size_t states_explored = 0;
  std::uint32_t violation_depth = 0;
  bool complete = false;
};

namespace detail {

// Returns some node that lies on a cycle of the subgraph induced by
// in_sub, or nothing if that subgraph is acyclic. Iterative coloring DFS.
inline std::optional<std::uint32_t> find_cycle_node(
    const std::vector<std::vector<std::uint32_t>>& adj,
    const std::vector<char>& in_sub) {
  enum : char { white = 0, gray = 1, black = 2 };
  std::vector<char> color(adj.size(), white);
  std::vector<std::pair<std::uint32_t, std::size_t>> stack;

  for (std::uint32_t root = 0; root < adj.size(); ++root) {
    if (!in_sub[root] || color[root] != white) continue;
    color[root] = gray;
    stack.push_back({root, 0});
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next < adj[u].size()) {
        std::uint32_t v = adj[u][next++];
        if (!in_sub[v]) continue;
        if (color[v] == gray) return v;  // back edge
        if (color[v] == white) {
          color[v] = gray;
          stack.push_back({v, 0});
        }
      } else {
        color[u] = black;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

inline std::vector<std::vector<std::uint32_t>> adjacency(
    const ExploreResult& g) {
  std::vector<std::vector<std::uint32_t>> adj(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::uint32_t j : g.nodes[i].succ) adj[i].push_back(j);
  return adj;
}

inline void finish_clean(PropertyReport& rep, const ExploreResult& g,
                         const std::string& ok_note) {
  if (g.complete) {
    rep.verdict = Verdict::holds;
    rep.detail = ok_note;
  } else {
    rep.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "no violation found, but exploration was truncated ("
       << (g.states_capped ? "state cap" : "depth cap") << " after "
       << g.nodes.size() << " states)";
    rep.detail = os.str();
  }
}

}  // namespace detail

// The counter never lies: whenever it reads zero with an empty inbox
// (after the first update arrived), every other agent is inactive; and
// every state in which the controller may break is fully at rest.
inline PropertyReport check_controller_correctness(
    const SystemConfig& cfg, const ExploreLimits& lim = {}) {
  auto g = explore(cfg, lim);
  PropertyReport rep;
  rep.property = "controller-correctness";
  rep.states_explored = g.nodes.size();
  rep.complete = g.complete;

  std::size_t evaluated = 0, breaks = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& f = g.nodes[i].flags;
    if (f.cc_evaluated) ++evaluated;
    if (f.break_eligible) ++breaks;
    bool bad = (f.cc_evaluated && !f.all_inactive) ||
               (f.break_eligible && !f.quiescent);
    if (bad) {
      rep.verdict = Verdict::violated;
      rep.counterexample = g.path_to(i);
      rep.violation_depth = g.nodes[i].depth;
      std::ostringstream os;
      os << "state at depth " << g.nodes[i].depth
         << ": counter reads zero with an empty inbox, but the system is "
            "not at rest";
      rep.detail = os.str();
      return rep;
    }
  }
  std::ostringstream os;
  os << "evaluated " << evaluated << " zero-counter states and " << breaks
     << " break-eligible states across " << g.nodes.size()
     << " reachable states; all were at rest";
  detail::finish_clean(rep, g, os.str());
  return rep;
}

// Same predicate without waiting for the first counter update. Expected to
// fail on any config with agents: at the initial state the counter reads
// zero while bursts are still owed.
inline PropertyReport check_controller_correctness_unguarded(
    const SystemConfig& cfg, const ExploreLimits& lim = {}) {
  auto g = explore(cfg, lim);
  PropertyReport rep;
  rep.property = "controller-correctness-unguarded";
  rep.states_explored = g.nodes.size();
  rep.complete = g.complete;

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& f = g.nodes[i].flags;
    if (f.unguarded_evaluated && !f.all_inactive) {
      rep.verdict = Verdict::violated;
      rep.counterexample = g.path_to(i);
      rep.violation_depth = g.nodes[i].depth;
      rep.detail =
          "without the first-update guard the zero reading is meaningless";
      return rep;
    }
  }
  detail::finish_clean(rep, g, "all unguarded zero-counter states at rest");
  return rep;
}

// Some run performs an update: it must not be possible to finish, or to
// loop forever, with every update flag still clear.
inline PropertyReport check_operability(const SystemConfig& cfg,
                                        const ExploreLimits& lim = {}) {
  auto g = explore(cfg, lim);
  PropertyReport rep;
  rep.property = "operability";
  rep.states_explored = g.nodes.size();
  rep.complete = g.complete;

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& f = g.nodes[i].flags;
    if (f.terminal && !f.any_upd) {
      rep.verdict = Verdict::violated;
      rep.counterexample = g.path_to(i);
      rep.violation_depth = g.nodes[i].depth;
      rep.detail = "a run finished without a single update";
      return rep;
    }
  }

  std::vector<char> no_upd(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    no_upd[i] = g.nodes[i].flags.any_upd ? 0 : 1;
  if (auto hit = detail::find_cycle_node(detail::adjacency(g), no_upd)) {
    rep.verdict = Verdict::violated;
    rep.counterexample = g.path_to(*hit);
    rep.violation_depth = g.nodes[*hit].depth;
    rep.detail = "a cycle is reachable before any update happens";
    return rep;
  }
  detail::finish_clean(rep, g, "every complete run performs an update");
  return rep;
}

// While every rule's generation stays within its per-point budget, all
// activity eventually ceases: in the subgraph where the budget condition
// holds, there is no cycle that avoids all-inactive states and no stuck
// non-quiescent terminal.
inline PropertyReport check_bounded_termination(const SystemConfig& cfg,
                                                const ExploreLimits& lim = {}) {
  auto g = explore(cfg, lim);
  PropertyReport rep;
  rep.property = "bounded-termination";
  rep.states_explored = g.nodes.size();
  rep.complete = g.complete;

  bool spawn_capped = false, bound_clipped = false;
  for (const auto& n : g.nodes) {
    spawn_capped |= n.flags.spawn_cap;
    bound_clipped |= n.flags.bound_violation;
  }
  if (spawn_capped) {
    rep.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "the dynamic-agent cap clipped the run after " << g.nodes.size()
       << " states; generation had not settled, so no verdict";
    rep.detail = os.str();
    return rep;
  }
  if (!g.complete) {
    rep.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "exploration truncated ("
       << (g.states_capped ? "state cap" : "depth cap") << " after "
       << g.nodes.size() << " states) while activity continued";
    rep.detail = os.str();
    return rep;
  }

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& f = g.nodes[i].flags;
    if (f.terminal && f.antecedent && !f.all_inactive) {
      rep.verdict = Verdict::violated;
      rep.counterexample = g.path_to(i);
      rep.violation_depth = g.nodes[i].depth;
      rep.detail = "stuck: generation within budget but activity never ceased";
      return rep;
    }
  }

  std::vector<char> busy(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& f = g.nodes[i].flags;
    busy[i] = (f.antecedent && !f.all_inactive) ? 1 : 0;
  }
  if (auto hit = detail::find_cycle_node(detail::adjacency(g), busy)) {
    rep.verdict = Verdict::violated;
    rep.counterexample = g.path_to(*hit);
    rep.violation_depth = g.nodes[*hit].depth;
    rep.detail = "lasso: generation within budget but activity cycles forever";
    return rep;
  }

  std::string note = "within the generation budget all activity ceases";
  if (bound_clipped)
    note += " (some generation demand was clipped at the configured limit)";
  detail::finish_clean(rep, g, note);
  return rep;
}

}  // namespace mda
