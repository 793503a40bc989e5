#pragma once
// The four agent state machines as pure transition functions. Each call is
// one atomic step: it mutates the passed state and returns the emissions in
// protocol line order (an announcement delta always precedes the work items
// it covers). Delivery, scheduling and spawning belong to the runtime.
#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "imitation.hpp"
#include "message.hpp"
#include "ontology.hpp"

namespace mda {

enum class Phase : std::uint8_t {
  initial_burst,
  deferred_announce,  // fault_notify_after: data sent, deltas held back
  listening,
  stopped,
};

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::initial_burst: return "burst";
    case Phase::deferred_announce: return "deferred";
    case Phase::listening: return "listening";
    case Phase::stopped: return "stopped";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// instance agent

struct InstanceState {
  std::uint32_t id = 0;
  std::uint32_t class_id = 0;
  std::vector<AttributeSlot> attrs;
  std::vector<std::uint32_t> out_rules;  // Rul
  IntervalSet pos;
  std::map<std::uint32_t, std::set<std::uint32_t>> rel;
  Phase phase = Phase::initial_burst;
  bool was_upd = false;
  std::vector<Emission> deferred;  // held-back deltas under fault_notify_after
};

inline InstanceState make_instance_state(const InstanceInit& init,
                                         MergePolicy policy) {
  InstanceState s;
  s.id = init.ordinal;
  s.class_id = init.class_id;
  for (const auto& a : init.attrs) {
    AttributeSlot slot;
    slot.attr_id = a.index;
    slot.values.insert(a.values.begin(), a.values.end());
    slot.out_rules = a.out_rules;
    slot.pos = a.pos;
    s.attrs.push_back(std::move(slot));
    s.pos = IntervalSet::unite(s.pos, a.pos, policy);
  }
  s.out_rules = init.out_rules;
  for (auto r : init.relations) s.rel[r];  // known relation agents, no members
  return s;
}

inline std::vector<Emission> instance_initial_burst(InstanceState& s,
                                                    const SystemConfig& cfg) {
  if (s.phase != Phase::initial_burst)
    throw ProtocolError("I" + std::to_string(s.id) +
                        ": initial burst out of phase");
  std::vector<Emission> deltas, data;
  auto delta = [&](std::int32_t d) {
    deltas.push_back({controller_id(), ActDelta{d}});
  };
  delta(std::int32_t(s.out_rules.size()) + 1);
  for (auto r : s.out_rules)
    data.push_back({rule_id(r), AgentIntro{s.id, s.class_id, s.pos}});
  for (const auto& a : s.attrs) {
    if (!a.evaluated()) continue;
    delta(std::int32_t(a.out_rules.size()));
    for (auto r : a.out_rules)
      data.push_back({rule_id(r),
                      AttrValue{instance_id(s.id), a.attr_id,
                                *a.values.begin(), a.pos}});
  }
  bool drop_close = cfg.flags.fault_drop_minus_one && s.id == 1;
  if (!drop_close) delta(-1);

  if (cfg.flags.fault_notify_after) {
    s.deferred = std::move(deltas);
    s.phase = Phase::deferred_announce;
    return data;
  }
  // stitch: first delta, intros, then per-attribute delta + values, close
  std::vector<Emission> out;
  out.push_back(deltas.front());
  std::size_t next_delta = 1, next_data = 0;
  for (std::size_t i = 0; i < s.out_rules.size(); ++i)
    out.push_back(data[next_data++]);
  for (const auto& a : s.attrs) {
    if (!a.evaluated()) continue;
    out.push_back(deltas[next_delta++]);
    for (std::size_t i = 0; i < a.out_rules.size(); ++i)
      out.push_back(data[next_data++]);
  }
  if (!drop_close) out.push_back(deltas[next_delta]);
  s.phase = Phase::listening;
  return out;
}

inline std::vector<Emission> instance_flush_deferred(InstanceState& s) {
  if (s.phase != Phase::deferred_announce)
    throw ProtocolError("I" + std::to_string(s.id) + ": nothing deferred");
  std::vector<Emission> out = std::move(s.deferred);
  s.deferred.clear();
  s.phase = Phase::listening;
  return out;
}

inline std::vector<Emission> instance_handle(InstanceState& s,
                                             const Message& m,
                                             const SystemConfig& cfg) {
  if (s.phase == Phase::stopped) return {};
  if (s.phase != Phase::listening)
    throw ProtocolError("I" + std::to_string(s.id) + ": not listening");

  if (is_stop(m)) {
    s.phase = Phase::stopped;
    return {};
  }
  if (const auto* n = std::get_if<RelNotice>(&m)) {
    s.rel[n->rel_agent].insert(n->instance_index);
    return {{controller_id(), ActDelta{-1}}};
  }
  if (const auto* v = std::get_if<AttrValue>(&m)) {
    if (v->attr_id >= s.attrs.size())
      throw ProtocolError("I" + std::to_string(s.id) + ": no attribute " +
                          std::to_string(v->attr_id));
    AttributeSlot& a = s.attrs[v->attr_id];
    a.values.insert(v->value);
    a.pos = IntervalSet::unite(a.pos, v->pos, cfg.merge_policy());
    s.pos = IntervalSet::unite(s.pos, v->pos, cfg.merge_policy());
    s.was_upd = true;
    std::vector<Emission> out;
    out.push_back({controller_id(), ActDelta{std::int32_t(a.out_rules.size())}});
    for (auto r : a.out_rules)
      out.push_back({rule_id(r), AttrValue{instance_id(s.id), a.attr_id,
                                           v->value, a.pos}});
    out.push_back({controller_id(), ActDelta{-1}});
    return out;
  }
  throw ProtocolError("I" + std::to_string(s.id) + ": unexpected " +
                      to_string(m));
}

// ---------------------------------------------------------------------------
// relation agent

struct RelationState {
  std::uint32_t id = 0;
  std::uint32_t relation_id = 0;  // declaration in the ontology
  std::vector<RelationInstance> instances;
  std::vector<std::uint32_t> out_rules;  // Rul
  IntervalSet pos;
  Phase phase = Phase::initial_burst;
  bool was_upd = false;
  std::set<std::uint32_t> announced;  // for the announce_once variant
};

inline RelationState make_relation_state(const RelationInit& init,
                                         MergePolicy policy) {
  RelationState s;
  s.id = init.ordinal;
  s.relation_id = init.relation_decl;
  s.out_rules = init.out_rules;
  for (const auto& ri : init.instances) {
    RelationInstance inst;
    inst.index = ri.index;
    inst.o1 = ri.o1;
    inst.o2 = ri.o2;
    inst.o1_pos = ri.o1_pos;
    inst.o2_pos = ri.o2_pos;
    inst.recompute_pos(policy);
    s.pos = IntervalSet::unite(s.pos, inst.pos, policy);
    s.instances.push_back(std::move(inst));
  }
  return s;
}

namespace detail {

inline std::vector<Emission> relation_announce(const RelationState& s,
                                               const RelationInstance& inst) {
  std::vector<Emission> out;
  out.push_back(
      {controller_id(), ActDelta{std::int32_t(s.out_rules.size()) + 2}});
  RelNotice notice{s.id, inst.index, inst.pos};
  out.push_back({instance_id(*inst.o1), notice});
  out.push_back({instance_id(*inst.o2), notice});
  for (auto r : s.out_rules) out.push_back({rule_id(r), notice});
  return out;
}

}  // namespace detail

inline std::vector<Emission> relation_initial_burst(RelationState& s,
                                                    const SystemConfig&) {
  if (s.phase != Phase::initial_burst)
    throw ProtocolError("Rl" + std::to_string(s.id) +
                        ": initial burst out of phase");
  std::vector<Emission> out;
  out.push_back({controller_id(), ActDelta{1}});
  for (const auto& inst : s.instances) {
    if (!inst.evaluated()) continue;
    auto ann = detail::relation_announce(s, inst);
    out.insert(out.end(), ann.begin(), ann.end());
    s.announced.insert(inst.index);
  }
  out.push_back({controller_id(), ActDelta{-1}});
  s.phase = Phase::listening;
  return out;
}

inline std::vector<Emission> relation_handle(RelationState& s,
                                             const Message& m,
                                             const SystemConfig& cfg) {
  if (s.phase == Phase::stopped) return {};
  if (s.phase != Phase::listening)
    throw ProtocolError("Rl" + std::to_string(s.id) + ": not listening");

  if (is_stop(m)) {
    s.phase = Phase::stopped;
    return {};
  }
  const auto* u = std::get_if<RelUpdate>(&m);
  if (!u)
    throw ProtocolError("Rl" + std::to_string(s.id) + ": unexpected " +
                        to_string(m));

  RelationInstance* inst = nullptr;
  for (auto& i : s.instances)
    if (i.index == u->instance_index) inst = &i;
  if (!inst) {
    if (u->instance_index < 1 ||
        u->instance_index > cfg.effective_max_rel_instances())
      throw ProtocolError("Rl" + std::to_string(s.id) + ": element index " +
                          std::to_string(u->instance_index) +
                          " beyond the configured bound");
    RelationInstance fresh;
    fresh.index = u->instance_index;
    auto it = s.instances.begin();
    while (it != s.instances.end() && it->index < fresh.index) ++it;
    inst = &*s.instances.insert(it, std::move(fresh));
  }

  MergePolicy policy = cfg.merge_policy();
  switch (u->field) {
    case RelField::object1:
      inst->o1 = std::uint32_t(u->value);
      inst->o1_pos = IntervalSet::unite(inst->o1_pos, u->pos, policy);
      break;
    case RelField::object2:
      inst->o2 = std::uint32_t(u->value);
      inst->o2_pos = IntervalSet::unite(inst->o2_pos, u->pos, policy);
      break;
    case RelField::attr: {
      AttributeSlot& a = inst->attrs[u->attr_id];
      a.attr_id = u->attr_id;
      a.values.insert(u->value);
      a.pos = IntervalSet::unite(a.pos, u->pos, policy);
      break;
    }
  }
  inst->recompute_pos(policy);
  IntervalSet agent_pos;
  for (const auto& i : s.instances)
    agent_pos = IntervalSet::unite(agent_pos, i.pos, policy);
  s.pos = agent_pos;
  s.was_upd = true;

  std::vector<Emission> out;
  bool suppress =
      cfg.flags.announce_once && s.announced.count(inst->index) > 0;
  if (inst->evaluated() && !suppress) {
    out = detail::relation_announce(s, *inst);
    s.announced.insert(inst->index);
  }
  out.push_back({controller_id(), ActDelta{-1}});
  return out;
}

// ---------------------------------------------------------------------------
// rule agent: ProcInput and ProcResult around an internal work bag

struct SlotPool {
  RuleSlot slot;
  std::vector<ArgItem> items;  // sorted, deduplicated
};

struct SpawnRequest {
  IntervalSet point;  // where the generating vector sat
};

using InternalItem = std::variant<ArgVector, StopToken>;

struct RuleState {
  std::uint32_t id = 0;
  std::vector<SlotPool> pools;
  std::vector<ArgItem> side_pool;  // unmatched intros: kept, never matched
  std::deque<InternalItem> internal;
  std::uint64_t gen = 0;                       // agents generated so far
  std::map<std::string, std::uint32_t> pnt;    // point -> generated count
  std::map<std::string, std::uint32_t> quota_used;
  Phase in_phase = Phase::initial_burst;
  Phase res_phase = Phase::initial_burst;
  bool bound_violation = false;
};

inline RuleState make_rule_state(std::uint32_t id,
                                 const std::vector<RuleSlot>& slots) {
  RuleState s;
  s.id = id;
  for (const auto& slot : slots) s.pools.push_back({slot, {}});
  return s;
}

// rules have nothing to announce at startup; they only flip to listening
inline std::vector<Emission> rule_start(RuleState& s) {
  if (s.in_phase != Phase::initial_burst)
    throw ProtocolError("R" + std::to_string(s.id) + ": start out of phase");
  s.in_phase = Phase::listening;
  s.res_phase = Phase::listening;
  return {};
}

namespace detail {

inline std::optional<ArgItem> to_arg_item(const Message& m) {
  if (const auto* ai = std::get_if<AgentIntro>(&m)) {
    ArgItem item;
    item.kind = ArgKind::agent;
    item.sender = instance_id(ai->sender);
    item.class_id = ai->class_id;
    item.pos = ai->pos;
    return item;
  }
  if (const auto* av = std::get_if<AttrValue>(&m)) {
    ArgItem item;
    item.kind = ArgKind::attribute;
    item.sender = av->sender;
    item.attr_id = av->attr_id;
    item.value = av->value;
    item.pos = av->pos;
    return item;
  }
  if (const auto* rn = std::get_if<RelNotice>(&m)) {
    ArgItem item;
    item.kind = ArgKind::relation;
    item.sender = relation_id(rn->rel_agent);
    item.rel_index = rn->instance_index;
    item.pos = rn->pos;
    return item;
  }
  return std::nullopt;
}

inline SlotPool* matching_pool(RuleState& s, const ArgItem& item) {
  for (auto& pool : s.pools) {
    if (pool.slot.kind != item.kind) continue;
    if (item.kind == ArgKind::agent && pool.slot.class_filter != 0 &&
        pool.slot.class_filter != item.class_id)
      continue;
    return &pool;
  }
  return nullptr;
}

}  // namespace detail

// pools the incoming item and returns every complete vector it finishes:
// the cross product of the new item with all other slots' contents
inline std::vector<ArgVector> make_arg(RuleState& s, const ArgItem& incoming) {
  // pools are kept sorted: they are bags, not logs, so the arrival order
  // must not leak into the state (or the cross-product order)
  auto pooled = [](std::vector<ArgItem>& items, const ArgItem& it) {
    auto at = std::lower_bound(items.begin(), items.end(), it);
    if (at != items.end() && *at == it) return false;  // seen before
    items.insert(at, it);
    return true;
  };
  SlotPool* home = detail::matching_pool(s, incoming);
  if (!home) {
    if (incoming.kind == ArgKind::agent) {
      pooled(s.side_pool, incoming);
      return {};
    }
    throw ProtocolError("R" + std::to_string(s.id) +
                        ": no slot accepts " + to_string(incoming));
  }
  if (!pooled(home->items, incoming)) return {};  // no duplicate vectors

  std::vector<ArgVector> vectors;
  std::vector<std::size_t> pick(s.pools.size(), 0);
  auto build = [&](auto&& self, std::size_t slot_idx) -> void {
    if (slot_idx == s.pools.size()) {
      ArgVector v;
      for (std::size_t k = 0; k < s.pools.size(); ++k)
        v.items.push_back(&s.pools[k] == home ? incoming
                                              : s.pools[k].items[pick[k]]);
      vectors.push_back(std::move(v));
      return;
    }
    if (&s.pools[slot_idx] == home) {
      self(self, slot_idx + 1);
      return;
    }
    for (std::size_t i = 0; i < s.pools[slot_idx].items.size(); ++i) {
      pick[slot_idx] = i;
      self(self, slot_idx + 1);
    }
  };
  bool others_filled = true;
  for (const auto& pool : s.pools)
    if (&pool != home && pool.items.empty()) others_filled = false;
  if (others_filled) build(build, 0);
  return vectors;
}

inline std::vector<Emission> rule_handle_input(RuleState& s, const Message& m,
                                               const SystemConfig&) {
  if (s.in_phase == Phase::stopped) return {};
  if (s.in_phase != Phase::listening)
    throw ProtocolError("R" + std::to_string(s.id) + ": input not listening");

  if (is_stop(m)) {
    s.internal.push_back(StopToken{});
    s.in_phase = Phase::stopped;
    return {};
  }
  auto item = detail::to_arg_item(m);
  if (!item)
    throw ProtocolError("R" + std::to_string(s.id) + ": unexpected " +
                        to_string(m));
  std::vector<ArgVector> vectors = make_arg(s, *item);
  // the pending-vector store is a sorted bag for the same reason the pools
  // are: which channel delivered its inputs first must not leak into the
  // state. A stop token is only ever appended after input has shut down, so
  // everything in here is still a vector at this point.
  for (auto& v : vectors) {
    auto at = std::lower_bound(
        s.internal.begin(), s.internal.end(), v,
        [](const InternalItem& lhs, const ArgVector& rhs) {
          return std::get<ArgVector>(lhs) < rhs;
        });
    s.internal.insert(at, std::move(v));
  }
  return {{controller_id(), ActDelta{std::int32_t(vectors.size()) - 1}}};
}

inline std::vector<Emission> rule_step_result(RuleState& s,
                                              const SystemConfig& cfg,
                                              std::vector<SpawnRequest>& spawned) {
  if (s.res_phase == Phase::stopped) return {};
  if (s.internal.empty())
    throw ProtocolError("R" + std::to_string(s.id) + ": result queue empty");
  InternalItem item = std::move(s.internal.front());
  s.internal.pop_front();

  if (std::holds_alternative<StopToken>(item)) {
    s.res_phase = Phase::stopped;
    return {};
  }
  const ArgVector& v = std::get<ArgVector>(item);
  IntervalSet probe_point;  // computed inside make_res; needed before for quota
  {
    std::vector<IntervalSet> poses;
    for (const auto& it : v.items) poses.push_back(it.pos);
    probe_point = position_point(poses, cfg.merge_policy());
  }
  std::uint32_t prior = 0;
  if (auto it = s.quota_used.find(probe_point.to_string());
      it != s.quota_used.end())
    prior = it->second;
  ImitationInput in{s.id,
                    v,
                    cfg.imitation,
                    cfg.n_instance,
                    cfg.n_relation,
                    cfg.n_rule,
                    cfg.merge_policy(),
                    cfg.flags.unbounded_spawn,
                    prior};
  ImitationResult res = make_res_imitation(in);
  if (!res.consistent) return {{controller_id(), ActDelta{-1}}};

  const std::string point_key = res.point.to_string();
  for (std::uint32_t k = 0; k < res.spawns; ++k) {
    if (!cfg.flags.unbounded_spawn) ++s.quota_used[point_key];
    std::uint32_t at_point = 0;
    if (auto it = s.pnt.find(point_key); it != s.pnt.end())
      at_point = it->second;
    if (cfg.flags.enforce_hom_lim && at_point >= cfg.hom_lim) {
      s.bound_violation = true;
      continue;
    }
    ++s.pnt[point_key];
    ++s.gen;
    spawned.push_back({res.point});
  }

  std::vector<Emission> out;
  std::int32_t send_count =
      std::int32_t(res.attr_updates.size() + res.rel_updates.size());
  out.push_back({controller_id(), ActDelta{send_count}});
  for (const auto& [target, av] : res.attr_updates)
    out.push_back({target, av});
  for (const auto& [target, ru] : res.rel_updates)
    out.push_back({relation_id(target), ru});
  out.push_back({controller_id(), ActDelta{-1}});
  return out;
}

// ---------------------------------------------------------------------------
// controller

enum class CtrlPhase : std::uint8_t { waiting, counting, stopped };

inline const char* to_string(CtrlPhase p) {
  switch (p) {
    case CtrlPhase::waiting: return "waiting";
    case CtrlPhase::counting: return "counting";
    case CtrlPhase::stopped: return "stopped";
  }
  return "?";
}

struct ControllerState {
  std::int64_t act = 0;
  bool seen_first = false;
  CtrlPhase phase = CtrlPhase::waiting;
  // act was below zero with nothing left to read: an accounting violation,
  // sticky once seen. A transient dip while deltas are still queued is fine
  // (a finish notice can overtake the announcement on another channel),
  // so the scheduler records this only at empty-mailbox evaluation points.
  bool saw_negative = false;
};

inline void controller_consume(ControllerState& s, const Message& m) {
  const auto* d = std::get_if<ActDelta>(&m);
  if (!d) throw ProtocolError("C: expected an activity delta, got " +
                              to_string(m));
  if (s.phase == CtrlPhase::waiting) {
    s.phase = CtrlPhase::counting;
    s.seen_first = true;
  }
  s.act += d->delta;
}

inline bool controller_can_break(const ControllerState& s,
                                 bool mailbox_empty) {
  return s.phase == CtrlPhase::counting && mailbox_empty && s.act == 0;
}

inline void controller_break(ControllerState& s) {
  s.phase = CtrlPhase::stopped;
}

}  // namespace mda
