#pragma once
// Scheduler over the agent transition functions: global state, the enabled
// set, and the single-step executor. Steps are atomic (one consumption or one
// burst, with all of its emissions delivered at once) unless per_send_grain
// parks emissions in a per-agent outbox that drains one message per step.
//
// Agents are connected by point-to-point duplex channels; each incident
// channel is its own FIFO queue, and which nonempty channel an agent reads
// next is a scheduling choice. Scheduling rules baked in here:
//  - while any agent still owes its startup burst, only bursts may run
//    (otherwise the counter could hit zero before the system even starts);
//  - the controller consumes exactly one delta per step;
//  - stopped lanes are never scheduled, so residual mail just sits there;
//  - a freshly spawned agent bursts before anything else happens.
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agents.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "message.hpp"
#include "ontology.hpp"

namespace mda {

enum class Lane : std::uint8_t { main, result, flush };

inline const char* to_string(Lane l) {
  switch (l) {
    case Lane::main: return "main";
    case Lane::result: return "result";
    case Lane::flush: return "flush";
  }
  return "?";
}

// A schedulable transition: which agent, which lane, and — for a message
// consumption — which incoming channel to read. Bursts, deferred flushes,
// outbox flushes, result steps and the controller's break carry no channel.
struct Action {
  AgentId agent;
  Lane lane = Lane::main;
  std::optional<AgentId> from;
  friend auto operator<=>(const Action&, const Action&) = default;
};

inline std::string to_string(const Action& a) {
  std::string s = a.agent.to_string() + "/" + to_string(a.lane);
  if (a.from) s += "<" + a.from->to_string();
  return s;
}

struct Outbox {
  std::deque<Emission> q;
  bool urgent = false;  // filled by a startup burst: drains before anything else
};

// incoming channels of one agent, keyed by the peer at the other end
using Channels = std::map<AgentId, std::deque<Message>>;

struct GlobalState {
  ControllerState ctrl;
  std::vector<InstanceState> instances;  // static agents first, then spawned
  std::vector<RelationState> relations;
  std::vector<RuleState> rules;
  std::map<AgentId, Channels> mail;    // receiver -> sender -> queue
  std::map<AgentId, Outbox> outboxes;  // per_send_grain only
  std::uint32_t spawn_count = 0;
  std::uint64_t step_no = 0;
  bool stop_broadcast = false;

  // bookkeeping outside the protocol state (not hashed)
  bool ledger_violation = false;
  bool spawn_cap_hit = false;
  std::vector<std::string> diagnostics;

  InstanceState* find_instance(std::uint32_t id) {
    for (auto& i : instances)
      if (i.id == id) return &i;
    return nullptr;
  }
  const InstanceState* find_instance(std::uint32_t id) const {
    return const_cast<GlobalState*>(this)->find_instance(id);
  }
};

struct TraceEvent {
  std::uint64_t step = 0;
  Action action;
  std::string consumed = "-";
  std::vector<std::string> emitted;
  std::int64_t act_after = 0;

  std::string to_line() const {
    std::string s = std::to_string(step) + " " + to_string(action) + " " +
                    consumed + " [";
    for (std::size_t i = 0; i < emitted.size(); ++i) {
      if (i) s += "; ";
      s += emitted[i];
    }
    s += "] act=" + std::to_string(act_after);
    return s;
  }
};

// ---------------------------------------------------------------------------
// construction

inline GlobalState init_state(const SystemConfig& cfg) {
  GlobalState s;
  for (const auto& ii : cfg.instances)
    s.instances.push_back(make_instance_state(ii, cfg.merge_policy()));
  for (const auto& ri : cfg.relation_agents)
    s.relations.push_back(make_relation_state(ri, cfg.merge_policy()));
  for (const auto& ru : cfg.rules) {
    RuleState r = make_rule_state(ru.ordinal, ru.slots);
    rule_start(r);  // rules announce nothing, so their burst runs here
    s.rules.push_back(std::move(r));
  }
  return s;
}

// ---------------------------------------------------------------------------
// mailbox access

namespace detail {

inline const Channels* channels_of(const GlobalState& s, AgentId id) {
  auto it = s.mail.find(id);
  return it == s.mail.end() ? nullptr : &it->second;
}

inline bool outbox_nonempty(const GlobalState& s, AgentId id) {
  auto it = s.outboxes.find(id);
  return it != s.outboxes.end() && !it->second.q.empty();
}

inline bool outbox_urgent(const GlobalState& s, AgentId id) {
  auto it = s.outboxes.find(id);
  return it != s.outboxes.end() && !it->second.q.empty() && it->second.urgent;
}

}  // namespace detail

inline bool mail_empty(const GlobalState& s, AgentId id) {
  const Channels* ch = detail::channels_of(s, id);
  if (!ch) return true;
  for (const auto& [src, q] : *ch)
    if (!q.empty()) return false;
  return true;
}

inline std::size_t mail_count(const GlobalState& s, AgentId id) {
  const Channels* ch = detail::channels_of(s, id);
  if (!ch) return 0;
  std::size_t n = 0;
  for (const auto& [src, q] : *ch) n += q.size();
  return n;
}

namespace detail {

inline void deliver(GlobalState& s, AgentId from, const Emission& e) {
  s.mail[e.dest][from].push_back(e.msg);
}

inline Message pop_mail(GlobalState& s, AgentId id, AgentId from) {
  auto oit = s.mail.find(id);
  if (oit == s.mail.end())
    throw ProtocolError(id.to_string() + ": nothing to consume");
  auto cit = oit->second.find(from);
  if (cit == oit->second.end() || cit->second.empty())
    throw ProtocolError(id.to_string() + ": channel from " + from.to_string() +
                        " is empty");
  Message m = std::move(cit->second.front());
  cit->second.pop_front();
  if (cit->second.empty()) oit->second.erase(cit);  // keep the map canonical
  if (oit->second.empty()) s.mail.erase(oit);
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// enabled set

inline std::vector<Action> enabled(const GlobalState& s,
                                   const SystemConfig& cfg) {
  std::vector<Action> urgent, normal;
  auto offer = [&](AgentId id, Lane lane, bool is_urgent,
                   std::optional<AgentId> from = {}) {
    (is_urgent ? urgent : normal).push_back({id, lane, from});
  };
  auto offer_consumes = [&](AgentId id) {
    const Channels* ch = detail::channels_of(s, id);
    if (!ch) return;
    for (const auto& [src, q] : *ch)
      if (!q.empty()) offer(id, Lane::main, false, src);
  };

  {
    AgentId c = controller_id();
    if (s.ctrl.phase != CtrlPhase::stopped) {
      if (!mail_empty(s, c))
        offer_consumes(c);
      else if (controller_can_break(s.ctrl, true))
        offer(c, Lane::main, false);
    }
  }
  for (const auto& i : s.instances) {
    AgentId id = instance_id(i.id);
    if (detail::outbox_nonempty(s, id)) {
      offer(id, Lane::flush, detail::outbox_urgent(s, id));
      continue;
    }
    if (i.phase == Phase::initial_burst)
      offer(id, Lane::main, true);
    else if (i.phase == Phase::deferred_announce)
      offer(id, Lane::main, false);
    else if (i.phase == Phase::listening)
      offer_consumes(id);
  }
  for (const auto& r : s.relations) {
    AgentId id = relation_id(r.id);
    if (detail::outbox_nonempty(s, id)) {
      offer(id, Lane::flush, detail::outbox_urgent(s, id));
      continue;
    }
    if (r.phase == Phase::initial_burst)
      offer(id, Lane::main, true);
    else if (r.phase == Phase::listening)
      offer_consumes(id);
  }
  for (const auto& r : s.rules) {
    AgentId id = rule_id(r.id);
    if (detail::outbox_nonempty(s, id)) {
      offer(id, Lane::flush, detail::outbox_urgent(s, id));
      continue;
    }
    if (r.in_phase == Phase::listening) offer_consumes(id);
    if (r.res_phase == Phase::listening && !r.internal.empty())
      offer(id, Lane::result, false);
  }

  if (!urgent.empty()) {
    std::sort(urgent.begin(), urgent.end());
    return urgent;
  }
  std::sort(normal.begin(), normal.end());
  (void)cfg;
  return normal;
}

// ---------------------------------------------------------------------------
// accounting: everything announced-but-unfinished on the left, every work
// item still owed (in mail, parked in an outbox, or queued inside a rule) on
// the right; the two columns agree after every faithful step

inline std::int64_t ledger_left(const GlobalState& s) {
  std::int64_t left = s.ctrl.act;
  if (const Channels* ch = detail::channels_of(s, controller_id()))
    for (const auto& [src, q] : *ch)
      for (const auto& m : q)
        if (const auto* d = std::get_if<ActDelta>(&m)) left += d->delta;
  for (const auto& [id, ob] : s.outboxes)
    for (const auto& e : ob.q)
      if (e.dest == controller_id())
        if (const auto* d = std::get_if<ActDelta>(&e.msg)) left += d->delta;
  return left;
}

inline std::int64_t ledger_right(const GlobalState& s) {
  std::int64_t right = 0;
  for (const auto& [id, ch] : s.mail) {
    if (id == controller_id()) continue;
    for (const auto& [src, q] : ch)
      for (const auto& m : q)
        if (is_work(m)) ++right;
  }
  for (const auto& [id, ob] : s.outboxes)
    for (const auto& e : ob.q)
      if (e.dest != controller_id() && is_work(e.msg)) ++right;
  for (const auto& r : s.rules)
    for (const auto& item : r.internal)
      if (std::holds_alternative<ArgVector>(item)) ++right;
  return right;
}

// ---------------------------------------------------------------------------
// step

namespace detail {

inline void route_check(const GlobalState& s, const SystemConfig& cfg,
                        AgentId from, AgentId to) {
  auto no_channel = [&](const std::string& why) {
    throw TopologyError("no channel " + from.to_string() + " -> " +
                        to.to_string() + " (" + why + ")");
  };
  bool kind_ok = false;
  if (from.kind == AgentKind::controller || to.kind == AgentKind::controller)
    kind_ok = true;
  else if (from.kind == AgentKind::instance)
    kind_ok = to.kind == AgentKind::rule;
  else if (from.kind == AgentKind::relation)
    kind_ok = to.kind == AgentKind::instance || to.kind == AgentKind::rule;
  else if (from.kind == AgentKind::rule)
    kind_ok = to.kind == AgentKind::instance || to.kind == AgentKind::relation;
  if (!kind_ok) no_channel("kinds never talk");

  switch (to.kind) {
    case AgentKind::controller:
      break;
    case AgentKind::instance:
      if (!s.find_instance(to.index)) no_channel("unknown agent");
      break;
    case AgentKind::relation:
      if (to.index < 1 || to.index > s.relations.size())
        no_channel("unknown agent");
      break;
    case AgentKind::rule:
      if (to.index < 1 || to.index > s.rules.size()) no_channel("unknown agent");
      break;
  }

  if (cfg.topology_mode == SystemConfig::TopologyMode::explicit_edges &&
      from.kind != AgentKind::controller &&
      to.kind != AgentKind::controller) {
    for (const auto& [a, b] : cfg.edges)
      if ((a == from && b == to) || (a == to && b == from)) return;
    no_channel("not in the edge list");
  }
}

inline void spawn_instance(GlobalState& s, const SystemConfig& cfg,
                           const SpawnRequest& req) {
  if (s.spawn_count >= cfg.max_dynamic_agents) {
    if (!s.spawn_cap_hit)
      s.diagnostics.push_back(
          "dynamic-agent cap reached (" +
          std::to_string(cfg.max_dynamic_agents) + "); spawn suppressed");
    s.spawn_cap_hit = true;
    return;
  }
  ++s.spawn_count;
  InstanceState inst;
  inst.id = cfg.n_instance + s.spawn_count;
  std::uint32_t n_class =
      std::max<std::size_t>(std::size_t{1}, cfg.ontology.classes.size());
  inst.class_id = ((inst.id - 1) % n_class) + 1;
  for (std::uint32_t r = 1; r <= cfg.n_rule; ++r) inst.out_rules.push_back(r);
  if (cfg.flags.unbounded_spawn) {
    // a fresh private word per newcomer keeps the growth genuinely open-ended
    std::uint32_t w = cfg.n_words + s.spawn_count;
    inst.pos.insert({w, w});
  } else {
    inst.pos = req.point;
  }
  s.instances.push_back(std::move(inst));
}

}  // namespace detail

inline TraceEvent step(GlobalState& s, const SystemConfig& cfg,
                       const Action& a) {
  TraceEvent ev;
  ev.action = a;
  std::vector<Emission> out;
  std::vector<SpawnRequest> spawned;
  bool burst_origin = false;

  if (a.lane == Lane::flush) {
    Outbox& ob = s.outboxes.at(a.agent);
    if (ob.q.empty())
      throw ProtocolError(a.agent.to_string() + ": nothing to flush");
    Emission e = std::move(ob.q.front());
    ob.q.pop_front();
    if (ob.q.empty()) ob.urgent = false;
    ev.emitted.push_back(to_string(e));
    detail::deliver(s, a.agent, e);
  } else if (a.agent.kind == AgentKind::controller) {
    if (a.from) {
      Message m = detail::pop_mail(s, a.agent, *a.from);
      ev.consumed = to_string(m);
      controller_consume(s.ctrl, m);
    } else {
      if (!controller_can_break(s.ctrl, mail_empty(s, a.agent)))
        throw ProtocolError("C: break without the break condition");
      ev.consumed = "break";
      controller_break(s.ctrl);
      s.stop_broadcast = true;
      auto send_stop = [&](AgentId id) {
        s.mail[id][controller_id()].push_back(StopToken{});
        ev.emitted.push_back(id.to_string() + "<-STOP");
      };
      for (const auto& i : s.instances) send_stop(instance_id(i.id));
      for (const auto& r : s.relations) send_stop(relation_id(r.id));
      for (const auto& r : s.rules) send_stop(rule_id(r.id));
    }
  } else if (a.agent.kind == AgentKind::instance) {
    InstanceState* inst = s.find_instance(a.agent.index);
    if (!inst) throw ProtocolError(a.agent.to_string() + ": no such agent");
    if (inst->phase == Phase::initial_burst) {
      out = instance_initial_burst(*inst, cfg);
      burst_origin = true;
    } else if (inst->phase == Phase::deferred_announce) {
      out = instance_flush_deferred(*inst);
    } else {
      if (!a.from)
        throw ProtocolError(a.agent.to_string() + ": consume needs a channel");
      Message m = detail::pop_mail(s, a.agent, *a.from);
      ev.consumed = to_string(m);
      out = instance_handle(*inst, m, cfg);
    }
  } else if (a.agent.kind == AgentKind::relation) {
    RelationState& rel = s.relations.at(a.agent.index - 1);
    if (rel.phase == Phase::initial_burst) {
      out = relation_initial_burst(rel, cfg);
      burst_origin = true;
    } else {
      if (!a.from)
        throw ProtocolError(a.agent.to_string() + ": consume needs a channel");
      Message m = detail::pop_mail(s, a.agent, *a.from);
      ev.consumed = to_string(m);
      out = relation_handle(rel, m, cfg);
    }
  } else {  // rule
    RuleState& rule = s.rules.at(a.agent.index - 1);
    if (a.lane == Lane::main) {
      if (!a.from)
        throw ProtocolError(a.agent.to_string() + ": consume needs a channel");
      Message m = detail::pop_mail(s, a.agent, *a.from);
      ev.consumed = to_string(m);
      out = rule_handle_input(rule, m, cfg);
    } else {
      out = rule_step_result(rule, cfg, spawned);
    }
  }

  if (!out.empty()) {
    for (const auto& e : out) {
      detail::route_check(s, cfg, a.agent, e.dest);
      ev.emitted.push_back(to_string(e));
    }
    if (cfg.flags.per_send_grain) {
      Outbox& ob = s.outboxes[a.agent];
      for (auto& e : out) ob.q.push_back(std::move(e));
      if (burst_origin) ob.urgent = true;
    } else {
      for (const auto& e : out) detail::deliver(s, a.agent, e);
    }
  }
  for (const auto& req : spawned) detail::spawn_instance(s, cfg, req);

  ++s.step_no;
  ev.step = s.step_no;
  ev.act_after = s.ctrl.act;

  if (s.ctrl.act < 0 && mail_empty(s, controller_id()) &&
      !s.ctrl.saw_negative) {
    s.ctrl.saw_negative = true;
    s.diagnostics.push_back("act below zero with an empty controller mailbox "
                            "after step " + std::to_string(s.step_no));
  }
  bool faithful =
      !cfg.flags.fault_notify_after && !cfg.flags.fault_drop_minus_one;
  if (faithful) {
    if (ledger_left(s) != ledger_right(s)) {
      if (!s.ledger_violation)
        s.diagnostics.push_back("accounting ledger out of balance after step " +
                                std::to_string(s.step_no));
      s.ledger_violation = true;
    }
  }
  return ev;
}

// ---------------------------------------------------------------------------
// canonical serialization and hashing (protocol state only: scheduling
// bookkeeping, diagnostics and sticky accounting flags stay out so that
// behaviourally identical states collide)

inline bool all_stopped(const GlobalState& s) {
  if (s.ctrl.phase != CtrlPhase::stopped) return false;
  for (const auto& i : s.instances)
    if (i.phase != Phase::stopped) return false;
  for (const auto& r : s.relations)
    if (r.phase != Phase::stopped) return false;
  for (const auto& r : s.rules)
    if (r.in_phase != Phase::stopped || r.res_phase != Phase::stopped)
      return false;
  return true;
}

// Streams the canonical text form into any sink taking string_views, so the
// hasher never has to build the whole string.
template <class Sink>
inline void write_state(const GlobalState& s, Sink&& put) {
  char buf[24];
  auto num = [&](std::int64_t v) {
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    put(std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)));
  };

  put("ctrl act=");
  num(s.ctrl.act);
  put(" phase=");
  put(to_string(s.ctrl.phase));
  put(s.ctrl.seen_first ? " seen=1\n" : " seen=0\n");

  for (const auto& i : s.instances) {
    put("I");
    num(i.id);
    put(" c");
    num(i.class_id);
    put(" phase=");
    put(to_string(i.phase));
    put(i.was_upd ? " upd=1" : " upd=0");
    put(" pos=");
    put(i.pos.to_string());
    put(" attrs=");
    for (const auto& a : i.attrs) {
      num(a.attr_id);
      put(":{");
      bool first = true;
      for (auto v : a.values) {
        if (!first) put(",");
        num(v);
        first = false;
      }
      put("}@");
      put(a.pos.to_string());
      put(";");
    }
    put(" rel=");
    for (const auto& [rl, members] : i.rel) {
      num(rl);
      put(":{");
      bool first = true;
      for (auto m : members) {
        if (!first) put(",");
        num(m);
        first = false;
      }
      put("};");
    }
    if (!i.deferred.empty()) {
      put(" deferred=[");
      for (const auto& e : i.deferred) {
        put(to_string(e));
        put(";");
      }
      put("]");
    }
    put("\n");
  }

  for (const auto& r : s.relations) {
    put("Rl");
    num(r.id);
    put(" decl");
    num(r.relation_id);
    put(" phase=");
    put(to_string(r.phase));
    put(r.was_upd ? " upd=1" : " upd=0");
    put(" pos=");
    put(r.pos.to_string());
    put(" announced={");
    for (auto idx : r.announced) {
      num(idx);
      put(",");
    }
    put("} elems=");
    for (const auto& e : r.instances) {
      put("#");
      num(e.index);
      put("(o1=");
      if (e.o1) num(*e.o1);
      else put("-");
      put("@");
      put(e.o1_pos.to_string());
      put(",o2=");
      if (e.o2) num(*e.o2);
      else put("-");
      put("@");
      put(e.o2_pos.to_string());
      put(",attrs=");
      for (const auto& [aid, slot] : e.attrs) {
        num(aid);
        put(":{");
        bool first = true;
        for (auto v : slot.values) {
          if (!first) put(",");
          num(v);
          first = false;
        }
        put("}@");
        put(slot.pos.to_string());
        put(";");
      }
      put(",pos=");
      put(e.pos.to_string());
      put(");");
    }
    put("\n");
  }

  for (const auto& r : s.rules) {
    put("R");
    num(r.id);
    put(" in=");
    put(to_string(r.in_phase));
    put(" res=");
    put(to_string(r.res_phase));
    put(" gen=");
    num(static_cast<std::int64_t>(r.gen));
    put(r.bound_violation ? " bound=1" : " bound=0");
    put(" pools=");
    for (std::size_t k = 0; k < r.pools.size(); ++k) {
      num(static_cast<std::int64_t>(k));
      put(":[");
      for (const auto& it : r.pools[k].items) {
        put(to_string(it));
        put(";");
      }
      put("]");
    }
    put(" side=[");
    for (const auto& it : r.side_pool) {
      put(to_string(it));
      put(";");
    }
    put("] internal=[");
    for (const auto& item : r.internal) {
      if (const auto* v = std::get_if<ArgVector>(&item)) put(to_string(*v));
      else put("STOP");
      put(";");
    }
    put("] pnt={");
    for (const auto& [k, v] : r.pnt) {
      put(k);
      put(":");
      num(v);
      put(",");
    }
    put("} quota={");
    for (const auto& [k, v] : r.quota_used) {
      put(k);
      put(":");
      num(v);
      put(",");
    }
    put("}\n");
  }

  for (const auto& [id, ch] : s.mail)
    for (const auto& [src, q] : ch) {
      if (q.empty()) continue;
      put("mail ");
      put(id.to_string());
      put("<");
      put(src.to_string());
      put("=[");
      for (const auto& m : q) {
        put(to_string(m));
        put(";");
      }
      put("]\n");
    }
  for (const auto& [id, ob] : s.outboxes) {
    if (ob.q.empty()) continue;
    put("outbox ");
    put(id.to_string());
    put(ob.urgent ? " urgent=1" : " urgent=0");
    put(" q=[");
    for (const auto& e : ob.q) {
      put(to_string(e));
      put(";");
    }
    put("]\n");
  }
  put("spawns=");
  num(s.spawn_count);
  put(s.stop_broadcast ? " stop=1\n" : " stop=0\n");
}

inline std::string serialize(const GlobalState& s) {
  std::string out;
  out.reserve(512);
  write_state(s, [&](std::string_view v) { out.append(v); });
  return out;
}

inline std::uint64_t state_hash(const GlobalState& s) {
  std::uint64_t h = fnv1a64("");
  write_state(s, [&](std::string_view v) { h = fnv1a64(v, h); });
  return h;
}

}  // namespace mda
