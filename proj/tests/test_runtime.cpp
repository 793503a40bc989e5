// runtime scheduler: init, enabled-set shape, step mechanics, accounting
#include <catch2/catch_amalgamated.hpp>

#include <mda/runtime.hpp>
#include <mda/synth.hpp>

using namespace mda;

namespace {

SystemConfig synth(std::uint32_t ni, std::uint32_t nr, std::uint32_t nu) {
  SynthParams p;
  p.n_instance = ni;
  p.n_relation = nr;
  p.n_rule = nu;
  return build_synthetic(p);
}

// deterministic reference policy: always take the first enabled action
int run_first_choice(GlobalState& s, const SystemConfig& cfg, int budget,
                     bool check_ledger = true) {
  int steps = 0;
  while (steps < budget) {
    auto acts = enabled(s, cfg);
    if (acts.empty()) return steps;
    step(s, cfg, acts.front());
    ++steps;
    if (check_ledger) {
      REQUIRE(ledger_left(s) == ledger_right(s));
      REQUIRE(!s.ctrl.saw_negative);  // act may dip mid-drain, never at rest
    }
  }
  return -1;  // budget exhausted
}

}  // namespace

TEST_CASE("initial state and the first burst step", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  auto s = init_state(cfg);

  REQUIRE(s.instances.size() == 1);
  CHECK(s.instances[0].phase == Phase::initial_burst);
  REQUIRE(s.rules.size() == 1);
  CHECK(s.rules[0].in_phase == Phase::listening);   // trivial start happens at init
  CHECK(s.rules[0].res_phase == Phase::listening);
  CHECK(s.ctrl.phase == CtrlPhase::waiting);
  CHECK(s.step_no == 0);
  CHECK(!s.stop_broadcast);

  auto acts = enabled(s, cfg);
  REQUIRE(acts.size() == 1);
  CHECK(to_string(acts[0]) == "I1/main");

  auto ev = step(s, cfg, acts[0]);
  CHECK(ev.step == 1);
  CHECK(ev.consumed == "-");
  REQUIRE(ev.emitted.size() == 5);
  CHECK(ev.emitted[0] == "C<-D{+2}");
  CHECK(ev.emitted[1] == "R1<-AI{I1,c1,{[1,1]}}");
  CHECK(ev.emitted[2] == "C<-D{+1}");
  CHECK(ev.emitted[3] == "R1<-AV{I1,a0,v1,{[1,1]}}");
  CHECK(ev.emitted[4] == "C<-D{-1}");
  CHECK(ev.act_after == 0);
  CHECK(ev.to_line() ==
        "1 I1/main - [C<-D{+2}; R1<-AI{I1,c1,{[1,1]}}; C<-D{+1}; "
        "R1<-AV{I1,a0,v1,{[1,1]}}; C<-D{-1}] act=0");

  CHECK(mail_count(s, controller_id()) == 3);
  CHECK(mail_count(s, rule_id(1)) == 2);
  CHECK(s.instances[0].phase == Phase::listening);
  CHECK(ledger_left(s) == 2);
  CHECK(ledger_right(s) == 2);
  CHECK(s.step_no == 1);

  auto ev2 = step(s, cfg, enabled(s, cfg).front());  // controller consumes D{+2}
  CHECK(ev2.to_line() == "2 C/main<I1 D{+2} [] act=2");
  CHECK(s.ctrl.phase == CtrlPhase::counting);
}

TEST_CASE("smallest faithful system runs to a clean stop", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  auto s = init_state(cfg);

  int steps = run_first_choice(s, cfg, 100);
  CHECK(steps == 20);
  CHECK(s.stop_broadcast);
  CHECK(all_stopped(s));
  CHECK(s.ctrl.act == 0);
  CHECK(ledger_left(s) == 0);
  CHECK(ledger_right(s) == 0);
  CHECK(!s.ledger_violation);
  CHECK(s.mail.empty());  // drained channels are erased, stop tokens consumed

  // the rule echoed the value back; nothing new was learned, nothing spawned
  CHECK(s.instances[0].was_upd);
  CHECK(s.instances[0].attrs[0].values.size() == 1);
  CHECK(s.rules[0].gen == 0);
  CHECK(s.rules[0].internal.empty());
  REQUIRE(s.rules[0].pools.size() == 2);
  CHECK(s.rules[0].pools[0].items.size() == 1);
  CHECK(s.rules[0].pools[1].items.size() == 1);
}

TEST_CASE("startup bursts preempt every other transition", "[runtime]") {
  auto cfg = synth(2, 1, 2);
  auto s = init_state(cfg);

  auto first = enabled(s, cfg);
  REQUIRE(first.size() == 3);
  CHECK(to_string(first[0]) == "I1/main");
  CHECK(to_string(first[1]) == "I2/main");
  CHECK(to_string(first[2]) == "Rl1/main");

  step(s, cfg, first[0]);  // I1 bursts; deltas now sit in the controller mailbox
  REQUIRE(!mail_empty(s, controller_id()));
  auto rest = enabled(s, cfg);
  REQUIRE(rest.size() == 2);  // the controller stays locked out
  CHECK(to_string(rest[0]) == "I2/main");
  CHECK(to_string(rest[1]) == "Rl1/main");
}

TEST_CASE("two-instance system quiesces with balanced books", "[runtime]") {
  auto cfg = synth(2, 1, 2);
  auto s = init_state(cfg);

  int steps = run_first_choice(s, cfg, 2000);
  REQUIRE(steps > 0);
  CHECK(s.stop_broadcast);
  CHECK(all_stopped(s));
  CHECK(s.ctrl.act == 0);
  CHECK(ledger_left(s) == 0);
  CHECK(ledger_right(s) == 0);
  CHECK(s.mail.empty());
  CHECK(s.spawn_count == 0);

  // the same run again lands on the identical state
  auto s2 = init_state(cfg);
  int steps2 = run_first_choice(s2, cfg, 2000);
  CHECK(steps2 == steps);
  CHECK(state_hash(s2) == state_hash(s));
  CHECK(serialize(s2) == serialize(s));
}

TEST_CASE("state hash ignores bookkeeping, tracks substance", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  auto s = init_state(cfg);
  run_first_choice(s, cfg, 100);

  auto h = state_hash(s);
  s.step_no += 7;
  s.diagnostics.push_back("note");
  CHECK(state_hash(s) == h);
  s.ctrl.saw_negative = true;  // diagnostic flag, not protocol state
  CHECK(state_hash(s) == h);
  s.ctrl.act += 1;
  CHECK(state_hash(s) != h);
}

TEST_CASE("venue fixture converges to the linked pair", "[runtime]") {
  auto cfg = build_venue_fixture();
  auto s = init_state(cfg);

  int steps = run_first_choice(s, cfg, 300);
  REQUIRE(steps > 0);
  CHECK(s.stop_broadcast);
  CHECK(all_stopped(s));

  REQUIRE(s.relations.size() == 1);
  const auto& rl = s.relations[0];
  REQUIRE(rl.instances.size() == 1);
  CHECK(rl.instances[0].index == 1);
  REQUIRE(rl.instances[0].o1.has_value());
  REQUIRE(rl.instances[0].o2.has_value());
  CHECK(*rl.instances[0].o1 == 1);
  CHECK(*rl.instances[0].o2 == 2);
  CHECK(rl.instances[0].pos.to_string() == "{[1,10],[13,17]}");
  CHECK(rl.was_upd);

  // both parties heard about the new link
  CHECK(s.instances[0].rel.at(1).count(1) == 1);
  CHECK(s.instances[1].rel.at(1).count(1) == 1);
  CHECK(ledger_left(s) == 0);
  CHECK(ledger_right(s) == 0);
}

TEST_CASE("per-send grain parks emissions and flushes one at a time",
          "[runtime]") {
  auto cfg = synth(1, 0, 1);
  cfg.flags.per_send_grain = true;
  auto s = init_state(cfg);

  step(s, cfg, enabled(s, cfg).front());  // burst lands in the outbox
  CHECK(s.mail.empty());
  REQUIRE(s.outboxes.at(instance_id(1)).q.size() == 5);

  auto acts = enabled(s, cfg);
  REQUIRE(acts.size() == 1);
  CHECK(to_string(acts[0]) == "I1/flush");

  auto ev = step(s, cfg, acts[0]);
  CHECK(ev.to_line() == "2 I1/flush - [C<-D{+2}] act=0");
  CHECK(mail_count(s, controller_id()) == 1);
  CHECK(s.outboxes.at(instance_id(1)).q.size() == 4);
  CHECK(ledger_left(s) == ledger_right(s));  // parked sends still count
  REQUIRE(enabled(s, cfg).size() == 1);      // burst flush stays urgent
  CHECK(to_string(enabled(s, cfg).front()) == "I1/flush");

  int steps = run_first_choice(s, cfg, 200);
  REQUIRE(steps > 0);
  CHECK(s.stop_broadcast);
  CHECK(all_stopped(s));

  // the fine-grained run settles on the same fixpoint as the atomic one
  auto atomic_cfg = synth(1, 0, 1);
  auto sa = init_state(atomic_cfg);
  run_first_choice(sa, atomic_cfg, 100);
  CHECK(state_hash(s) == state_hash(sa));
}

TEST_CASE("dropped completion starves the counter into a deadlock",
          "[runtime]") {
  auto cfg = synth(1, 0, 1);
  cfg.flags.fault_drop_minus_one = true;
  auto s = init_state(cfg);

  int steps = run_first_choice(s, cfg, 100, /*check_ledger=*/false);
  REQUIRE(steps > 0);
  CHECK(!s.stop_broadcast);
  CHECK(!all_stopped(s));
  CHECK(s.ctrl.act == 1);  // the missing -1, permanently
  CHECK(enabled(s, cfg).empty());
}

TEST_CASE("a negative balance at rest is recorded as a violation",
          "[runtime]") {
  auto cfg = synth(0, 0, 0);
  auto s = init_state(cfg);
  // a finish notice with no matching announcement anywhere
  s.mail[controller_id()][instance_id(1)].push_back(Message{ActDelta{-1}});

  auto acts = enabled(s, cfg);
  REQUIRE(acts.size() == 1);
  CHECK(to_string(acts[0]) == "C/main<I1");
  step(s, cfg, acts[0]);
  CHECK(s.ctrl.act == -1);
  CHECK(s.ctrl.saw_negative);  // nothing left to read, so this is final
  REQUIRE(!s.diagnostics.empty());
  CHECK(s.diagnostics.front().find("below zero") != std::string::npos);
  CHECK(enabled(s, cfg).empty());  // no break either: act is not zero
}

TEST_CASE("late-announcement fault defers deltas past the data", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  cfg.flags.fault_notify_after = true;
  auto s = init_state(cfg);

  auto ev = step(s, cfg, enabled(s, cfg).front());
  REQUIRE(ev.emitted.size() == 2);
  CHECK(ev.emitted[0] == "R1<-AI{I1,c1,{[1,1]}}");
  CHECK(ev.emitted[1] == "R1<-AV{I1,a0,v1,{[1,1]}}");
  CHECK(s.instances[0].phase == Phase::deferred_announce);
  CHECK(mail_empty(s, controller_id()));

  // the flush is an ordinary transition, not an urgent one
  auto acts = enabled(s, cfg);
  REQUIRE(acts.size() == 2);
  CHECK(to_string(acts[0]) == "I1/main");
  CHECK(to_string(acts[1]) == "R1/main<I1");

  auto ev2 = step(s, cfg, acts[0]);
  REQUIRE(ev2.emitted.size() == 3);
  CHECK(ev2.emitted[0] == "C<-D{+2}");
  CHECK(ev2.emitted[1] == "C<-D{+1}");
  CHECK(ev2.emitted[2] == "C<-D{-1}");
  CHECK(s.instances[0].phase == Phase::listening);

  int steps = run_first_choice(s, cfg, 100, /*check_ledger=*/false);
  REQUIRE(steps > 0);
  CHECK(s.stop_broadcast);  // this schedule happened to be benign
}

TEST_CASE("a consistent result can spawn one bursting newcomer", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  cfg.imitation.spawn_quota = 1;
  auto s = init_state(cfg);

  // drive until the spawn appears, then the newcomer must burst immediately
  while (s.spawn_count == 0) {
    auto acts = enabled(s, cfg);
    REQUIRE(!acts.empty());
    step(s, cfg, acts.front());
  }
  REQUIRE(s.instances.size() == 2);
  auto urgent = enabled(s, cfg);
  REQUIRE(urgent.size() == 1);
  CHECK(to_string(urgent[0]) == "I2/main");
  auto ev = step(s, cfg, urgent[0]);
  REQUIRE(ev.emitted.size() == 3);
  CHECK(ev.emitted[0] == "C<-D{+2}");
  CHECK(ev.emitted[1] == "R1<-AI{I2,c1,{[1,1]}}");
  CHECK(ev.emitted[2] == "C<-D{-1}");

  int steps = run_first_choice(s, cfg, 200);
  REQUIRE(steps > 0);
  CHECK(s.stop_broadcast);
  CHECK(all_stopped(s));
  CHECK(s.spawn_count == 1);

  const auto& kid = s.instances[1];
  CHECK(kid.id == 2);
  CHECK(kid.class_id == 1);
  CHECK(kid.out_rules == std::vector<std::uint32_t>{1});
  CHECK(kid.attrs.empty());
  CHECK(kid.pos.to_string() == "{[1,1]}");
  CHECK(kid.phase == Phase::stopped);

  CHECK(s.rules[0].gen == 1);
  CHECK(s.rules[0].pnt.at("{[1,1]}") == 1);
  CHECK(!s.rules[0].bound_violation);
}

TEST_CASE("dynamic-agent cap suppresses the spawn and flags it", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  cfg.imitation.spawn_quota = 1;
  cfg.max_dynamic_agents = 0;
  auto s = init_state(cfg);

  int steps = run_first_choice(s, cfg, 200);
  REQUIRE(steps > 0);
  CHECK(s.stop_broadcast);
  CHECK(s.spawn_cap_hit);
  CHECK(s.instances.size() == 1);
  CHECK(s.spawn_count == 0);
  REQUIRE(!s.diagnostics.empty());
  CHECK(s.diagnostics.front().find("dynamic-agent cap") != std::string::npos);
}

TEST_CASE("explicit topology rejects sends without a channel", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  cfg.topology_mode = SystemConfig::TopologyMode::explicit_edges;
  auto s = init_state(cfg);
  CHECK_THROWS_AS(step(s, cfg, enabled(s, cfg).front()), TopologyError);

  cfg.edges = {{instance_id(1), rule_id(1)}};
  auto s2 = init_state(cfg);
  CHECK_NOTHROW(step(s2, cfg, enabled(s2, cfg).front()));
  int steps = run_first_choice(s2, cfg, 100);  // one edge covers both directions
  REQUIRE(steps > 0);
  CHECK(s2.stop_broadcast);
}

TEST_CASE("an empty system waits forever", "[runtime]") {
  auto cfg = synth(0, 0, 0);
  auto s = init_state(cfg);
  CHECK(enabled(s, cfg).empty());
  CHECK(!s.stop_broadcast);
  CHECK(!all_stopped(s));
  CHECK(s.ctrl.phase == CtrlPhase::waiting);
}

TEST_CASE("serialization is a pure function of the state", "[runtime]") {
  auto cfg = synth(1, 0, 1);
  auto a = init_state(cfg);
  auto b = init_state(cfg);
  CHECK(serialize(a) == serialize(b));
  CHECK(state_hash(a) == state_hash(b));
  step(b, cfg, enabled(b, cfg).front());
  CHECK(serialize(a) != serialize(b));
  CHECK(state_hash(a) != state_hash(b));
}
