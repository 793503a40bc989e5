// Acceptance suite: end-to-end checks of the runtime, the verifier and the
// command-line tool, one printed PASS/FAIL line per criterion. Exits with
// the number of failed criteria.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <mda/mda.hpp>

#include "support/point_set.hpp"

namespace fs = std::filesystem;
using namespace mda;

namespace {

const fs::path g_dir = fs::temp_directory_path() / "mda-acceptance-out";

struct Outcome {
  bool pass = true;
  std::string why;
  void fail(const std::string& reason) {
    pass = false;
    if (!why.empty()) why += "; ";
    why += reason;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

SystemConfig synth(std::uint32_t ni, std::uint32_t nr, std::uint32_t nu) {
  SynthParams p;
  p.n_instance = ni;
  p.n_relation = nr;
  p.n_rule = nu;
  return build_synthetic(p);
}

// Runs the installed CLI with MDA_OUT_DIR pointed at the scratch directory;
// returns the exit code (negative when the process did not exit normally).
int run_cli(const std::string& args) {
  std::string cmd = "MDA_OUT_DIR=" + g_dir.string() + " " + MDA_CLI_PATH +
                    " " + args + " > " + (g_dir / "cli.out").string() +
                    " 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

bool work_in_flight(const GlobalState& s) {
  for (const auto& [id, ch] : s.mail)
    for (const auto& [src, q] : ch)
      for (const auto& m : q)
        if (is_work(m)) return true;
  for (const auto& [id, ob] : s.outboxes)
    for (const auto& e : ob.q)
      if (is_work(e.msg)) return true;
  return false;
}

// --- 1: every small faithful population stops, and only after STOP --------

Outcome criterion_termination() {
  Outcome o;
  struct Shape { std::uint32_t ni, nr, nu; };
  for (Shape sh : {Shape{1, 0, 1}, Shape{2, 1, 2}, Shape{3, 2, 3}}) {
    std::string tag = "(" + std::to_string(sh.ni) + "," +
                      std::to_string(sh.nr) + "," + std::to_string(sh.nu) + ")";
    auto cfg = synth(sh.ni, sh.nr, sh.nu);
    ExploreLimits lim;
    lim.max_states = 20000000;
    lim.debug_exact = false;
    auto t0 = std::chrono::steady_clock::now();
    auto g = explore(cfg, lim);
    double dt = seconds_since(t0);
    if (dt >= 300) o.fail(tag + " exploration took " + std::to_string(dt) + "s");
    if (!g.complete) o.fail(tag + " exploration incomplete");
    if (g.n_deadlock != 0)
      o.fail(tag + " has " + std::to_string(g.n_deadlock) + " deadlocks");
    if (g.n_terminal == 0 || g.n_terminal != g.n_post_stop)
      o.fail(tag + " has terminals without the stop broadcast");
    auto rep = check_controller_correctness(cfg, lim);
    if (rep.verdict != Verdict::holds)
      o.fail(tag + " controller correctness: " + to_string(rep.verdict));
  }
  return o;
}

// --- 2: both protocol faults are detected, with artifacts ------------------

Outcome criterion_fault_sensitivity() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();

  int rc = run_cli(
      "check --instances 2 --relations 1 --rules 2 --fault notify-after "
      "--property controller-correctness");
  if (rc != 1) o.fail("check under notify-after exited " + std::to_string(rc));
  fs::path cex = g_dir / "counterexample-controller-correctness.txt";
  if (!fs::exists(cex)) {
    o.fail("no counterexample file");
    return o;
  }

  // the recorded run has to replay cleanly, through the tool and in-process
  rc = run_cli("replay --trace " + cex.string() +
               " --instances 2 --relations 1 --rules 2 --fault notify-after");
  if (rc != 0) o.fail("counterexample replay exited " + std::to_string(rc));

  auto cfg = synth(2, 1, 2);
  cfg.flags.fault_notify_after = true;
  std::ifstream in(cex);
  TraceFile tf = read_trace(in);
  ReplayResult rr = replay_trace(cfg, tf);
  if (!rr.ok) {
    o.fail("in-process replay diverged: " + rr.reason);
  } else {
    const GlobalState& s = rr.final_state;
    if (s.ctrl.act != 0)
      o.fail("final counter is " + std::to_string(s.ctrl.act));
    if (!mail_empty(s, controller_id())) o.fail("controller box not empty");
    if (!work_in_flight(s)) o.fail("no data message in flight");
  }

  rc = run_cli(
      "simulate --instances 2 --relations 1 --rules 2 --fault drop-minus-one "
      "--seed 1 --no-trace");
  if (rc != 2)
    o.fail("simulate under drop-minus-one exited " + std::to_string(rc));
  std::ifstream mf(g_dir / "manifest-simulate.json");
  nlohmann::json m = nlohmann::json::parse(mf);
  if (m["verdicts"]["outcome"] != "deadlock") o.fail("outcome not deadlock");
  if (m["verdicts"]["stop_broadcast"] != false)
    o.fail("stop broadcast happened under drop-minus-one");

  double dt = seconds_since(t0);
  if (dt >= 120) o.fail("took " + std::to_string(dt) + "s");
  return o;
}

// --- 3: some run updates something, unless there is nothing to run ---------

Outcome criterion_operability() {
  Outcome o;
  ExploreLimits lim;
  lim.max_states = 4000000;
  lim.debug_exact = false;

  auto rep = check_operability(build_venue_fixture(), lim);
  if (rep.verdict != Verdict::holds || !rep.complete)
    o.fail("venue: " + std::string(to_string(rep.verdict)));

  for (std::uint32_t ni = 1; ni <= 3; ++ni)
    for (std::uint32_t nr = 0; nr <= 2; ++nr)
      for (std::uint32_t nu = 1; nu <= 3; ++nu) {
        auto r = check_operability(synth(ni, nr, nu), lim);
        if (r.verdict != Verdict::holds || !r.complete)
          o.fail("(" + std::to_string(ni) + "," + std::to_string(nr) + "," +
                 std::to_string(nu) + "): " + to_string(r.verdict));
      }

  for (auto cfg : {synth(1, 0, 0), synth(0, 0, 0)}) {
    auto r = check_operability(cfg, lim);
    if (r.verdict != Verdict::violated)
      o.fail("zero-rule config: " + std::string(to_string(r.verdict)));
  }
  return o;
}

// --- 4: generation budgets imply termination; lifting them is diagnosed ----

Outcome criterion_bounded_termination() {
  Outcome o;
  ExploreLimits lim;
  lim.max_states = 4000000;
  lim.debug_exact = false;
  auto rep = check_bounded_termination(synth(3, 2, 3), lim);
  if (rep.verdict != Verdict::holds || !rep.complete)
    o.fail("(3,2,3) bounded: " + std::string(to_string(rep.verdict)));

  SynthParams sp;
  sp.n_instance = 3;
  sp.n_relation = 2;
  sp.n_rule = 3;
  sp.flags.unbounded_spawn = true;
  auto cfg = build_synthetic(sp);
  ExploreLimits capped;
  capped.max_states = 2000;
  capped.max_depth = 500;
  capped.debug_exact = false;
  auto t0 = std::chrono::steady_clock::now();
  auto rep2 = check_bounded_termination(cfg, capped);
  if (seconds_since(t0) >= 120) o.fail("unbounded run took too long");
  if (rep2.verdict == Verdict::holds)
    o.fail("unbounded spawn reported holds");
  if (rep2.detail.empty()) o.fail("unbounded spawn verdict has no diagnosis");
  return o;
}

// --- 5: a fifty-main-agent population stops deterministically --------------

Outcome criterion_scale() {
  Outcome o;
  SynthParams p;
  p.n_instance = 25;
  p.n_relation = 10;
  p.n_rule = 15;
  p.n_words = 512;
  auto cfg = build_synthetic(p);
  SimParams sp;
  sp.seed = 2026;
  sp.max_steps = cfg.step_budget;

  auto t0 = std::chrono::steady_clock::now();
  auto r1 = run_random(cfg, sp);
  double dt1 = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  auto r2 = run_random(cfg, sp);
  double dt2 = seconds_since(t0);

  if (r1.kind != SimResult::Kind::terminated) o.fail("run did not terminate");
  if (!r1.stop_broadcast) o.fail("no stop broadcast");
  if (r1.steps >= sp.max_steps) o.fail("budget exhausted");
  if (dt1 >= 60 || dt2 >= 60)
    o.fail("runs took " + std::to_string(dt1) + "s / " + std::to_string(dt2) +
           "s");
  if (r1.trace_hash != r2.trace_hash || r1.steps != r2.steps)
    o.fail("same seed produced different traces");
  if (r1.ledger_violation) o.fail("ledger violation");
  return o;
}

// --- 6: the counter ledger balances at every step, zero at rest ------------

Outcome criterion_conservation() {
  Outcome o;
  std::uint64_t checks = 0;

  // a million scheduler steps across seeds, balance checked inside step()
  for (std::uint64_t seed = 1; checks < 1000000; ++seed) {
    auto cfg = synth(3 + seed % 3, 2, 3);
    SimParams sp;
    sp.seed = seed;
    auto r = run_random(cfg, sp);
    if (r.ledger_violation) {
      o.fail("ledger violation at seed " + std::to_string(seed));
      break;
    }
    if (r.kind != SimResult::Kind::terminated) {
      o.fail("seed " + std::to_string(seed) + " did not terminate");
      break;
    }
    checks += r.ledger_checks;
    if (seed > 200000) {
      o.fail("not enough steps to reach a million checks");
      break;
    }
  }
  if (checks < 1000000 && o.pass)
    o.fail("only " + std::to_string(checks) + " checks ran");

  // explicit walk: the two sides agree after every step and read zero at
  // every state the quiescence oracle accepts
  std::uint64_t quiescent_seen = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (bool venue : {false, true}) {
      auto cfg = venue ? build_venue_fixture() : synth(3, 2, 3);
      GlobalState s = init_state(cfg);
      std::uint64_t stepno = 0;
      while (true) {
        auto acts = enabled(s, cfg);
        if (acts.empty()) break;
        step(s, cfg, acts[mix64(seed ^ mix64(stepno + 1)) % acts.size()]);
        ++stepno;
        auto left = ledger_left(s);
        auto right = ledger_right(s);
        if (left != right) {
          o.fail("ledger split " + std::to_string(left) + " vs " +
                 std::to_string(right));
          break;
        }
        if (quiescence_oracle(s)) {
          ++quiescent_seen;
          if (left != 0)
            o.fail("quiescent state with ledger " + std::to_string(left));
        }
      }
    }
  }
  if (quiescent_seen == 0) o.fail("no quiescent state reached");
  return o;
}

// --- 7: interval arithmetic against the point-set model --------------------

Outcome criterion_intervals() {
  Outcome o;
  std::mt19937 rng(424242);
  for (int round = 0; round < 10000 && o.pass; ++round) {
    MergePolicy p =
        (rng() % 2) ? MergePolicy::intersect : MergePolicy::adjacent;
    IntervalSet a, b;
    oracle::PointSet pa, pb;
    int ops = 1 + int(rng() % 12);
    for (int i = 0; i < ops; ++i) {
      std::uint32_t lo = 1 + rng() % 60;
      std::uint32_t hi = std::min<std::uint32_t>(64, lo + rng() % 12);
      if (rng() % 2) {
        a.insert({lo, hi}, p);
        pa = oracle::union_of(pa, oracle::points_of_interval(lo, hi));
      } else {
        b.insert({lo, hi}, p);
        pb = oracle::union_of(pb, oracle::points_of_interval(lo, hi));
      }
    }
    IntervalSet u = IntervalSet::unite(a, b, p);
    if (!oracle::well_formed(a, p) || !oracle::well_formed(u, p))
      o.fail("malformed set in round " + std::to_string(round));
    else if (oracle::points_of(a) != pa ||
             oracle::points_of(u) != oracle::union_of(pa, pb))
      o.fail("point mismatch in round " + std::to_string(round));
  }

  // the two worked examples, verbatim
  IntervalSet s;
  s.insert({1, 10});
  s.insert({13, 15});
  if (s.to_string() != "{[1,10],[13,15]}")
    o.fail("insert example got " + s.to_string());
  IntervalSet t;
  t.insert({16, 17});
  auto u = IntervalSet::unite(s, t, MergePolicy::adjacent);
  if (u.to_string() != "{[1,10],[13,17]}")
    o.fail("union example got " + u.to_string());
  return o;
}

// --- 8: the venue population always ends on the same linked pair -----------

Outcome criterion_venue_end_state() {
  Outcome o;
  auto cfg = build_venue_fixture();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SimParams sp;
    sp.seed = seed;
    auto r = run_random(cfg, sp);
    std::string tag = "seed " + std::to_string(seed);
    if (r.kind != SimResult::Kind::terminated) {
      o.fail(tag + " did not terminate");
      continue;
    }
    const auto& rels = r.final_state.relations;
    if (rels.size() != 1 || rels[0].instances.size() != 1) {
      o.fail(tag + " did not build exactly one relation instance");
      continue;
    }
    const auto& ri = rels[0].instances[0];
    if (!ri.o1 || !ri.o2 || *ri.o1 != 1 || *ri.o2 != 2)
      o.fail(tag + " linked (" + std::to_string(ri.o1.value_or(0)) + "," +
             std::to_string(ri.o2.value_or(0)) + ")");
    if (ri.pos.to_string() != "{[1,10],[13,17]}")
      o.fail(tag + " position " + ri.pos.to_string());
  }
  return o;
}

}  // namespace

int main() {
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);

  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"exhaustive termination and stop detection", criterion_termination},
      {"fault sensitivity", criterion_fault_sensitivity},
      {"operability", criterion_operability},
      {"bounded termination", criterion_bounded_termination},
      {"scale simulation determinism", criterion_scale},
      {"act conservation ledger", criterion_conservation},
      {"interval oracle suite", criterion_intervals},
      {"venue end state", criterion_venue_end_state},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o = c.run();
    double dt = seconds_since(t0);
    if (o.pass) {
      std::printf("PASS  %-44s (%.1fs)\n", c.name, dt);
    } else {
      ++failures;
      std::printf("FAIL  %-44s (%.1fs): %s\n", c.name, dt, o.why.c_str());
    }
    std::fflush(stdout);
  }
  if (failures) std::printf("%d of 8 criteria failed\n", failures);
  else std::printf("all 8 criteria pass\n");
  return failures;
}
