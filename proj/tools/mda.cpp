// mda: build, run, verify and replay multi-agent data-analysis populations.
//
//   mda generate  — write a configuration file (synthetic or fixture)
//   mda simulate  — one seeded random run, trace + report
//   mda check     — exhaustive exploration of one property
//   mda replay    — re-execute a trace file and demand equality
//
// Every invocation writes a manifest-<command>.json next to its artifacts.
// Exit codes: 0 ok/holds/terminated, 1 violated, 2 deadlock,
// 3 timeout/inconclusive, 4 usage or input error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <mda/mda.hpp>

namespace {

using namespace mda;
namespace fs = std::filesystem;

enum ExitCode : int {
  exit_ok = 0,
  exit_violated = 1,
  exit_deadlock = 2,
  exit_inconclusive = 3,
  exit_usage = 4,
};

// The one piece of environment the tool reads: where artifacts go.
fs::path out_dir() {
  if (const char* e = std::getenv("MDA_OUT_DIR"); e && *e) return {e};
  return {"."};
}

struct ConfigOpts {
  std::string config_path;
  std::string fixture;
  std::uint32_t instances = 2;
  std::uint32_t relations = 1;
  std::uint32_t rules = 2;
  std::uint32_t words = 32;
  std::uint32_t hom_lim = 2;
  std::uint64_t budget = 1000000;
  std::vector<std::string> faults;
  bool unbounded_spawn = false;

  CLI::Option* hom_opt = nullptr;
  CLI::Option* budget_opt = nullptr;

  void add_to(CLI::App& cmd, bool with_counts) {
    cmd.add_option("--config", config_path, "configuration file to load")
        ->check(CLI::ExistingFile);
    cmd.add_option("--fixture", fixture, "built-in population (venue)");
    if (with_counts) {
      cmd.add_option("--instances", instances, "instance agents (default 2)");
      cmd.add_option("--relations", relations, "relation agents (default 1)");
      cmd.add_option("--rules", rules, "rule agents (default 2)");
      cmd.add_option("--words", words, "text length in words (default 32)");
    }
    hom_opt = cmd.add_option("--hom-lim", hom_lim,
                             "per-point generation bound (default 2)");
    budget_opt = cmd.add_option("--budget", budget,
                                "step budget (default 1000000)");
    cmd.add_option("--fault", faults, "protocol fault to inject")
        ->check(CLI::IsMember({"notify-after", "drop-minus-one"}));
    cmd.add_flag("--unbounded-spawn", unbounded_spawn,
                 "lift the dynamic-agent cap");
  }

  SystemConfig resolve() const {
    SystemConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config: " + config_path);
      std::ostringstream text;
      text << in.rdbuf();
      cfg = SystemConfig::load(text.str());
    } else if (fixture == "venue") {
      cfg = build_venue_fixture();
    } else if (!fixture.empty()) {
      throw ConfigError("unknown fixture: " + fixture);
    } else {
      SynthParams p;
      p.n_instance = instances;
      p.n_relation = relations;
      p.n_rule = rules;
      p.n_words = words;
      p.hom_lim = hom_lim;
      p.step_budget = budget;
      // flags go into the generator, not onto the finished config: the
      // builder adjusts the imitation spec for some of them (unbounded
      // spawn only stresses anything if every vector keeps producing).
      for (const auto& f : faults) {
        if (f == "notify-after") p.flags.fault_notify_after = true;
        if (f == "drop-minus-one") p.flags.fault_drop_minus_one = true;
      }
      p.flags.unbounded_spawn = unbounded_spawn;
      cfg = build_synthetic(p);
    }
    for (const auto& f : faults) {
      if (f == "notify-after") cfg.flags.fault_notify_after = true;
      if (f == "drop-minus-one") cfg.flags.fault_drop_minus_one = true;
    }
    if (unbounded_spawn) cfg.flags.unbounded_spawn = true;
    if (hom_opt && hom_opt->count()) cfg.hom_lim = hom_lim;
    if (budget_opt && budget_opt->count()) cfg.step_budget = budget;
    cfg.lint();
    return cfg;
  }
};

std::string hex16(std::uint64_t v) { return detail::hex16(v); }

struct Ctx {
  std::string command_line;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  RunManifest manifest(const std::string& name) const {
    RunManifest m;
    m.command = command_line;
    m.wall_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    (void)name;
    return m;
  }

  void save(RunManifest m, const std::string& name) const {
    m.wall_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    fs::path p = out_dir() / ("manifest-" + name + ".json");
    m.save(p.string());
    std::cout << "manifest " << p.string() << "\n";
  }
};

int run_generate(const Ctx& ctx, const ConfigOpts& co, std::string out_path) {
  SystemConfig cfg = co.resolve();
  if (out_path.empty()) out_path = (out_dir() / "config.cfg").string();
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write config: " + out_path);
  out << cfg.save();
  out.close();

  RunManifest m = ctx.manifest("generate");
  m.config_hash = hex16(cfg.hash());
  m.limits = {{"budget", cfg.step_budget}, {"hom_lim", cfg.hom_lim}};
  m.verdicts = {{"lint", "ok"}};
  m.artifacts = {out_path};
  std::cout << "config " << out_path << "\n";
  std::cout << "config-hash " << m.config_hash << "\n";
  ctx.save(m, "generate");
  return exit_ok;
}

int run_simulate(const Ctx& ctx, const ConfigOpts& co, std::uint64_t seed,
                 bool no_trace, std::string out_path) {
  SystemConfig cfg = co.resolve();
  SimParams sp;
  sp.seed = seed;
  sp.max_steps = cfg.step_budget;

  std::ofstream trace_out;
  std::function<void(const TraceEvent&)> sink;
  if (out_path.empty())
    out_path =
        (out_dir() / ("trace-seed" + std::to_string(seed) + ".txt")).string();
  if (!no_trace) {
    trace_out.open(out_path);
    if (!trace_out) throw ConfigError("cannot write trace: " + out_path);
    write_trace_header(trace_out, cfg, seed);
    sink = [&](const TraceEvent& ev) { trace_out << ev.to_line() << "\n"; };
  }

  SimResult r = run_random(cfg, sp, sink);
  if (!no_trace) {
    write_trace_footer(trace_out, r.steps, r.trace_hash, to_string(r.kind));
    trace_out.close();
  }

  bool violation = r.cc_violated || r.ledger_violation;
  std::cout << "outcome " << to_string(r.kind)
            << (violation ? " (violation)" : "") << "\n";
  std::cout << "steps " << r.steps << "\n";
  std::cout << "trace-hash " << hex16(r.trace_hash) << "\n";
  std::cout << "stop-broadcast " << (r.stop_broadcast ? "yes" : "no") << "\n";
  if (r.cc_violated)
    std::cout << "zero-read with active agents at step " << r.cc_violation_step
              << "\n";
  if (r.ledger_violation) std::cout << "accounting ledger out of balance\n";
  if (r.residual_work) std::cout << "work left in flight\n";
  if (!no_trace) std::cout << "trace " << out_path << "\n";

  RunManifest m = ctx.manifest("simulate");
  m.config_hash = hex16(cfg.hash());
  m.seeds = {seed};
  m.limits = {{"budget", sp.max_steps}};
  m.verdicts = {{"outcome", to_string(r.kind)},
                {"violation", violation},
                {"steps", r.steps},
                {"trace_hash", hex16(r.trace_hash)},
                {"stop_broadcast", r.stop_broadcast},
                {"residual_work", r.residual_work},
                {"ledger_checks", r.ledger_checks}};
  if (!no_trace) m.artifacts = {out_path};
  ctx.save(m, "simulate");

  if (violation) return exit_violated;
  switch (r.kind) {
    case SimResult::Kind::terminated: return exit_ok;
    case SimResult::Kind::deadlock: return exit_deadlock;
    case SimResult::Kind::timeout: return exit_inconclusive;
  }
  return exit_usage;
}

int run_check(const Ctx& ctx, const ConfigOpts& co, const std::string& property,
              std::size_t max_states, std::uint32_t max_depth,
              std::string out_path) {
  SystemConfig cfg = co.resolve();
  ExploreLimits lim;
  lim.max_states = max_states;
  lim.max_depth = max_depth;
  lim.debug_exact = false;  // verbatim-state cross-checking is for the tests

  PropertyReport rep;
  if (property == "controller-correctness")
    rep = check_controller_correctness(cfg, lim);
  else if (property == "operability")
    rep = check_operability(cfg, lim);
  else if (property == "bounded-termination")
    rep = check_bounded_termination(cfg, lim);
  else
    throw ConfigError("unknown property: " + property);

  std::cout << "property " << rep.property << "\n";
  std::cout << "verdict " << to_string(rep.verdict) << "\n";
  std::cout << "states " << rep.states_explored
            << (rep.complete ? " (complete)" : " (capped)") << "\n";
  if (!rep.detail.empty()) std::cout << "detail " << rep.detail << "\n";

  RunManifest m = ctx.manifest("check");
  m.config_hash = hex16(cfg.hash());
  m.limits = {{"max_states", max_states},
              {"max_depth", max_depth},
              {"hom_lim", cfg.hom_lim}};
  m.verdicts = {{"property", rep.property},
                {"verdict", to_string(rep.verdict)},
                {"states_explored", rep.states_explored},
                {"complete", rep.complete},
                {"detail", rep.detail}};

  if (rep.verdict == Verdict::violated && !rep.counterexample.empty()) {
    if (out_path.empty())
      out_path = (out_dir() / ("counterexample-" + property + ".txt")).string();
    RecordedPath rp = record_path(cfg, rep.counterexample);
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write counterexample: " + out_path);
    write_trace_header(out, cfg, 0);
    for (const auto& line : rp.lines) out << line << "\n";
    write_trace_footer(out, rp.lines.size(), rp.trace_hash, "violation");
    out.close();
    m.artifacts = {out_path};
    m.verdicts["counterexample_depth"] = rep.violation_depth;
    std::cout << "counterexample " << out_path << "\n";
  }
  ctx.save(m, "check");

  switch (rep.verdict) {
    case Verdict::holds: return exit_ok;
    case Verdict::violated: return exit_violated;
    case Verdict::inconclusive: return exit_inconclusive;
  }
  return exit_usage;
}

int run_replay(const Ctx& ctx, const ConfigOpts& co,
               const std::string& trace_path) {
  SystemConfig cfg = co.resolve();
  std::ifstream in(trace_path);
  if (!in) throw TraceError("cannot open trace: " + trace_path);
  TraceFile tf = read_trace(in);
  ReplayResult rr = replay_trace(cfg, tf);

  if (rr.ok) {
    std::cout << "replay ok (" << tf.lines.size() << " steps match)\n";
  } else {
    std::cout << "replay diverged at step " << rr.first_divergence << ": "
              << rr.reason << "\n";
    if (!rr.expected.empty()) {
      std::cout << "  recorded: " << rr.expected << "\n";
      std::cout << "  got:      " << rr.got << "\n";
    }
  }

  RunManifest m = ctx.manifest("replay");
  m.config_hash = hex16(cfg.hash());
  m.seeds = {tf.seed};
  m.verdicts = {{"ok", rr.ok},
                {"steps", tf.steps},
                {"outcome", tf.outcome},
                {"first_divergence", rr.first_divergence},
                {"reason", rr.reason}};
  ctx.save(m, "replay");
  return rr.ok ? exit_ok : exit_violated;
}

}  // namespace

int main(int argc, char** argv) {
  Ctx ctx;
  {
    std::ostringstream os;
    for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
    ctx.command_line = os.str();
  }

  CLI::App app{"multi-agent data-analysis runtime and verifier"};
  app.require_subcommand(1);

  ConfigOpts gen_co, sim_co, chk_co, rep_co;
  std::string gen_out, sim_out, chk_out, rep_trace;
  std::uint64_t sim_seed = 1;
  bool sim_no_trace = false;
  std::string chk_property;
  std::size_t chk_max_states = 2000000;
  std::uint32_t chk_max_depth = 1u << 30;

  CLI::App* gen = app.add_subcommand("generate", "write a configuration file");
  gen_co.add_to(*gen, true);
  gen->add_option("--out", gen_out, "config file path");

  CLI::App* sim = app.add_subcommand("simulate", "one seeded random run");
  sim_co.add_to(*sim, true);
  sim->add_option("--seed", sim_seed, "scheduler seed (default 1)");
  sim->add_flag("--no-trace", sim_no_trace, "skip writing the trace file");
  sim->add_option("--out", sim_out, "trace file path");

  CLI::App* chk = app.add_subcommand("check", "explore and check one property");
  chk_co.add_to(*chk, true);
  chk->add_option("--property", chk_property, "property to check")
      ->required()
      ->check(CLI::IsMember(
          {"controller-correctness", "operability", "bounded-termination"}));
  chk->add_option("--max-states", chk_max_states,
                  "exploration state cap (default 2000000)");
  chk->add_option("--max-depth", chk_max_depth, "exploration depth cap");
  chk->add_option("--out", chk_out, "counterexample file path");

  CLI::App* rep = app.add_subcommand("replay", "re-execute a recorded trace");
  rep_co.add_to(*rep, true);
  rep->add_option("--trace", rep_trace, "trace file to replay")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try {
    fs::create_directories(out_dir());
    if (gen->parsed()) return run_generate(ctx, gen_co, gen_out);
    if (sim->parsed())
      return run_simulate(ctx, sim_co, sim_seed, sim_no_trace, sim_out);
    if (chk->parsed())
      return run_check(ctx, chk_co, chk_property, chk_max_states,
                       chk_max_depth, chk_out);
    if (rep->parsed()) return run_replay(ctx, rep_co, rep_trace);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}
