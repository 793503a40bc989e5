// trace files: write/read round trip, replay soundness, tamper detection
#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <mda/synth.hpp>
#include <mda/trace_io.hpp>

using namespace mda;

namespace {

SystemConfig small_cfg() {
  SynthParams p;
  p.n_instance = 1;
  p.n_rule = 1;
  return build_synthetic(p);
}

struct Recorded {
  SystemConfig cfg;
  SimParams params;
  SimResult result;
};

Recorded record() {
  Recorded r;
  r.cfg = small_cfg();
  r.params.seed = 3;
  r.params.capture_trace = true;
  r.result = run_random(r.cfg, r.params);
  return r;
}

}  // namespace

TEST_CASE("write/read round trip", "[trace]") {
  auto rec = record();
  REQUIRE(rec.result.kind == SimResult::Kind::terminated);

  std::stringstream ss;
  write_trace(ss, rec.cfg, rec.params, rec.result);

  std::string first_line;
  {
    std::stringstream probe(ss.str());
    std::getline(probe, first_line);
  }
  CHECK(first_line == "# mda-trace v1");

  auto tf = read_trace(ss);
  CHECK(tf.config_hash == rec.cfg.hash());
  CHECK(tf.seed == 3);
  CHECK(tf.steps == rec.result.steps);
  CHECK(tf.trace_hash == rec.result.trace_hash);
  CHECK(tf.outcome == "terminated");
  REQUIRE(tf.lines.size() == rec.result.steps);
  for (std::size_t i = 0; i < tf.lines.size(); ++i)
    REQUIRE(tf.lines[i] == rec.result.trace[i].to_line());
}

TEST_CASE("replay reproduces every recorded snapshot", "[trace]") {
  auto rec = record();
  std::stringstream ss;
  write_trace(ss, rec.cfg, rec.params, rec.result);
  auto tf = read_trace(ss);

  auto rr = replay_trace(rec.cfg, tf);
  CHECK(rr.ok);
  CHECK(rr.first_divergence == 0);
  CHECK(state_hash(rr.final_state) == state_hash(rec.result.final_state));
}

TEST_CASE("a tampered snapshot reports the first divergence", "[trace]") {
  auto rec = record();
  std::stringstream ss;
  write_trace(ss, rec.cfg, rec.params, rec.result);
  auto tf = read_trace(ss);
  REQUIRE(tf.lines.size() > 5);

  auto pos = tf.lines[4].rfind("act=");
  REQUIRE(pos != std::string::npos);
  tf.lines[4] = tf.lines[4].substr(0, pos) + "act=99";

  auto rr = replay_trace(rec.cfg, tf);
  CHECK(!rr.ok);
  CHECK(rr.first_divergence == 5);  // 1-based step of the bad line
  CHECK(rr.expected != rr.got);
}

TEST_CASE("a tampered action is refused", "[trace]") {
  auto rec = record();
  std::stringstream ss;
  write_trace(ss, rec.cfg, rec.params, rec.result);
  auto tf = read_trace(ss);

  // point step 1 at an agent that does not exist
  auto sp = tf.lines[0].find(' ');
  auto sp2 = tf.lines[0].find(' ', sp + 1);
  tf.lines[0] =
      tf.lines[0].substr(0, sp + 1) + "I9/main" + tf.lines[0].substr(sp2);

  auto rr = replay_trace(rec.cfg, tf);
  CHECK(!rr.ok);
  CHECK(rr.first_divergence == 1);
  CHECK(!rr.reason.empty());
}

TEST_CASE("malformed files are rejected with a line number", "[trace]") {
  std::stringstream bad1("not a trace\n");
  CHECK_THROWS_AS(read_trace(bad1), TraceError);
  try {
    std::stringstream again("not a trace\n");
    read_trace(again);
  } catch (const TraceError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  std::stringstream bad2(
      "# mda-trace v1\n# config-hash zzzz\n");
  CHECK_THROWS_AS(read_trace(bad2), TraceError);

  std::stringstream bad3(
      "# mda-trace v1\n# config-hash 0000000000000001\n# seed 1\n"
      "garbage event line\n# steps 1\n# trace-hash 0000000000000001\n"
      "# outcome terminated\n");
  CHECK_THROWS_AS(read_trace(bad3), TraceError);
}

TEST_CASE("config mismatch refuses to replay", "[trace]") {
  auto rec = record();
  std::stringstream ss;
  write_trace(ss, rec.cfg, rec.params, rec.result);
  auto tf = read_trace(ss);

  SynthParams p;
  p.n_instance = 2;
  p.n_rule = 1;
  auto other = build_synthetic(p);
  auto rr = replay_trace(other, tf);
  CHECK(!rr.ok);
  CHECK(rr.reason.find("config") != std::string::npos);
}
