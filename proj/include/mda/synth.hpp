#pragma once
// Workload generators: a parametric synthetic population whose shape is a
// pure function of the counts, and the fixed two-instance venue example.
#include <cstdint>
#include <string>

#include "config.hpp"

namespace mda {

struct SynthParams {
  std::uint32_t n_instance = 0;
  std::uint32_t n_relation = 0;
  std::uint32_t n_rule = 0;
  std::uint32_t n_words = 32;
  std::uint32_t hom_lim = 2;
  std::uint64_t step_budget = 1000000;
  std::uint32_t max_dynamic_agents = 64;
  Flags flags;
  ImitationSpec imitation;
};

// Deterministic population: instance agent `id` gets class `id`, rules
// {1..id} folded into the configured rule range, and 2*id attributes of
// which the even-indexed ones start evaluated with value index/2 + 1.
// Every evaluated attribute owns one fresh word, so no two agents share a
// position unless a config scripts it.
inline SystemConfig build_synthetic(const SynthParams& p) {
  SystemConfig cfg;
  cfg.n_instance = p.n_instance;
  cfg.n_relation = p.n_relation;
  cfg.n_rule = p.n_rule;
  cfg.n_words = p.n_words;
  cfg.hom_lim = p.hom_lim;
  cfg.step_budget = p.step_budget;
  cfg.max_dynamic_agents = p.max_dynamic_agents;
  cfg.flags = p.flags;
  cfg.imitation = p.imitation;
  if (cfg.flags.unbounded_spawn) {
    // the stress mode only bites if every vector keeps producing results
    cfg.imitation.consistency = ImitationSpec::Consistency::all;
  }

  std::uint32_t words_needed = p.n_instance * (p.n_instance + 1) / 2;
  if (words_needed > p.n_words)
    throw ConfigError("inconsistent counts: layout needs " +
                      std::to_string(words_needed) + " words but n_words = " +
                      std::to_string(p.n_words));

  cfg.ontology.types = {{1, "word", 0, 1000000}};
  std::uint32_t n_class = p.n_instance ? p.n_instance
                          : p.n_relation ? 1
                                         : 0;
  for (std::uint32_t c = 1; c <= n_class; ++c) {
    ClassDecl cls{c, "Cls" + std::to_string(c), {}};
    std::uint32_t attr_count = c <= p.n_instance ? 2 * c : 0;
    for (std::uint32_t i = 0; i < attr_count; ++i)
      cls.attributes.push_back({i, "a" + std::to_string(i), 1});
    cfg.ontology.classes.push_back(std::move(cls));
  }
  for (std::uint32_t r = 1; r <= p.n_relation; ++r)
    cfg.ontology.relations.push_back({r, "Rel" + std::to_string(r),
                                      ((r - 1) % n_class) + 1,
                                      (r % n_class) + 1});

  auto folded_range = [](std::uint32_t id, std::uint32_t n) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t k = 1; k <= id && k <= n; ++k) out.push_back(k);
    return out;
  };

  std::uint32_t next_word = 1;
  for (std::uint32_t id = 1; id <= p.n_instance; ++id) {
    InstanceInit ins;
    ins.ordinal = id;
    ins.class_id = id;
    ins.out_rules = folded_range(id, p.n_rule);
    ins.relations = folded_range(id, p.n_relation);
    for (std::uint32_t i = 0; i < 2 * id; ++i) {
      InstanceInitAttr a;
      a.index = i;
      if (p.n_rule) a.out_rules = {((i / 2) % p.n_rule) + 1};
      if (i % 2 == 0) {
        a.values = {std::int64_t(i / 2 + 1)};
        a.pos.insert({next_word, next_word});
        ++next_word;
      }
      ins.attrs.push_back(std::move(a));
    }
    cfg.instances.push_back(std::move(ins));
  }

  for (std::uint32_t m = 1; m <= p.n_relation; ++m) {
    RelationInit rl;
    rl.ordinal = m;
    rl.relation_decl = m;
    // no rule feeds on relation payloads here: the synthetic rule signature
    // is (attribute, agent), and an unroutable payload is a hard error
    cfg.relation_agents.push_back(std::move(rl));
  }

  for (std::uint32_t r = 1; r <= p.n_rule; ++r) {
    RuleInit ru;
    ru.ordinal = r;
    ru.name = "R" + std::to_string(r);
    ru.slots = {{ArgKind::attribute, 0}, {ArgKind::agent, 0}};
    ru.patterns = {"pat" + std::to_string(r)};
    cfg.rules.push_back(std::move(ru));
  }

  cfg.lint();
  return cfg;
}

// The fixed worked example: a scientific event and a geographic place whose
// introductions let one rule bind them as the two objects of a venue
// relation element. The rule's five surface patterns are linguistic and are
// kept as opaque labels; they collapse into a single always-true consistency
// predicate, so the lone (SciEvent, GeoPlace) pair is always linked.
inline SystemConfig build_venue_fixture() {
  SystemConfig cfg;
  cfg.n_instance = 2;
  cfg.n_relation = 1;
  cfg.n_rule = 1;
  cfg.n_words = 20;
  cfg.hom_lim = 2;
  cfg.flags.adjacency_merge = true;
  cfg.imitation.consistency = ImitationSpec::Consistency::all;
  cfg.imitation.result_mode = ImitationSpec::ResultMode::venue_link;
  cfg.imitation.update_attrs = false;

  cfg.ontology.types = {{1, "date", 10000000, 30000000},
                        {2, "word", 0, 1000000}};
  cfg.ontology.classes = {{1, "SciEvent", {{0, "date", 1}, {1, "name", 2}}},
                          {2, "GeoPlace", {{0, "name", 2}, {1, "country", 2}}}};
  cfg.ontology.relations = {{1, "Venue", 1, 2}};

  InstanceInit i1;
  i1.ordinal = 1;
  i1.class_id = 1;
  i1.out_rules = {1};
  i1.relations = {1};
  i1.attrs = {{0, {}, {20140912}, IntervalSet::parse("{[13,15]}")},
              {1, {}, {42}, IntervalSet::parse("{[1,10]}")}};

  InstanceInit i2;
  i2.ordinal = 2;
  i2.class_id = 2;
  i2.out_rules = {1};
  i2.relations = {1};
  i2.attrs = {{0, {}, {314}, IntervalSet::parse("{[16,16]}")},
              {1, {}, {99}, IntervalSet::parse("{[17,17]}")}};

  RelationInit rl1;
  rl1.ordinal = 1;
  rl1.relation_decl = 1;

  RuleInit r1;
  r1.ordinal = 1;
  r1.name = "R_Venue";
  r1.slots = {{ArgKind::agent, 1}, {ArgKind::agent, 2}};
  r1.patterns = {"pat1", "pat2", "pat3", "pat4", "pat5"};

  cfg.instances = {i1, i2};
  cfg.relation_agents = {rl1};
  cfg.rules = {r1};
  cfg.lint();
  return cfg;
}

}  // namespace mda
