#pragma once
// System configuration: counts, flags, ontology, per-agent initial data,
// imitation parameters and topology. Serializes to a sectioned key/value
// text format that round-trips losslessly (save() is canonical).
#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "interval_set.hpp"
#include "message.hpp"
#include "ontology.hpp"

namespace mda {

struct ImitationSpec {
  enum class Consistency { same_sender, parity_even, parity_odd, all, none };
  enum class ResultMode { synthetic, venue_link };
  Consistency consistency = Consistency::same_sender;
  ResultMode result_mode = ResultMode::synthetic;
  std::uint32_t spawn_quota = 0;  // scheduled spawns per rule per position point
  bool update_attrs = true;
  bool update_relations = true;
  friend bool operator==(const ImitationSpec&, const ImitationSpec&) = default;
};

struct Flags {
  bool fault_notify_after = false;
  bool fault_drop_minus_one = false;
  bool announce_once = false;
  bool unbounded_spawn = false;
  bool adjacency_merge = false;
  bool per_send_grain = false;
  bool enforce_hom_lim = true;
  friend bool operator==(const Flags&, const Flags&) = default;
};

struct InstanceInitAttr {
  std::uint32_t index = 0;
  std::vector<std::uint32_t> out_rules;  // Rul_i
  std::vector<std::int64_t> values;      // nonempty = starts evaluated
  IntervalSet pos;
  friend bool operator==(const InstanceInitAttr&, const InstanceInitAttr&) =
      default;
};

struct InstanceInit {
  std::uint32_t ordinal = 0;  // 1-based agent id
  std::uint32_t class_id = 0;
  std::vector<std::uint32_t> out_rules;   // Rul
  std::vector<std::uint32_t> relations;   // Rel keys
  std::vector<InstanceInitAttr> attrs;
  friend bool operator==(const InstanceInit&, const InstanceInit&) = default;
};

struct RelationInstanceInit {
  std::uint32_t index = 0;
  std::optional<std::uint32_t> o1, o2;
  IntervalSet o1_pos, o2_pos;
  friend bool operator==(const RelationInstanceInit&,
                         const RelationInstanceInit&) = default;
};

struct RelationInit {
  std::uint32_t ordinal = 0;
  std::uint32_t relation_decl = 0;  // id in the ontology
  std::vector<std::uint32_t> out_rules;  // Rul
  std::vector<RelationInstanceInit> instances;  // usually empty at start
  friend bool operator==(const RelationInit&, const RelationInit&) = default;
};

struct RuleSlot {
  ArgKind kind = ArgKind::attribute;
  std::uint32_t class_filter = 0;  // agent slots only; 0 accepts any class
  friend bool operator==(const RuleSlot&, const RuleSlot&) = default;
};

struct RuleInit {
  std::uint32_t ordinal = 0;
  std::string name;
  std::vector<RuleSlot> slots;
  std::vector<std::string> patterns;  // opaque labels, never interpreted
  friend bool operator==(const RuleInit&, const RuleInit&) = default;
};

struct SystemConfig {
  std::uint32_t n_instance = 0, n_relation = 0, n_rule = 0;
  std::uint32_t n_words = 32;
  std::uint32_t hom_lim = 2;
  std::uint32_t max_dynamic_agents = 64;
  std::uint32_t max_rel_instances = 0;  // 0 = derived
  std::uint64_t step_budget = 1000000;
  Flags flags;
  ImitationSpec imitation;
  OntologySchema ontology;
  std::vector<InstanceInit> instances;
  std::vector<RelationInit> relation_agents;
  std::vector<RuleInit> rules;

  enum class TopologyMode { complete, explicit_edges };
  TopologyMode topology_mode = TopologyMode::complete;
  std::vector<std::pair<AgentId, AgentId>> edges;  // explicit mode only

  MergePolicy merge_policy() const {
    return flags.adjacency_merge ? MergePolicy::adjacent
                                 : MergePolicy::intersect;
  }
  std::uint32_t effective_max_rel_instances() const {
    return max_rel_instances ? max_rel_instances
                             : n_instance + max_dynamic_agents + 8;
  }

  void lint() const;
  std::string save() const;
  static SystemConfig load(std::string_view text);
  std::uint64_t hash() const;
};

// ---------------------------------------------------------------------------
// helpers

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string agent_name(const AgentId& a) { return a.to_string(); }

inline AgentId parse_agent_id(std::string_view s) {
  auto fail = [&] {
    throw ConfigError("bad agent id: " + std::string(s));
  };
  if (s == "C") return controller_id();
  AgentKind kind;
  std::size_t digits;
  if (s.size() >= 3 && s.substr(0, 2) == "Rl") {
    kind = AgentKind::relation;
    digits = 2;
  } else if (s.size() >= 2 && s[0] == 'I') {
    kind = AgentKind::instance;
    digits = 1;
  } else if (s.size() >= 2 && s[0] == 'R') {
    kind = AgentKind::rule;
    digits = 1;
  } else {
    fail();
    return {};
  }
  std::uint32_t idx = 0;
  for (std::size_t i = digits; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') fail();
    idx = idx * 10 + std::uint32_t(s[i] - '0');
  }
  if (idx == 0) fail();
  return {kind, idx};
}

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class Int>
Int to_int(const std::string& tok) {
  try {
    if constexpr (std::is_signed_v<Int>)
      return Int(std::stoll(tok));
    else
      return Int(std::stoull(tok));
  } catch (const std::exception&) {
    throw ConfigError("bad number: " + tok);
  }
}

template <class Int>
std::vector<Int> to_ints(const std::vector<std::string>& toks,
                         std::size_t from = 0) {
  std::vector<Int> out;
  for (std::size_t i = from; i < toks.size(); ++i)
    out.push_back(to_int<Int>(toks[i]));
  return out;
}

template <class Int>
void put_list(std::ostream& o, const std::vector<Int>& v) {
  for (const auto& x : v) o << ' ' << x;
}

// "index | rules ... | values ... | pos {...}" pipe-field splitter
inline std::vector<std::vector<std::string>> pipe_fields(
    const std::string& value) {
  std::vector<std::vector<std::string>> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = value.find('|', start);
    std::string piece = value.substr(
        start, bar == std::string::npos ? std::string::npos : bar - start);
    fields.push_back(split_ws(piece));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return fields;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// save

inline std::string SystemConfig::save() const {
  std::ostringstream o;
  o << "[system]\n";
  o << "n_instance = " << n_instance << "\n";
  o << "n_relation = " << n_relation << "\n";
  o << "n_rule = " << n_rule << "\n";
  o << "n_words = " << n_words << "\n";
  o << "hom_lim = " << hom_lim << "\n";
  o << "max_dynamic_agents = " << max_dynamic_agents << "\n";
  o << "max_rel_instances = " << max_rel_instances << "\n";
  o << "step_budget = " << step_budget << "\n";
  o << "fault_notify_after = " << flags.fault_notify_after << "\n";
  o << "fault_drop_minus_one = " << flags.fault_drop_minus_one << "\n";
  o << "announce_once = " << flags.announce_once << "\n";
  o << "unbounded_spawn = " << flags.unbounded_spawn << "\n";
  o << "adjacency_merge = " << flags.adjacency_merge << "\n";
  o << "per_send_grain = " << flags.per_send_grain << "\n";
  o << "enforce_hom_lim = " << flags.enforce_hom_lim << "\n";

  o << "\n[imitation]\n";
  auto cons = [&]() -> const char* {
    switch (imitation.consistency) {
      case ImitationSpec::Consistency::same_sender: return "same_sender";
      case ImitationSpec::Consistency::parity_even: return "parity_even";
      case ImitationSpec::Consistency::parity_odd: return "parity_odd";
      case ImitationSpec::Consistency::all: return "all";
      case ImitationSpec::Consistency::none: return "none";
    }
    return "?";
  };
  o << "consistency = " << cons() << "\n";
  o << "result_mode = "
    << (imitation.result_mode == ImitationSpec::ResultMode::venue_link
            ? "venue_link"
            : "synthetic")
    << "\n";
  o << "spawn_quota = " << imitation.spawn_quota << "\n";
  o << "update_attrs = " << imitation.update_attrs << "\n";
  o << "update_relations = " << imitation.update_relations << "\n";

  for (const auto& t : ontology.types) {
    o << "\n[type " << t.id << "]\n";
    o << "name = " << t.name << "\n";
    o << "domain = " << t.domain_lo << " " << t.domain_hi << "\n";
  }
  for (const auto& c : ontology.classes) {
    o << "\n[class " << c.id << "]\n";
    o << "name = " << c.name << "\n";
    for (const auto& a : c.attributes)
      o << "attr = " << a.index << " " << a.name << " " << a.type_id << "\n";
  }
  for (const auto& r : ontology.relations) {
    o << "\n[relation " << r.id << "]\n";
    o << "name = " << r.name << "\n";
    o << "classes = " << r.class1 << " " << r.class2 << "\n";
  }

  for (const auto& ins : instances) {
    o << "\n[instance " << ins.ordinal << "]\n";
    o << "class = " << ins.class_id << "\n";
    o << "out_rules =";
    detail::put_list(o, ins.out_rules);
    o << "\n";
    o << "relations =";
    detail::put_list(o, ins.relations);
    o << "\n";
    for (const auto& a : ins.attrs) {
      o << "attr = " << a.index << " | rules";
      detail::put_list(o, a.out_rules);
      o << " | values";
      detail::put_list(o, a.values);
      o << " | pos " << a.pos.to_string() << "\n";
    }
  }
  for (const auto& rl : relation_agents) {
    o << "\n[relation_agent " << rl.ordinal << "]\n";
    o << "relation = " << rl.relation_decl << "\n";
    o << "out_rules =";
    detail::put_list(o, rl.out_rules);
    o << "\n";
    for (const auto& ri : rl.instances) {
      o << "instance = " << ri.index;
      if (ri.o1) o << " | o1 " << *ri.o1 << " | o1_pos " << ri.o1_pos.to_string();
      if (ri.o2) o << " | o2 " << *ri.o2 << " | o2_pos " << ri.o2_pos.to_string();
      o << "\n";
    }
  }
  for (const auto& r : rules) {
    o << "\n[rule " << r.ordinal << "]\n";
    o << "name = " << r.name << "\n";
    o << "slots =";
    for (const auto& s : r.slots) {
      o << ' ';
      switch (s.kind) {
        case ArgKind::agent: o << "agent"; break;
        case ArgKind::attribute: o << "attribute"; break;
        case ArgKind::relation: o << "relation"; break;
      }
      if (s.class_filter) o << ':' << s.class_filter;
    }
    o << "\n";
    if (!r.patterns.empty()) {
      o << "patterns =";
      for (const auto& p : r.patterns) o << ' ' << p;
      o << "\n";
    }
  }

  o << "\n[topology]\n";
  o << "mode = "
    << (topology_mode == TopologyMode::complete ? "complete" : "explicit")
    << "\n";
  for (const auto& [a, b] : edges)
    o << "edge = " << a.to_string() << " " << b.to_string() << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// load

inline SystemConfig SystemConfig::load(std::string_view text) {
  SystemConfig cfg;
  cfg.ontology = {};
  std::string section;
  std::uint32_t section_id = 0;
  InstanceInit* cur_instance = nullptr;
  RelationInit* cur_relagent = nullptr;
  RuleInit* cur_rule = nullptr;
  TypeDecl* cur_type = nullptr;
  ClassDecl* cur_class = nullptr;
  RelationDecl* cur_reldecl = nullptr;

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = detail::trim(raw);
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + why);
    };

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      auto toks = detail::split_ws(line.substr(1, line.size() - 2));
      if (toks.empty()) fail("empty section header");
      section = toks[0];
      section_id = toks.size() > 1 ? detail::to_int<std::uint32_t>(toks[1]) : 0;
      cur_instance = nullptr;
      cur_relagent = nullptr;
      cur_rule = nullptr;
      cur_type = nullptr;
      cur_class = nullptr;
      cur_reldecl = nullptr;
      if (section == "type") {
        cfg.ontology.types.push_back({section_id, "", 0, 0});
        cur_type = &cfg.ontology.types.back();
      } else if (section == "class") {
        cfg.ontology.classes.push_back({section_id, "", {}});
        cur_class = &cfg.ontology.classes.back();
      } else if (section == "relation") {
        cfg.ontology.relations.push_back({section_id, "", 0, 0});
        cur_reldecl = &cfg.ontology.relations.back();
      } else if (section == "instance") {
        cfg.instances.push_back({});
        cur_instance = &cfg.instances.back();
        cur_instance->ordinal = section_id;
      } else if (section == "relation_agent") {
        cfg.relation_agents.push_back({});
        cur_relagent = &cfg.relation_agents.back();
        cur_relagent->ordinal = section_id;
      } else if (section == "rule") {
        cfg.rules.push_back({});
        cur_rule = &cfg.rules.back();
        cur_rule->ordinal = section_id;
      } else if (section != "system" && section != "imitation" &&
                 section != "topology") {
        fail("unknown section: " + section);
      }
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    auto toks = detail::split_ws(value);
    auto as_bool = [&]() -> bool {
      if (value == "1" || value == "true") return true;
      if (value == "0" || value == "false") return false;
      fail("expected boolean: " + value);
      return false;
    };

    if (section == "system") {
      if (key == "n_instance") cfg.n_instance = detail::to_int<std::uint32_t>(value);
      else if (key == "n_relation") cfg.n_relation = detail::to_int<std::uint32_t>(value);
      else if (key == "n_rule") cfg.n_rule = detail::to_int<std::uint32_t>(value);
      else if (key == "n_words") cfg.n_words = detail::to_int<std::uint32_t>(value);
      else if (key == "hom_lim") cfg.hom_lim = detail::to_int<std::uint32_t>(value);
      else if (key == "max_dynamic_agents") cfg.max_dynamic_agents = detail::to_int<std::uint32_t>(value);
      else if (key == "max_rel_instances") cfg.max_rel_instances = detail::to_int<std::uint32_t>(value);
      else if (key == "step_budget") cfg.step_budget = detail::to_int<std::uint64_t>(value);
      else if (key == "fault_notify_after") cfg.flags.fault_notify_after = as_bool();
      else if (key == "fault_drop_minus_one") cfg.flags.fault_drop_minus_one = as_bool();
      else if (key == "announce_once") cfg.flags.announce_once = as_bool();
      else if (key == "unbounded_spawn") cfg.flags.unbounded_spawn = as_bool();
      else if (key == "adjacency_merge") cfg.flags.adjacency_merge = as_bool();
      else if (key == "per_send_grain") cfg.flags.per_send_grain = as_bool();
      else if (key == "enforce_hom_lim") cfg.flags.enforce_hom_lim = as_bool();
      else fail("unknown system key: " + key);
    } else if (section == "imitation") {
      if (key == "consistency") {
        if (value == "same_sender") cfg.imitation.consistency = ImitationSpec::Consistency::same_sender;
        else if (value == "parity_even") cfg.imitation.consistency = ImitationSpec::Consistency::parity_even;
        else if (value == "parity_odd") cfg.imitation.consistency = ImitationSpec::Consistency::parity_odd;
        else if (value == "all") cfg.imitation.consistency = ImitationSpec::Consistency::all;
        else if (value == "none") cfg.imitation.consistency = ImitationSpec::Consistency::none;
        else fail("unknown consistency: " + value);
      } else if (key == "result_mode") {
        if (value == "synthetic") cfg.imitation.result_mode = ImitationSpec::ResultMode::synthetic;
        else if (value == "venue_link") cfg.imitation.result_mode = ImitationSpec::ResultMode::venue_link;
        else fail("unknown result_mode: " + value);
      } else if (key == "spawn_quota") cfg.imitation.spawn_quota = detail::to_int<std::uint32_t>(value);
      else if (key == "update_attrs") cfg.imitation.update_attrs = as_bool();
      else if (key == "update_relations") cfg.imitation.update_relations = as_bool();
      else fail("unknown imitation key: " + key);
    } else if (section == "type") {
      if (key == "name") cur_type->name = value;
      else if (key == "domain") {
        if (toks.size() != 2) fail("domain wants: lo hi");
        cur_type->domain_lo = detail::to_int<std::int64_t>(toks[0]);
        cur_type->domain_hi = detail::to_int<std::int64_t>(toks[1]);
      } else fail("unknown type key: " + key);
    } else if (section == "class") {
      if (key == "name") cur_class->name = value;
      else if (key == "attr") {
        if (toks.size() != 3) fail("attr wants: index name type_id");
        cur_class->attributes.push_back({detail::to_int<std::uint32_t>(toks[0]),
                                         toks[1],
                                         detail::to_int<std::uint32_t>(toks[2])});
      } else fail("unknown class key: " + key);
    } else if (section == "relation") {
      if (key == "name") cur_reldecl->name = value;
      else if (key == "classes") {
        if (toks.size() != 2) fail("classes wants: c1 c2");
        cur_reldecl->class1 = detail::to_int<std::uint32_t>(toks[0]);
        cur_reldecl->class2 = detail::to_int<std::uint32_t>(toks[1]);
      } else fail("unknown relation key: " + key);
    } else if (section == "instance") {
      if (key == "class") cur_instance->class_id = detail::to_int<std::uint32_t>(value);
      else if (key == "out_rules") cur_instance->out_rules = detail::to_ints<std::uint32_t>(toks);
      else if (key == "relations") cur_instance->relations = detail::to_ints<std::uint32_t>(toks);
      else if (key == "attr") {
        auto fields = detail::pipe_fields(value);
        if (fields.empty() || fields[0].size() != 1) fail("attr wants: index | ...");
        InstanceInitAttr a;
        a.index = detail::to_int<std::uint32_t>(fields[0][0]);
        for (std::size_t f = 1; f < fields.size(); ++f) {
          if (fields[f].empty()) fail("empty attr field");
          const std::string& tag = fields[f][0];
          if (tag == "rules") a.out_rules = detail::to_ints<std::uint32_t>(fields[f], 1);
          else if (tag == "values") a.values = detail::to_ints<std::int64_t>(fields[f], 1);
          else if (tag == "pos") {
            if (fields[f].size() != 2) fail("pos wants one interval-set token");
            try {
              a.pos = IntervalSet::parse(fields[f][1]);
            } catch (const std::invalid_argument& e) {
              fail(e.what());
            }
          } else fail("unknown attr field: " + tag);
        }
        cur_instance->attrs.push_back(std::move(a));
      } else fail("unknown instance key: " + key);
    } else if (section == "relation_agent") {
      if (key == "relation") cur_relagent->relation_decl = detail::to_int<std::uint32_t>(value);
      else if (key == "out_rules") cur_relagent->out_rules = detail::to_ints<std::uint32_t>(toks);
      else if (key == "instance") {
        auto fields = detail::pipe_fields(value);
        if (fields.empty() || fields[0].size() != 1) fail("instance wants: index | ...");
        RelationInstanceInit ri;
        ri.index = detail::to_int<std::uint32_t>(fields[0][0]);
        for (std::size_t f = 1; f < fields.size(); ++f) {
          if (fields[f].size() != 2) fail("bad instance field");
          const std::string& tag = fields[f][0];
          if (tag == "o1") ri.o1 = detail::to_int<std::uint32_t>(fields[f][1]);
          else if (tag == "o2") ri.o2 = detail::to_int<std::uint32_t>(fields[f][1]);
          else if (tag == "o1_pos") ri.o1_pos = IntervalSet::parse(fields[f][1]);
          else if (tag == "o2_pos") ri.o2_pos = IntervalSet::parse(fields[f][1]);
          else fail("unknown instance field: " + tag);
        }
        cur_relagent->instances.push_back(std::move(ri));
      } else fail("unknown relation_agent key: " + key);
    } else if (section == "rule") {
      if (key == "name") cur_rule->name = value;
      else if (key == "slots") {
        for (const auto& tok : toks) {
          RuleSlot s;
          std::string kind = tok;
          if (auto colon = tok.find(':'); colon != std::string::npos) {
            kind = tok.substr(0, colon);
            s.class_filter = detail::to_int<std::uint32_t>(tok.substr(colon + 1));
          }
          if (kind == "agent") s.kind = ArgKind::agent;
          else if (kind == "attribute") s.kind = ArgKind::attribute;
          else if (kind == "relation") s.kind = ArgKind::relation;
          else fail("unknown slot kind: " + kind);
          cur_rule->slots.push_back(s);
        }
      } else if (key == "patterns") cur_rule->patterns = toks;
      else fail("unknown rule key: " + key);
    } else if (section == "topology") {
      if (key == "mode") {
        if (value == "complete") cfg.topology_mode = TopologyMode::complete;
        else if (value == "explicit") cfg.topology_mode = TopologyMode::explicit_edges;
        else fail("unknown topology mode: " + value);
      } else if (key == "edge") {
        if (toks.size() != 2) fail("edge wants two agent ids");
        cfg.edges.emplace_back(parse_agent_id(toks[0]), parse_agent_id(toks[1]));
      } else fail("unknown topology key: " + key);
    } else {
      fail("key outside any section: " + key);
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// lint

inline void SystemConfig::lint() const {
  ontology.validate();
  if (instances.size() != n_instance)
    throw ConfigError("n_instance = " + std::to_string(n_instance) + " but " +
                      std::to_string(instances.size()) + " instance sections");
  if (relation_agents.size() != n_relation)
    throw ConfigError("n_relation mismatch");
  if (rules.size() != n_rule) throw ConfigError("n_rule mismatch");

  auto check_rule_refs = [&](const std::vector<std::uint32_t>& rs,
                             const std::string& who) {
    for (auto r : rs) {
      if (n_rule == 0)
        throw ConfigError(who + " references rule " + std::to_string(r) +
                          " but n_rule = 0");
      if (r < 1 || r > n_rule)
        throw ConfigError(who + " references unknown rule " +
                          std::to_string(r));
    }
  };

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& ins = instances[i];
    const std::string who = "instance " + std::to_string(ins.ordinal);
    if (ins.ordinal != i + 1)
      throw ConfigError(who + ": ordinals must be contiguous from 1");
    const ClassDecl* cls = ontology.find_class(ins.class_id);
    if (!cls) throw ConfigError(who + ": undeclared class");
    check_rule_refs(ins.out_rules, who);
    for (auto rel : ins.relations)
      if (rel < 1 || rel > n_relation)
        throw ConfigError(who + " references unknown relation agent " +
                          std::to_string(rel));
    for (std::size_t k = 0; k < ins.attrs.size(); ++k) {
      const auto& a = ins.attrs[k];
      if (a.index != k)
        throw ConfigError(who + ": attribute indices must be contiguous from 0");
      check_rule_refs(a.out_rules, who + " attr " + std::to_string(a.index));
      if (a.pos.max_hi() > n_words)
        throw ConfigError(who + " attr " + std::to_string(a.index) +
                          ": position exceeds n_words");
      if (a.values.empty() != a.pos.empty())
        throw ConfigError(who + " attr " + std::to_string(a.index) +
                          ": evaluated attributes carry a position, "
                          "unevaluated ones carry neither");
      if (a.index < cls->attributes.size()) {
        const TypeDecl* ty = ontology.find_type(cls->attributes[a.index].type_id);
        for (auto v : a.values)
          if (v < ty->domain_lo || v > ty->domain_hi)
            throw ConfigError(who + " attr " + std::to_string(a.index) +
                              ": value outside its type domain");
      } else {
        throw ConfigError(who + " attr " + std::to_string(a.index) +
                          ": not declared by class " + cls->name);
      }
    }
  }

  for (std::size_t i = 0; i < relation_agents.size(); ++i) {
    const auto& rl = relation_agents[i];
    const std::string who = "relation_agent " + std::to_string(rl.ordinal);
    if (rl.ordinal != i + 1)
      throw ConfigError(who + ": ordinals must be contiguous from 1");
    bool decl_found = false;
    for (const auto& d : ontology.relations) decl_found |= d.id == rl.relation_decl;
    if (!decl_found) throw ConfigError(who + ": undeclared relation");
    check_rule_refs(rl.out_rules, who);
    for (const auto& ri : rl.instances) {
      if (ri.index < 1 || ri.index > effective_max_rel_instances())
        throw ConfigError(who + ": instance index out of range");
      if (ri.o1_pos.max_hi() > n_words || ri.o2_pos.max_hi() > n_words)
        throw ConfigError(who + ": instance position exceeds n_words");
    }
  }

  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (r.ordinal != i + 1)
      throw ConfigError("rule ordinals must be contiguous from 1");
    if (r.slots.empty())
      throw ConfigError("rule " + std::to_string(r.ordinal) + ": no slots");
    for (const auto& s : r.slots)
      if (s.class_filter && !ontology.find_class(s.class_filter))
        throw ConfigError("rule " + std::to_string(r.ordinal) +
                          ": slot filters undeclared class");
  }

  if (topology_mode == TopologyMode::explicit_edges) {
    auto valid = [&](const AgentId& a) {
      switch (a.kind) {
        case AgentKind::controller: return a.index == 0;
        case AgentKind::instance: return a.index >= 1 && a.index <= n_instance + max_dynamic_agents;
        case AgentKind::relation: return a.index >= 1 && a.index <= n_relation;
        case AgentKind::rule: return a.index >= 1 && a.index <= n_rule;
      }
      return false;
    };
    for (const auto& [a, b] : edges)
      if (!valid(a) || !valid(b))
        throw ConfigError("topology edge references unknown agent " +
                          a.to_string() + " -- " + b.to_string());
  }
}

inline std::uint64_t SystemConfig::hash() const { return fnv1a64(save()); }

}  // namespace mda
