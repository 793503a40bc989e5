#pragma once
// Ontology schema plus the two data shapes agents carry at runtime:
// attribute slots (instance agents) and relation instances (relation agents).
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "interval_set.hpp"

namespace mda {

enum class AgentKind : std::uint8_t { controller, instance, relation, rule };

// uniform address: controller is C, others are 1-based per kind (I1, Rl2, R3)
struct AgentId {
  AgentKind kind = AgentKind::controller;
  std::uint32_t index = 0;

  friend auto operator<=>(const AgentId&, const AgentId&) = default;

  std::string to_string() const {
    switch (kind) {
      case AgentKind::controller: return "C";
      case AgentKind::instance: return "I" + std::to_string(index);
      case AgentKind::relation: return "Rl" + std::to_string(index);
      case AgentKind::rule: return "R" + std::to_string(index);
    }
    return "?";
  }
};

inline AgentId controller_id() { return {AgentKind::controller, 0}; }
inline AgentId instance_id(std::uint32_t i) { return {AgentKind::instance, i}; }
inline AgentId relation_id(std::uint32_t i) { return {AgentKind::relation, i}; }
inline AgentId rule_id(std::uint32_t i) { return {AgentKind::rule, i}; }

struct TypeDecl {
  std::uint32_t id = 0;
  std::string name;
  std::int64_t domain_lo = 0;  // inclusive value domain
  std::int64_t domain_hi = 0;
};

struct AttributeDecl {
  std::uint32_t index = 0;  // position in the owning class, 0-based
  std::string name;
  std::uint32_t type_id = 0;
};

struct ClassDecl {
  std::uint32_t id = 0;
  std::string name;
  std::vector<AttributeDecl> attributes;
};

struct RelationDecl {
  std::uint32_t id = 0;
  std::string name;
  std::uint32_t class1 = 0;
  std::uint32_t class2 = 0;
};

struct OntologySchema {
  std::vector<TypeDecl> types;
  std::vector<ClassDecl> classes;
  std::vector<RelationDecl> relations;

  const TypeDecl* find_type(std::uint32_t id) const {
    for (const auto& t : types)
      if (t.id == id) return &t;
    return nullptr;
  }
  const ClassDecl* find_class(std::uint32_t id) const {
    for (const auto& c : classes)
      if (c.id == id) return &c;
    return nullptr;
  }

  void validate() const {
    for (const auto& t : types)
      if (t.domain_lo > t.domain_hi)
        throw ConfigError("type " + t.name + ": empty value domain");
    for (const auto& c : classes)
      for (const auto& a : c.attributes)
        if (!find_type(a.type_id))
          throw ConfigError("class " + c.name + ": attribute " + a.name +
                            " has undeclared type " +
                            std::to_string(a.type_id));
    for (const auto& r : relations)
      if (!find_class(r.class1) || !find_class(r.class2))
        throw ConfigError("relation " + r.name +
                          ": class pair references an undeclared class");
  }
};

// one attribute of an instance agent: everything learned about it so far.
// values only accumulate; evaluated() flips once and stays.
struct AttributeSlot {
  std::uint32_t attr_id = 0;             // 0-based index within the agent
  std::set<std::int64_t> values;
  std::vector<std::uint32_t> out_rules;  // Rul_i, sorted rule ordinals
  IntervalSet pos;

  bool evaluated() const { return !values.empty(); }
  friend bool operator==(const AttributeSlot&, const AttributeSlot&) = default;
};

// one element of a relation, as a relation agent tracks it. o1/o2 hold
// instance-agent ordinals once a rule binds them; pos is maintained as the
// union of the object and attribute position contributions.
struct RelationInstance {
  std::uint32_t index = 0;  // 1-based within the owning relation agent
  std::optional<std::uint32_t> o1, o2;
  IntervalSet o1_pos, o2_pos;
  std::map<std::uint32_t, AttributeSlot> attrs;
  IntervalSet pos;

  bool evaluated() const { return o1.has_value() && o2.has_value(); }

  void recompute_pos(MergePolicy policy) {
    IntervalSet p = IntervalSet::unite(o1_pos, o2_pos, policy);
    for (const auto& [id, slot] : attrs) p = IntervalSet::unite(p, slot.pos, policy);
    pos = p;
  }
  friend bool operator==(const RelationInstance&, const RelationInstance&) =
      default;
};

}  // namespace mda
