#pragma once
// The message vocabulary. Every payload an agent can receive is one variant
// alternative; canonical to_string() forms feed both state hashing and the
// trace files, so their field order is stable by construction.
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ontology.hpp"

namespace mda {

// activity notification to the controller: +k before dispatching k work
// items, -1 after finishing one. 0 occurs as the combined "k vectors minus
// one finished input" form of the rule input subprocess.
struct ActDelta {
  std::int32_t delta = 0;
  friend bool operator==(const ActDelta&, const ActDelta&) = default;
};

// instance agent introducing itself to a rule agent; carries the class and
// the agent's position so the rule can type and place agent-valued arguments
struct AgentIntro {
  std::uint32_t sender = 0;  // instance ordinal
  std::uint32_t class_id = 0;
  IntervalSet pos;
  friend bool operator==(const AgentIntro&, const AgentIntro&) = default;
};

// attribute value on the move: instance -> rule (fresh/initial values) and
// rule -> instance (computed updates; attr_id then names the target's slot)
struct AttrValue {
  AgentId sender;
  std::uint32_t attr_id = 0;
  std::int64_t value = 0;
  IntervalSet pos;
  friend bool operator==(const AttrValue&, const AttrValue&) = default;
};

// relation agent notifying an object or a rule that instance
// `instance_index` of relation `rel_agent` is evaluated
struct RelNotice {
  std::uint32_t rel_agent = 0;
  std::uint32_t instance_index = 0;
  IntervalSet pos;
  friend bool operator==(const RelNotice&, const RelNotice&) = default;
};

enum class RelField : std::uint8_t { object1, object2, attr };

// rule agent changing one element of a relation: bind an object slot or add
// an attribute value of instance `instance_index`
struct RelUpdate {
  std::uint32_t sender = 0;  // rule ordinal
  std::uint32_t instance_index = 0;
  RelField field = RelField::object1;
  std::uint32_t attr_id = 0;  // meaningful when field == attr
  std::int64_t value = 0;     // object ordinal or attribute value
  IntervalSet pos;
  friend bool operator==(const RelUpdate&, const RelUpdate&) = default;
};

enum class ArgKind : std::uint8_t { agent, attribute, relation };

// one pooled argument inside a rule agent's input buffer
struct ArgItem {
  ArgKind kind = ArgKind::attribute;
  AgentId sender;
  std::uint32_t class_id = 0;    // agent items
  std::uint32_t attr_id = 0;     // attribute items
  std::uint32_t rel_index = 0;   // relation items
  std::int64_t value = 0;
  IntervalSet pos;
  friend auto operator<=>(const ArgItem&, const ArgItem&) = default;
};

// complete argument vector travelling from ProcInput to ProcResult
struct ArgVector {
  std::vector<ArgItem> items;  // one per slot, slot order
  friend bool operator==(const ArgVector&, const ArgVector&) = default;
  friend auto operator<=>(const ArgVector&, const ArgVector&) = default;
};

// the controller's STOP; also ProcInput's internal 'stop' to ProcResult
struct StopToken {
  friend bool operator==(const StopToken&, const StopToken&) = default;
};

using Message = std::variant<ActDelta, AgentIntro, AttrValue, RelNotice,
                             RelUpdate, ArgVector, StopToken>;

inline bool is_act_delta(const Message& m) {
  return std::holds_alternative<ActDelta>(m);
}
inline bool is_stop(const Message& m) {
  return std::holds_alternative<StopToken>(m);
}
// "work" = announced, consumer-owes-a-minus-one payloads
inline bool is_work(const Message& m) { return !is_act_delta(m) && !is_stop(m); }

inline std::string to_string(const ArgItem& a) {
  switch (a.kind) {
    case ArgKind::agent:
      return "A:" + a.sender.to_string() + ",c" + std::to_string(a.class_id) +
             "," + a.pos.to_string();
    case ArgKind::attribute:
      return "V:" + a.sender.to_string() + ",a" + std::to_string(a.attr_id) +
             ",v" + std::to_string(a.value) + "," + a.pos.to_string();
    case ArgKind::relation:
      return "L:" + a.sender.to_string() + ",#" + std::to_string(a.rel_index) +
             "," + a.pos.to_string();
  }
  return "?";
}

inline std::string to_string(const Message& m) {
  struct V {
    std::string operator()(const ActDelta& d) const {
      return "D{" + std::string(d.delta >= 0 ? "+" : "") +
             std::to_string(d.delta) + "}";
    }
    std::string operator()(const AgentIntro& a) const {
      return "AI{I" + std::to_string(a.sender) + ",c" +
             std::to_string(a.class_id) + "," + a.pos.to_string() + "}";
    }
    std::string operator()(const AttrValue& a) const {
      return "AV{" + a.sender.to_string() + ",a" + std::to_string(a.attr_id) +
             ",v" + std::to_string(a.value) + "," + a.pos.to_string() + "}";
    }
    std::string operator()(const RelNotice& r) const {
      return "RN{Rl" + std::to_string(r.rel_agent) + ",#" +
             std::to_string(r.instance_index) + "," + r.pos.to_string() + "}";
    }
    std::string operator()(const RelUpdate& r) const {
      std::string f = r.field == RelField::object1   ? "o1"
                      : r.field == RelField::object2 ? "o2"
                          : "a" + std::to_string(r.attr_id);
      return "RU{R" + std::to_string(r.sender) + ",#" +
             std::to_string(r.instance_index) + "," + f + "=" +
             std::to_string(r.value) + "," + r.pos.to_string() + "}";
    }
    std::string operator()(const ArgVector& v) const {
      std::string s = "VEC{";
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) s += ';';
        s += mda::to_string(v.items[i]);
      }
      return s + "}";
    }
    std::string operator()(const StopToken&) const { return "STOP"; }
  };
  return std::visit(V{}, m);
}

// a message with its destination; protocol transitions return these in
// exactly the protocol's line order (announcements before the work they cover)
struct Emission {
  AgentId dest;
  Message msg;
};

inline std::string to_string(const Emission& e) {
  return e.dest.to_string() + "<-" + to_string(e.msg);
}

}  // namespace mda
