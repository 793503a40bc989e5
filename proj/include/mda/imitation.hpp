#pragma once
// Stand-in for the external data-analysis module: rule results are computed
// by small deterministic functions of (rule id, argument values), so runs
// are reproducible and generation is bounded by construction.
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "config.hpp"
#include "message.hpp"

namespace mda {

struct ImitationInput {
  std::uint32_t rule_id = 0;
  const ArgVector& args;
  const ImitationSpec& spec;
  std::uint32_t n_instance = 0;  // static instance agents
  std::uint32_t n_relation = 0;
  std::uint32_t n_rule = 0;
  MergePolicy policy = MergePolicy::intersect;
  bool unbounded_spawn = false;
  std::uint32_t prior_spawns_at_point = 0;  // quota bookkeeping, caller-owned
};

struct ImitationResult {
  bool consistent = false;
  IntervalSet point;  // PositionPoint of the argument vector
  std::vector<std::pair<AgentId, AttrValue>> attr_updates;
  std::vector<std::pair<std::uint32_t, RelUpdate>> rel_updates;
  std::uint32_t spawns = 0;  // requested; the rule agent applies HomLim
};

inline bool imitation_consistent(const ImitationInput& in) {
  switch (in.spec.consistency) {
    case ImitationSpec::Consistency::all:
      return true;
    case ImitationSpec::Consistency::none:
      return false;
    case ImitationSpec::Consistency::same_sender: {
      const ArgItem* first_instance = nullptr;
      for (const auto& item : in.args.items) {
        if (item.sender.kind != AgentKind::instance) continue;
        if (!first_instance)
          first_instance = &item;
        else if (item.sender != first_instance->sender)
          return false;
      }
      return true;
    }
    case ImitationSpec::Consistency::parity_even:
    case ImitationSpec::Consistency::parity_odd: {
      std::int64_t sum = 0;
      for (const auto& item : in.args.items)
        if (item.kind == ArgKind::attribute) sum += item.value;
      bool even = (sum % 2) == 0;
      return in.spec.consistency == ImitationSpec::Consistency::parity_even
                 ? even
                 : !even;
    }
  }
  return false;
}

inline ImitationResult make_res_imitation(const ImitationInput& in) {
  ImitationResult out;
  std::vector<IntervalSet> poses;
  poses.reserve(in.args.items.size());
  for (const auto& item : in.args.items) poses.push_back(item.pos);
  out.point = position_point(poses, in.policy);

  out.consistent = imitation_consistent(in);
  if (!out.consistent) return out;

  if (in.spec.result_mode == ImitationSpec::ResultMode::venue_link) {
    // bind the two agent arguments as objects 1 and 2 of the first element
    // of the first relation agent, in slot order
    std::uint32_t target_rl =
        in.n_relation ? ((in.rule_id - 1) % in.n_relation) + 1 : 0;
    RelField next = RelField::object1;
    for (const auto& item : in.args.items) {
      if (item.kind != ArgKind::agent || target_rl == 0) continue;
      RelUpdate ru;
      ru.sender = in.rule_id;
      ru.instance_index = 1;
      ru.field = next;
      ru.value = item.sender.index;
      ru.pos = out.point;
      out.rel_updates.emplace_back(target_rl, ru);
      if (next == RelField::object2) break;
      next = RelField::object2;
    }
  } else {
    // synthetic mode: one attribute update back to the value's sender, and
    // one relation-object update, both derived from (rule id, sender id)
    const ArgItem* attr_item = nullptr;
    for (const auto& item : in.args.items)
      if (item.kind == ArgKind::attribute &&
          item.sender.kind == AgentKind::instance) {
        attr_item = &item;
        break;
      }
    if (attr_item && in.spec.update_attrs) {
      std::uint32_t s = attr_item->sender.index;
      std::uint32_t slots = 2 * s;  // a static instance s declares 2s attrs
      AttrValue av;
      av.sender = rule_id(in.rule_id);
      av.attr_id = slots ? (in.rule_id + 1) % slots : 0;
      av.value = attr_item->value;
      av.pos = out.point;
      out.attr_updates.emplace_back(instance_id(s), av);
    }
    if (attr_item && in.spec.update_relations && in.n_relation > 0) {
      std::uint32_t s = attr_item->sender.index;
      RelUpdate ru;
      ru.sender = in.rule_id;
      ru.instance_index = s;
      ru.field = in.rule_id % 2 ? RelField::object1 : RelField::object2;
      ru.value = s;
      ru.pos = out.point;
      out.rel_updates.emplace_back(((s - 1) % in.n_relation) + 1, ru);
    }
  }

  if (in.unbounded_spawn)
    out.spawns = 1;
  else if (in.spec.spawn_quota > in.prior_spawns_at_point)
    out.spawns = 1;
  return out;
}

}  // namespace mda
