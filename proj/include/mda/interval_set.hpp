#pragma once
// Sets of closed intervals over 1-based word positions. Stored normalized:
// ordered by lower bound and pairwise disjoint. By default only intersecting
// intervals are merged on insert; merging intervals that merely touch
// ([3,5] + [6,8]) is a policy choice some runs enable.
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mda {

enum class MergePolicy { intersect, adjacent };

struct Interval {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  friend auto operator<=>(const Interval&, const Interval&) = default;
};

class IntervalSet {
 public:
  IntervalSet() = default;

  bool empty() const { return iv_.empty(); }
  const std::vector<Interval>& intervals() const { return iv_; }

  // largest covered position, 0 when empty
  std::uint32_t max_hi() const { return iv_.empty() ? 0 : iv_.back().hi; }

  void insert(Interval x, MergePolicy policy = MergePolicy::intersect) {
    if (x.lo < 1 || x.lo > x.hi)
      throw std::invalid_argument("bad interval [" + std::to_string(x.lo) +
                                  "," + std::to_string(x.hi) + "]");
    // widen the candidate by one on each side under adjacency merging so the
    // overlap test below also catches touching neighbours
    std::uint64_t reach_lo = x.lo, reach_hi = x.hi;
    if (policy == MergePolicy::adjacent) {
      reach_lo = reach_lo > 1 ? reach_lo - 1 : 1;
      reach_hi += 1;
    }
    std::vector<Interval> out;
    out.reserve(iv_.size() + 1);
    Interval merged = x;
    bool placed = false;
    for (const Interval& cur : iv_) {
      if (std::uint64_t(cur.hi) < reach_lo) {
        out.push_back(cur);
      } else if (std::uint64_t(cur.lo) > reach_hi) {
        if (!placed) {
          out.push_back(merged);
          placed = true;
        }
        out.push_back(cur);
      } else {
        merged.lo = std::min(merged.lo, cur.lo);
        merged.hi = std::max(merged.hi, cur.hi);
      }
    }
    if (!placed) out.push_back(merged);
    iv_ = std::move(out);
  }

  static IntervalSet unite(const IntervalSet& a, const IntervalSet& b,
                           MergePolicy policy) {
    IntervalSet r = a;
    for (const Interval& iv : b.iv_) r.insert(iv, policy);
    return r;
  }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;
  friend auto operator<=>(const IntervalSet& a, const IntervalSet& b) {
    return std::lexicographical_compare_three_way(
        a.iv_.begin(), a.iv_.end(), b.iv_.begin(), b.iv_.end());
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < iv_.size(); ++i) {
      if (i) s += ',';
      s += '[' + std::to_string(iv_[i].lo) + ',' + std::to_string(iv_[i].hi) +
           ']';
    }
    return s + "}";
  }

  static IntervalSet parse(std::string_view text) {
    IntervalSet s;
    std::size_t i = 0;
    auto fail = [&] {
      throw std::invalid_argument("bad interval set: " + std::string(text));
    };
    auto number = [&]() -> std::uint32_t {
      std::size_t start = i;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
      if (i == start) fail();
      return std::uint32_t(std::stoul(std::string(text.substr(start, i - start))));
    };
    if (i >= text.size() || text[i] != '{') fail();
    ++i;
    while (i < text.size() && text[i] != '}') {
      if (text[i] == ',') ++i;
      if (i >= text.size() || text[i] != '[') fail();
      ++i;
      std::uint32_t lo = number();
      if (i >= text.size() || text[i] != ',') fail();
      ++i;
      std::uint32_t hi = number();
      if (i >= text.size() || text[i] != ']') fail();
      ++i;
      s.insert({lo, hi});
    }
    if (i >= text.size() || text[i] != '}' || i + 1 != text.size()) fail();
    return s;
  }

 private:
  std::vector<Interval> iv_;
};

// where an argument combination "sits" in the document: the normalized union
// of the argument positions; used as a key when counting rule generations
using PositionPoint = IntervalSet;

inline PositionPoint position_point(std::span<const IntervalSet> args,
                                    MergePolicy policy) {
  if (args.empty())
    throw std::invalid_argument("position point of zero arguments");
  PositionPoint p = args[0];
  for (std::size_t i = 1; i < args.size(); ++i)
    p = IntervalSet::unite(p, args[i], policy);
  return p;
}

}  // namespace mda
