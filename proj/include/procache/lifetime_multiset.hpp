#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "procache/errors.hpp"

namespace procache {

// Multiset of remaining content lifetimes, stored as lifetime -> count.
// Contents are homogeneous in size, so a remaining lifetime fully describes
// a content; every stateful set in the simulator (out-of-cache, cache, fresh
// batch, downloads, evictions) is one of these.
class LifetimeMultiset {
 public:
  LifetimeMultiset() = default;

  LifetimeMultiset(std::initializer_list<int> lifetimes) {
    for (int k : lifetimes) add(k);
  }

  std::int64_t size() const { return total_; }
  bool empty() const { return total_ == 0; }

  std::int32_t count(int lifetime) const {
    if (lifetime < 1 || lifetime >= static_cast<int>(counts_.size())) return 0;
    return counts_[lifetime];
  }

  void add(int lifetime, std::int32_t n = 1) {
    if (lifetime < 1) throw invariant_error("lifetime must be >= 1");
    if (n < 0) throw invariant_error("negative multiplicity");
    if (n == 0) return;
    if (lifetime >= static_cast<int>(counts_.size())) counts_.resize(lifetime + 1, 0);
    counts_[lifetime] += n;
    total_ += n;
  }

  void remove(int lifetime, std::int32_t n = 1) {
    if (n < 0) throw invariant_error("negative multiplicity");
    if (count(lifetime) < n) throw invariant_error("removing more elements than present");
    counts_[lifetime] -= n;
    total_ -= n;
  }

  // Multiset inclusion: every element of sub, with multiplicity, is in *this.
  bool contains(const LifetimeMultiset& sub) const {
    for (int k = 1; k < static_cast<int>(sub.counts_.size()); ++k)
      if (sub.counts_[k] > count(k)) return false;
    return true;
  }

  bool disjoint(const LifetimeMultiset& other) const {
    int hi = std::min(counts_.size(), other.counts_.size());
    for (int k = 1; k < hi; ++k)
      if (counts_[k] > 0 && other.counts_[k] > 0) return false;
    return true;
  }

  void unite(const LifetimeMultiset& other) {
    for (int k = 1; k < static_cast<int>(other.counts_.size()); ++k)
      if (other.counts_[k] > 0) add(k, other.counts_[k]);
  }

  void subtract(const LifetimeMultiset& other) {
    for (int k = 1; k < static_cast<int>(other.counts_.size()); ++k)
      if (other.counts_[k] > 0) remove(k, other.counts_[k]);
  }

  // Smallest lifetime present, or 0 if empty.
  int min_lifetime() const {
    for (int k = 1; k < static_cast<int>(counts_.size()); ++k)
      if (counts_[k] > 0) return k;
    return 0;
  }

  // Largest lifetime present, or 0 if empty.
  int max_lifetime() const {
    for (int k = static_cast<int>(counts_.size()) - 1; k >= 1; --k)
      if (counts_[k] > 0) return k;
    return 0;
  }

  // Reduces every lifetime by one and drops the elements that reach zero.
  void decrement_expire() {
    if (counts_.empty()) return;
    total_ -= counts_[1];
    for (int k = 1; k + 1 < static_cast<int>(counts_.size()); ++k)
      counts_[k] = counts_[k + 1];
    counts_.back() = 0;
  }

  std::vector<int> to_sorted_list() const {
    std::vector<int> out;
    out.reserve(total_);
    for (int k = 1; k < static_cast<int>(counts_.size()); ++k)
      for (std::int32_t i = 0; i < counts_[k]; ++i) out.push_back(k);
    return out;
  }

  // Comparison ignores trailing zero capacity.
  friend bool operator==(const LifetimeMultiset& a, const LifetimeMultiset& b) {
    if (a.total_ != b.total_) return false;
    int hi = static_cast<int>(std::max(a.counts_.size(), b.counts_.size()));
    for (int k = 1; k < hi; ++k)
      if (a.count(k) != b.count(k)) return false;
    return true;
  }

  friend std::strong_ordering operator<=>(const LifetimeMultiset& a,
                                          const LifetimeMultiset& b) {
    int hi = static_cast<int>(std::max(a.counts_.size(), b.counts_.size()));
    for (int k = 1; k < hi; ++k) {
      if (auto c = a.count(k) <=> b.count(k); c != 0) return c;
    }
    return std::strong_ordering::equal;
  }

  // Renders as "1;1;5" (ascending), empty string for the empty multiset.
  std::string to_string() const {
    std::string s;
    for (int k : to_sorted_list()) {
      if (!s.empty()) s += ';';
      s += std::to_string(k);
    }
    return s;
  }

 private:
  std::vector<std::int32_t> counts_;  // index = lifetime; [0] unused
  std::int64_t total_ = 0;
};

}  // namespace procache
