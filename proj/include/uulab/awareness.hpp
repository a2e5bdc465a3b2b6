#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "uulab/env.hpp"

namespace uulab {

inline constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

/// Growing aware domain S_t with per-state aware moments t(s).
///
/// Membership is monotone: states are only ever admitted. `members()` lists
/// the aware states in admission order, so the first |S_{t-1}| entries are
/// the previous aware set.
class AwareState {
 public:
  AwareState() = default;

  /// Throws ContractError on an empty S0, IndexError on out-of-range entries.
  static AwareState init(std::span<const std::size_t> initial, std::size_t num_states);

  /// Admits every s_h of the trace (h < H) not yet aware, with moment t.
  /// The terminal s_{H+1} is not admitted. Returns new states in first-visit
  /// order.
  std::vector<std::size_t> observe_episode(const EpisodeTrace& trace, std::size_t t);

  bool contains(std::size_t s) const { return member_[s] != 0; }
  std::size_t count() const { return members_.size(); }
  std::size_t num_states() const { return member_.size(); }
  std::size_t aware_moment(std::size_t s) const { return moment_[s]; }
  std::span<const std::size_t> members() const { return members_; }
  std::span<const char> mask() const { return member_; }
  /// |S_t| after each observed episode t = 1, 2, ...
  const std::vector<std::size_t>& size_history() const { return size_history_; }

 private:
  std::vector<char> member_;
  std::vector<std::size_t> moment_;
  std::vector<std::size_t> members_;
  std::vector<std::size_t> size_history_;
};

}  // namespace uulab
