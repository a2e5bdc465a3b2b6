#include "uulab/awareness.hpp"

#include <string>

namespace uulab {

AwareState AwareState::init(std::span<const std::size_t> initial, std::size_t num_states) {
  if (initial.empty()) throw ContractError("initial aware set is empty");
  AwareState state;
  state.member_.assign(num_states, 0);
  state.moment_.assign(num_states, kNever);
  state.members_.reserve(num_states);
  state.size_history_.reserve(1024);
  for (auto s : initial) {
    if (s >= num_states) throw IndexError("initial aware state " + std::to_string(s) + " out of range");
    if (state.member_[s]) continue;
    state.member_[s] = 1;
    state.moment_[s] = 0;
    state.members_.push_back(s);
  }
  return state;
}

std::vector<std::size_t> AwareState::observe_episode(const EpisodeTrace& trace, std::size_t t) {
  if (t == 0) throw ContractError("observe_episode: episode index starts at 1");
  std::vector<std::size_t> fresh;
  for (const auto& step : trace.steps) {
    const std::size_t s = step.state;
    if (s >= member_.size()) throw IndexError("trace state " + std::to_string(s) + " out of range");
    if (member_[s]) continue;
    member_[s] = 1;
    moment_[s] = t;
    members_.push_back(s);
    fresh.push_back(s);
  }
  size_history_.push_back(members_.size());
  return fresh;
}

}  // namespace uulab
