#include "qbai/channel.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qbai::channel {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t key = mix64(seed ^ mix64(stream ^ 0x5851f42d4c957f2dULL));
  const std::uint64_t x = mix64(key + index * 0xd1b54a32d192ed03ULL);
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

bool PullLedger::consistent() const {
  const auto sum = std::accumulate(pulls_per_arm.begin(), pulls_per_arm.end(), std::uint64_t{0});
  return sum == total_pulls && total_pulls == uplink_bits;
}

bool Agent::answer(std::size_t arm, double threshold, std::uint64_t draw_index) const {
  const double reward = inst_->arm(arm).sample_at(counter_uniform(seed_, arm, draw_index));
  return reward <= threshold;
}

Channel::Channel(const dist::Instance& inst, std::uint64_t seed)
    : agent_(inst, seed), draws_(inst.size(), 0) {
  ledger_.pulls_per_arm.assign(inst.size(), 0);
}

BitFeedback Channel::query(const ThresholdQuery& q) {
  if (q.arm >= draws_.size()) throw std::out_of_range("query for unknown arm");
  if (std::isinf(q.threshold)) {
    ++ledger_.sentinel_queries;
    return {q.threshold > 0};
  }
  const bool bit = agent_.answer(q.arm, q.threshold, draws_[q.arm]++);
  ++ledger_.pulls_per_arm[q.arm];
  ++ledger_.total_pulls;
  ++ledger_.uplink_bits;
  return {bit};
}

void Channel::reset_ledger() {
  ledger_ = PullLedger{};
  ledger_.pulls_per_arm.assign(draws_.size(), 0);
}

}  // namespace qbai::channel
