#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qbai/dist.hpp"

namespace qbai::channel {

/// SplitMix64 output function.
std::uint64_t mix64(std::uint64_t x);

/// Uniform variate in (0, 1) addressed by (seed, stream, index); no state involved.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// "Is the reward of `arm` at most `threshold`?"
struct ThresholdQuery {
  std::size_t arm = 0;
  ExtendedReal threshold = 0.0;
  std::int64_t round = 0;  // diagnostic only
};

struct BitFeedback {
  bool bit = false;
};

struct PullLedger {
  std::vector<std::uint64_t> pulls_per_arm;
  std::uint64_t total_pulls = 0;
  std::uint64_t uplink_bits = 0;
  std::uint64_t sentinel_queries = 0;

  /// total_pulls == sum(pulls_per_arm) == uplink_bits
  bool consistent() const;
  friend bool operator==(const PullLedger&, const PullLedger&) = default;
};

/// Draws a fresh reward per answer. Its only state is the instance and the seed; the
/// draw index selects the variate.
class Agent {
 public:
  Agent(const dist::Instance& inst, std::uint64_t seed) : inst_(&inst), seed_(seed) {}

  bool answer(std::size_t arm, double threshold, std::uint64_t draw_index) const;
  std::size_t arms() const { return inst_->size(); }

 private:
  const dist::Instance* inst_;
  std::uint64_t seed_;
};

/// Learner-facing side of the protocol: thresholds go down, single bits come back.
/// The instance must outlive the channel.
class Channel {
 public:
  Channel(const dist::Instance& inst, std::uint64_t seed);

  /// +/-inf thresholds are answered without pulling the arm.
  BitFeedback query(const ThresholdQuery& q);

  std::size_t arms() const { return agent_.arms(); }
  const PullLedger& ledger() const { return ledger_; }
  PullLedger snapshot_ledger() const { return ledger_; }
  /// Zeroes the counters; the reward stream continues where it was.
  void reset_ledger();

 private:
  Agent agent_;
  std::vector<std::uint64_t> draws_;
  PullLedger ledger_;
};

}  // namespace qbai::channel
