#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dsfec {

// Sub-seeding scheme: a named stream's seed is
//   splitmix64(master ^ fnv1a(label))
// and indexed streams (per-round) additionally fold in the index:
//   splitmix64(derive_seed(master, label) ^ splitmix64(index + 1))
// Stream labels in use:
//   "round"              per-round master (indexed by round number)
//   "loss-model"         p_e evolution draws (round-scoped)
//   "loss-model/drops"   per-packet Bernoulli drops (round-scoped, split off
//                        so the p_e schedule is identical across policies
//                        that transmit different packet counts)
//   "agent-exploration"  epsilon-greedy coin and random action (campaign)
//   "network-init"       Q-network weight init (campaign)
//   "minibatch-sampling" replay minibatch indices (campaign)
std::uint64_t fnv1a(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index);

// mt19937_64 with hand-rolled variate transforms so every draw is
// bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0,1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Exponential with the given mean, by inversion.
  double exponential(double mean);

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dsfec
