#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsfec/nn/network.hpp"
#include "dsfec/rate/policy.hpp"
#include "dsfec/sim/rng.hpp"
#include "dsfec/sim/time.hpp"

namespace dsfec {

struct AgentConfig {
  std::vector<double> actions = {0.66, 0.70, 0.74, 0.78, 0.82, 0.86};
  int hidden = 256;
  std::size_t replay_capacity = 10000;
  int minibatch = 32;
  double learning_rate = 1e-3;
  double epsilon_min = 0.01;
  double epsilon_decay = 2e-4;   // per training epoch
  double stability_theta = 0.02; // loss-estimate jump that resets tau
  double rtt_ms = 2000.0;
  double tau_cap_rtts = 50.0;
  int episode_actions = 100;
  int ma_window = 10;            // episodes in the reward moving average
  double convergence_delta = 0.05;
  int convergence_streak = 5;
  bool training = true;
};

struct AgentState {
  double s1 = 0.0;   // rounded loss estimate from the last feedback
  int s2 = 1;        // 0 iff that matrix failed to decode
  double tau_ms = 0; // time the loss estimate has been stable
};

struct Transition {
  AgentState state;
  int action = 0;
  double reward = 0.0;
  AgentState next;
};

double round3(double x);
double epsilon_from_epoch(std::int64_t epoch, double floor, double decay);

// next.tau accumulates while the loss estimate stays within theta of the
// previous one and restarts from the inter-feedback gap when it jumps.
AgentState next_agent_state(const AgentState& prev, SimTime t1, double s1,
                            bool decode_failed, SimTime now, double theta);

double compute_delta(double pe_raw, double rc);
double compute_reward(double delta, bool decode_failed);

// Epsilon-greedy dueling-DQN rate policy. Network weights, optimizer state,
// exploration/minibatch streams, replay memory and the epoch counter live
// for the whole campaign; the state-action buffer, action ids and timing
// state reset every round.
class DqnRatePolicy : public RatePolicy {
 public:
  DqnRatePolicy(const AgentConfig& cfg, std::uint64_t master_seed);

  void begin_round(std::uint64_t round) override;
  RateDecision initial_decision(SimTime now) override;
  std::optional<RateDecision> on_feedback(const ResolvedFeedback& fb,
                                          SimTime now) override;
  std::string name() const override { return "rl"; }
  double trace_pe_estimate() const override { return state_.s1; }

  int greedy_index(const AgentState& s) const;
  double epsilon() const;
  std::int64_t epoch() const { return epoch_; }
  std::int64_t stale_feedbacks() const { return stale_; }
  std::size_t replay_size() const { return replay_.size(); }
  std::size_t buffer_size() const { return buffer_.size(); }
  std::int64_t training_steps() const { return adam_.step_count(); }
  double last_loss() const { return last_loss_; }
  const std::vector<double>& episode_mean_rewards() const {
    return episode_means_;
  }
  bool converged() const { return converged_; }
  const AgentState& current_state() const { return state_; }
  const DuelingQNetwork& network() const { return net_; }
  DuelingQNetwork& network() { return net_; }

  void save(const std::string& path);
  void load(const std::string& path);

 private:
  Eigen::VectorXd encode(const AgentState& s) const;
  int select_index(const AgentState& s);
  RateDecision issue(int action_index, SimTime now);
  void record_reward(double reward);
  void train_step();

  AgentConfig cfg_;
  Rng init_rng_;
  Rng explore_;
  Rng minibatch_;
  DuelingQNetwork net_;
  AdamOptimizer adam_;

  std::vector<Transition> replay_;
  std::size_t replay_write_ = 0;

  struct PendingAction {
    AgentState state;
    int action_index;
  };
  std::map<std::int64_t, PendingAction> buffer_;
  std::int64_t next_action_id_ = 0;

  AgentState state_;
  SimTime t1_ = 0;

  std::int64_t epoch_ = 0;
  std::int64_t stale_ = 0;
  double last_loss_ = 0.0;

  std::int64_t episode_count_ = 0;
  double episode_sum_ = 0.0;
  std::vector<double> episode_means_;
  double prev_ma_ = 0.0;
  bool have_ma_ = false;
  int streak_ = 0;
  bool converged_ = false;
};

}  // namespace dsfec
