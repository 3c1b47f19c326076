#include "dsfec/rl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsfec {

namespace {
// Reward extremes for the stock action set: delta spans [-0.86, 0.34].
constexpr double kRewardMin = -19.49;
constexpr double kRewardMax = 1.0;
constexpr double kRewardTol = 1e-9;
}  // namespace

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

double epsilon_from_epoch(std::int64_t epoch, double floor, double decay) {
  return std::max(floor, 1.0 - decay * static_cast<double>(epoch));
}

AgentState next_agent_state(const AgentState& prev, SimTime t1, double s1,
                            bool decode_failed, SimTime now, double theta) {
  AgentState next;
  next.s1 = s1;
  next.s2 = decode_failed ? 0 : 1;
  const double gap = static_cast<double>(now - t1);
  if (std::abs(s1 - prev.s1) > theta) {
    next.tau_ms = gap;
  } else {
    next.tau_ms = prev.tau_ms + gap;
  }
  return next;
}

double compute_delta(double pe_raw, double rc) { return (1.0 - pe_raw) - rc; }

double compute_reward(double delta, bool decode_failed) {
  const double scaled = delta / 0.2;
  if (decode_failed) return -scaled * scaled - 1.0;
  if (delta > 0.0) {
    const double over = (delta - 0.2) / 0.2;
    return over * over;
  }
  if (delta < 0.0) return -scaled * scaled;
  return 1.0;
}

DqnRatePolicy::DqnRatePolicy(const AgentConfig& cfg, std::uint64_t master_seed)
    : cfg_(cfg),
      init_rng_(derive_seed(master_seed, "network-init")),
      explore_(derive_seed(master_seed, "agent-exploration")),
      minibatch_(derive_seed(master_seed, "minibatch-sampling")),
      net_(3, cfg.hidden, static_cast<int>(cfg.actions.size()), init_rng_),
      adam_(cfg.learning_rate) {
  if (cfg_.actions.empty()) {
    throw std::invalid_argument("agent: action set must not be empty");
  }
  replay_.reserve(std::min<std::size_t>(cfg_.replay_capacity, 10000));
}

void DqnRatePolicy::begin_round(std::uint64_t) {
  buffer_.clear();
  next_action_id_ = 0;
  state_ = AgentState{};
  t1_ = 0;
}

RateDecision DqnRatePolicy::initial_decision(SimTime now) {
  t1_ = now;
  return issue(select_index(state_), now);
}

Eigen::VectorXd DqnRatePolicy::encode(const AgentState& s) const {
  Eigen::VectorXd x(3);
  const double cap = cfg_.tau_cap_rtts;
  x << s.s1, static_cast<double>(s.s2),
      std::min(s.tau_ms / cfg_.rtt_ms, cap) / cap;
  return x;
}

int DqnRatePolicy::greedy_index(const AgentState& s) const {
  const Eigen::VectorXd q = net_.q_values(encode(s));
  int best = 0;
  for (int i = 1; i < q.size(); ++i) {
    if (q(i) > q(best)) best = i;
  }
  return best;
}

double DqnRatePolicy::epsilon() const {
  if (!cfg_.training) return cfg_.epsilon_min;
  return epsilon_from_epoch(epoch_, cfg_.epsilon_min, cfg_.epsilon_decay);
}

int DqnRatePolicy::select_index(const AgentState& s) {
  if (explore_.uniform01() < epsilon()) {
    return static_cast<int>(explore_.uniform_index(cfg_.actions.size()));
  }
  return greedy_index(s);
}

RateDecision DqnRatePolicy::issue(int action_index, SimTime now) {
  const std::int64_t id = next_action_id_++;
  buffer_.emplace(id, PendingAction{state_, action_index});
  return RateDecision{cfg_.actions[static_cast<std::size_t>(action_index)], id,
                      now};
}

std::optional<RateDecision> DqnRatePolicy::on_feedback(
    const ResolvedFeedback& fb, SimTime now) {
  auto it = buffer_.find(fb.record.action_id);
  if (it == buffer_.end()) {
    ++stale_;
    return std::nullopt;
  }
  buffer_.erase(buffer_.begin(), it);  // entries older than the match
  const PendingAction matched = it->second;
  buffer_.erase(it);

  const double total = static_cast<double>(fb.feedback.total);
  if (total < 1.0) throw std::logic_error("agent: feedback with empty matrix");
  const double pe_raw =
      1.0 - static_cast<double>(fb.feedback.received) / total;
  const bool failed = fb.feedback.status == CodecStatus::kFailed;

  AgentState next = next_agent_state(state_, t1_, round3(pe_raw), failed, now,
                                     cfg_.stability_theta);
  t1_ = now;

  const double delta = compute_delta(pe_raw, fb.record.rc_used);
  const double reward = compute_reward(delta, failed);
  if (reward < kRewardMin - kRewardTol || reward > kRewardMax + kRewardTol) {
    throw std::logic_error("agent: reward outside admissible range");
  }

  if (cfg_.training) {
    Transition t{matched.state, matched.action_index, reward, next};
    if (replay_.size() < cfg_.replay_capacity) {
      replay_.push_back(std::move(t));
    } else {
      replay_[replay_write_] = std::move(t);
      replay_write_ = (replay_write_ + 1) % cfg_.replay_capacity;
    }
    if (replay_.size() >= static_cast<std::size_t>(cfg_.minibatch)) {
      train_step();
    }
  }
  record_reward(reward);

  state_ = next;
  return issue(select_index(state_), now);
}

void DqnRatePolicy::record_reward(double reward) {
  episode_sum_ += reward;
  if (++episode_count_ < cfg_.episode_actions) return;

  episode_means_.push_back(episode_sum_ /
                           static_cast<double>(cfg_.episode_actions));
  episode_count_ = 0;
  episode_sum_ = 0.0;
  if (episode_means_.size() <
      static_cast<std::size_t>(std::max(cfg_.ma_window, 1))) {
    return;
  }
  double ma = 0.0;
  for (std::size_t i = episode_means_.size() - cfg_.ma_window;
       i < episode_means_.size(); ++i) {
    ma += episode_means_[i];
  }
  ma /= static_cast<double>(cfg_.ma_window);
  // A flat reward average only signals a settled policy once exploration has
  // decayed to its floor; while epsilon is high the reward stream is
  // stationary regardless of what the network has learned.
  const bool exploring = cfg_.training && epsilon() > cfg_.epsilon_min + 1e-12;
  if (have_ma_ && !exploring) {
    if (std::abs(ma - prev_ma_) < cfg_.convergence_delta) {
      if (++streak_ >= cfg_.convergence_streak) converged_ = true;
    } else {
      streak_ = 0;
    }
  }
  prev_ma_ = ma;
  have_ma_ = true;
}

void DqnRatePolicy::train_step() {
  const int batch = cfg_.minibatch;
  Eigen::MatrixXd x(3, batch);
  std::vector<int> taken(static_cast<std::size_t>(batch));
  Eigen::VectorXd targets(batch);
  for (int b = 0; b < batch; ++b) {
    const Transition& t = replay_[minibatch_.uniform_index(replay_.size())];
    x.col(b) = encode(t.state);
    taken[static_cast<std::size_t>(b)] = t.action;
    targets(b) = t.reward;
  }
  ForwardCache cache = net_.forward(x);
  Tensors grads = net_.zeros_like();
  last_loss_ = net_.backward(cache, taken, targets, grads);
  adam_.step(net_.params(), grads);
  ++epoch_;
}

void DqnRatePolicy::save(const std::string& path) {
  CheckpointMeta meta;
  meta.epoch = epoch_;
  meta.epsilon = epsilon();
  meta.converged = converged_;
  save_checkpoint(path, net_, adam_, meta);
}

void DqnRatePolicy::load(const std::string& path) {
  const CheckpointMeta meta = load_checkpoint(path, net_, adam_);
  epoch_ = meta.epoch;
  converged_ = meta.converged;
}

}  // namespace dsfec
