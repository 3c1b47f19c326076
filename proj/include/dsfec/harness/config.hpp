#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsfec/channel/link.hpp"
#include "dsfec/channel/loss_model.hpp"
#include "dsfec/fec/encoder.hpp"
#include "dsfec/ltp/sender.hpp"
#include "dsfec/rl/agent.hpp"

namespace dsfec {

// One scenario = one flat key/value file with [section] headers. Parsing is
// strict: unknown sections or keys and malformed values are errors. Every
// field below has the default shown by `dump-config`; a value of 0 on the
// auto-derivable timing knobs means "derive from the round-trip time".
struct ScenarioConfig {
  // [scenario]
  std::string name = "unnamed";
  double rtt_ms = 2000.0;
  std::int64_t file_bytes = 50'000'000;
  int rounds = 100;

  // [link]
  std::int64_t down_bps = 10'000'000;
  std::int64_t up_bps = 100'000;
  std::int64_t owd_ms = 0;  // 0 => rtt_ms / 2
  double down_overhead_ms = 0.0;
  double up_overhead_ms = 0.0;

  // [loss]
  std::string loss_kind = "fixed";  // fixed | uniform | markov
  double fixed_pe = 0.2;
  std::vector<double> pe_values = {0.05, 0.15, 0.20, 0.25, 0.30, 0.35};
  double interval_rtts = 5.0;  // uniform redraw period / Markov mean holding
  double interval_ms = 0.0;    // 0 => interval_rtts * rtt_ms

  // [ltp]
  std::int64_t block_bytes = 600'000;
  std::int64_t segment_bytes = 1024;
  int max_sessions = 5;
  std::int64_t cp_timer_ms = 0;  // 0 => 1.5 * rtt + 2 * agg_timer
  int max_retx_rounds = 50;

  // [fec]
  std::int64_t k_max = 512;
  std::int64_t n_max = 768;
  std::int64_t agg_timer_ms = 50;
  std::int64_t gap_timer_ms = 100;
  std::int64_t decode_overhead = 0;
  std::int64_t info_overhead_bytes = 2;
  std::int64_t redundancy_bytes = 1026;

  // [policy]
  std::string policy = "feedback";  // fixed | feedback | rl
  double fixed_rc = 0.77;

  // [rl]
  std::vector<double> actions = {0.66, 0.70, 0.74, 0.78, 0.82, 0.86};
  int hidden = 256;
  std::int64_t replay_capacity = 10000;
  int minibatch = 32;
  double learning_rate = 1e-3;
  double epsilon_min = 0.01;
  double epsilon_decay = 2e-4;
  double stability_theta = 0.02;
  double tau_cap_rtts = 50.0;
  int episode_actions = 100;
  int ma_window = 10;
  double convergence_delta = 0.05;
  int convergence_streak = 5;

  // [run]
  std::uint64_t master_seed = 42;

  // derived views
  std::int64_t effective_owd_ms() const;
  std::int64_t effective_cp_timer_ms() const;
  double effective_interval_ms() const;

  LinkConfig link_config() const;
  LossConfig loss_config() const;
  LtpConfig ltp_config() const;
  FecConfig fec_config() const;
  AgentConfig agent_config(bool training) const;
};

ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// Full round-trip text: parse(dump(cfg)) == cfg.
std::string dump_config(const ScenarioConfig& cfg);

void apply_override(ScenarioConfig& cfg, const std::string& dotted_key,
                    const std::string& value);

}  // namespace dsfec
