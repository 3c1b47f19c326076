#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dsfec/harness/config.hpp"
#include "dsfec/harness/simulation.hpp"
#include "dsfec/rate/policy.hpp"

namespace dsfec {

struct CampaignOptions {
  std::string out_dir;
  std::string checkpoint;   // rl eval: load; training: write (default in out_dir)
  std::string ipc_socket;   // non-empty: drive decisions over the wire
  int ipc_timeout_ms = 10000;
  bool write_traces = true;
};

struct CampaignResult {
  std::vector<RoundResult> rounds;
  bool converged = false;      // training campaigns only
  std::int64_t epochs = 0;
  double final_epsilon = 0.0;
  std::string checkpoint_path;
};

// The policy a campaign drives: in-process fixed/feedback/rl, or the IPC
// bridge when a socket is configured.
std::unique_ptr<RatePolicy> make_policy(const ScenarioConfig& cfg,
                                        const CampaignOptions& opt,
                                        bool training);

// Per-round seeds derive from the master seed and round index, so every
// policy evaluated under one master seed sees the same loss evolution.
std::uint64_t round_seed(std::uint64_t master_seed, std::uint64_t round);

CampaignResult run_eval(const ScenarioConfig& cfg, const CampaignOptions& opt);
CampaignResult run_training(const ScenarioConfig& cfg,
                            const CampaignOptions& opt);

struct SummaryStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;
};

SummaryStats summarize(const std::vector<double>& xs);

std::string rounds_csv_header();
std::string rounds_csv_row(const RoundResult& r);
std::vector<RoundResult> read_rounds_csv(const std::string& path);

// Merges every rounds.csv found under in_dir into per-scenario tables of
// per-policy metric means, written to out_dir.
void write_report(const std::string& in_dir, const std::string& out_dir);

}  // namespace dsfec
