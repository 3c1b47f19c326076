#include "dsfec/harness/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dsfec/harness/ipc.hpp"
#include "dsfec/rl/agent.hpp"

namespace dsfec {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::ofstream os(dir + "/" + name, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + dir + "/" + name);
  return os;
}

void write_traces(std::ofstream& loss, std::ofstream& decisions,
                  std::ofstream& matrices, const std::string& policy_name,
                  int round, const RoundTraces& t) {
  for (const auto& row : t.loss) {
    loss << round << "," << row.time_ms << "," << fmt(row.pe) << "\n";
  }
  for (const auto& row : t.decisions) {
    decisions << round << "," << row.time_ms << "," << row.action_id << ","
              << policy_name << "," << fmt(row.rc) << ","
              << fmt(row.pe_estimate) << "\n";
  }
  for (const auto& row : t.matrices) {
    matrices << round << "," << row.matrix_id << "," << row.action_id << ","
             << fmt(row.rc) << "," << row.info << "," << row.total << ","
             << row.tx_time_ms << "," << to_string(row.status) << ","
             << row.received << "\n";
  }
}

void write_summary(const std::string& out_dir, const ScenarioConfig& cfg,
                   const std::vector<RoundResult>& rounds) {
  std::vector<double> goodput, delay, failures, retx;
  for (const auto& r : rounds) {
    goodput.push_back(r.goodput_mbps);
    delay.push_back(r.delay_s);
    failures.push_back(static_cast<double>(r.decoding_failures));
    retx.push_back(static_cast<double>(r.retx_rounds));
  }
  std::ofstream os = open_out(out_dir, "summary.txt");
  os << "scenario: " << cfg.name << "\n";
  os << "policy: " << cfg.policy << "\n";
  os << "rounds: " << rounds.size() << "\n\n";
  os << "metric,mean,min,max,stddev\n";
  auto line = [&os](const char* name, const SummaryStats& s) {
    os << name << "," << fmt(s.mean) << "," << fmt(s.min) << "," << fmt(s.max)
       << "," << fmt(s.stddev) << "\n";
  };
  line("goodput_mbps", summarize(goodput));
  line("delay_s", summarize(delay));
  line("decoding_failures", summarize(failures));
  line("retx_rounds", summarize(retx));
}

}  // namespace

std::uint64_t round_seed(std::uint64_t master_seed, std::uint64_t round) {
  return derive_seed(master_seed, "round", round);
}

std::unique_ptr<RatePolicy> make_policy(const ScenarioConfig& cfg,
                                        const CampaignOptions& opt,
                                        bool training) {
  if (!opt.ipc_socket.empty()) {
    if (training) {
      throw std::invalid_argument("training over the IPC bridge is not supported");
    }
    return std::make_unique<IpcRatePolicy>(opt.ipc_socket, opt.ipc_timeout_ms,
                                           cfg.policy);
  }
  if (cfg.policy == "fixed") {
    return std::make_unique<FixedRatePolicy>(cfg.fixed_rc);
  }
  if (cfg.policy == "feedback") {
    return std::make_unique<FeedbackRatePolicy>();
  }
  auto agent =
      std::make_unique<DqnRatePolicy>(cfg.agent_config(training), cfg.master_seed);
  if (!training) {
    if (opt.checkpoint.empty()) {
      throw std::invalid_argument(
          "rl evaluation needs --checkpoint (or --ipc)");
    }
    agent->load(opt.checkpoint);
  }
  return agent;
}

CampaignResult run_eval(const ScenarioConfig& cfg, const CampaignOptions& opt) {
  fs::create_directories(opt.out_dir);
  std::unique_ptr<RatePolicy> policy = make_policy(cfg, opt, false);

  std::ofstream rounds_csv = open_out(opt.out_dir, "rounds.csv");
  rounds_csv << rounds_csv_header();
  std::ofstream loss_csv, decisions_csv, matrices_csv;
  if (opt.write_traces) {
    loss_csv = open_out(opt.out_dir, "loss_trace.csv");
    loss_csv << "round,time_ms,pe\n";
    decisions_csv = open_out(opt.out_dir, "decisions.csv");
    decisions_csv << "round,time_ms,action_id,policy,rc,pe_est\n";
    matrices_csv = open_out(opt.out_dir, "matrices.csv");
    matrices_csv << "round,matrix_id,action_id,rc,info,total,tx_time_ms,status,received\n";
  }

  CampaignResult result;
  for (int i = 0; i < cfg.rounds; ++i) {
    TransferSimulation sim(cfg, round_seed(cfg.master_seed, i), *policy,
                           static_cast<std::uint64_t>(i));
    RoundResult r = sim.run();
    rounds_csv << rounds_csv_row(r);
    if (opt.write_traces) {
      write_traces(loss_csv, decisions_csv, matrices_csv, policy->name(), i,
                   sim.traces());
    }
    result.rounds.push_back(std::move(r));
  }
  write_summary(opt.out_dir, cfg, result.rounds);
  return result;
}

CampaignResult run_training(const ScenarioConfig& cfg,
                            const CampaignOptions& opt) {
  if (cfg.policy != "rl") {
    throw std::invalid_argument("training requires policy.kind = rl");
  }
  if (!opt.ipc_socket.empty()) {
    throw std::invalid_argument("training over the IPC bridge is not supported");
  }
  fs::create_directories(opt.out_dir);
  auto agent =
      std::make_unique<DqnRatePolicy>(cfg.agent_config(true), cfg.master_seed);

  std::ofstream rounds_csv = open_out(opt.out_dir, "rounds.csv");
  rounds_csv << rounds_csv_header();

  CampaignResult result;
  for (int i = 0; i < cfg.rounds && !agent->converged(); ++i) {
    TransferSimulation sim(cfg, round_seed(cfg.master_seed, i), *agent,
                           static_cast<std::uint64_t>(i));
    RoundResult r = sim.run();
    rounds_csv << rounds_csv_row(r);
    result.rounds.push_back(std::move(r));
  }

  std::ofstream log = open_out(opt.out_dir, "training_log.csv");
  log << "episode,mean_reward\n";
  const auto& means = agent->episode_mean_rewards();
  for (std::size_t e = 0; e < means.size(); ++e) {
    log << e << "," << fmt(means[e]) << "\n";
  }

  result.converged = agent->converged();
  result.epochs = agent->epoch();
  result.final_epsilon = agent->epsilon();
  result.checkpoint_path =
      opt.checkpoint.empty() ? opt.out_dir + "/checkpoint.bin" : opt.checkpoint;
  agent->save(result.checkpoint_path);

  std::ofstream ts = open_out(opt.out_dir, "training_summary.txt");
  ts << "scenario: " << cfg.name << "\n";
  ts << "rounds_run: " << result.rounds.size() << "\n";
  ts << "episodes: " << means.size() << "\n";
  ts << "epochs: " << result.epochs << "\n";
  ts << "final_epsilon: " << fmt(result.final_epsilon) << "\n";
  ts << "converged: " << (result.converged ? "yes" : "no") << "\n";
  ts << "checkpoint: " << fs::path(result.checkpoint_path).filename().string()
     << "\n";
  return result;
}

SummaryStats summarize(const std::vector<double>& xs) {
  SummaryStats s;
  if (xs.empty()) return s;
  s.min = xs[0];
  s.max = xs[0];
  double sum = 0.0;
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

std::string rounds_csv_header() {
  return "round,policy,scenario,seed,goodput_mbps,delay_s,decoding_failures,retx_rounds\n";
}

std::string rounds_csv_row(const RoundResult& r) {
  std::ostringstream os;
  os << r.round << "," << r.policy << "," << r.scenario << "," << r.seed << ","
     << fmt(r.goodput_mbps) << "," << fmt(r.delay_s) << ","
     << r.decoding_failures << "," << r.retx_rounds << "\n";
  return os.str();
}

std::vector<RoundResult> read_rounds_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string expected = rounds_csv_header();
  expected.pop_back();
  std::string line;
  if (!std::getline(is, line) || line != expected) {
    throw std::runtime_error("bad rounds csv header in " + path);
  }
  std::vector<RoundResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    RoundResult r;
    auto next = [&]() {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error("short rounds csv row in " + path);
      }
      return field;
    };
    r.round = std::stoi(next());
    r.policy = next();
    r.scenario = next();
    r.seed = std::stoull(next());
    r.goodput_mbps = std::stod(next());
    r.delay_s = std::stod(next());
    r.decoding_failures = std::stoll(next());
    r.retx_rounds = std::stoll(next());
    out.push_back(std::move(r));
  }
  return out;
}

void write_report(const std::string& in_dir, const std::string& out_dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(in_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "rounds.csv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("no rounds.csv files under " + in_dir);
  }

  struct Acc {
    std::vector<double> goodput, delay, failures, retx;
  };
  std::map<std::string, std::map<std::string, Acc>> by_scenario;
  for (const auto& f : files) {
    for (const auto& r : read_rounds_csv(f)) {
      Acc& acc = by_scenario[r.scenario][r.policy];
      acc.goodput.push_back(r.goodput_mbps);
      acc.delay.push_back(r.delay_s);
      acc.failures.push_back(static_cast<double>(r.decoding_failures));
      acc.retx.push_back(static_cast<double>(r.retx_rounds));
    }
  }

  fs::create_directories(out_dir);
  std::ofstream txt = open_out(out_dir, "summary_tables.txt");
  std::ofstream csv = open_out(out_dir, "summary.csv");
  csv << "scenario,policy,rounds,goodput_mbps,delay_s,decoding_failures,retx_rounds\n";
  for (const auto& [scenario, policies] : by_scenario) {
    txt << "scenario: " << scenario << "\n";
    txt << "policy,rounds,goodput_mbps,delay_s,decoding_failures,retx_rounds\n";
    for (const auto& [policy, acc] : policies) {
      const std::size_t n = acc.goodput.size();
      const std::string row =
          policy + "," + std::to_string(n) + "," +
          fmt(summarize(acc.goodput).mean) + "," +
          fmt(summarize(acc.delay).mean) + "," +
          fmt(summarize(acc.failures).mean) + "," +
          fmt(summarize(acc.retx).mean);
      txt << row << "\n";
      csv << scenario << "," << row << "\n";
    }
    txt << "\n";
  }
}

}  // namespace dsfec
