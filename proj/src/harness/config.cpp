#include "dsfec/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dsfec {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

std::int64_t to_i64(const std::string& s) {
  std::size_t pos = 0;
  const std::int64_t v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
  return v;
}

int to_int(const std::string& s) {
  const std::int64_t v = to_i64(s);
  if (v < INT_MIN || v > INT_MAX) {
    throw std::invalid_argument("integer out of range: " + s);
  }
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& s) {
  std::size_t pos = 0;
  const std::uint64_t v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad seed: " + s);
  return v;
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty list element");
    out.push_back(to_double(item));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(v[i]);
  }
  return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario.name", [](ScenarioConfig& c, const std::string& v) { c.name = v; }},
      {"scenario.rtt_ms", [](ScenarioConfig& c, const std::string& v) { c.rtt_ms = to_double(v); }},
      {"scenario.file_bytes", [](ScenarioConfig& c, const std::string& v) { c.file_bytes = to_i64(v); }},
      {"scenario.rounds", [](ScenarioConfig& c, const std::string& v) { c.rounds = to_int(v); }},

      {"link.down_bps", [](ScenarioConfig& c, const std::string& v) { c.down_bps = to_i64(v); }},
      {"link.up_bps", [](ScenarioConfig& c, const std::string& v) { c.up_bps = to_i64(v); }},
      {"link.owd_ms", [](ScenarioConfig& c, const std::string& v) { c.owd_ms = to_i64(v); }},
      {"link.down_overhead_ms", [](ScenarioConfig& c, const std::string& v) { c.down_overhead_ms = to_double(v); }},
      {"link.up_overhead_ms", [](ScenarioConfig& c, const std::string& v) { c.up_overhead_ms = to_double(v); }},

      {"loss.kind", [](ScenarioConfig& c, const std::string& v) { c.loss_kind = v; }},
      {"loss.fixed_pe", [](ScenarioConfig& c, const std::string& v) { c.fixed_pe = to_double(v); }},
      {"loss.values", [](ScenarioConfig& c, const std::string& v) { c.pe_values = to_list(v); }},
      {"loss.interval_rtts", [](ScenarioConfig& c, const std::string& v) { c.interval_rtts = to_double(v); }},
      {"loss.interval_ms", [](ScenarioConfig& c, const std::string& v) { c.interval_ms = to_double(v); }},

      {"ltp.block_bytes", [](ScenarioConfig& c, const std::string& v) { c.block_bytes = to_i64(v); }},
      {"ltp.segment_bytes", [](ScenarioConfig& c, const std::string& v) { c.segment_bytes = to_i64(v); }},
      {"ltp.max_sessions", [](ScenarioConfig& c, const std::string& v) { c.max_sessions = to_int(v); }},
      {"ltp.cp_timer_ms", [](ScenarioConfig& c, const std::string& v) { c.cp_timer_ms = to_i64(v); }},
      {"ltp.max_retx_rounds", [](ScenarioConfig& c, const std::string& v) { c.max_retx_rounds = to_int(v); }},

      {"fec.k_max", [](ScenarioConfig& c, const std::string& v) { c.k_max = to_i64(v); }},
      {"fec.n_max", [](ScenarioConfig& c, const std::string& v) { c.n_max = to_i64(v); }},
      {"fec.agg_timer_ms", [](ScenarioConfig& c, const std::string& v) { c.agg_timer_ms = to_i64(v); }},
      {"fec.gap_timer_ms", [](ScenarioConfig& c, const std::string& v) { c.gap_timer_ms = to_i64(v); }},
      {"fec.decode_overhead", [](ScenarioConfig& c, const std::string& v) { c.decode_overhead = to_i64(v); }},
      {"fec.info_overhead_bytes", [](ScenarioConfig& c, const std::string& v) { c.info_overhead_bytes = to_i64(v); }},
      {"fec.redundancy_bytes", [](ScenarioConfig& c, const std::string& v) { c.redundancy_bytes = to_i64(v); }},

      {"policy.kind", [](ScenarioConfig& c, const std::string& v) { c.policy = v; }},
      {"policy.fixed_rc", [](ScenarioConfig& c, const std::string& v) { c.fixed_rc = to_double(v); }},

      {"rl.actions", [](ScenarioConfig& c, const std::string& v) { c.actions = to_list(v); }},
      {"rl.hidden", [](ScenarioConfig& c, const std::string& v) { c.hidden = to_int(v); }},
      {"rl.replay_capacity", [](ScenarioConfig& c, const std::string& v) { c.replay_capacity = to_i64(v); }},
      {"rl.minibatch", [](ScenarioConfig& c, const std::string& v) { c.minibatch = to_int(v); }},
      {"rl.learning_rate", [](ScenarioConfig& c, const std::string& v) { c.learning_rate = to_double(v); }},
      {"rl.epsilon_min", [](ScenarioConfig& c, const std::string& v) { c.epsilon_min = to_double(v); }},
      {"rl.epsilon_decay", [](ScenarioConfig& c, const std::string& v) { c.epsilon_decay = to_double(v); }},
      {"rl.stability_theta", [](ScenarioConfig& c, const std::string& v) { c.stability_theta = to_double(v); }},
      {"rl.tau_cap_rtts", [](ScenarioConfig& c, const std::string& v) { c.tau_cap_rtts = to_double(v); }},
      {"rl.episode_actions", [](ScenarioConfig& c, const std::string& v) { c.episode_actions = to_int(v); }},
      {"rl.ma_window", [](ScenarioConfig& c, const std::string& v) { c.ma_window = to_int(v); }},
      {"rl.convergence_delta", [](ScenarioConfig& c, const std::string& v) { c.convergence_delta = to_double(v); }},
      {"rl.convergence_streak", [](ScenarioConfig& c, const std::string& v) { c.convergence_streak = to_int(v); }},

      {"run.master_seed", [](ScenarioConfig& c, const std::string& v) { c.master_seed = to_u64(v); }},
  };
  return table;
}

void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (c.rtt_ms <= 0) fail("rtt_ms must be positive");
  if (c.file_bytes <= 0) fail("file_bytes must be positive");
  if (c.rounds <= 0) fail("rounds must be positive");
  if (c.down_bps <= 0 || c.up_bps <= 0) fail("link rates must be positive");
  if (c.loss_kind != "fixed" && c.loss_kind != "uniform" &&
      c.loss_kind != "markov") {
    fail("loss.kind must be fixed, uniform or markov");
  }
  if (c.fixed_pe < 0 || c.fixed_pe >= 1) fail("fixed_pe must be in [0, 1)");
  for (double pe : c.pe_values) {
    if (pe < 0 || pe >= 1) fail("loss.values entries must be in [0, 1)");
  }
  if (c.policy != "fixed" && c.policy != "feedback" && c.policy != "rl") {
    fail("policy.kind must be fixed, feedback or rl");
  }
  if (c.fixed_rc <= 0 || c.fixed_rc > 1) fail("fixed_rc must be in (0, 1]");
  if (c.block_bytes <= 0 || c.segment_bytes <= 0) fail("ltp sizes must be positive");
  if (c.max_sessions <= 0) fail("max_sessions must be positive");
  if (c.k_max <= 0 || c.n_max < c.k_max) fail("fec: need 0 < k_max <= n_max");
  if (c.actions.empty()) fail("rl.actions must not be empty");
  for (double a : c.actions) {
    if (a <= 0 || a > 1) fail("rl.actions entries must be in (0, 1]");
  }
  if (c.minibatch <= 0 || c.replay_capacity < c.minibatch) {
    fail("rl: replay_capacity must cover at least one minibatch");
  }
}

}  // namespace

std::int64_t ScenarioConfig::effective_owd_ms() const {
  return owd_ms > 0 ? owd_ms : std::llround(rtt_ms / 2.0);
}

std::int64_t ScenarioConfig::effective_cp_timer_ms() const {
  return cp_timer_ms > 0 ? cp_timer_ms
                         : std::llround(1.5 * rtt_ms) + 2 * agg_timer_ms;
}

double ScenarioConfig::effective_interval_ms() const {
  return interval_ms > 0 ? interval_ms : interval_rtts * rtt_ms;
}

LinkConfig ScenarioConfig::link_config() const {
  LinkConfig lc;
  lc.down_bps = down_bps;
  lc.up_bps = up_bps;
  lc.owd_ms = effective_owd_ms();
  lc.down_overhead_ms = down_overhead_ms;
  lc.up_overhead_ms = up_overhead_ms;
  return lc;
}

LossConfig ScenarioConfig::loss_config() const {
  LossConfig lc;
  if (loss_kind == "fixed") {
    lc.kind = LossKind::kFixed;
    lc.fixed_pe = fixed_pe;
  } else if (loss_kind == "uniform") {
    lc.kind = LossKind::kUniform;
    lc.values = pe_values;
    lc.interval_ms = std::llround(effective_interval_ms());
  } else {
    lc.kind = LossKind::kMarkov;
    lc.values = pe_values;
    lc.mean_holding_ms = effective_interval_ms();
    lc.matrix = birth_death_matrix(pe_values.size());
  }
  return lc;
}

LtpConfig ScenarioConfig::ltp_config() const {
  LtpConfig lc;
  lc.block_bytes = block_bytes;
  lc.segment_bytes = segment_bytes;
  lc.max_sessions = max_sessions;
  lc.cp_timer_ms = effective_cp_timer_ms();
  lc.max_retx_rounds = max_retx_rounds;
  return lc;
}

FecConfig ScenarioConfig::fec_config() const {
  FecConfig fc;
  fc.k_max = k_max;
  fc.n_max = n_max;
  fc.agg_timer_ms = agg_timer_ms;
  fc.gap_timer_ms = gap_timer_ms;
  fc.decode_overhead = decode_overhead;
  fc.info_overhead_bytes = static_cast<std::size_t>(info_overhead_bytes);
  fc.redundancy_bytes = static_cast<std::size_t>(redundancy_bytes);
  return fc;
}

AgentConfig ScenarioConfig::agent_config(bool training) const {
  AgentConfig ac;
  ac.actions = actions;
  ac.hidden = hidden;
  ac.replay_capacity = static_cast<std::size_t>(replay_capacity);
  ac.minibatch = minibatch;
  ac.learning_rate = learning_rate;
  ac.epsilon_min = epsilon_min;
  ac.epsilon_decay = epsilon_decay;
  ac.stability_theta = stability_theta;
  ac.rtt_ms = rtt_ms;
  ac.tau_cap_rtts = tau_cap_rtts;
  ac.episode_actions = episode_actions;
  ac.ma_window = ma_window;
  ac.convergence_delta = convergence_delta;
  ac.convergence_streak = convergence_streak;
  ac.training = training;
  return ac;
}

ScenarioConfig parse_config_text(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string dotted = section + "." + key;
    const auto it = setters().find(dotted);
    if (it == setters().end()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + dotted + "'");
    }
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " (" + dotted + "): " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config_text(os.str());
}

void apply_override(ScenarioConfig& cfg, const std::string& dotted_key,
                    const std::string& value) {
  const auto it = setters().find(dotted_key);
  if (it == setters().end()) {
    throw std::invalid_argument("unknown config key '" + dotted_key + "'");
  }
  it->second(cfg, value);
  validate(cfg);
}

std::string dump_config(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "[scenario]\n";
  os << "name = " << c.name << "\n";
  os << "rtt_ms = " << fmt_double(c.rtt_ms) << "\n";
  os << "file_bytes = " << c.file_bytes << "\n";
  os << "rounds = " << c.rounds << "\n";
  os << "\n[link]\n";
  os << "down_bps = " << c.down_bps << "\n";
  os << "up_bps = " << c.up_bps << "\n";
  os << "owd_ms = " << c.owd_ms << "\n";
  os << "down_overhead_ms = " << fmt_double(c.down_overhead_ms) << "\n";
  os << "up_overhead_ms = " << fmt_double(c.up_overhead_ms) << "\n";
  os << "\n[loss]\n";
  os << "kind = " << c.loss_kind << "\n";
  os << "fixed_pe = " << fmt_double(c.fixed_pe) << "\n";
  os << "values = " << fmt_list(c.pe_values) << "\n";
  os << "interval_rtts = " << fmt_double(c.interval_rtts) << "\n";
  os << "interval_ms = " << fmt_double(c.interval_ms) << "\n";
  os << "\n[ltp]\n";
  os << "block_bytes = " << c.block_bytes << "\n";
  os << "segment_bytes = " << c.segment_bytes << "\n";
  os << "max_sessions = " << c.max_sessions << "\n";
  os << "cp_timer_ms = " << c.cp_timer_ms << "\n";
  os << "max_retx_rounds = " << c.max_retx_rounds << "\n";
  os << "\n[fec]\n";
  os << "k_max = " << c.k_max << "\n";
  os << "n_max = " << c.n_max << "\n";
  os << "agg_timer_ms = " << c.agg_timer_ms << "\n";
  os << "gap_timer_ms = " << c.gap_timer_ms << "\n";
  os << "decode_overhead = " << c.decode_overhead << "\n";
  os << "info_overhead_bytes = " << c.info_overhead_bytes << "\n";
  os << "redundancy_bytes = " << c.redundancy_bytes << "\n";
  os << "\n[policy]\n";
  os << "kind = " << c.policy << "\n";
  os << "fixed_rc = " << fmt_double(c.fixed_rc) << "\n";
  os << "\n[rl]\n";
  os << "actions = " << fmt_list(c.actions) << "\n";
  os << "hidden = " << c.hidden << "\n";
  os << "replay_capacity = " << c.replay_capacity << "\n";
  os << "minibatch = " << c.minibatch << "\n";
  os << "learning_rate = " << fmt_double(c.learning_rate) << "\n";
  os << "epsilon_min = " << fmt_double(c.epsilon_min) << "\n";
  os << "epsilon_decay = " << fmt_double(c.epsilon_decay) << "\n";
  os << "stability_theta = " << fmt_double(c.stability_theta) << "\n";
  os << "tau_cap_rtts = " << fmt_double(c.tau_cap_rtts) << "\n";
  os << "episode_actions = " << c.episode_actions << "\n";
  os << "ma_window = " << c.ma_window << "\n";
  os << "convergence_delta = " << fmt_double(c.convergence_delta) << "\n";
  os << "convergence_streak = " << c.convergence_streak << "\n";
  os << "\n[run]\n";
  os << "master_seed = " << c.master_seed << "\n";
  return os.str();
}

}  // namespace dsfec
