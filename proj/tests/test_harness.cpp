#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dsfec/harness/campaign.hpp"
#include "dsfec/harness/config.hpp"
#include "dsfec/harness/ipc.hpp"
#include "dsfec/harness/simulation.hpp"
#include "dsfec/rl/agent.hpp"

using namespace dsfec;
namespace fs = std::filesystem;

namespace {

// A deliberately small transfer so end-to-end rounds stay fast.
ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.name = "harness_test";
  cfg.rtt_ms = 2000;
  cfg.file_bytes = 2'000'000;
  cfg.rounds = 3;
  cfg.loss_kind = "markov";
  cfg.policy = "feedback";
  cfg.master_seed = 1234;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("dsfec_harness_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("config parser round-trips through dump") {
  ScenarioConfig cfg = small_config();
  cfg.pe_values = {0.0, 0.1, 0.2};
  cfg.down_overhead_ms = 0.35;
  cfg.actions = {0.5, 0.75};
  std::string text = dump_config(cfg);
  ScenarioConfig back = parse_config_text(text);
  CHECK(dump_config(back) == text);
  CHECK(back.name == "harness_test");
  CHECK(back.pe_values == cfg.pe_values);
  CHECK(back.actions == cfg.actions);
  CHECK(back.down_overhead_ms == cfg.down_overhead_ms);
  CHECK(back.file_bytes == cfg.file_bytes);
}

TEST_CASE("config parser rejects malformed input") {
  CHECK_THROWS(parse_config_text("[scenario]\nbogus_key = 1\n"));
  CHECK_THROWS(parse_config_text("[nosuchsection]\nname = x\n"));
  CHECK_THROWS(parse_config_text("[scenario]\nrtt_ms = fast\n"));
  CHECK_THROWS(parse_config_text("[scenario]\nrtt_ms\n"));
  CHECK_THROWS(parse_config_text("name = orphan\n"));
  CHECK_THROWS(parse_config_text("[loss]\nkind = gaussian\n"));
  CHECK_THROWS(parse_config_text("[policy]\nkind = astrology\n"));
  // Errors carry the line number of the offence.
  try {
    parse_config_text("[scenario]\nname = ok\nrtt_ms = fast\n");
    FAIL("expected a parse error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("config parser accepts comments and blank lines") {
  ScenarioConfig cfg = parse_config_text(
      "# top comment\n"
      "[scenario]\n"
      "\n"
      "name = demo   # trailing comment\n"
      "rtt_ms = 1000\n");
  CHECK(cfg.name == "demo");
  CHECK(cfg.rtt_ms == 1000.0);
}

TEST_CASE("derived timing fields fall back to round-trip-time rules") {
  ScenarioConfig cfg;
  cfg.rtt_ms = 2000;
  cfg.agg_timer_ms = 50;
  CHECK(cfg.effective_owd_ms() == 1000);
  CHECK(cfg.effective_cp_timer_ms() == 3100);
  cfg.interval_rtts = 5.0;
  CHECK(cfg.effective_interval_ms() == doctest::Approx(10000.0));
  cfg.owd_ms = 123;
  cfg.cp_timer_ms = 456;
  cfg.interval_ms = 789.0;
  CHECK(cfg.effective_owd_ms() == 123);
  CHECK(cfg.effective_cp_timer_ms() == 456);
  CHECK(cfg.effective_interval_ms() == doctest::Approx(789.0));
}

TEST_CASE("dotted-key overrides reuse the parser checks") {
  ScenarioConfig cfg = small_config();
  apply_override(cfg, "loss.fixed_pe", "0.31");
  CHECK(cfg.fixed_pe == 0.31);
  apply_override(cfg, "rl.hidden", "64");
  CHECK(cfg.hidden == 64);
  apply_override(cfg, "loss.values", "0.1, 0.2");
  CHECK(cfg.pe_values == std::vector<double>{0.1, 0.2});
  CHECK_THROWS(apply_override(cfg, "loss", "0.3"));
  CHECK_THROWS(apply_override(cfg, "loss.nope", "0.3"));
  CHECK_THROWS(apply_override(cfg, "rl.hidden", "many"));
}

TEST_CASE("a round reproduces exactly from its seed") {
  ScenarioConfig cfg = small_config();
  auto run_once = [&cfg]() {
    FeedbackRatePolicy policy;
    TransferSimulation sim(cfg, round_seed(cfg.master_seed, 0), policy, 0);
    return sim.run();
  };
  RoundResult a = run_once();
  RoundResult b = run_once();
  CHECK(a.goodput_mbps == b.goodput_mbps);
  CHECK(a.delay_s == b.delay_s);
  CHECK(a.decoding_failures == b.decoding_failures);
  CHECK(a.retx_rounds == b.retx_rounds);

  // And a different round seed gives a different outcome.
  FeedbackRatePolicy policy;
  TransferSimulation sim(cfg, round_seed(cfg.master_seed, 1), policy, 1);
  RoundResult c = sim.run();
  CHECK(c.delay_s != a.delay_s);
}

TEST_CASE("goodput, delay and failure counts are mutually consistent") {
  ScenarioConfig cfg = small_config();
  FeedbackRatePolicy policy;
  TransferSimulation sim(cfg, round_seed(cfg.master_seed, 0), policy, 0);
  RoundResult r = sim.run();

  CHECK(r.delay_s > 0.0);
  CHECK(r.goodput_mbps ==
        doctest::Approx(static_cast<double>(cfg.file_bytes) * 8.0 / 1e6 /
                        r.delay_s)
            .epsilon(1e-12));

  const RoundTraces& t = sim.traces();
  CHECK(!t.matrices.empty());
  std::int64_t failed = 0;
  std::int64_t info_total = 0;
  for (const auto& m : t.matrices) {
    CHECK(m.total >= m.info);
    CHECK(m.received <= m.total);
    if (m.status == CodecStatus::kFailed) ++failed;
    if (m.status == CodecStatus::kSuccess) CHECK(m.received >= m.info);
    info_total += m.info;
  }
  CHECK(failed == r.decoding_failures);
  // Every info symbol carries one segment; the file's worth of segments all
  // crossed at least once.
  CHECK(info_total * cfg.segment_bytes >= cfg.file_bytes);

  // The decision trace starts with the initial decision at t=0.
  REQUIRE(!t.decisions.empty());
  CHECK(t.decisions.front().time_ms == 0);
  // The loss trace starts at t=0 too.
  REQUIRE(!t.loss.empty());
  CHECK(t.loss.front().time_ms == 0);
}

TEST_CASE("loss evolution is policy-independent round by round") {
  ScenarioConfig cfg = small_config();

  FixedRatePolicy fixed(0.77);
  TransferSimulation sim_a(cfg, round_seed(cfg.master_seed, 2), fixed, 2);
  sim_a.run();

  FeedbackRatePolicy fb;
  TransferSimulation sim_b(cfg, round_seed(cfg.master_seed, 2), fb, 2);
  sim_b.run();

  // Rounds end at policy-dependent times, so one trace may extend past the
  // other; the shared prefix must match exactly.
  const auto& la = sim_a.traces().loss;
  const auto& lb = sim_b.traces().loss;
  const std::size_t n = std::min(la.size(), lb.size());
  REQUIRE(n > 0);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(la[i].time_ms == lb[i].time_ms);
    CHECK(la[i].pe == lb[i].pe);
  }
}

TEST_CASE("trace loss estimates mirror each policy's internals") {
  ScenarioConfig cfg = small_config();

  SUBCASE("fixed policy logs a zero estimate") {
    cfg.policy = "fixed";
    FixedRatePolicy fixed(0.77);
    TransferSimulation sim(cfg, round_seed(cfg.master_seed, 0), fixed, 0);
    sim.run();
    for (const auto& d : sim.traces().decisions) {
      CHECK(d.pe_estimate == 0.0);
      CHECK(d.rc == 0.77);
    }
  }

  SUBCASE("feedback policy logs its blended estimate") {
    FeedbackRatePolicy fb;
    TransferSimulation sim(cfg, round_seed(cfg.master_seed, 0), fb, 0);
    sim.run();
    const auto& ds = sim.traces().decisions;
    REQUIRE(ds.size() > 1);
    for (const auto& d : ds) {
      CHECK(d.rc == doctest::Approx(rate_from_pe(d.pe_estimate)).epsilon(1e-12));
    }
  }
}

TEST_CASE("eval campaign writes consistent artifacts") {
  ScenarioConfig cfg = small_config();
  TempDir dir("eval");
  CampaignOptions opt;
  opt.out_dir = dir.str();
  CampaignResult res = run_eval(cfg, opt);
  REQUIRE(res.rounds.size() == 3);

  std::vector<RoundResult> rows = read_rounds_csv(dir.str() + "/rounds.csv");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].round == static_cast<int>(i));
    CHECK(rows[i].policy == "feedback");
    CHECK(rows[i].scenario == "harness_test");
    CHECK(rows[i].seed == round_seed(cfg.master_seed, i));
    CHECK(rows[i].goodput_mbps ==
          doctest::Approx(res.rounds[i].goodput_mbps).epsilon(1e-6));
    CHECK(rows[i].decoding_failures == res.rounds[i].decoding_failures);
  }
  CHECK(fs::exists(dir.path / "loss_trace.csv"));
  CHECK(fs::exists(dir.path / "decisions.csv"));
  CHECK(fs::exists(dir.path / "matrices.csv"));
  CHECK(fs::exists(dir.path / "summary.txt"));

  // Means in summary.txt match the returned rounds.
  std::string summary = slurp(dir.str() + "/summary.txt");
  std::vector<double> delays;
  for (const auto& r : res.rounds) delays.push_back(r.delay_s);
  char expect[64];
  std::snprintf(expect, sizeof(expect), "delay_s,%.6f", summarize(delays).mean);
  CHECK(summary.find(expect) != std::string::npos);
}

TEST_CASE("eval campaigns are byte-identical across reruns") {
  ScenarioConfig cfg = small_config();
  TempDir dir_a("rerun_a");
  TempDir dir_b("rerun_b");
  CampaignOptions opt_a;
  opt_a.out_dir = dir_a.str();
  CampaignOptions opt_b;
  opt_b.out_dir = dir_b.str();
  run_eval(cfg, opt_a);
  run_eval(cfg, opt_b);
  for (const char* f :
       {"rounds.csv", "loss_trace.csv", "decisions.csv", "matrices.csv",
        "summary.txt"}) {
    CHECK(slurp(dir_a.str() + "/" + f) == slurp(dir_b.str() + "/" + f));
  }
}

TEST_CASE("training campaign produces a loadable checkpoint") {
  ScenarioConfig cfg = small_config();
  cfg.policy = "rl";
  cfg.rounds = 2;
  cfg.hidden = 16;   // keep the net tiny for speed
  cfg.minibatch = 2;  // a 2 MB transfer yields only a handful of feedbacks
  TempDir dir("train");
  CampaignOptions opt;
  opt.out_dir = dir.str();
  CampaignResult res = run_training(cfg, opt);
  CHECK(res.rounds.size() == 2);
  CHECK(res.epochs > 0);
  CHECK(res.checkpoint_path == dir.str() + "/checkpoint.bin");
  CHECK(fs::exists(res.checkpoint_path));
  CHECK(fs::exists(dir.path / "training_log.csv"));
  CHECK(fs::exists(dir.path / "training_summary.txt"));

  // The checkpoint evaluates deterministically.
  cfg.rounds = 1;
  TempDir dir_e1("train_eval1");
  TempDir dir_e2("train_eval2");
  CampaignOptions e1;
  e1.out_dir = dir_e1.str();
  e1.checkpoint = res.checkpoint_path;
  CampaignOptions e2;
  e2.out_dir = dir_e2.str();
  e2.checkpoint = res.checkpoint_path;
  run_eval(cfg, e1);
  run_eval(cfg, e2);
  CHECK(slurp(dir_e1.str() + "/rounds.csv") ==
        slurp(dir_e2.str() + "/rounds.csv"));
  CHECK(slurp(dir_e1.str() + "/decisions.csv") ==
        slurp(dir_e2.str() + "/decisions.csv"));
}

TEST_CASE("rl eval without a checkpoint is refused") {
  ScenarioConfig cfg = small_config();
  cfg.policy = "rl";
  TempDir dir("nockpt");
  CampaignOptions opt;
  opt.out_dir = dir.str();
  CHECK_THROWS(run_eval(cfg, opt));
}

TEST_CASE("report merges rounds across policies and scenarios") {
  ScenarioConfig cfg = small_config();
  TempDir root("report");
  CampaignOptions opt;
  opt.out_dir = root.str() + "/fb";
  opt.write_traces = false;
  run_eval(cfg, opt);
  cfg.policy = "fixed";
  opt.out_dir = root.str() + "/fixed";
  run_eval(cfg, opt);

  write_report(root.str(), root.str() + "/report");
  std::string csv = slurp(root.str() + "/report/summary.csv");
  CHECK(csv.find("harness_test,feedback,3,") != std::string::npos);
  CHECK(csv.find("harness_test,fixed,3,") != std::string::npos);
  std::string txt = slurp(root.str() + "/report/summary_tables.txt");
  CHECK(txt.find("scenario: harness_test") != std::string::npos);
}

TEST_CASE("read_rounds_csv rejects foreign files") {
  TempDir dir("badcsv");
  std::ofstream(dir.str() + "/rounds.csv") << "round,apples\n1,2\n";
  CHECK_THROWS(read_rounds_csv(dir.str() + "/rounds.csv"));
  CHECK_THROWS(read_rounds_csv(dir.str() + "/missing.csv"));
}

TEST_CASE("ipc bridge reproduces the in-process decision trace") {
  ScenarioConfig cfg = small_config();
  cfg.rounds = 2;

  // In-process reference run.
  TempDir dir_ref("ipc_ref");
  CampaignOptions ref_opt;
  ref_opt.out_dir = dir_ref.str();
  run_eval(cfg, ref_opt);

  // Same policy served over the wire.
  const std::string socket_path = fs::temp_directory_path().string() +
                                  "/dsfec_harness_ipc.sock";
  fs::remove(socket_path);
  FeedbackRatePolicy served;
  AgentServer server(socket_path, served, cfg.rounds);
  std::thread server_thread([&server]() { server.run(); });

  TempDir dir_ipc("ipc_run");
  CampaignOptions ipc_opt;
  ipc_opt.out_dir = dir_ipc.str();
  ipc_opt.ipc_socket = socket_path;
  run_eval(cfg, ipc_opt);
  server_thread.join();

  CHECK(slurp(dir_ref.str() + "/decisions.csv") ==
        slurp(dir_ipc.str() + "/decisions.csv"));
  CHECK(slurp(dir_ref.str() + "/rounds.csv") ==
        slurp(dir_ipc.str() + "/rounds.csv"));
}

TEST_CASE("ipc client fails fast when the server is absent") {
  const std::string socket_path = fs::temp_directory_path().string() +
                                  "/dsfec_harness_dead.sock";
  fs::remove(socket_path);
  IpcRatePolicy policy(socket_path, 200, "feedback");
  CHECK_THROWS(policy.begin_round(0));
}
