#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "dsfec/harness/campaign.hpp"
#include "dsfec/harness/config.hpp"
#include "dsfec/harness/ipc.hpp"

namespace {

struct CommonArgs {
  std::string scenario;
  std::string policy;
  std::string out_dir = "results";
  std::string checkpoint;
  std::string ipc_socket;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int rounds = 0;
  std::vector<std::string> overrides;
  bool no_traces = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool scenario_required) {
  auto* sc = cmd->add_option("--scenario", args.scenario,
                             "scenario config file");
  if (scenario_required) sc->required();
  cmd->add_option("--policy", args.policy,
                  "override policy.kind (fixed|feedback|rl)");
  cmd->add_option("--seed", args.seed, "override run.master_seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--rounds", args.rounds, "override scenario.rounds");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--checkpoint", args.checkpoint, "agent checkpoint file");
  cmd->add_option("--ipc", args.ipc_socket,
                  "drive decisions over a Unix socket instead of in-process");
  cmd->add_option("--set", args.overrides,
                  "extra config overrides as section.key=value");
  cmd->add_flag("--no-traces", args.no_traces, "skip per-round trace CSVs");
}

dsfec::ScenarioConfig build_config(const CommonArgs& args) {
  dsfec::ScenarioConfig cfg;
  if (!args.scenario.empty()) cfg = dsfec::load_config(args.scenario);
  if (!args.policy.empty()) {
    dsfec::apply_override(cfg, "policy.kind", args.policy);
  }
  if (args.seed_set) {
    dsfec::apply_override(cfg, "run.master_seed", std::to_string(args.seed));
  }
  if (args.rounds > 0) {
    dsfec::apply_override(cfg, "scenario.rounds", std::to_string(args.rounds));
  }
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects section.key=value, got " + kv);
    }
    dsfec::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

dsfec::CampaignOptions build_options(const CommonArgs& args) {
  dsfec::CampaignOptions opt;
  opt.out_dir = args.out_dir;
  opt.checkpoint = args.checkpoint;
  opt.ipc_socket = args.ipc_socket;
  opt.write_traces = !args.no_traces;
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-tolerant file transfer simulator with adaptive coding"};
  app.require_subcommand(1);

  CommonArgs eval_args, train_args, dump_args, serve_args;
  std::string report_in, report_out = "tables";
  int serve_rounds = 1;
  int serve_timeout_ms = 60000;

  CLI::App* eval = app.add_subcommand("eval", "run an evaluation campaign");
  add_common(eval, eval_args, true);

  CLI::App* train = app.add_subcommand("train", "train the rl policy");
  add_common(train, train_args, true);

  CLI::App* dump = app.add_subcommand("dump-config",
                                      "print the full effective config");
  add_common(dump, dump_args, false);

  CLI::App* report = app.add_subcommand("report",
                                        "merge round CSVs into summary tables");
  report->add_option("--in", report_in, "directory holding rounds.csv files")
      ->required();
  report->add_option("--out", report_out, "directory for the summary tables");

  CLI::App* serve = app.add_subcommand(
      "serve-agent", "host the configured policy behind a Unix socket");
  add_common(serve, serve_args, true);
  serve->add_option("--socket", serve_args.ipc_socket, "socket path to bind")
      ->required();
  serve->add_option("--serve-rounds", serve_rounds,
                    "number of round connections to serve");
  serve->add_option("--timeout-ms", serve_timeout_ms,
                    "per-frame read timeout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) {
      const auto cfg = build_config(eval_args);
      const auto result = dsfec::run_eval(cfg, build_options(eval_args));
      std::printf("eval %s policy=%s rounds=%zu -> %s\n", cfg.name.c_str(),
                  cfg.policy.c_str(), result.rounds.size(),
                  eval_args.out_dir.c_str());
    } else if (train->parsed()) {
      const auto cfg = build_config(train_args);
      const auto result = dsfec::run_training(cfg, build_options(train_args));
      std::printf(
          "train %s rounds=%zu epochs=%lld epsilon=%.4f converged=%s -> %s\n",
          cfg.name.c_str(), result.rounds.size(),
          static_cast<long long>(result.epochs), result.final_epsilon,
          result.converged ? "yes" : "no", result.checkpoint_path.c_str());
    } else if (dump->parsed()) {
      std::fputs(dsfec::dump_config(build_config(dump_args)).c_str(), stdout);
    } else if (report->parsed()) {
      dsfec::write_report(report_in, report_out);
      std::printf("report -> %s\n", report_out.c_str());
    } else if (serve->parsed()) {
      auto cfg = build_config(serve_args);
      dsfec::CampaignOptions opt = build_options(serve_args);
      opt.ipc_socket.clear();  // the server itself runs in-process
      const bool training = false;
      auto policy = dsfec::make_policy(cfg, opt, training);
      dsfec::AgentServer server(serve_args.ipc_socket, *policy, serve_rounds,
                                serve_timeout_ms);
      std::printf("serving %s policy on %s for %d round(s)\n",
                  cfg.policy.c_str(), serve_args.ipc_socket.c_str(),
                  serve_rounds);
      std::fflush(stdout);
      server.run();
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
