#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dish/harness.hpp"
#include "dish/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override) {
  dish::ExperimentConfig config = dish::ExperimentConfig::load(config_path);
  const std::string out = out_override.empty() ? config.output : out_override;
  const dish::SuiteResult result = dish::run_suite(config, out);
  for (const auto& row : result.rows) {
    if (!row.error.empty()) {
      std::printf("%-12s FAILED: %s\n", row.method.c_str(), row.error.c_str());
      continue;
    }
    std::printf(
        "%-12s a=%-10.6g b=%-10.6g mu=%-10.6g iters=%-8s final=%.3e "
        "slope=%.3e R2=%.4f\n",
        row.method.c_str(), row.a, row.b, row.mu,
        row.reached ? std::to_string(row.iterations).c_str() : "n/a",
        row.final_rel_err, row.slope, row.r_squared);
  }
  if (!out.empty()) std::printf("outputs written to %s\n", out.c_str());
  return result.exit_code;
}

int cmd_tune(const std::string& config_path, const std::string& out_override) {
  dish::ExperimentConfig config = dish::ExperimentConfig::load(config_path);
  const dish::ProblemInstance instance = dish::build_instance(config);
  nlohmann::json summary = nlohmann::json::array();
  int exit_code = 0;
  for (const auto& method : config.methods) {
    try {
      dish::TuneResult tuned;
      if (method.is_extra) {
        tuned = dish::tune_extra(instance, config.tuning);
      } else {
        dish::UpdateSchedule schedule = method.schedule;
        if (schedule.agents() != instance.n())
          schedule = dish::schedule_from_json(method.raw, instance.n());
        tuned = dish::tune(instance, schedule, config.tuning);
      }
      std::printf("%-12s a=%-10.6g b=%-10.6g mu=%-10.6g iters=%ld%s\n",
                  method.name.c_str(), tuned.a, tuned.b, tuned.mu,
                  tuned.iterations, tuned.reached ? "" : " (untargeted)");
      summary.push_back({{"method", method.name},
                         {"a", tuned.a},
                         {"b", tuned.b},
                         {"mu", tuned.mu},
                         {"iterations", tuned.iterations},
                         {"reached", tuned.reached},
                         {"final_rel_err", tuned.final_rel_err}});
    } catch (const dish::Error& e) {
      std::printf("%-12s FAILED: %s\n", method.name.c_str(), e.what());
      summary.push_back({{"method", method.name}, {"error", e.what()}});
      exit_code = 2;
    }
  }
  const std::string out = out_override.empty() ? config.output : out_override;
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream sf(std::filesystem::path(out) / "tuned.json");
    sf << summary.dump(2) << "\n";
  }
  return exit_code;
}

int cmd_verify() {
  const auto results = dish::run_verification();
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("[%s] %-36s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_reproduce(const std::string& which, const std::string& out_override) {
  dish::ExperimentConfig config;
  if (which == "setup1")
    config = dish::setup1_config();
  else if (which == "setup2")
    config = dish::setup2_config();
  else
    throw dish::ConfigError("config: reproduce expects setup1 or setup2");
  const std::string out = out_override.empty() ? config.output : out_override;
  const dish::SuiteResult result = dish::run_suite(config, out);
  for (const auto& row : result.rows) {
    if (!row.error.empty()) {
      std::printf("%-12s FAILED: %s\n", row.method.c_str(), row.error.c_str());
      continue;
    }
    std::printf(
        "%-12s a=%-10.6g b=%-10.6g mu=%-10.6g iters=%-8s final=%.3e "
        "slope=%.3e R2=%.4f\n",
        row.method.c_str(), row.a, row.b, row.mu,
        row.reached ? std::to_string(row.iterations).c_str() : "n/a",
        row.final_rel_err, row.slope, row.r_squared);
  }
  std::printf("outputs written to %s\n", out.c_str());
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DISH: distributed hybrid primal-dual consensus optimization"};
  app.require_subcommand(1);

  std::string config_path, out_override, setup_name;

  auto* run_cmd =
      app.add_subcommand("run", "Tune and run every configured method");
  run_cmd->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  run_cmd->add_option("--out", out_override, "override output directory");

  auto* tune_cmd = app.add_subcommand("tune", "grid-search stepsizes only");
  tune_cmd->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  tune_cmd->add_option("--out", out_override, "override output directory");

  auto* verify_cmd =
      app.add_subcommand("verify", "run the module invariant suites");

  auto* rep_cmd =
      app.add_subcommand("reproduce", "rerun a canned synthetic study");
  rep_cmd->add_option("setup", setup_name, "setup1 | setup2")->required();
  rep_cmd->add_option("--out", out_override, "override output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, out_override);
    if (tune_cmd->parsed()) return cmd_tune(config_path, out_override);
    if (verify_cmd->parsed()) return cmd_verify();
    if (rep_cmd->parsed()) return cmd_reproduce(setup_name, out_override);
  } catch (const dish::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const dish::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
