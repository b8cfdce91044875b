// Copyright 2026 The octoarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "octoarm/octoarm.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadConfig = 2,
  kSolverError = 3,
  kChecksFailed = 4,
};

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  bool dynamics = false;
};

void emit_error(const std::string& kind, const std::string& message,
                const std::optional<std::string>& field,
                const std::optional<std::string>& out_dir) {
  nlohmann::json j{{"status", "error"}, {"kind", kind}, {"message", message}};
  if (field) j["field"] = *field;
  std::cout << j.dump() << std::endl;
  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    if (!ec) {
      try {
        octoarm::write_json(std::filesystem::path(*out_dir) / "error.json", j);
      } catch (const std::exception&) {
        // The stdout copy is authoritative.
      }
    }
  }
}

octoarm::ExperimentConfig load(const Options& opt) {
  octoarm::ExperimentConfig cfg = octoarm::load_config(opt.config);
  if (opt.out) cfg.output_dir = *opt.out;
  return cfg;
}

int run_single(const Options& opt, octoarm::TaskKind task, bool dynamics) {
  octoarm::ExperimentConfig cfg = load(opt);
  cfg.task = task;
  octoarm::RunOptions ro;
  ro.dynamics = dynamics || opt.dynamics;
  const octoarm::RunOutcome out = octoarm::run_experiment(cfg, ro);
  std::cout << out.report.dump(2) << std::endl;
  return kOk;
}

int run_sweep_command(const Options& opt) {
  const octoarm::ExperimentConfig cfg = load(opt);
  const auto rows = octoarm::run_sweep(cfg, opt.threads);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  nlohmann::json j{{"status", "ok"},
                   {"cases", rows.size()},
                   {"failed_cases", failed},
                   {"config_hash", octoarm::config_hash(cfg)},
                   {"sweep_csv", (std::filesystem::path(cfg.output_dir) / "sweep.csv").string()}};
  std::cout << j.dump(2) << std::endl;
  return kOk;
}

int run_validate(const Options& opt) {
  octoarm::ExperimentConfig cfg;
  if (!opt.config.empty()) cfg = load(opt);
  const auto checks = octoarm::run_self_checks(cfg, opt.seed);
  nlohmann::json j = octoarm::checks_to_json(checks);
  j["seed"] = opt.seed;
  std::cout << j.dump(2) << std::endl;
  return j["pass"].get<bool>() ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Octopus arm energy-shaping control"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "experiment config (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
  };
  CLI::App* reach = app.add_subcommand("reach", "design activations for a reach task");
  CLI::App* grasp = app.add_subcommand("grasp", "design activations for a grasp task");
  CLI::App* sweep = app.add_subcommand("sweep", "run the configured parameter sweep");
  CLI::App* simulate = app.add_subcommand(
      "simulate", "design activations for the configured task and simulate them");
  CLI::App* validate = app.add_subcommand("validate", "run the numerical self-checks");
  for (CLI::App* sub : {reach, grasp, sweep, simulate}) add_common(sub, true);
  add_common(validate, false);
  for (CLI::App* sub : {reach, grasp}) {
    sub->add_flag("--dynamics", opt.dynamics, "also validate in a dynamic simulation");
  }
  sweep->add_option("--threads", opt.threads, "concurrent sweep cases")
      ->check(CLI::PositiveNumber);
  validate->add_option("--seed", opt.seed, "seed for the random test points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*reach) return run_single(opt, octoarm::TaskKind::kReach, false);
    if (*grasp) return run_single(opt, octoarm::TaskKind::kGrasp, false);
    if (*simulate) {
      const octoarm::ExperimentConfig cfg = load(opt);
      return run_single(opt, cfg.task, true);
    }
    if (*sweep) return run_sweep_command(opt);
    if (*validate) return run_validate(opt);
  } catch (const octoarm::ConfigError& e) {
    emit_error(e.kind(), e.what(), e.field(), opt.out);
    return kBadConfig;
  } catch (const octoarm::Error& e) {
    emit_error(e.kind(), e.what(), std::nullopt, opt.out);
    return kSolverError;
  } catch (const std::exception& e) {
    emit_error("Error", e.what(), std::nullopt, opt.out);
    return kFailure;
  }
  return kFailure;
}
