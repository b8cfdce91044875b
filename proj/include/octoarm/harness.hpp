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

// Experiment pipelines: single reach/grasp runs with optional dynamics
// validation, parameter sweeps, and the CSV/JSON artifacts they produce.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "octoarm/config.hpp"
#include "octoarm/dynamics.hpp"
#include "octoarm/energy_shaping.hpp"
#include "octoarm/tasks.hpp"

namespace octoarm {

// Rod, muscles and task built from a configuration. Not movable: the
// problem keeps references into the other members.
class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& cfg)
      : cfg_(cfg), rod_(cfg.arm), muscles_(rod_, cfg.muscles),
        initial_pose_(straight_pose(rod_, cfg.base)) {
    if (cfg.task == TaskKind::kReach) {
      reach_ = make_reach_task(cfg.target, initial_pose_, cfg.weight_position,
                               cfg.weight_direction);
      objective_ = std::make_unique<ReachObjective>(*reach_);
    } else {
      objective_ = std::make_unique<GraspObjective>(cfg.grasp_task(), rod_);
    }
    problem_.emplace(rod_, muscles_, *objective_, cfg.base, cfg.statics);
  }
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const ExperimentConfig& config() const { return cfg_; }
  const RodProperties& rod() const { return rod_; }
  const MuscleSet& muscles() const { return muscles_; }
  const TaskObjective& objective() const { return *objective_; }
  const ShapingProblem& problem() const { return *problem_; }
  const std::vector<Pose>& initial_pose() const { return initial_pose_; }
  const std::optional<ReachTask>& reach_task() const { return reach_; }

  FbResult solve(std::size_t max_iterations, const FbObserver& observer = {}) const {
    FbOptions opt = cfg_.solver;
    opt.max_iterations = max_iterations;
    return fb_solve(*problem_, ActivationProfile(rod_.elements()), opt, observer);
  }

  // e_pos, e_dir and, for grasping, the largest penetration.
  nlohmann::json errors(std::span<const Pose> pose) const {
    if (reach_) {
      const ReachErrors e = reach_errors(pose.back(), *reach_, rod_.params().length);
      return {{"e_pos", e.position}, {"e_dir", e.direction}};
    }
    const GraspErrors e = grasp_errors(pose, rod_, cfg_.grasp_task());
    return {{"e_pos", e.position},
            {"e_dir", e.direction},
            {"max_penetration_m", e.max_penetration}};
  }

 private:
  ExperimentConfig cfg_;
  RodProperties rod_;
  MuscleSet muscles_;
  std::vector<Pose> initial_pose_;
  std::optional<ReachTask> reach_;
  std::unique_ptr<TaskObjective> objective_;
  std::optional<ShapingProblem> problem_;
};

// ------------------------------------------------------------ serialization

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << std::setprecision(17);
  }
  template <typename... Cols>
  void header(const Cols&... cols) {
    std::size_t k = 0;
    ((out_ << (k++ ? "," : "") << cols), ...);
    out_ << '\n';
  }
  void row(std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      out_ << (k ? "," : "") << values[k];
    }
    out_ << '\n';
  }
  std::ostream& stream() { return out_; }

 private:
  std::ofstream out_;
};

inline void write_activations(const std::filesystem::path& path,
                              const RodProperties& rod,
                              const ActivationProfile& alpha) {
  CsvWriter w(path);
  w.header("s_m", "alpha_TM", "alpha_LM0", "alpha_LM1", "alpha_LM2",
           "alpha_LM3", "alpha_OMp", "alpha_OMm");
  for (std::size_t e = 0; e < rod.elements(); ++e) {
    std::vector<double> r{rod.grid().element(e)};
    for (std::size_t c = 0; c < kChannels; ++c) r.push_back(alpha(e, c));
    w.row(r);
  }
}

inline void write_pose(const std::filesystem::path& path, const Grid& grid,
                       std::span<const Pose> pose) {
  CsvWriter w(path);
  w.header("s_m", "x", "y", "z", "d1x", "d1y", "d1z", "d2x", "d2y", "d2z",
           "d3x", "d3y", "d3z");
  for (std::size_t i = 0; i < pose.size(); ++i) {
    const Pose& q = pose[i];
    w.row(std::vector<double>{grid.node(i), q.x[0], q.x[1], q.x[2], q.Q(0, 0),
                              q.Q(1, 0), q.Q(2, 0), q.Q(0, 1), q.Q(1, 1),
                              q.Q(2, 1), q.Q(0, 2), q.Q(1, 2), q.Q(2, 2)});
  }
}

inline void write_history(const std::filesystem::path& path,
                          std::span<const FbHistoryRow> history) {
  CsvWriter w(path);
  w.header("iter", "J", "J_muscle", "J_task", "max_abs_dH_dalpha");
  for (const auto& h : history) {
    w.stream() << h.iteration << ',';
    w.row(std::vector<double>{h.cost, h.muscle, h.task, h.max_gradient});
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Writes to a sibling temporary file, then renames it into place.
inline void write_json_atomic(const std::filesystem::path& path,
                              const nlohmann::json& j) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_json(tmp, j);
  std::filesystem::rename(tmp, path);
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// -------------------------------------------------------- dynamics check

struct DynamicsSummary {
  double tip_error = 0.0;           // |x_L(T) - x_L static| / L
  double max_strain_error = 0.0;    // max-norm over elements
  double max_energy_increase = 0.0; // post-ramp, over H(0) scale
  double energy_scale = 0.0;
  double worst_rate_error = 0.0;    // relative, smooth-motion samples
  std::size_t rate_samples = 0;
  double final_max_momentum = 0.0;
  std::vector<EnergySample> samples;
  DynamicState final_state;
};

// Relative mismatch between the central difference of recorded H and the
// dissipation reported over the same window (interval-averaged rates), for
// samples after `after` whose dissipation is at least rate_floor times the
// largest one.
inline std::pair<double, std::size_t> rate_consistency(
    std::span<const EnergySample> s, double after, double rate_floor = 1e-2) {
  double peak = 0.0;
  for (const auto& e : s) peak = std::max(peak, -e.mean_rate);
  double worst = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    if (s[k - 1].time < after || peak == 0.0) continue;
    const double left = s[k].time - s[k - 1].time;
    const double right = s[k + 1].time - s[k].time;
    const double reported =
        (s[k].mean_rate * left + s[k + 1].mean_rate * right) / (left + right);
    if (-reported < rate_floor * peak) continue;
    const double fd = (s[k + 1].hamiltonian - s[k - 1].hamiltonian) / (left + right);
    worst = std::max(worst, std::abs(fd - reported) / std::abs(reported));
    ++count;
  }
  return {worst, count};
}

inline DynamicsSummary validate_dynamics(
    const Experiment& ex, const ForwardState& designed, const SimConfig& cfg,
    const Simulator::Recorder& recorder = {}) {
  Simulator sim(ex.rod(), ex.muscles(), designed.alpha, cfg);
  DynamicsSummary out;
  out.final_state = sim.rest_state(ex.config().base);
  out.samples = sim.simulate(out.final_state, recorder);
  const double length = ex.rod().params().length;
  out.tip_error =
      (out.final_state.pose.back().x - designed.pose.back().x).norm() / length;
  const auto strains = strains_from_pose(out.final_state.pose, ex.rod().grid().ds());
  for (std::size_t e = 0; e < strains.size(); ++e) {
    out.max_strain_error = std::max(
        out.max_strain_error,
        (strains[e].vector() - designed.equilibrium.strain[e].vector())
            .lpNorm<Eigen::Infinity>());
  }
  double h_max = 0.0;
  for (const auto& s : out.samples) h_max = std::max(h_max, std::abs(s.hamiltonian));
  out.energy_scale = std::max(std::abs(out.samples.front().hamiltonian), h_max);
  for (std::size_t k = 1; k < out.samples.size(); ++k) {
    if (out.samples[k - 1].time < cfg.ramp_time) continue;
    out.max_energy_increase =
        std::max(out.max_energy_increase,
                 out.samples[k].hamiltonian - out.samples[k - 1].hamiltonian);
  }
  const auto [worst, count] = rate_consistency(out.samples, cfg.ramp_time);
  out.worst_rate_error = worst;
  out.rate_samples = count;
  out.final_max_momentum = out.samples.back().max_momentum;
  return out;
}

// ---------------------------------------------------------------- runs

struct RunOptions {
  bool write_files = true;
  bool dynamics = false;
  std::optional<std::size_t> max_iterations;
};

struct RunOutcome {
  FbResult result;
  nlohmann::json report;
};

inline RunOutcome run_experiment(const ExperimentConfig& cfg,
                                 const RunOptions& opt = {}) {
  Experiment ex(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  out.result = ex.solve(opt.max_iterations.value_or(cfg.solver.max_iterations));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const ForwardState& st = out.result.state;

  nlohmann::json& r = out.report;
  r["schema_version"] = kSchemaVersion;
  r["status"] = "ok";
  r["task"] = cfg.task == TaskKind::kReach ? "reach" : "grasp";
  r["config_hash"] = config_hash(cfg);
  r["created_utc"] = utc_timestamp();
  r["errors"] = ex.errors(st.pose);
  r["cost"] = {{"J", st.cost.total()}, {"J_muscle", st.cost.muscle}, {"J_task", st.cost.task}};
  r["solver"] = {{"iterations", out.result.iterations},
                 {"accepted", out.result.accepted},
                 {"rejected", out.result.rejected},
                 {"stop_reason", out.result.stop_reason},
                 {"basin_jump", out.result.basin_jump},
                 {"max_equilibrium_residual", st.equilibrium.max_residual()},
                 {"wall_time_s", wall}};
  r["tip_position_m"] = config_detail::to_json(st.pose.back().x);
  if (ex.reach_task()) {
    const Mat3& q = ex.reach_task()->target_frame;
    r["target_frame"] = {config_detail::to_json(q.col(0)),
                         config_detail::to_json(q.col(1)),
                         config_detail::to_json(q.col(2))};
  }

  const std::filesystem::path dir = cfg.output_dir;
  if (opt.write_files) {
    std::filesystem::create_directories(dir);
    write_activations(dir / "activations.csv", ex.rod(), st.alpha);
    write_pose(dir / "pose.csv", ex.rod().grid(), st.pose);
    write_history(dir / "J_history.csv", out.result.history);
  }

  if (opt.dynamics || cfg.dynamics_enabled) {
    std::unique_ptr<CsvWriter> traj;
    Simulator::Recorder recorder;
    if (opt.write_files && cfg.write_trajectory) {
      traj = std::make_unique<CsvWriter>(dir / "trajectory.csv");
      std::ostream& os = traj->stream();
      os << "t";
      for (std::size_t i = 0; i < ex.rod().grid().nodes(); ++i) {
        os << ",x" << i << ",y" << i << ",z" << i;
      }
      os << ",H,T,V,max_abs_p\n";
      recorder = [&traj](const DynamicState& s, const EnergySample& e) {
        std::vector<double> row{e.time};
        for (const Pose& q : s.pose) {
          row.insert(row.end(), {q.x[0], q.x[1], q.x[2]});
        }
        row.insert(row.end(), {e.hamiltonian, e.kinetic, e.potential, e.max_momentum});
        traj->row(row);
      };
    }
    const DynamicsSummary d = validate_dynamics(ex, st, cfg.dynamics, recorder);
    r["dynamics"] = {{"duration_s", cfg.dynamics.duration},
                     {"time_step_s", cfg.dynamics.time_step},
                     {"ramp_time_s", cfg.dynamics.ramp_time},
                     {"tip_error_over_L", d.tip_error},
                     {"max_strain_error", d.max_strain_error},
                     {"max_energy_increase_rel",
                      d.max_energy_increase / d.energy_scale},
                     {"worst_rate_error", d.worst_rate_error},
                     {"rate_samples", d.rate_samples},
                     {"final_max_momentum", d.final_max_momentum},
                     {"final_H", d.samples.back().hamiltonian}};
  }
  if (opt.write_files) write_json(dir / "report.json", r);
  return out;
}

// ---------------------------------------------------------------- sweeps

struct SweepCase {
  std::size_t id = 0;
  ExperimentConfig config;
  std::vector<double> parameters;
};

struct SweepRow {
  std::size_t id = 0;
  std::vector<double> parameters;
  std::string status = "ok";
  double e_pos = std::nan("");
  double e_dir = std::nan("");
  double max_penetration = std::nan("");
  double cost = std::nan("");
  std::size_t iterations = 0;
  double wall_time = 0.0;
};

inline Mat3 rotation_about(const Vec3& axis, double degrees) {
  return so3_exp(axis.normalized() * degrees * std::numbers::pi / 180.0);
}

inline std::vector<std::string> sweep_parameter_names(SweepKind kind) {
  switch (kind) {
    case SweepKind::kReachGrid: return {"target_x_m", "target_y_m", "target_z_m"};
    case SweepKind::kRadius: return {"radius_m"};
    case SweepKind::kRotationE1:
    case SweepKind::kRotationE2: return {"angle_deg"};
    case SweepKind::kNone: break;
  }
  return {};
}

inline std::vector<SweepCase> sweep_cases(const ExperimentConfig& base) {
  std::vector<SweepCase> cases;
  const auto push = [&](ExperimentConfig c, std::vector<double> p) {
    c.solver.max_iterations = base.sweep_max_iterations;
    cases.push_back({cases.size(), std::move(c), std::move(p)});
  };
  const SweepConfig& s = base.sweep;
  switch (s.kind) {
    case SweepKind::kReachGrid: {
      const std::size_t n = s.grid_per_axis;
      const Vec3 cell = (s.cube_max - s.cube_min) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t k = 0; k < n; ++k) {
            ExperimentConfig c = base;
            c.task = TaskKind::kReach;
            c.target = s.cube_min + Vec3{(i + 0.5) * cell[0], (j + 0.5) * cell[1],
                                         (k + 0.5) * cell[2]};
            push(c, {c.target[0], c.target[1], c.target[2]});
          }
        }
      }
      break;
    }
    case SweepKind::kRadius:
      for (double r : s.radii) {
        ExperimentConfig c = base;
        c.task = TaskKind::kGrasp;
        c.cylinder.radius = r;
        push(c, {r});
      }
      break;
    case SweepKind::kRotationE1:
    case SweepKind::kRotationE2: {
      const Vec3 axis = s.kind == SweepKind::kRotationE1 ? Vec3::UnitX() : Vec3::UnitY();
      for (double a : s.angles_deg) {
        ExperimentConfig c = base;
        c.task = TaskKind::kGrasp;
        // Tilt the cylinder about its own center.
        c.cylinder.axis = rotation_about(axis, a) * base.cylinder.axis;
        push(c, {a});
      }
      break;
    }
    case SweepKind::kNone:
      throw ConfigError("sweep.kind", "no sweep configured");
  }
  return cases;
}

inline SweepRow run_case(const SweepCase& sc) {
  SweepRow row;
  row.id = sc.id;
  row.parameters = sc.parameters;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Experiment ex(sc.config);
    const FbResult res = ex.solve(sc.config.solver.max_iterations);
    const nlohmann::json e = ex.errors(res.state.pose);
    row.e_pos = e.at("e_pos").get<double>();
    row.e_dir = e.at("e_dir").get<double>();
    if (e.contains("max_penetration_m")) {
      row.max_penetration = e.at("max_penetration_m").get<double>();
    }
    row.cost = res.state.cost.total();
    row.iterations = res.iterations;
  } catch (const Error& err) {
    row.status = err.kind();
  }
  row.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

inline nlohmann::json row_to_json(const SweepRow& r) {
  const auto num = [](double v) -> nlohmann::json {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  return {{"case_id", r.id},       {"parameters", r.parameters},
          {"status", r.status},    {"e_pos", num(r.e_pos)},
          {"e_dir", num(r.e_dir)}, {"max_penetration_m", num(r.max_penetration)},
          {"J", num(r.cost)},      {"iterations", r.iterations},
          {"wall_time_s", r.wall_time}};
}

// Runs every case on up to `threads` workers. Each finished case is written
// to cases/case_<id>.json; the merged tables are in case order.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                       std::size_t threads = 1,
                                       bool write_files = true) {
  const std::vector<SweepCase> cases = sweep_cases(cfg);
  std::vector<SweepRow> rows(cases.size());
  const std::filesystem::path dir = cfg.output_dir;
  if (write_files) std::filesystem::create_directories(dir / "cases");
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < cases.size(); k = next++) {
      rows[k] = run_case(cases[k]);
      if (write_files) {
        write_json_atomic(dir / "cases" / ("case_" + std::to_string(k) + ".json"),
                          row_to_json(rows[k]));
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, cases.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (write_files) {
    CsvWriter w(dir / "sweep.csv");
    std::ostream& os = w.stream();
    os << "case_id";
    for (const auto& p : sweep_parameter_names(cfg.sweep.kind)) os << ',' << p;
    os << ",status,e_pos,e_dir,max_penetration_m,J,iterations\n";
    for (const auto& r : rows) {
      os << r.id;
      for (double p : r.parameters) os << ',' << p;
      os << ',' << r.status << ',' << r.e_pos << ',' << r.e_dir << ','
         << r.max_penetration << ',' << r.cost << ',' << r.iterations << '\n';
    }
    CsvWriter timing(dir / "sweep_timing.csv");
    timing.header("case_id", "wall_time_s");
    for (const auto& r : rows) {
      timing.stream() << r.id << ',' << r.wall_time << '\n';
    }
  }
  return rows;
}

// Relative standard deviation (population) of the finite entries.
inline double relative_std(std::span<const double> v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      sum += x;
      ++n;
    }
  }
  if (n == 0) return std::nan("");
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) var += (x - mean) * (x - mean);
  }
  return std::sqrt(var / static_cast<double>(n)) / std::abs(mean);
}

}  // namespace octoarm
