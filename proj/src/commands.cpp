// Copyright 2026 The bbsinglet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bbsinglet/commands.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace bbsinglet {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out.precision(std::numeric_limits<double>::max_digits10);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string megabytes(double bytes) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(1) << bytes / (1024.0 * 1024.0) << " MiB";
  return ss.str();
}

RunConfig load_checked(const fs::path& path, bool force) {
  RunConfig cfg = load_config(path);
  check_memory(cfg, force);
  return cfg;
}

SingletTransferProblem build_problem(const RunConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  auto problem = SingletTransferProblem::build(cfg.system, cfg.dt, cfg.polarizations, cfg.engine);
  log << "engine " << engine_name(problem.engine()) << ", " << problem.blocks().size()
      << " block(s), propagators ready in " << std::fixed << std::setprecision(2)
      << seconds_since(t0) << " s\n";
  log.unsetf(std::ios::floatfield);
  log << std::setprecision(6);
  return problem;
}

}  // namespace

MemoryEstimate estimate_memory(const RunConfig& cfg) {
  MemoryEstimate est;
  est.dense_dim = static_cast<long long>(cfg.system.dim());
  std::vector<double> dims;
  bool reduced = false;
  if (cfg.engine != EngineKind::Dense) {
    const SymmetryReduction red = reduce_by_equivalence(cfg.system, true);
    reduced = cfg.engine == EngineKind::Reduced || red.has_equivalent_spins();
    if (reduced)
      for (const auto& s : red.sectors) dims.push_back(static_cast<double>(s.model.dim()));
  }
  if (!reduced) dims.push_back(static_cast<double>(est.dense_dim));
  est.engine = reduced ? EngineKind::Reduced : EngineKind::Dense;
  est.blocks = static_cast<int>(dims.size());
  est.largest_dim = static_cast<long long>(*std::max_element(dims.begin(), dims.end()));
  const double entries = std::ldexp(1.0, static_cast<int>(cfg.system.channels().size()));
  constexpr double kComplexBytes = 16.0;
  for (double d : dims)
    est.engine_bytes += kComplexBytes * d * d * (entries + 6.0);
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long page_size = sysconf(_SC_PAGE_SIZE);
  if (pages > 0 && page_size > 0)
    est.available_bytes = static_cast<double>(pages) * static_cast<double>(page_size);
  return est;
}

void check_memory(const RunConfig& cfg, bool force) {
  if (force) return;
  const MemoryEstimate est = estimate_memory(cfg);
  if (est.dense_dim > kMaxUnforcedDim)
    throw ConfigError("Hilbert dimension " + std::to_string(est.dense_dim) + " exceeds " +
                      std::to_string(kMaxUnforcedDim) +
                      "; reduce the number of spins or pass --force");
  if (est.available_bytes > 0 && est.engine_bytes > est.available_bytes)
    throw ConfigError("estimated memory " + megabytes(est.engine_bytes) + " exceeds physical memory " +
                      megabytes(est.available_bytes) +
                      "; group equivalent spins (bb.engine = auto) or pass --force");
}

void write_trajectory(std::ostream& os, const TrajectoryRecord& rec) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "time_ms,Q,enhancement\n";
  for (std::size_t i = 0; i < rec.times.size(); ++i)
    os << rec.times[i] * 1e3 << ',' << rec.q_values[i] << ',' << rec.enhancement[i] << '\n';
  os.precision(old);
}

int cmd_validate(const ValidateOptions& opts, std::ostream& log) {
  std::string text;
  try {
    text = read_file(opts.config);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
  std::optional<RunConfig> cfg;
  try {
    cfg.emplace(parse_config(text));
    log << "schema: ok\n";
  } catch (const std::exception& e) {
    log << "schema: FAIL " << e.what() << '\n';
    return 1;
  }
  bool ok = true;
  log << "spins: " << cfg->system.size() << "\n";
  log << "hilbert dimension: " << cfg->system.dim() << '\n';

  const CommutationReport report = validate_z_commutation(cfg->system);
  log << "z-commutation: " << (report.passed ? "ok" : "FAIL") << '\n';
  for (const auto& [label, r] : report.channel_residuals)
    log << "  channel " << label << " residual " << r << '\n';
  std::set<std::string> named;
  for (const auto& [key, c] : cfg->system.couplings().entries()) {
    const auto& sites = cfg->system.sites();
    if (c.form != CouplingForm::Isotropic || sites[key.first].channel == sites[key.second].channel)
      continue;
    std::ostringstream name;
    name << cfg->site_labels[key.first] << "-" << cfg->site_labels[key.second] << " (isotropic, J "
         << c.j_hz << " Hz)";
    if (named.insert(name.str()).second) log << "  offending coupling " << name.str() << '\n';
  }
  ok = ok && report.passed;

  const MemoryEstimate est = estimate_memory(*cfg);
  log << "engine: " << engine_name(est.engine) << " (" << est.blocks << " block(s), largest dimension "
      << est.largest_dim << ")\n";
  log << "memory estimate: " << megabytes(est.engine_bytes);
  if (est.available_bytes > 0) log << " of " << megabytes(est.available_bytes) << " physical";
  log << '\n';
  try {
    check_memory(*cfg, opts.force);
    log << "memory guard: ok\n";
  } catch (const ConfigError& e) {
    log << "memory guard: FAIL " << e.what() << '\n';
    ok = false;
  }
  log << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

int cmd_optimize(const OptimizeOptions& opts, std::ostream& log) {
  RunConfig cfg = load_checked(opts.config, opts.force);
  if (opts.seed) cfg.ga.master_seed = *opts.seed;
  const fs::path out_dir = opts.out.value_or(cfg.output_dir);
  const auto t0 = std::chrono::steady_clock::now();

  const SingletTransferProblem problem = build_problem(cfg, log);
  log << "ceiling Q " << problem.ceiling() << ", enhancement ceiling "
      << problem.enhancement_ceiling() << '\n';

  const auto report_every = std::max(1, cfg.ga.generations / 20);
  const OptimizationResult result =
      optimize(problem, cfg.ga, cfg.template_sequence(), [&](const FitnessRecord& r) {
        if (r.generation % report_every == 0)
          log << "generation " << r.generation << " best Q " << r.best_q << " mean Q " << r.mean_q
              << std::endl;
        return true;
      });

  auto pulse = open_output(out_dir, "pulse.csv");
  write_pulse_table(pulse, result.best, problem.amplitudes_hz());

  auto history = open_output(out_dir, "history.jsonl");
  for (const auto& r : result.history) {
    std::ostringstream id;
    id << std::hex << std::setw(16) << std::setfill('0') << r.best_chromosome_id;
    history << nlohmann::json{{"generation", r.generation},
                              {"best_Q", r.best_q},
                              {"mean_Q", r.mean_q},
                              {"best_id", id.str()}}
                   .dump()
            << '\n';
  }

  const TrajectoryRecord traj = problem.trajectory(result.best, cfg.stride);
  auto traj_file = open_output(out_dir, "trajectory.csv");
  write_trajectory(traj_file, traj);

  const double enhancement = problem.enhancement(result.best);
  auto summary = open_output(out_dir, "summary.json");
  summary << nlohmann::json{{"engine", engine_name(problem.engine())},
                            {"dimension", cfg.system.dim()},
                            {"seed", cfg.ga.master_seed},
                            {"generations_run", result.history.back().generation},
                            {"best_Q", result.best_q},
                            {"ceiling_Q", result.ceiling},
                            {"enhancement", enhancement},
                            {"enhancement_ceiling", problem.enhancement_ceiling()}}
                 .dump(2)
          << '\n';

  log << "best Q " << result.best_q << " (ceiling " << result.ceiling << ")\n";
  log << "enhancement " << enhancement << " (ceiling " << problem.enhancement_ceiling() << ")\n";
  log << "wrote " << (out_dir / "pulse.csv").string() << ", history.jsonl, trajectory.csv, "
      << "summary.json in " << seconds_since(t0) << " s\n";
  return 0;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& log) {
  const RunConfig cfg = load_checked(opts.config, opts.force);
  const int stride = opts.stride.value_or(cfg.stride);
  if (stride < 1) throw std::invalid_argument("--stride must be >= 1");
  std::ifstream in(opts.pulse);
  if (!in) throw std::runtime_error("cannot open pulse table " + opts.pulse.string());
  const BBSequence seq = read_pulse_table(in, cfg.channel_labels(), cfg.amplitudes_hz(), cfg.dt);

  const SingletTransferProblem problem = build_problem(cfg, log);
  const TrajectoryRecord traj = problem.trajectory(seq, stride);
  const fs::path out_dir = opts.out.value_or(cfg.output_dir);
  auto file = open_output(out_dir, "trajectory.csv");
  write_trajectory(file, traj);
  log << "segments " << seq.size() << ", duration " << seq.total_duration() * 1e3 << " ms\n";
  log << "final Q " << traj.q_values.back() << ", enhancement " << traj.enhancement.back()
      << " (ceiling " << problem.enhancement_ceiling() << ")\n";
  log << "wrote " << (out_dir / "trajectory.csv").string() << '\n';
  return 0;
}

int cmd_hbac(const HbacOptions& opts, std::ostream& log) {
  const RunConfig cfg = load_checked(opts.config, opts.force);
  if (!cfg.relaxation) throw ConfigError("hbac needs a relaxation section in the config");
  if (opts.iterations < 0) throw std::invalid_argument("--iterations must be >= 0");

  std::optional<SingletTransferProblem> problem;
  auto pulse_gain = [&](const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pulse table " + path.string());
    const BBSequence seq = read_pulse_table(in, cfg.channel_labels(), cfg.amplitudes_hz(), cfg.dt);
    if (!problem) problem = build_problem(cfg, log);
    log << "transfer gain from " << path.string() << '\n';
    return linear_response_gain(*problem, seq);
  };
  auto print_gain = [&](const AffineGain& g) {
    for (const auto& [label, a] : g.ancilla) log << "  d eps_S / d eps_" << label << " = " << a << '\n';
    log << "  d eps_S / d eps_S = " << g.singlet << '\n';
  };

  AffineGain gain;
  if (opts.pulse) {
    gain = pulse_gain(*opts.pulse);
  } else if (cfg.transfer_gain) {
    gain = *cfg.transfer_gain;
    log << "transfer gain from config\n";
  } else {
    throw ConfigError("hbac needs relaxation.transfer_gain in the config or a --pulse table");
  }
  print_gain(gain);
  AffineGain hb_gain = gain;
  if (opts.hbac_pulse) {
    hb_gain = pulse_gain(*opts.hbac_pulse);
    print_gain(hb_gain);
  }

  const double eps_ref = cfg.polarizations.at(cfg.system.pair_species().label);
  const auto states = hbac_simulate(*cfg.relaxation, cfg.polarizations, gain.as_function(),
                                    hb_gain.as_function(), opts.iterations);
  const fs::path out_dir = opts.out.value_or(cfg.output_dir);
  auto file = open_output(out_dir, "hbac.csv");
  file << "m,eps_singlet,enhancement";
  for (const auto& [label, _] : cfg.polarizations) file << ",eps_" << label;
  file << '\n';
  for (const auto& s : states) {
    file << s.iteration << ',' << s.eps_singlet << ',' << s.eps_singlet / eps_ref;
    for (const auto& [_, v] : s.eps_ancilla) file << ',' << v;
    file << '\n';
    log << "m=" << s.iteration << " eps_S " << s.eps_singlet << " enhancement "
        << s.eps_singlet / eps_ref << '\n';
  }
  log << "fixed point eps_S " << hbac_fixed_point(*cfg.relaxation, cfg.polarizations, hb_gain) << '\n';
  log << "wrote " << (out_dir / "hbac.csv").string() << '\n';
  return 0;
}

int cmd_fit(const FitOptions& opts, std::ostream& log) {
  std::ifstream in(opts.data);
  if (!in) throw std::runtime_error("cannot open data file " + opts.data.string());
  const TwoColumnData data = read_two_column(in);
  const FitResult fit = fit_monoexponential(data.times, data.values, opts.model);
  log << "model " << fit_model_name(opts.model) << '\n';
  log << "amplitude " << fit.amplitude << '\n';
  log << "time_constant_s " << fit.time_constant << '\n';
  log << "rms_residual " << fit.rms_residual << '\n';

  const auto [lo, hi] = std::minmax_element(data.times.begin(), data.times.end());
  constexpr int kSamples = 200;
  TwoColumnData curve;
  for (int i = 0; i <= kSamples; ++i) {
    const double t = *lo + (*hi - *lo) * i / kSamples;
    curve.times.push_back(t);
    curve.values.push_back(fit_model_value(opts.model, fit.amplitude, fit.time_constant, t));
  }
  auto file = open_output(opts.out, "fit_curve.csv");
  write_two_column(file, curve, "time_s,fitted");
  log << "wrote " << (opts.out / "fit_curve.csv").string() << '\n';
  return 0;
}

}  // namespace bbsinglet
