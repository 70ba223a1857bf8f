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

// Acceptance checks 1-11. Prints one line per criterion:
//   criterion <n> PASS|FAIL|SKIP <details> [<seconds> s]
// Criterion 8 is long-running and only runs with --long (or
// BBSINGLET_LONG_TESTS=1 in the environment). Exit code 1 if any check fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bbsinglet/config.hpp"
#include "bbsinglet/ga_optimizer.hpp"
#include "bbsinglet/relaxation.hpp"
#include "test_support.hpp"

namespace bbsinglet::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const fs::path kConfigs = fs::path(BBSINGLET_SOURCE_DIR) / "configs";

// Fixed by the extended-budget calibration run described in docs/calibration.md.
constexpr double kThreeSpinEnhancementThreshold = 1.38;
constexpr double kHbacMarginalThreshold = 0.05;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

RunConfig load(const std::string& name) { return load_config(kConfigs / name); }

ComplexMatrix propagate_density(const PropagatorCache& cache, const BBSequence& seq, ComplexMatrix rho) {
  for (const auto& seg : seq.segments()) {
    cache.apply(seg, rho);
    rho.adjointInPlace();
    cache.apply(seg, rho);
  }
  return rho;
}

// Shared optimized 3-spin run used by criteria 4, 6 and 11.
struct ThreeSpinRun {
  RunConfig cfg;
  SingletTransferProblem problem;
  OptimizationResult result;
  double seconds = 0;
};

const ThreeSpinRun& three_spin_run() {
  static const ThreeSpinRun run = [] {
    RunConfig cfg = load("three_spin.json");
    const auto t0 = Clock::now();
    auto problem = SingletTransferProblem::build(cfg.system, cfg.dt, cfg.polarizations, cfg.engine);
    auto result = optimize(problem, cfg.ga, cfg.template_sequence());
    return ThreeSpinRun{std::move(cfg), std::move(problem), std::move(result), seconds_since(t0)};
  }();
  return run;
}

Outcome criterion1() {
  std::mt19937_64 rng(101);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  std::uniform_int_distribution<unsigned> mask(1, 3);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const unsigned m = mask(rng);
    Segment seg;
    for (int k = 0; k < 2; ++k) seg.channels.push_back({((m >> k) & 1u) != 0, phase(rng)});
    const ComplexMatrix oracle = testing::oracle_expm(testing::segment_hamiltonian(sys, seg), kDefaultDt);
    worst = std::max(worst, max_abs(segment_unitary(cache, seg).matrix() - oracle));
  }
  return {worst < 1e-9 ? Status::Pass : Status::Fail, "max |Z X Z^dag - expm| over 100 bangs = " + fmt(worst)};
}

Outcome criterion2() {
  std::mt19937_64 rng(102);
  double worst_u = 0, worst_trace = 0, worst_spec = 0;
  for (int n : {3, 4, 5}) {
    const SpinSystem sys = testing::random_hetero_system(n, rng);
    const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
    for (unsigned m = 0; m <= cache.bang_count(); ++m)
      worst_u = std::max(worst_u, unitarity_defect(cache.bang(m).unitary.matrix()));
    for (std::size_t len : {1u, 10u, 100u, 1000u}) {
      const BBSequence seq = testing::random_sequence(len, {"13C", "1H"}, rng);
      worst_u = std::max(worst_u, unitarity_defect(sequence_unitary(cache, seq).matrix()));
      const ComplexMatrix rho = testing::random_density(sys.dim(), rng);
      const ComplexMatrix out = propagate_density(cache, seq, rho);
      worst_trace = std::max(worst_trace, std::abs(out.trace() - rho.trace()));
      const RealVector a = hermitian_spectrum(HermitianOperator(rho));
      const RealVector b = hermitian_spectrum(HermitianOperator(0.5 * (out + out.adjoint())));
      worst_spec = std::max(worst_spec, (a - b).cwiseAbs().maxCoeff());
    }
  }
  const bool ok = worst_u < 1e-8 && worst_trace < 1e-10 && worst_spec < 1e-10;
  return {ok ? Status::Pass : Status::Fail, "unitarity " + fmt(worst_u) + ", trace drift " + fmt(worst_trace) +
                                                ", spectrum drift " + fmt(worst_spec) + " (dim <= 32, <= 1000 segments)"};
}

Outcome criterion3() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> pol(-10.0, 10.0);
  double worst = 0;
  int configs = 0;
  for (int n = 2; n <= 8; ++n)
    for (int trial = 0; trial < 4; ++trial) {
      const SpinSystem sys = testing::random_hetero_system(n, rng);
      Polarizations p{{"13C", pol(rng)}, {"1H", pol(rng)}};
      const DensityState rho = build_thermal_state(sys, p);
      const HermitianOperator proj = build_singlet_projector(sys);
      const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
      worst = std::max(worst, std::abs(fitness(BBSequence(kDefaultDt, {"13C", "1H"}, {}), cache, rho, proj) - 0.25));
      worst = std::max(worst, std::abs(fitness(BBSequence(kDefaultDt, {"13C", "1H"}, {}), cache, rho.to_full(), proj) - 0.25));
      ++configs;
    }
  for (const char* name : {"btmsb.json", "five_spin.json", "three_spin.json", "two_spin.json"}) {
    const RunConfig cfg = load(name);
    const auto problem = SingletTransferProblem::build(cfg.system, cfg.dt, cfg.polarizations, cfg.engine);
    worst = std::max(worst, std::abs(problem.fitness(BBSequence(cfg.dt, cfg.channel_labels(), {})) - 0.25));
    ++configs;
  }
  return {worst < 1e-12 ? Status::Pass : Status::Fail,
          "max |Q(rho0) - 1/4| = " + fmt(worst) + " over " + std::to_string(configs) + " thermal configurations"};
}

Outcome criterion4() {
  const ThreeSpinRun& run = three_spin_run();
  const SpinSystem& sys = run.cfg.system;
  const DensityState rho = build_thermal_state(sys, run.cfg.polarizations);
  const HermitianOperator proj = build_singlet_projector(sys);
  const double bound = 0.25 + rho.full_scale() * majorization_bound(HermitianOperator(rho.matrix()), proj);
  double worst = -1;
  for (double q : run.result.evaluated) worst = std::max(worst, q);
  const bool ok = worst <= bound + 1e-9 && worst <= 1.0;
  return {ok ? Status::Pass : Status::Fail, "max of " + std::to_string(run.result.evaluated.size()) +
                                                " recorded fitnesses " + fmt(worst, 8) + " <= bound " + fmt(bound, 8)};
}

Outcome criterion5() {
  const SpinSystem sys({{"13C", 1.0, 250.0}}, {{0, 0, 0.0}, {1, 0, 0.0}}, {}, {0, 1});
  const PropagatorCache cache = precompute_propagators(sys, 0.5e-3);
  ComplexMatrix up = ComplexMatrix::Zero(4, 4);
  up(0, 0) = 1.0;  // both spins up; spin 0 carries the check
  const BBSequence bang(0.5e-3, {"13C"}, {Segment{{{true, 0.0}}}});
  const ComplexMatrix out = propagate_density(cache, bang, up);
  const double iz = expectation(out, testing::kron_site(2, 0, Axis::Z));
  const double err = std::abs(iz - std::cos(std::numbers::pi / 4) / 2);
  return {err < 1e-9 ? Status::Pass : Status::Fail, "<Iz> 1/2 -> " + fmt(iz, 12) + " (error " + fmt(err) + ")"};
}

Outcome criterion6() {
  const ThreeSpinRun& run = three_spin_run();
  bool monotone = true;
  for (std::size_t g = 1; g < run.result.history.size(); ++g)
    monotone = monotone && run.result.history[g].best_q >= run.result.history[g - 1].best_q;
  const double e = run.problem.enhancement(run.result.best);
  const bool ok = monotone && e >= kThreeSpinEnhancementThreshold && run.seconds < 300 &&
                  run.cfg.ga.population_size == 64 && run.cfg.ga.generations <= 500;
  return {ok ? Status::Pass : Status::Fail,
          "enhancement " + fmt(e) + " (threshold " + fmt(kThreeSpinEnhancementThreshold) + ", ceiling " +
              fmt(run.problem.enhancement_ceiling()) + "), " + std::to_string(run.result.history.size() - 1) +
              " generations, best-ever monotone " + (monotone ? "yes" : "no") + ", " + fmt(run.seconds, 3) + " s"};
}

Outcome criterion7() {
  const RunConfig cfg = load("btmsb.json");
  auto t0 = Clock::now();
  const auto dense = SingletTransferProblem::build(cfg.system, cfg.dt, cfg.polarizations, EngineKind::Dense);
  const double dense_build = seconds_since(t0);
  const auto& cache = *dense.blocks().front().cache;

  t0 = Clock::now();
  const auto reduced = SingletTransferProblem::build(cfg.system, cfg.dt, cfg.polarizations, EngineKind::Reduced);
  const double reduced_build = seconds_since(t0);
  std::mt19937_64 rng(107);
  const BBSequence seq = testing::random_sequence(static_cast<std::size_t>(cfg.n_segments), cfg.channel_labels(), rng);
  t0 = Clock::now();
  const double q_reduced = reduced.fitness(seq);
  const double reduced_eval = seconds_since(t0);

  // dense cross-check on a prefix that exercises every bang subset
  std::vector<Segment> prefix(seq.segments().begin(), seq.segments().begin() + 12);
  const BBSequence short_seq(cfg.dt, cfg.channel_labels(), prefix);
  t0 = Clock::now();
  const double q_dense_short = dense.fitness(short_seq);
  const double dense_short = seconds_since(t0);
  const double q_reduced_short = reduced.fitness(short_seq);
  const double dense_eval_estimate = dense_short * static_cast<double>(cfg.n_segments) / 12.0;

  const bool ok = cache.dim() == 2048 && cache.bang_count() == 3 && dense_build < 600 && reduced_eval < 60 &&
                  std::abs(q_dense_short - q_reduced_short) < 1e-10 && q_reduced >= 0.0 && q_reduced <= reduced.ceiling() + 1e-9;
  return {ok ? Status::Pass : Status::Fail,
          "dense cache (dim " + std::to_string(cache.dim()) + ", " + std::to_string(cache.bang_count()) +
              " bangs + delay) " + fmt(dense_build, 3) + " s; 592-segment fitness " + fmt(reduced_eval, 3) +
              " s (reduced engine, build " + fmt(reduced_build, 3) + " s); dense 592-segment estimate " +
              fmt(dense_eval_estimate, 3) + " s; dense vs reduced on 12 segments |dQ| = " +
              fmt(std::abs(q_dense_short - q_reduced_short))};
}

Outcome criterion8(bool run_long) {
  if (!run_long) return {Status::Skip, "long-running; use --long or BBSINGLET_LONG_TESTS=1"};
  const RunConfig cfg = load("btmsb.json");
  auto t0 = Clock::now();
  const auto problem = SingletTransferProblem::build(cfg.system, cfg.dt, cfg.polarizations, cfg.engine);
  const auto result = optimize(problem, cfg.ga, cfg.template_sequence());
  const double e = problem.enhancement(result.best);
  std::string detail = "11-spin enhancement " + fmt(e) + " after " + std::to_string(result.history.size() - 1) +
                       " generations (target 3.0, ceiling " + fmt(problem.enhancement_ceiling()) + ", " +
                       fmt(seconds_since(t0), 4) + " s)";
  if (e >= 3.0) return {Status::Pass, detail};

  const RunConfig five = load("five_spin.json");
  t0 = Clock::now();
  const auto p5 = SingletTransferProblem::build(five.system, five.dt, five.polarizations, five.engine);
  const auto r5 = optimize(p5, five.ga, five.template_sequence());
  const double e5 = p5.enhancement(r5.best);
  const double fraction = e5 / p5.enhancement_ceiling();
  detail += "; 5-spin surrogate enhancement " + fmt(e5) + " = " + fmt(100 * fraction, 3) +
            "% of ceiling " + fmt(p5.enhancement_ceiling()) + " (needs >= 85%, " + fmt(seconds_since(t0), 4) + " s)";
  return {fraction >= 0.85 ? Status::Pass : Status::Fail, detail};
}

Outcome criterion9() {
  std::vector<double> t_decay, t_ir;
  for (int i = 0; i <= 16; ++i) t_decay.push_back(5.0 * i);
  for (int i = 0; i <= 15; ++i) t_ir.push_back(0.1 + 1.0 * i);
  double worst_decay = 0, worst_ir = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> y, z;
    for (double t : t_decay) y.push_back(std::exp(-t / 25.9) * (1.0 + noise(rng)));
    for (double t : t_ir) z.push_back((1.0 - 2.0 * std::exp(-t / 3.0)) * (1.0 + noise(rng)));
    worst_decay = std::max(worst_decay, std::abs(fit_monoexponential(t_decay, y).time_constant / 25.9 - 1));
    worst_ir = std::max(worst_ir,
                        std::abs(fit_monoexponential(t_ir, z, FitModel::InversionRecovery).time_constant / 3.0 - 1));
  }
  const bool ok = worst_decay < 0.02 && worst_ir < 0.02;
  return {ok ? Status::Pass : Status::Fail, "worst relative error over 100 noisy seeds: T_S " +
                                                fmt(100 * worst_decay, 3) + "%, T1 " + fmt(100 * worst_ir, 3) + "%"};
}

Outcome criterion10() {
  const SensitivityGain g = sensitivity_gain(3.0, 2.0);
  const bool ok = g.per_scan_gain == 3.0 * std::sqrt(2.0) && std::round(g.per_scan_gain * 1000) == 4243 &&
                  std::abs(g.time_reduction - 18.0) < 1e-12 && g.time_reduction == g.per_scan_gain * g.per_scan_gain;
  return {ok ? Status::Pass : Status::Fail,
          "sensitivity_gain(3, 2) = (" + fmt(g.per_scan_gain, 4) + ", " + fmt(g.time_reduction, 4) + ")"};
}

// Heat-bath pulse for one set of relaxation parameters: a pulse of the HBAC
// length optimized for the state entering iteration 1, used for every m >= 1.
struct HbacScenario {
  AffineGain ac;
  AffineGain hb;
  std::vector<HBACState> states;
  double fixed_point = 0;
};

HbacScenario run_hbac_scenario(const ThreeSpinRun& run, const RelaxationParams& rp, int m_max) {
  const Polarizations& thermal = run.cfg.polarizations;
  const AffineGain ac = linear_response_gain(run.problem, run.result.best);
  const HBACState first = hbac_simulate(rp, thermal, ac.as_function(), 0).front();
  GAConfig ga = run.cfg.ga;
  ga.generations = 1000;
  const auto templ = BBSequence::silent(run.cfg.dt, run.cfg.channel_labels(), kDefaultHbacSegments);
  const auto hb_run = optimize(run.problem.with_initial_state(first.eps_ancilla, first.eps_singlet), ga, templ);
  const AffineGain hb = linear_response_gain(run.problem, hb_run.best);
  return {ac, hb, hbac_simulate(rp, thermal, ac.as_function(), hb.as_function(), m_max),
          hbac_fixed_point(rp, thermal, hb)};
}

std::string describe(const HbacScenario& s, int shown) {
  std::ostringstream d;
  d << "HBAC gain dS/dH " << fmt(s.hb.ancilla.at("1H")) << ", dS/dC " << fmt(s.hb.ancilla.at("13C")) << ", dS/dS "
    << fmt(s.hb.singlet) << ", eps_S";
  for (int m = 0; m <= shown; ++m) d << (m ? "," : "") << " " << fmt(s.states[m].eps_singlet);
  return d.str();
}

Outcome criterion11() {
  const ThreeSpinRun& run = three_spin_run();

  RelaxationParams contrast = *run.cfg.relaxation;
  contrast.t_singlet = 250.0;
  const HbacScenario high = run_hbac_scenario(run, contrast, 200);
  bool increasing = true;
  for (int m = 1; m <= 10; ++m) increasing = increasing && high.states[m].eps_singlet > high.states[m - 1].eps_singlet;
  const double fixed_err = std::abs(high.states.back().eps_singlet - high.fixed_point);

  const HbacScenario measured = run_hbac_scenario(run, *run.cfg.relaxation, 10);
  const double g1 = measured.states[1].eps_singlet - measured.states[0].eps_singlet;
  const double g2 = measured.states[2].eps_singlet - measured.states[1].eps_singlet;
  // an iteration that loses order leaves nothing for the next one to add to
  const bool marginal = g2 < kHbacMarginalThreshold * std::max(g1, 0.0);

  const bool ok = increasing && fixed_err < 1e-9 && marginal;
  return {ok ? Status::Pass : Status::Fail,
          "T_S 250 s: " + describe(high, 3) + ", increasing " + (increasing ? "yes" : "no") + ", fixed point " +
              fmt(high.fixed_point) + " (|eps_200 - fixed| " + fmt(fixed_err) + "); T_S 25.9 s: " +
              describe(measured, 3) + ", iteration gains " + fmt(g1) + ", " + fmt(g2) + " (threshold " +
              fmt(kHbacMarginalThreshold) + " x max(gain 1, 0))"};
}

}  // namespace
}  // namespace bbsinglet::acceptance

int main(int argc, char** argv) {
  using namespace bbsinglet::acceptance;
  CLI::App app{"Acceptance checks"};
  bool run_long = false;
  std::vector<int> only;
  app.add_flag("--long", run_long, "Also run the long 11-spin optimization (criterion 8)");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);
  if (const char* env = std::getenv("BBSINGLET_LONG_TESTS"); env && std::string(env) == "1") run_long = true;

  const std::map<int, std::function<Outcome()>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, [&] { return criterion8(run_long); }},
      {9, criterion9}, {10, criterion10}, {11, criterion11}};
  const std::set<int> selected(only.begin(), only.end());
  const std::map<int, double> budget{{1, 10.0}, {2, 30.0}, {9, 10.0}};

  int failures = 0;
  for (const auto& [n, check] : criteria) {
    if (!selected.empty() && !selected.count(n)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (out.status == Status::Pass && budget.count(n) && secs >= budget.at(n)) {
      out.status = Status::Fail;
      out.detail += "; over the " + fmt(budget.at(n)) + " s budget";
    }
    const char* label = out.status == Status::Pass ? "PASS" : out.status == Status::Fail ? "FAIL" : "SKIP";
    std::cout << "criterion " << n << " " << label << " " << out.detail << " [" << fmt(secs, 3) << " s]"
              << std::endl;
    failures += out.status == Status::Fail;
  }
  return failures == 0 ? 0 : 1;
}
