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

#include <gtest/gtest.h>

#include <sstream>

#include "bbsinglet/bb_engine.hpp"
#include "bbsinglet/transfer_problem.hpp"
#include "test_support.hpp"

namespace bbsinglet {
namespace {

using std::numbers::pi;

BBSequence one_segment(const std::vector<std::string>& labels, std::vector<ChannelSetting> chans,
                       double dt = kDefaultDt) {
  return BBSequence(dt, labels, {Segment{std::move(chans)}});
}

TEST(Phase, WrapAndDegrees) {
  EXPECT_DOUBLE_EQ(wrap_phase(0.0), 0.0);
  EXPECT_NEAR(wrap_phase(2 * pi + 0.5), 0.5, 1e-15);
  EXPECT_NEAR(wrap_phase(-0.5), 2 * pi - 0.5, 1e-15);
  EXPECT_LT(wrap_phase(2 * pi), 2 * pi);
  EXPECT_DOUBLE_EQ(phase_from_degrees(90.0), pi / 2);
  EXPECT_DOUBLE_EQ(phase_from_degrees(360.0), 0.0);
  EXPECT_NEAR(phase_to_degrees(phase_from_degrees(271.0)), 271.0, 1e-12);
  EXPECT_NEAR(phase_from_degrees(-90.0), 3 * pi / 2, 1e-15);
}

TEST(Sequence, ConstructionAndDuration) {
  const auto s = BBSequence::silent(kDefaultDt, {"13C", "1H"}, kDefaultAcSegments);
  EXPECT_EQ(s.size(), 592u);
  EXPECT_NEAR(s.total_duration(), 0.296, 1e-12);
  EXPECT_NEAR(kDefaultHbacSegments * kDefaultDt, 0.2485, 1e-12);
  EXPECT_THROW(BBSequence(0.0, {"13C"}, {}), std::invalid_argument);
  EXPECT_THROW(BBSequence(kDefaultDt, {"13C"}, {Segment{{{true, 0.0}, {true, 0.0}}}}), std::invalid_argument);
  EXPECT_EQ((Segment{{{true, 0.0}, {false, 1.0}, {true, 2.0}}}).active_mask(), 5u);
}

TEST(PropagatorCache, SubsetCountAndDelay) {
  std::mt19937_64 rng(31);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  EXPECT_EQ(cache.bang_count(), 3u);
  EXPECT_EQ(cache.channel_count(), 2u);
  EXPECT_EQ(cache.dim(), 8);
  EXPECT_LT(max_abs(cache.delay().unitary.matrix() - testing::oracle_expm(testing::oracle_h0(sys), kDefaultDt)), 1e-12);
  EXPECT_EQ(cache.bang(0).unitary.matrix(), cache.delay().unitary.matrix());
  const PropagatorCache single = precompute_propagators(testing::carbon_pair(), kDefaultDt);
  EXPECT_EQ(single.bang_count(), 1u);
  EXPECT_THROW(precompute_propagators(sys, 0.0), std::invalid_argument);
}

TEST(PropagatorCache, BangsMatchDirectExponentiation) {
  std::mt19937_64 rng(32);
  for (int n : {2, 3, 4}) {
    const SpinSystem sys = testing::random_hetero_system(n, rng);
    const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
    for (unsigned mask = 1; mask < 4; ++mask) {
      Segment seg;
      for (int k = 0; k < 2; ++k) seg.channels.push_back({((mask >> k) & 1u) != 0, 0.0});
      const ComplexMatrix oracle = testing::oracle_expm(testing::segment_hamiltonian(sys, seg), kDefaultDt);
      EXPECT_LT(max_abs(cache.bang(mask).unitary.matrix() - oracle), 1e-10) << n << " " << mask;
      EXPECT_LT(max_abs(segment_unitary(cache, seg).matrix() - oracle), 1e-10);
    }
  }
}

TEST(PropagatorCache, RefusesHeteronuclearIsotropicCoupling) {
  CouplingTable t;
  t.set(0, 2, {140.0, CouplingForm::Isotropic});
  const SpinSystem sys({{"13C", 1.0, 250.0}, {"1H", 4.0, 250.0}}, {{0, 0, 25.0}, {1, 0, -25.0}, {2, 1, 0.0}}, t,
                       {0, 1});
  try {
    precompute_propagators(sys, kDefaultDt);
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("weak"), std::string::npos);
  }
}

TEST(SegmentUnitary, PhaseQuarterTurnIsYDrive) {
  const SpinSystem sys = testing::carbon_pair_with_protons(1);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const Segment seg{{{true, pi / 2}, {false, 0.0}}};
  const ComplexMatrix h = testing::oracle_h0(sys) +
                          testing::kTwoPi * 250.0 * testing::oracle_collective(sys, 0, Axis::Y);
  EXPECT_LT(max_abs(segment_unitary(cache, seg).matrix() - testing::oracle_expm(h, kDefaultDt)), 1e-9);
}

TEST(SegmentUnitary, RandomPhasesMatchOracle) {
  std::mt19937_64 rng(33);
  for (int n : {2, 3}) {
    const SpinSystem sys = testing::random_hetero_system(n, rng);
    const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
    const BBSequence seq = testing::random_sequence(20, {"13C", "1H"}, rng);
    for (const auto& seg : seq.segments()) {
      const ComplexMatrix oracle = testing::oracle_expm(testing::segment_hamiltonian(sys, seg), kDefaultDt);
      ASSERT_LT(max_abs(segment_unitary(cache, seg).matrix() - oracle), 1e-9);
    }
  }
}

TEST(SegmentUnitary, SilentAndZeroPhase) {
  std::mt19937_64 rng(34);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  EXPECT_EQ(segment_unitary(cache, Segment{{{false, 1.0}, {false, 2.0}}}).matrix(),
            cache.delay().unitary.matrix());
  EXPECT_EQ(segment_unitary(cache, Segment{{{true, 0.0}, {true, 0.0}}}).matrix(),
            cache.bang(3).unitary.matrix());
  EXPECT_EQ(cache.phase_diagonal(Segment{{{true, 0.0}, {false, 1.0}}}).size(), 0);
  EXPECT_THROW(segment_unitary(cache, Segment{{{true, 0.0}}}), std::invalid_argument);
}

TEST(SegmentUnitary, PhasePeriodicity) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 2 * pi);
  const SpinSystem sys = testing::random_hetero_system(4, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng);
    const Segment s1{{{true, a}, {true, b}}};
    const Segment s2{{{true, a + 2 * pi}, {true, b + 2 * pi}}};
    ASSERT_LT(max_abs(segment_unitary(cache, s1).matrix() - segment_unitary(cache, s2).matrix()), 1e-12);
  }
}

TEST(SegmentUnitary, ApplyMatchesProductAndIsUnitary) {
  std::mt19937_64 rng(36);
  const SpinSystem sys = testing::random_hetero_system(4, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const BBSequence seq = testing::random_sequence(15, {"13C", "1H"}, rng);
  for (const auto& seg : seq.segments()) {
    const ComplexMatrix u = segment_unitary(cache, seg).matrix();
    EXPECT_LT(unitarity_defect(u), 1e-12);
    ComplexMatrix m = testing::random_complex(cache.dim(), 3, rng);
    const ComplexMatrix expect_fwd = u * m, expect_adj = u.adjoint() * m;
    ComplexMatrix fwd = m, adj = m;
    cache.apply(seg, fwd);
    cache.apply_adjoint(seg, adj);
    EXPECT_LT(max_abs(fwd - expect_fwd), 1e-12);
    EXPECT_LT(max_abs(adj - expect_adj), 1e-12);
  }
}

TEST(SequenceUnitary, SilentEqualsSingleExponential) {
  std::mt19937_64 rng(37);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const auto seq = BBSequence::silent(kDefaultDt, {"13C", "1H"}, 100);
  const ComplexMatrix oracle = testing::oracle_expm(testing::oracle_h0(sys), 100 * kDefaultDt);
  const UnitaryPropagator u = sequence_unitary(cache, seq);
  EXPECT_LT(max_abs(u.matrix() - oracle), 1e-8);
  EXPECT_NEAR(u.duration(), 0.05, 1e-12);
  const UnitaryPropagator empty = sequence_unitary(cache, BBSequence(kDefaultDt, {"13C", "1H"}, {}));
  EXPECT_EQ(empty.matrix(), ComplexMatrix::Identity(8, 8));
}

TEST(SequenceUnitary, OrderAndInverse) {
  std::mt19937_64 rng(38);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const BBSequence seq = testing::random_sequence(40, {"13C", "1H"}, rng);
  ComplexMatrix product = ComplexMatrix::Identity(8, 8);
  for (const auto& seg : seq.segments())
    product = testing::oracle_expm(testing::segment_hamiltonian(sys, seg), kDefaultDt) * product;
  const ComplexMatrix u = sequence_unitary(cache, seq).matrix();
  EXPECT_LT(max_abs(u - product), 1e-8);
  ComplexMatrix back = u;
  for (auto it = seq.segments().rbegin(); it != seq.segments().rend(); ++it) cache.apply_adjoint(*it, back);
  EXPECT_LT(max_abs(back - ComplexMatrix::Identity(8, 8)), 1e-8);
}

TEST(SequenceUnitary, FortyFiveDegreeNutation) {
  // 250 Hz for 0.5 ms on a single isolated spin is a 45 degree turn about x
  const SpinSystem sys({{"13C", 1.0, 250.0}}, {{0, 0, 0.0}, {1, 0, 0.0}}, {}, {0, 1});
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const ComplexMatrix u = sequence_unitary(cache, one_segment({"13C"}, {{true, 0.0}})).matrix();
  const ComplexMatrix rho = testing::oracle_collective(sys, 0, Axis::Z);
  const ComplexMatrix out = conjugate(u, rho);
  const ComplexMatrix iy = testing::oracle_collective(sys, 0, Axis::Y);
  const ComplexMatrix iz = rho;
  EXPECT_NEAR(expectation(out, iz) / expectation(rho, iz), std::cos(pi / 4), 1e-12);
  EXPECT_NEAR(expectation(out, iy) / expectation(rho, iz), -std::sin(pi / 4), 1e-12);
}

SingletMetric metric_for(const SpinSystem& sys, double ref = 1.0) {
  return SingletMetric{build_singlet_projector(sys), ref};
}

TEST(PropagateState, ZeroDeviationIsConstant) {
  std::mt19937_64 rng(39);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const DensityState zero(ComplexMatrix::Zero(8, 8), StateMode::Deviation);
  const auto rec = propagate_state(cache, testing::random_sequence(30, {"13C", "1H"}, rng), zero,
                                   metric_for(sys), {}, 7);
  ASSERT_EQ(rec.times.size(), 6u);  // 0, 7, 14, 21, 28, 30
  EXPECT_NEAR(rec.times.back(), 30 * kDefaultDt, 1e-15);
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    EXPECT_DOUBLE_EQ(rec.q_values[i], 0.25);
    EXPECT_DOUBLE_EQ(rec.enhancement[i], 0.0);
  }
}

TEST(PropagateState, SilentThermalHasNoSingletOrder) {
  const SpinSystem sys = testing::carbon_pair_with_protons(1);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const DensityState rho = build_thermal_state(sys, thermal_polarizations(sys));
  const auto rec = propagate_state(cache, BBSequence::silent(kDefaultDt, {"13C", "1H"}, 50), rho,
                                   metric_for(sys), {}, 10);
  for (double e : rec.enhancement) EXPECT_NEAR(e, 0.0, 1e-14);
  for (double q : rec.q_values) EXPECT_NEAR(q, 0.25, 1e-14);
}

TEST(PropagateState, ObservablesTracePreservationAndLinearity) {
  std::mt19937_64 rng(40);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const BBSequence seq = testing::random_sequence(25, {"13C", "1H"}, rng);
  const ComplexMatrix r1 = testing::random_density(8, rng), r2 = testing::random_density(8, rng);
  const std::vector<HermitianOperator> obs{HermitianOperator(ComplexMatrix::Identity(8, 8)),
                                           HermitianOperator(testing::oracle_collective(sys, 0, Axis::X))};
  const auto a = propagate_state(cache, seq, DensityState(r1, StateMode::Full), metric_for(sys), obs, 5);
  const auto b = propagate_state(cache, seq, DensityState(r2, StateMode::Full), metric_for(sys), obs, 5);
  const auto c = propagate_state(cache, seq, DensityState(0.3 * r1 + 0.7 * r2, StateMode::Full), metric_for(sys),
                                 obs, 5);
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    EXPECT_NEAR(a.observables[0][i], 1.0, 1e-12);
    EXPECT_NEAR(c.observables[1][i], 0.3 * a.observables[1][i] + 0.7 * b.observables[1][i], 1e-12);
    EXPECT_NEAR(c.q_values[i], 0.3 * a.q_values[i] + 0.7 * b.q_values[i], 1e-12);
  }
  // final point against the full unitary
  const ComplexMatrix u = sequence_unitary(cache, seq).matrix();
  EXPECT_NEAR(a.q_values.back(), expectation(conjugate(u, r1), build_singlet_projector(sys).matrix()), 1e-12);
  EXPECT_NEAR(a.enhancement.back(), singlet_order_from_q(a.q_values.back()), 1e-12);

  const std::vector<HermitianOperator> bad{HermitianOperator(ComplexMatrix::Identity(4, 4))};
  EXPECT_THROW(propagate_state(cache, seq, DensityState(r1, StateMode::Full), metric_for(sys), bad, 5),
               std::invalid_argument);
  EXPECT_THROW(propagate_state(cache, seq, DensityState(r1, StateMode::Full), metric_for(sys), {}, 0),
               std::invalid_argument);
}

TEST(PropagateState, SpectrumIsPreserved) {
  std::mt19937_64 rng(41);
  const SpinSystem sys = testing::random_hetero_system(3, rng);
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const BBSequence seq = testing::random_sequence(30, {"13C", "1H"}, rng);
  const ComplexMatrix rho = build_thermal_state(sys, {{"13C", 1.0}, {"1H", 4.0}}).matrix();
  const ComplexMatrix out = conjugate(sequence_unitary(cache, seq).matrix(), rho);
  const RealVector a = hermitian_spectrum(HermitianOperator(rho));
  const RealVector b = hermitian_spectrum(HermitianOperator(0.5 * (out + out.adjoint())));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(out.trace().real(), 0.0, 1e-12);
}

TEST(PropagateState, DeviationEnhancementMatchesProblem) {
  std::mt19937_64 rng(42);
  const SpinSystem sys = testing::carbon_pair_with_protons(2);
  const Polarizations pols{{"13C", 1.0}, {"1H", 4.0}};
  const PropagatorCache cache = precompute_propagators(sys, kDefaultDt);
  const auto problem = SingletTransferProblem::build(sys, kDefaultDt, pols, EngineKind::Dense);
  const BBSequence seq = testing::random_sequence(50, {"13C", "1H"}, rng);
  const auto rec = propagate_state(cache, seq, build_thermal_state(sys, pols), metric_for(sys), {}, 10);
  const auto tr = problem.trajectory(seq, 10);
  ASSERT_EQ(rec.times.size(), tr.times.size());
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    EXPECT_NEAR(rec.q_values[i], tr.q_values[i], 1e-12);
    EXPECT_NEAR(rec.enhancement[i], tr.enhancement[i], 1e-12);
  }
}

TEST(Readout, Examples) {
  const SpinSystem sys = testing::carbon_pair();
  const ComplexMatrix p = testing::singlet_projector_4();
  EXPECT_NEAR(readout_amplitude(DensityState(p, StateMode::Full), sys), 0.25, 1e-14);
  EXPECT_NEAR(readout_amplitude(DensityState(0.25 * ComplexMatrix::Identity(4, 4), StateMode::Full), sys), 0.0,
              1e-14);
  const ComplexMatrix half = 0.5 * p + 0.125 * ComplexMatrix::Identity(4, 4);
  EXPECT_NEAR(readout_amplitude(DensityState(half, StateMode::Full), sys), 0.125, 1e-14);
  // brute force on the 4x4 space
  const ComplexMatrix op = testing::kron_site(2, 0, Axis::Z) * testing::kron_site(2, 1, Axis::Y) -
                           testing::kron_site(2, 0, Axis::Y) * testing::kron_site(2, 1, Axis::Z) +
                           testing::kron_site(2, 0, Axis::X) * testing::kron_site(2, 1, Axis::X);
  std::mt19937_64 rng(43);
  const ComplexMatrix r = testing::random_density(4, rng);
  EXPECT_NEAR(readout_amplitude(DensityState(r, StateMode::Full), sys), -(r * op).trace().real(), 1e-14);
  // embedded pair with spectator spins
  const SpinSystem big = testing::carbon_pair_with_protons(2);
  const ComplexMatrix embedded = kron(half, 0.25 * ComplexMatrix::Identity(4, 4));
  EXPECT_NEAR(readout_amplitude(DensityState(embedded, StateMode::Full), big), 0.125, 1e-14);
}

TEST(PulseTable, RoundTrip) {
  std::mt19937_64 rng(44);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> deg(0, 359);
  std::vector<Segment> segs(30);
  for (auto& s : segs)
    for (int k = 0; k < 2; ++k) s.channels.push_back({coin(rng), phase_from_degrees(deg(rng))});
  const BBSequence seq(kDefaultDt, {"13C", "1H"}, segs);
  const std::vector<double> amps{250.0, 250.0};
  std::stringstream ss;
  write_pulse_table(ss, seq, amps);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "index,duration_ms,13C_amp_hz,13C_phase_deg,1H_amp_hz,1H_phase_deg");
  const BBSequence back = read_pulse_table(ss, {"13C", "1H"}, amps, kDefaultDt);
  EXPECT_EQ(back, seq);
}

TEST(PulseTable, ErrorsNameTheField) {
  const std::vector<double> amps{250.0};
  auto read = [&](const std::string& text) {
    std::istringstream is(text);
    return read_pulse_table(is, {"13C"}, amps, kDefaultDt);
  };
  const std::string header = "index,duration_ms,13C_amp_hz,13C_phase_deg\n";
  EXPECT_EQ(read(header + "0,0.5,250,90\n").size(), 1u);
  auto message = [&](const std::string& text) {
    try {
      read(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(header + "0,0.5,250,abc\n").find("13C_phase_deg"), std::string::npos);
  EXPECT_NE(message(header + "0,0.5,100,0\n").find("13C_amp_hz"), std::string::npos);
  EXPECT_NE(message(header + "0,0.7,250,0\n").find("duration_ms"), std::string::npos);
  EXPECT_NE(message(header + "1,0.5,250,0\n").find("index"), std::string::npos);
  EXPECT_NE(message("index,duration_ms,1H_amp_hz,1H_phase_deg\n").find("13C_amp_hz"), std::string::npos);
  EXPECT_FALSE(message("").empty());
  EXPECT_FALSE(message(header + "0,0.5,250\n").empty());
}

}  // namespace
}  // namespace bbsinglet
