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

#include "bbsinglet/transfer_problem.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace bbsinglet {
namespace {

ComplexMatrix range_isometry(const HermitianOperator& p) {
  const HermitianEigensystem es = eigh(p);
  std::vector<Index> cols;
  for (Index i = 0; i < es.values.size(); ++i)
    if (es.values(i) > 0.5) cols.push_back(i);
  return es.vectors(Eigen::all, cols);
}

// Weighted spectra: (value, count) pairs.
using Spectrum = std::vector<std::pair<double, double>>;

double weighted_majorization(Spectrum a, Spectrum b) {
  auto desc = [](const auto& x, const auto& y) { return x.first > y.first; };
  std::sort(a.begin(), a.end(), desc);
  std::sort(b.begin(), b.end(), desc);
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double left_a = a.empty() ? 0 : a[0].second, left_b = b.empty() ? 0 : b[0].second;
  while (i < a.size() && j < b.size()) {
    const double take = std::min(left_a, left_b);
    total += take * a[i].first * b[j].first;
    left_a -= take;
    left_b -= take;
    if (left_a <= 0 && ++i < a.size()) left_a = a[i].second;
    if (left_b <= 0 && ++j < b.size()) left_b = b[j].second;
  }
  return total;
}

}  // namespace

const char* engine_name(EngineKind kind) {
  switch (kind) {
    case EngineKind::Auto:
      return "auto";
    case EngineKind::Dense:
      return "dense";
    case EngineKind::Reduced:
      return "reduced";
  }
  return "?";
}

SingletTransferProblem SingletTransferProblem::build(const SpinSystem& sys, double dt,
                                                     const Polarizations& pols, EngineKind engine,
                                                     const NumericalPolicy& policy) {
  const CommutationReport report = validate_z_commutation(sys, policy);
  if (!report.passed)
    throw std::invalid_argument(
        "H0 does not commute with collective z rotations; use the weak coupling form between "
        "different species. " + report.summary());

  SingletTransferProblem prob;
  SymmetryReduction reduction = reduce_by_equivalence(sys, engine != EngineKind::Dense);
  if (engine == EngineKind::Auto)
    engine = reduction.has_equivalent_spins() ? EngineKind::Reduced : EngineKind::Dense;
  prob.engine_ = engine;

  if (engine == EngineKind::Dense) {
    ProblemBlock b;
    const ControlModel model = build_control_model(sys);
    b.cache = std::make_shared<const PropagatorCache>(PropagatorCache::build(model, dt, policy));
    b.rho_dev = thermal_deviation_diagonal(model, pols).cast<Complex>().asDiagonal();
    b.projector = build_singlet_projector(sys);
    b.target_range = range_isometry(b.projector);
    prob.blocks_.push_back(std::move(b));
  } else {
    for (auto& sector : reduction.sectors) {
      ProblemBlock b;
      b.multiplicity = sector.multiplicity;
      b.cache = std::make_shared<const PropagatorCache>(
          PropagatorCache::build(sector.model, dt, policy));
      b.rho_dev = thermal_deviation_diagonal(sector.model, pols).cast<Complex>().asDiagonal();
      b.projector = sector.singlet_projector;
      b.target_range = range_isometry(b.projector);
      prob.blocks_.push_back(std::move(b));
    }
  }
  prob.full_dim_ = static_cast<double>(sys.dim());
  const auto ref = pols.find(sys.pair_species().label);
  if (ref == pols.end() || ref->second == 0.0)
    throw std::invalid_argument("the singlet-pair species needs a nonzero reference polarization");
  prob.eps_ref_ = ref->second;
  prob.finalize();
  return prob;
}

void SingletTransferProblem::finalize() {
  Spectrum rho_spec, p_spec;
  double lowest = 0.0;
  for (auto& b : blocks_) {
    b.rho_diagonal = is_diagonal(b.rho_dev);
    const RealVector lr = hermitian_spectrum(HermitianOperator(b.rho_dev));
    const RealVector lp = hermitian_spectrum(b.projector);
    for (Index i = 0; i < lr.size(); ++i) {
      rho_spec.emplace_back(lr(i), b.multiplicity);
      p_spec.emplace_back(lp(i), b.multiplicity);
      lowest = std::min(lowest, lr(i));
    }
  }
  kappa_ = lowest < 0.0 ? 1.0 / (full_dim_ * -lowest) : 1.0;
  overlap_ceiling_ = weighted_majorization(std::move(rho_spec), std::move(p_spec));
}

SingletTransferProblem SingletTransferProblem::with_initial_state(const Polarizations& zeeman,
                                                                  double singlet_order) const {
  SingletTransferProblem out = *this;
  for (auto& b : out.blocks_) {
    const Index d = b.cache->dim();
    RealVector diag = RealVector::Zero(d);
    for (std::size_t c = 0; c < b.cache->channel_count(); ++c) {
      auto it = zeeman.find(b.cache->channel_labels()[c]);
      if (it != zeeman.end()) diag += it->second * b.cache->iz_diagonal(c);
    }
    // pair state 1/4 + c e (P - 1/4), i.e. a deviation 2 e (P - 1/4) (x) 1_rest
    b.rho_dev = diag.cast<Complex>().asDiagonal();
    if (singlet_order != 0.0)
      b.rho_dev += 2.0 * singlet_order *
                   (b.projector.matrix() - 0.25 * ComplexMatrix::Identity(d, d));
  }
  out.finalize();
  return out;
}

double SingletTransferProblem::overlap(const BBSequence& seq) const {
  if (seq.channel_labels() != channel_labels())
    throw std::invalid_argument("sequence channels do not match the problem channels");
  double total = 0.0;
  const auto& segs = seq.segments();
  for (const auto& b : blocks_) {
    // W = U^dagger V, so Tr[U rho U^dagger V V^dagger] = Tr[W^dagger rho W].
    ComplexMatrix w = b.target_range;
    for (auto it = segs.rbegin(); it != segs.rend(); ++it) b.cache->apply_adjoint(*it, w);
    double x = 0.0;
    if (b.rho_diagonal) {
      const RealVector norms = w.rowwise().squaredNorm();
      x = b.rho_dev.diagonal().real().dot(norms);
    } else {
      x = (w.adjoint() * (b.rho_dev * w)).trace().real();
    }
    total += b.multiplicity * x;
  }
  return total;
}

TrajectoryRecord SingletTransferProblem::trajectory(const BBSequence& seq, int stride) const {
  if (stride < 1) throw std::invalid_argument("trajectory: stride must be >= 1");
  if (seq.channel_labels() != channel_labels())
    throw std::invalid_argument("sequence channels do not match the problem channels");
  const auto& segs = seq.segments();
  std::vector<std::size_t> marks{0};
  for (std::size_t n = 1; n <= segs.size(); ++n)
    if (n % static_cast<std::size_t>(stride) == 0 || n == segs.size()) marks.push_back(n);

  std::vector<double> overlaps(marks.size(), 0.0);
  for (const auto& b : blocks_) {
    ComplexMatrix state = b.rho_dev;
    std::size_t next = 0;
    for (std::size_t n = 0; n <= segs.size(); ++n) {
      if (n > 0) {
        b.cache->apply(segs[n - 1], state);
        state.adjointInPlace();
        b.cache->apply(segs[n - 1], state);
      }
      if (next < marks.size() && marks[next] == n) {
        overlaps[next] += b.multiplicity * expectation(state, b.projector.matrix());
        ++next;
      }
    }
  }
  TrajectoryRecord rec;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    rec.times.push_back(static_cast<double>(marks[i]) * seq.dt());
    rec.q_values.push_back(q_from_overlap(overlaps[i]));
    rec.enhancement.push_back(enhancement_from_overlap(overlaps[i]));
  }
  return rec;
}

double SingletTransferProblem::work_per_segment() const {
  double w = 0.0;
  for (const auto& b : blocks_)
    w += static_cast<double>(b.cache->dim()) * static_cast<double>(b.cache->dim()) *
         static_cast<double>(b.target_range.cols());
  return w;
}

}  // namespace bbsinglet
