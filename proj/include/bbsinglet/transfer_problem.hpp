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

#pragma once

// Singlet-order transfer problem: a thermal (or prescribed) initial state,
// the propagator caches and the singlet projector, organised as a list of
// weighted blocks. The dense engine uses a single block in the Zeeman basis;
// the reduced engine uses the equivalent-spin sectors of symmetry.hpp. Both
// produce the same Q for every sequence.

#include <memory>
#include <vector>

#include "bbsinglet/bb_engine.hpp"
#include "bbsinglet/symmetry.hpp"

namespace bbsinglet {

enum class EngineKind { Auto, Dense, Reduced };

const char* engine_name(EngineKind kind);

struct ProblemBlock {
  double multiplicity = 1;
  std::shared_ptr<const PropagatorCache> cache;
  ComplexMatrix rho_dev;
  bool rho_diagonal = true;
  HermitianOperator projector;
  ComplexMatrix target_range;  // orthonormal columns spanning range(projector)
};

class SingletTransferProblem {
 public:
  static SingletTransferProblem build(const SpinSystem& sys, double dt, const Polarizations& pols,
                                      EngineKind engine = EngineKind::Auto,
                                      const NumericalPolicy& policy = default_policy());

  // Same propagators, new initial deviation: Zeeman polarization per species
  // plus a singlet order epsilon_S on the pair, both in relative units
  // (singlet order e enters as 2 e (P - 1/4)).
  SingletTransferProblem with_initial_state(const Polarizations& zeeman,
                                            double singlet_order) const;

  EngineKind engine() const { return engine_; }
  const std::vector<ProblemBlock>& blocks() const { return blocks_; }
  double full_dim() const { return full_dim_; }
  double scale() const { return kappa_; }
  double reference_polarization() const { return eps_ref_; }
  double dt() const { return blocks_.front().cache->dt(); }
  const std::vector<std::string>& channel_labels() const {
    return blocks_.front().cache->channel_labels();
  }
  const std::vector<double>& amplitudes_hz() const {
    return blocks_.front().cache->amplitudes_hz();
  }

  // sum_b w_b Tr[U rho_dev U^dagger P], via back-propagation of range(P).
  double overlap(const BBSequence& seq) const;
  double fitness(const BBSequence& seq) const { return q_from_overlap(overlap(seq)); }
  double enhancement(const BBSequence& seq) const { return enhancement_from_overlap(overlap(seq)); }

  double q_from_overlap(double x) const { return 0.25 + kappa_ * x; }
  double singlet_order_from_overlap(double x) const {
    return singlet_order_per_overlap(static_cast<Index>(full_dim_)) * x;
  }
  double enhancement_from_overlap(double x) const { return singlet_order_from_overlap(x) / eps_ref_; }

  // Majorization ceilings over all unitaries.
  double overlap_ceiling() const { return overlap_ceiling_; }
  double ceiling() const { return q_from_overlap(overlap_ceiling_); }
  double enhancement_ceiling() const { return enhancement_from_overlap(overlap_ceiling_); }

  // Forward state propagation; samples every stride segments and at the end.
  TrajectoryRecord trajectory(const BBSequence& seq, int stride) const;

  // Rough per-segment cost (sum of multiplications) used for reporting.
  double work_per_segment() const;

 private:
  void finalize();

  EngineKind engine_ = EngineKind::Dense;
  std::vector<ProblemBlock> blocks_;
  double full_dim_ = 0;
  double kappa_ = 1;
  double eps_ref_ = 1;
  double overlap_ceiling_ = 0;
};

}  // namespace bbsinglet
