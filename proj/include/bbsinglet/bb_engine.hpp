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

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bbsinglet/operator_algebra.hpp"
#include "bbsinglet/spin_system.hpp"

namespace bbsinglet {

// Default segment length and sequence lengths (296 ms and 248.5 ms at 0.5 ms).
inline constexpr double kDefaultDt = 500e-6;
inline constexpr int kDefaultAcSegments = 592;
inline constexpr int kDefaultHbacSegments = 497;

// Wraps a phase into [0, 2 pi).
double wrap_phase(double phi);
// Degrees to a wrapped phase in radians. Every phase that enters a sequence
// from a table or from quantized sampling goes through here, which keeps
// table export/import bit-faithful.
double phase_from_degrees(double deg);
double phase_to_degrees(double phi);

struct ChannelSetting {
  bool active = false;
  double phase = 0.0;  // radians, [0, 2 pi)

  friend bool operator==(const ChannelSetting&, const ChannelSetting&) = default;
};

struct Segment {
  std::vector<ChannelSetting> channels;

  unsigned active_mask() const;
  friend bool operator==(const Segment&, const Segment&) = default;
};

class BBSequence {
 public:
  BBSequence(double dt, std::vector<std::string> channel_labels, std::vector<Segment> segments);

  // n silent segments.
  static BBSequence silent(double dt, std::vector<std::string> channel_labels, std::size_t n);

  double dt() const { return dt_; }
  const std::vector<std::string>& channel_labels() const { return labels_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::vector<Segment>& mutable_segments() { return segments_; }
  std::size_t size() const { return segments_.size(); }
  std::size_t channel_count() const { return labels_.size(); }
  double total_duration() const { return dt_ * static_cast<double>(segments_.size()); }

  friend bool operator==(const BBSequence&, const BBSequence&) = default;

 private:
  double dt_;
  std::vector<std::string> labels_;
  std::vector<Segment> segments_;
};

// One-time exponentiated propagators for fixed dt: the delay exp(-i H0 dt)
// and, for every nonempty channel subset S, the zero-phase bang
// X_S = exp(-i (H0 + sum_{k in S} 2 pi Omega_k Ix^k) dt).
class PropagatorCache {
 public:
  struct Entry {
    UnitaryPropagator unitary;
    // Index sets of the blocks of the (permuted) block-diagonal structure;
    // empty when the unitary is diagonal.
    std::vector<std::vector<Index>> blocks;
    std::vector<ComplexMatrix> block_matrices;
    bool diagonal = false;
  };

  static PropagatorCache build(const ControlModel& model, double dt,
                               const NumericalPolicy& policy = default_policy());

  double dt() const { return dt_; }
  Index dim() const { return dim_; }
  std::size_t channel_count() const { return labels_.size(); }
  const std::vector<std::string>& channel_labels() const { return labels_; }
  const std::vector<double>& amplitudes_hz() const { return amplitudes_; }
  const RealVector& iz_diagonal(std::size_t channel) const { return iz_[channel]; }

  const Entry& delay() const { return entries_[0]; }
  // mask = bit set of active channels; mask 0 is the delay.
  const Entry& bang(unsigned mask) const { return entries_.at(mask); }
  std::size_t bang_count() const { return entries_.size() - 1; }

  // Diagonal of Z = prod_{k active} exp(-i phi_k Iz^k); empty when every
  // active phase is zero.
  ComplexVector phase_diagonal(const Segment& seg) const;

  // m <- U_seg m and m <- U_seg^dagger m, applying Z by row scaling.
  void apply(const Segment& seg, ComplexMatrix& m) const;
  void apply_adjoint(const Segment& seg, ComplexMatrix& m) const;

 private:
  double dt_ = 0;
  Index dim_ = 0;
  std::vector<std::string> labels_;
  std::vector<double> amplitudes_;
  std::vector<RealVector> iz_;
  std::vector<Entry> entries_;
};

// Dense Zeeman-basis cache; refuses systems failing validate_z_commutation.
PropagatorCache precompute_propagators(const SpinSystem& sys, double dt,
                                       const NumericalPolicy& policy = default_policy());

UnitaryPropagator segment_unitary(const PropagatorCache& cache, const Segment& seg);

// U = U_N ... U_2 U_1 (segment 1 acts first).
UnitaryPropagator sequence_unitary(const PropagatorCache& cache, const BBSequence& seq);

// Singlet figure of merit. A deviation-mode state rho_dev = sum_k eps_k Iz^k
// in relative polarization units stands for the physical state
// 1/d + (2c/d) rho_dev with a small common scale c, so the singlet order of
// the pair is epsilon_S = (8 / 3d) c Tr[rho_dev P] and the enhancement
// epsilon_S / (c epsilon_ref) = (8 / 3d) Tr[rho_dev P] / epsilon_ref does not
// depend on c. Q itself uses the largest physical scale kappa:
//   Q = 1/4 + kappa Tr[rho_dev P].
// For full-mode states epsilon_S = (4Q - 1)/3 and epsilon_ref is taken as a
// physical polarization.
double singlet_order_per_overlap(Index dim);

struct SingletMetric {
  HermitianOperator projector;
  double reference_polarization = 1.0;
};

struct TrajectoryRecord {
  std::vector<double> times;        // seconds
  std::vector<double> q_values;
  std::vector<double> enhancement;  // epsilon_S(t) / epsilon_ref
  std::vector<std::vector<double>> observables;  // [observable][sample]
};

TrajectoryRecord propagate_state(const PropagatorCache& cache, const BBSequence& seq,
                                 const DensityState& rho, const SingletMetric& metric,
                                 std::span<const HermitianOperator> observables, int stride);

// -Tr[rho_pair (Iz1 Iy2 - Iy1 Iz2 + Ix1 Ix2)] after tracing out everything
// but the singlet pair.
double readout_amplitude(const DensityState& rho, const SpinSystem& sys);

// BB sequence text table: header then one row per segment
//   index,duration_ms,<label>_amp_hz,<label>_phase_deg,...
// Phases and durations are printed with 6 decimals.
void write_pulse_table(std::ostream& os, const BBSequence& seq,
                       std::span<const double> amplitudes_hz);
BBSequence read_pulse_table(std::istream& is, const std::vector<std::string>& channel_labels,
                            std::span<const double> amplitudes_hz, double expected_dt);

}  // namespace bbsinglet
