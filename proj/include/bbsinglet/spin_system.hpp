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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bbsinglet/operator_algebra.hpp"

namespace bbsinglet {

// Hard cap on spins (dimension 4096) for dense Zeeman-basis operators.
inline constexpr int kMaxDenseSpins = 12;

struct SpeciesChannel {
  std::string label;          // e.g. "1H", "13C"
  double relative_gamma = 1;  // gyromagnetic ratio relative to a reference species
  double rf_amplitude_hz = 0; // nutation frequency available on this channel
};

struct SpinSite {
  int index = 0;
  int channel = 0;       // index into SpinSystem::channels()
  double offset_hz = 0;  // rotating-frame offset from the channel carrier
};

enum class CouplingForm { Weak, Isotropic };

struct Coupling {
  double j_hz = 0;
  CouplingForm form = CouplingForm::Weak;

  friend bool operator==(const Coupling&, const Coupling&) = default;
};

// J couplings keyed by (i, j) with i < j; lookup accepts either order.
class CouplingTable {
 public:
  void set(int i, int j, Coupling c);
  std::optional<Coupling> get(int i, int j) const;
  const std::map<std::pair<int, int>, Coupling>& entries() const { return entries_; }

 private:
  std::map<std::pair<int, int>, Coupling> entries_;
};

class SpinSystem {
 public:
  SpinSystem(std::vector<SpeciesChannel> channels, std::vector<SpinSite> sites,
             CouplingTable couplings, std::array<int, 2> singlet_pair);

  const std::vector<SpeciesChannel>& channels() const { return channels_; }
  const std::vector<SpinSite>& sites() const { return sites_; }
  const CouplingTable& couplings() const { return couplings_; }
  std::array<int, 2> singlet_pair() const { return pair_; }

  int size() const { return static_cast<int>(sites_.size()); }
  Index dim() const { return Index{1} << sites_.size(); }
  int channel_index(const std::string& label) const;  // throws on unknown label
  const SpeciesChannel& pair_species() const { return channels_[sites_[pair_[0]].channel]; }
  std::vector<int> sites_of(int channel) const;

 private:
  std::vector<SpeciesChannel> channels_;
  std::vector<SpinSite> sites_;
  CouplingTable couplings_;
  std::array<int, 2> pair_;
};

enum class Axis { X, Y, Z };

// Single-site spin-1/2 operator embedded in the full Zeeman basis.
ComplexMatrix site_operator(int n_spins, int site, Axis axis);

HermitianOperator build_collective_operator(const SpinSystem& sys, const std::string& species,
                                            Axis axis);

// H0 in rad/s: offsets plus weak (zz) or isotropic couplings.
HermitianOperator build_internal_hamiltonian(const SpinSystem& sys);

// |S0><S0| on the singlet pair, identity elsewhere.
HermitianOperator build_singlet_projector(const SpinSystem& sys);

enum class StateMode { Full, Deviation };

// Full mode: unit-trace, positive. Deviation mode: traceless part of a
// high-temperature state in relative polarization units.
class DensityState {
 public:
  DensityState(ComplexMatrix m, StateMode mode,
               const NumericalPolicy& policy = default_policy());

  const ComplexMatrix& matrix() const { return m_; }
  StateMode mode() const { return mode_; }
  Index dim() const { return m_.rows(); }

  // Largest kappa for which 1/d + kappa * deviation stays positive
  // semidefinite. Only meaningful in deviation mode.
  double full_scale() const;
  // Full-mode reconstruction 1/d + kappa * deviation (identity for full mode).
  DensityState to_full(std::optional<double> kappa = std::nullopt) const;

 private:
  ComplexMatrix m_;
  StateMode mode_;
};

using Polarizations = std::map<std::string, double>;

// epsilon_k per species from relative_gamma (epsilon_H / epsilon_C = gamma_H / gamma_C).
Polarizations thermal_polarizations(const SpinSystem& sys);

DensityState build_thermal_state(const SpinSystem& sys, const Polarizations& polarizations);

struct CommutationReport {
  bool passed = true;
  std::vector<std::pair<std::string, double>> channel_residuals;  // label, ||[H0, Z]||_max
  std::vector<std::string> offending_couplings;

  std::string summary() const;
};

CommutationReport validate_z_commutation(const SpinSystem& sys,
                                         const NumericalPolicy& policy = default_policy());

// epsilon_S = (4Q - 1) / 3.
double singlet_order_from_q(double q);

// The operators a bang-bang sequence needs, in whichever basis they were
// built: internal Hamiltonian, and per channel the collective Ix together
// with the diagonal of the collective Iz.
struct DriveOperator {
  std::string label;
  double amplitude_hz = 0;
  HermitianOperator ix;
  RealVector iz;
};

struct ControlModel {
  HermitianOperator h0;
  std::vector<DriveOperator> drives;

  Index dim() const { return h0.dim(); }
};

ControlModel build_control_model(const SpinSystem& sys);

// sum_k epsilon_k Iz^k (diagonal) for a control model whose drives are
// labelled by species.
RealVector thermal_deviation_diagonal(const ControlModel& model, const Polarizations& pols);

}  // namespace bbsinglet
