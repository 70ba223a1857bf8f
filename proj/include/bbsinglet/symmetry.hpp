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

// Exact block reduction for magnetically equivalent spins.
//
// Spins of one species that share an offset and couple identically to every
// other spin can be exchanged without changing H0, the collective RF
// operators, the thermal state or the singlet projector. All of these then
// act on each group through its total spin only, so the Zeeman space splits
// into sectors labelled by one total spin S per group. Sectors with the same
// labels evolve identically; each distinct sector is simulated once and
// weighted by its multiplicity. The singlet pair is never grouped.

#include <array>
#include <vector>

#include "bbsinglet/spin_system.hpp"

namespace bbsinglet {

struct EquivalenceGroup {
  std::vector<int> sites;  // ascending
  int channel = 0;
};

// Partition of the sites into equivalence groups, ordered by first site.
std::vector<EquivalenceGroup> equivalence_groups(const SpinSystem& sys);

struct SpinMultiplicity {
  double spin;          // total spin S
  double multiplicity;  // number of copies of the spin-S irrep
};

// Total-spin decomposition of n spin-1/2 particles, largest S first.
std::vector<SpinMultiplicity> total_spin_decomposition(int n);

// Spin-S operator in the |S, M> basis ordered M = S, S-1, ..., -S.
ComplexMatrix spin_matrix(double spin, Axis axis);

struct SymmetrySector {
  std::vector<double> group_spin;  // one S per group, same order as the groups
  double multiplicity = 1;
  TensorLayout layout;             // one factor per group, dimension 2S+1
  ControlModel model;
  HermitianOperator singlet_projector;
  std::array<int, 2> pair_factors{};
};

struct SymmetryReduction {
  std::vector<EquivalenceGroup> groups;
  std::vector<SymmetrySector> sectors;

  // sum over sectors of multiplicity * dimension; equals 2^N.
  double represented_dim() const;
  // True when at least one group holds more than one site.
  bool has_equivalent_spins() const;
};

// With group_equivalent = false every site is its own group and the single
// sector reproduces the dense Zeeman-basis operators.
SymmetryReduction reduce_by_equivalence(const SpinSystem& sys, bool group_equivalent = true);

}  // namespace bbsinglet
