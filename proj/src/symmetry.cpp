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

#include "bbsinglet/symmetry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bbsinglet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

bool same_coupling(const std::optional<Coupling>& a, const std::optional<Coupling>& b) {
  if (!a || a->j_hz == 0.0) return !b || b->j_hz == 0.0;
  return b && *a == *b;
}

bool interchangeable(const SpinSystem& sys, int i, int j) {
  const auto& si = sys.sites()[i];
  const auto& sj = sys.sites()[j];
  if (si.channel != sj.channel || si.offset_hz != sj.offset_hz) return false;
  for (int k = 0; k < sys.size(); ++k) {
    if (k == i || k == j) continue;
    if (!same_coupling(sys.couplings().get(i, k), sys.couplings().get(j, k))) return false;
  }
  return true;
}

ComplexMatrix embed(const TensorLayout& layout, int factor, const ComplexMatrix& op) {
  Index left = 1, right = 1;
  for (int f = 0; f < factor; ++f) left *= layout.local_dims[f];
  for (int f = factor + 1; f < layout.factors(); ++f) right *= layout.local_dims[f];
  ComplexMatrix out = kron(ComplexMatrix::Identity(left, left), op);
  return kron(out, ComplexMatrix::Identity(right, right));
}

}  // namespace

std::vector<EquivalenceGroup> equivalence_groups(const SpinSystem& sys) {
  const auto pair = sys.singlet_pair();
  auto in_pair = [&](int s) { return s == pair[0] || s == pair[1]; };
  std::vector<EquivalenceGroup> groups;
  for (int s = 0; s < sys.size(); ++s) {
    bool placed = false;
    if (!in_pair(s)) {
      for (auto& g : groups) {
        if (in_pair(g.sites.front())) continue;
        bool ok = true;
        for (int member : g.sites) ok = ok && interchangeable(sys, s, member);
        // Couplings inside a group must be uniform.
        if (ok && g.sites.size() >= 2)
          ok = same_coupling(sys.couplings().get(s, g.sites[0]),
                             sys.couplings().get(g.sites[0], g.sites[1]));
        if (ok) {
          g.sites.push_back(s);
          placed = true;
          break;
        }
      }
    }
    if (!placed) groups.push_back(EquivalenceGroup{{s}, sys.sites()[s].channel});
  }
  return groups;
}

std::vector<SpinMultiplicity> total_spin_decomposition(int n) {
  std::vector<SpinMultiplicity> out;
  for (int k = 0; 2 * k <= n; ++k) {
    // S = n/2 - k appears C(n, k) - C(n, k-1) times.
    out.push_back({n / 2.0 - k, binomial(n, k) - binomial(n, k - 1)});
  }
  return out;
}

ComplexMatrix spin_matrix(double spin, Axis axis) {
  const auto dim = static_cast<Index>(std::lround(2.0 * spin + 1.0));
  ComplexMatrix raise = ComplexMatrix::Zero(dim, dim);
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (Index a = 0; a < dim; ++a) {
    const double m = spin - static_cast<double>(a);
    if (axis == Axis::Z) out(a, a) = m;
    if (a > 0) raise(a - 1, a) = std::sqrt(spin * (spin + 1.0) - m * (m + 1.0));
  }
  if (axis == Axis::X) out = 0.5 * (raise + raise.adjoint());
  if (axis == Axis::Y) out = Complex(0.0, -0.5) * (raise - raise.adjoint());
  return out;
}

double SymmetryReduction::represented_dim() const {
  double d = 0.0;
  for (const auto& s : sectors) d += s.multiplicity * static_cast<double>(s.layout.total_dim());
  return d;
}

bool SymmetryReduction::has_equivalent_spins() const {
  for (const auto& g : groups)
    if (g.sites.size() > 1) return true;
  return false;
}

SymmetryReduction reduce_by_equivalence(const SpinSystem& sys, bool group_equivalent) {
  SymmetryReduction red;
  if (group_equivalent) {
    red.groups = equivalence_groups(sys);
  } else {
    for (int s = 0; s < sys.size(); ++s)
      red.groups.push_back(EquivalenceGroup{{s}, sys.sites()[s].channel});
  }
  const auto ng = static_cast<int>(red.groups.size());
  std::vector<int> group_of(static_cast<std::size_t>(sys.size()));
  for (int g = 0; g < ng; ++g)
    for (int s : red.groups[g].sites) group_of[s] = g;

  std::vector<std::vector<SpinMultiplicity>> options;
  for (const auto& g : red.groups)
    options.push_back(total_spin_decomposition(static_cast<int>(g.sites.size())));

  const auto pair = sys.singlet_pair();
  std::vector<std::size_t> choice(static_cast<std::size_t>(ng), 0);
  while (true) {
    SymmetrySector sector;
    for (int g = 0; g < ng; ++g) {
      const auto& opt = options[g][choice[g]];
      sector.group_spin.push_back(opt.spin);
      sector.multiplicity *= opt.multiplicity;
      sector.layout.local_dims.push_back(static_cast<Index>(std::lround(2.0 * opt.spin + 1.0)));
    }
    const Index d = sector.layout.total_dim();
    std::vector<ComplexMatrix> fx, fy, fz;
    for (int g = 0; g < ng; ++g) {
      fx.push_back(embed(sector.layout, g, spin_matrix(sector.group_spin[g], Axis::X)));
      fy.push_back(embed(sector.layout, g, spin_matrix(sector.group_spin[g], Axis::Y)));
      fz.push_back(embed(sector.layout, g, spin_matrix(sector.group_spin[g], Axis::Z)));
    }

    ComplexMatrix h0 = ComplexMatrix::Zero(d, d);
    for (int g = 0; g < ng; ++g)
      h0 += kTwoPi * sys.sites()[red.groups[g].sites[0]].offset_hz * fz[g];
    for (int g = 0; g < ng; ++g) {
      const auto& members = red.groups[g].sites;
      const double n = static_cast<double>(members.size());
      if (members.size() >= 2) {
        if (auto c = sys.couplings().get(members[0], members[1]); c && c->j_hz != 0.0) {
          const ComplexMatrix id = ComplexMatrix::Identity(d, d);
          if (c->form == CouplingForm::Weak) {
            // sum_{i<j} Iz^i Iz^j = (Fz^2 - n/4) / 2
            h0 += kTwoPi * c->j_hz * 0.5 * (fz[g] * fz[g] - 0.25 * n * id);
          } else {
            const double s = sector.group_spin[g];
            h0 += kTwoPi * c->j_hz * 0.5 * (s * (s + 1.0) - 0.75 * n) * id;
          }
        }
      }
      for (int h = g + 1; h < ng; ++h) {
        auto c = sys.couplings().get(members[0], red.groups[h].sites[0]);
        if (!c || c->j_hz == 0.0) continue;
        ComplexMatrix term = fz[g] * fz[h];
        if (c->form == CouplingForm::Isotropic) term += fx[g] * fx[h] + fy[g] * fy[h];
        h0 += kTwoPi * c->j_hz * term;
      }
    }
    sector.model.h0 = HermitianOperator(std::move(h0));
    for (std::size_t k = 0; k < sys.channels().size(); ++k) {
      ComplexMatrix ix = ComplexMatrix::Zero(d, d);
      RealVector iz = RealVector::Zero(d);
      for (int g = 0; g < ng; ++g) {
        if (red.groups[g].channel != static_cast<int>(k)) continue;
        ix += fx[g];
        iz += fz[g].diagonal().real();
      }
      const auto& c = sys.channels()[k];
      sector.model.drives.push_back(
          DriveOperator{c.label, c.rf_amplitude_hz, HermitianOperator(std::move(ix)), iz});
    }

    // |S0><S0| on the two pair factors (each a spin-1/2 singleton group).
    sector.pair_factors = {group_of[pair[0]], group_of[pair[1]]};
    {
      ComplexMatrix p = 0.25 * ComplexMatrix::Identity(d, d);
      const int a = sector.pair_factors[0], b = sector.pair_factors[1];
      // |S0><S0| = 1/4 - (Ix Ix + Iy Iy + Iz Iz)
      p -= fx[a] * fx[b] + fy[a] * fy[b] + fz[a] * fz[b];
      sector.singlet_projector = HermitianOperator(std::move(p));
    }
    red.sectors.push_back(std::move(sector));

    int g = ng - 1;
    while (g >= 0 && ++choice[g] == options[g].size()) choice[g--] = 0;
    if (g < 0) break;
  }
  return red;
}

}  // namespace bbsinglet
