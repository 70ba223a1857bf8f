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

#include "bbsinglet/spin_system.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bbsinglet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Index bit_of(int n_spins, int site) { return Index{1} << (n_spins - 1 - site); }

// +1/2 for spin up (bit clear), -1/2 for spin down.
double z_value(Index state, Index mask) { return (state & mask) ? -0.5 : 0.5; }

}  // namespace

void CouplingTable::set(int i, int j, Coupling c) {
  if (i == j) throw std::invalid_argument("CouplingTable: self-coupling is not allowed");
  if (i > j) std::swap(i, j);
  entries_[{i, j}] = c;
}

std::optional<Coupling> CouplingTable::get(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = entries_.find({i, j});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

SpinSystem::SpinSystem(std::vector<SpeciesChannel> channels, std::vector<SpinSite> sites,
                       CouplingTable couplings, std::array<int, 2> singlet_pair)
    : channels_(std::move(channels)),
      sites_(std::move(sites)),
      couplings_(std::move(couplings)),
      pair_(singlet_pair) {
  if (channels_.empty()) throw std::invalid_argument("SpinSystem: no channels");
  for (std::size_t a = 0; a < channels_.size(); ++a) {
    const auto& c = channels_[a];
    if (!(c.relative_gamma > 0.0))
      throw std::invalid_argument("SpinSystem: channel " + c.label + " needs relative_gamma > 0");
    if (!(c.rf_amplitude_hz >= 0.0))
      throw std::invalid_argument("SpinSystem: channel " + c.label + " needs rf_amplitude >= 0");
    for (std::size_t b = 0; b < a; ++b)
      if (channels_[b].label == c.label)
        throw std::invalid_argument("SpinSystem: duplicate channel " + c.label);
  }
  if (sites_.size() < 2) throw std::invalid_argument("SpinSystem: need at least the singlet pair");
  if (sites_.size() > static_cast<std::size_t>(kMaxDenseSpins))
    throw std::invalid_argument("SpinSystem: more than " + std::to_string(kMaxDenseSpins) + " spins exceeds the dense dimension cap");
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].index != static_cast<int>(i))
      throw std::invalid_argument("SpinSystem: site indices must be contiguous from 0");
    if (sites_[i].channel < 0 || sites_[i].channel >= static_cast<int>(channels_.size()))
      throw std::invalid_argument("SpinSystem: site references an unknown channel");
  }
  for (const auto& [key, c] : couplings_.entries()) {
    if (key.second >= size() || key.first < 0)
      throw std::invalid_argument("SpinSystem: coupling references an unknown site");
  }
  for (int s : pair_)
    if (s < 0 || s >= size()) throw std::invalid_argument("SpinSystem: singlet pair out of range");
  if (pair_[0] == pair_[1]) throw std::invalid_argument("SpinSystem: singlet pair must be two sites");
  if (sites_[pair_[0]].channel != sites_[pair_[1]].channel)
    throw std::invalid_argument("SpinSystem: singlet pair sites must share a species");
}

int SpinSystem::channel_index(const std::string& label) const {
  for (std::size_t k = 0; k < channels_.size(); ++k)
    if (channels_[k].label == label) return static_cast<int>(k);
  throw std::invalid_argument("unknown species: " + label);
}

std::vector<int> SpinSystem::sites_of(int channel) const {
  std::vector<int> out;
  for (const auto& s : sites_)
    if (s.channel == channel) out.push_back(s.index);
  return out;
}

ComplexMatrix site_operator(int n_spins, int site, Axis axis) {
  const Index d = Index{1} << n_spins;
  const Index mask = bit_of(n_spins, site);
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  for (Index r = 0; r < d; ++r) {
    switch (axis) {
      case Axis::Z:
        m(r, r) = z_value(r, mask);
        break;
      case Axis::X:
        m(r, r ^ mask) = 0.5;
        break;
      case Axis::Y:
        // <up|Iy|down> = -i/2, <down|Iy|up> = +i/2
        m(r, r ^ mask) = (r & mask) ? Complex(0.0, 0.5) : Complex(0.0, -0.5);
        break;
    }
  }
  return m;
}

HermitianOperator build_collective_operator(const SpinSystem& sys, const std::string& species,
                                            Axis axis) {
  const int channel = sys.channel_index(species);
  ComplexMatrix m = ComplexMatrix::Zero(sys.dim(), sys.dim());
  for (int s : sys.sites_of(channel)) m += site_operator(sys.size(), s, axis);
  return HermitianOperator(std::move(m));
}

HermitianOperator build_internal_hamiltonian(const SpinSystem& sys) {
  const int n = sys.size();
  const Index d = sys.dim();
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  for (Index r = 0; r < d; ++r) {
    double diag = 0.0;
    for (const auto& site : sys.sites())
      diag += kTwoPi * site.offset_hz * z_value(r, bit_of(n, site.index));
    for (const auto& [key, c] : sys.couplings().entries()) {
      const Index mi = bit_of(n, key.first), mj = bit_of(n, key.second);
      diag += kTwoPi * c.j_hz * z_value(r, mi) * z_value(r, mj);
      // Flip-flop part of I^i . I^j: (I+ I- + I- I+) / 2 connects |..up..down..>
      // with |..down..up..> with amplitude 1/2.
      if (c.form == CouplingForm::Isotropic && (((r & mi) != 0) != ((r & mj) != 0)))
        h(r ^ (mi | mj), r) += kTwoPi * c.j_hz * 0.5;
    }
    h(r, r) += diag;
  }
  return HermitianOperator(std::move(h));
}

HermitianOperator build_singlet_projector(const SpinSystem& sys) {
  const int n = sys.size();
  const auto [a, b] = sys.singlet_pair();
  const Index ma = bit_of(n, a), mb = bit_of(n, b);
  const Index d = sys.dim();
  ComplexMatrix p = ComplexMatrix::Zero(d, d);
  for (Index r = 0; r < d; ++r) {
    if (((r & ma) != 0) == ((r & mb) != 0)) continue;
    p(r, r) = 0.5;
    p(r, r ^ (ma | mb)) = -0.5;
  }
  return HermitianOperator(std::move(p));
}

DensityState::DensityState(ComplexMatrix m, StateMode mode, const NumericalPolicy& policy)
    : m_(std::move(m)), mode_(mode) {
  HermitianOperator check(m_, policy);
  const double tr = m_.trace().real();
  if (mode_ == StateMode::Full) {
    if (std::abs(tr - 1.0) > policy.trace)
      throw std::invalid_argument("DensityState: full-mode trace must be 1");
    const RealVector spec = hermitian_spectrum(check);
    if (spec.size() > 0 && spec(spec.size() - 1) < -policy.positivity)
      throw std::invalid_argument("DensityState: full-mode state has a negative eigenvalue");
  } else if (std::abs(tr) > policy.trace * std::max(1.0, max_abs(m_))) {
    throw std::invalid_argument("DensityState: deviation-mode state must be traceless");
  }
}

double DensityState::full_scale() const {
  if (mode_ == StateMode::Full) return 1.0;
  const RealVector spec = hermitian_spectrum(HermitianOperator(m_));
  const double lowest = spec.size() ? spec(spec.size() - 1) : 0.0;
  // A zero deviation gives no constraint; any scale reproduces 1/d.
  if (lowest >= 0.0) return 1.0;
  return 1.0 / (static_cast<double>(dim()) * -lowest);
}

DensityState DensityState::to_full(std::optional<double> kappa) const {
  if (mode_ == StateMode::Full) return *this;
  const double k = kappa.value_or(full_scale());
  const auto d = static_cast<double>(dim());
  ComplexMatrix full = ComplexMatrix::Identity(dim(), dim()) / d + k * m_;
  return DensityState(std::move(full), StateMode::Full);
}

Polarizations thermal_polarizations(const SpinSystem& sys) {
  Polarizations p;
  for (const auto& c : sys.channels()) p[c.label] = c.relative_gamma;
  return p;
}

DensityState build_thermal_state(const SpinSystem& sys, const Polarizations& polarizations) {
  for (const auto& [label, eps] : polarizations) (void)sys.channel_index(label);
  RealVector diag = RealVector::Zero(sys.dim());
  for (std::size_t k = 0; k < sys.channels().size(); ++k) {
    const auto& label = sys.channels()[k].label;
    auto it = polarizations.find(label);
    if (it == polarizations.end())
      throw std::invalid_argument("build_thermal_state: missing polarization for " + label);
    for (int s : sys.sites_of(static_cast<int>(k))) {
      const Index mask = bit_of(sys.size(), s);
      for (Index r = 0; r < sys.dim(); ++r) diag(r) += it->second * z_value(r, mask);
    }
  }
  return DensityState(diag.cast<Complex>().asDiagonal().toDenseMatrix(), StateMode::Deviation);
}

std::string CommutationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << ":";
  for (const auto& [label, norm] : channel_residuals) os << " " << label << "=" << norm;
  if (!offending_couplings.empty()) {
    os << "; offending couplings:";
    for (const auto& c : offending_couplings) os << " " << c;
    os << " (use the weak form for heteronuclear couplings)";
  }
  return os.str();
}

CommutationReport validate_z_commutation(const SpinSystem& sys, const NumericalPolicy& policy) {
  CommutationReport report;
  const HermitianOperator h0 = build_internal_hamiltonian(sys);
  const Index d = sys.dim();
  const double phi = std::numbers::pi / 2.0;
  for (std::size_t k = 0; k < sys.channels().size(); ++k) {
    RealVector iz = RealVector::Zero(d);
    for (int s : sys.sites_of(static_cast<int>(k)))
      for (Index r = 0; r < d; ++r) iz(r) += z_value(r, bit_of(sys.size(), s));
    const auto z = DiagonalPhaseOperator::from_generator(iz, phi).diagonal();
    // [H, Z]_ij = H_ij (z_j - z_i) for diagonal Z.
    double worst = 0.0;
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) {
        const Complex hij = h0.matrix()(i, j);
        if (hij != Complex(0.0, 0.0)) worst = std::max(worst, std::abs(hij * (z(j) - z(i))));
      }
    report.channel_residuals.emplace_back(sys.channels()[k].label, worst);
    if (!(worst < policy.commutation)) report.passed = false;
  }
  for (const auto& [key, c] : sys.couplings().entries()) {
    if (c.form == CouplingForm::Isotropic &&
        sys.sites()[key.first].channel != sys.sites()[key.second].channel) {
      std::ostringstream os;
      os << "(" << key.first << "," << key.second << ") isotropic J=" << c.j_hz << " Hz";
      report.offending_couplings.push_back(os.str());
    }
  }
  return report;
}

double singlet_order_from_q(double q) {
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("singlet_order_from_q: Q must lie in [0, 1]");
  return (4.0 * q - 1.0) / 3.0;
}

ControlModel build_control_model(const SpinSystem& sys) {
  ControlModel model{build_internal_hamiltonian(sys), {}};
  for (const auto& c : sys.channels()) {
    HermitianOperator iz = build_collective_operator(sys, c.label, Axis::Z);
    model.drives.push_back(DriveOperator{c.label, c.rf_amplitude_hz,
                                         build_collective_operator(sys, c.label, Axis::X),
                                         iz.matrix().diagonal().real()});
  }
  return model;
}

RealVector thermal_deviation_diagonal(const ControlModel& model, const Polarizations& pols) {
  RealVector diag = RealVector::Zero(model.dim());
  for (const auto& drive : model.drives) {
    auto it = pols.find(drive.label);
    if (it == pols.end())
      throw std::invalid_argument("missing polarization for " + drive.label);
    diag += it->second * drive.iz;
  }
  return diag;
}

}  // namespace bbsinglet
