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

#include "bbsinglet/bb_engine.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bbsinglet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void multiply(const PropagatorCache::Entry& e, ComplexMatrix& m, bool adjoint) {
  const ComplexMatrix& u = e.unitary.matrix();
  if (e.diagonal) {
    for (Index i = 0; i < m.rows(); ++i) m.row(i) *= adjoint ? std::conj(u(i, i)) : u(i, i);
    return;
  }
  if (e.blocks.empty()) {
    ComplexMatrix tmp(m.rows(), m.cols());
    if (adjoint)
      tmp.noalias() = u.adjoint() * m;
    else
      tmp.noalias() = u * m;
    m.swap(tmp);
    return;
  }
  for (std::size_t b = 0; b < e.blocks.size(); ++b) {
    const auto& idx = e.blocks[b];
    const ComplexMatrix& sub = e.block_matrices[b];
    ComplexMatrix rows = m(idx, Eigen::all);
    if (adjoint)
      m(idx, Eigen::all) = sub.adjoint() * rows;
    else
      m(idx, Eigen::all) = sub * rows;
  }
}

void scale_rows(const ComplexVector& z, ComplexMatrix& m, bool conjugated) {
  for (Index i = 0; i < m.rows(); ++i) m.row(i) *= conjugated ? std::conj(z(i)) : z(i);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  return out;
}

double parse_number(const std::string& cell, const std::string& field, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("pulse table row " + std::to_string(row) + ": field " + field +
                                " is not a number: '" + cell + "'");
  }
}

}  // namespace

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

double phase_from_degrees(double deg) { return wrap_phase(deg * std::numbers::pi / 180.0); }

double phase_to_degrees(double phi) { return phi * 180.0 / std::numbers::pi; }

unsigned Segment::active_mask() const {
  unsigned mask = 0;
  for (std::size_t k = 0; k < channels.size(); ++k)
    if (channels[k].active) mask |= 1u << k;
  return mask;
}

BBSequence::BBSequence(double dt, std::vector<std::string> channel_labels,
                       std::vector<Segment> segments)
    : dt_(dt), labels_(std::move(channel_labels)), segments_(std::move(segments)) {
  if (!(dt_ > 0.0)) throw std::invalid_argument("BBSequence: dt must be positive");
  for (auto& seg : segments_) {
    if (seg.channels.size() != labels_.size())
      throw std::invalid_argument("BBSequence: segment channel count does not match labels");
    for (auto& c : seg.channels) c.phase = wrap_phase(c.phase);
  }
}

BBSequence BBSequence::silent(double dt, std::vector<std::string> channel_labels, std::size_t n) {
  Segment seg{std::vector<ChannelSetting>(channel_labels.size())};
  return BBSequence(dt, std::move(channel_labels), std::vector<Segment>(n, seg));
}

PropagatorCache PropagatorCache::build(const ControlModel& model, double dt,
                                       const NumericalPolicy& policy) {
  if (!(dt > 0.0)) throw std::invalid_argument("precompute_propagators: dt must be positive");
  const std::size_t k = model.drives.size();
  if (k > 8) throw std::invalid_argument("precompute_propagators: at most 8 channels supported");
  PropagatorCache cache;
  cache.dt_ = dt;
  cache.dim_ = model.dim();
  for (const auto& d : model.drives) {
    if (d.ix.dim() != cache.dim_ || d.iz.size() != cache.dim_)
      throw std::invalid_argument("precompute_propagators: drive operator dimension mismatch");
    cache.labels_.push_back(d.label);
    cache.amplitudes_.push_back(d.amplitude_hz);
    cache.iz_.push_back(d.iz);
  }
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    ComplexMatrix h = model.h0.matrix();
    for (std::size_t c = 0; c < k; ++c)
      if (mask & (1u << c)) h += kTwoPi * model.drives[c].amplitude_hz * model.drives[c].ix.matrix();
    HermitianOperator hs(h, policy);
    auto blocks = connected_blocks(hs.matrix());
    Entry e{expm_hermitian(hs, dt, policy), {}, {}, false};
    if (blocks.size() == static_cast<std::size_t>(cache.dim_)) {
      e.diagonal = true;
    } else if (blocks.size() > 1) {
      for (const auto& b : blocks) e.block_matrices.push_back(e.unitary.matrix()(b, b));
      e.blocks = std::move(blocks);
    }
    cache.entries_.push_back(std::move(e));
  }
  return cache;
}

ComplexVector PropagatorCache::phase_diagonal(const Segment& seg) const {
  if (seg.channels.size() != labels_.size())
    throw std::invalid_argument("segment does not match the cache channel list");
  RealVector angle = RealVector::Zero(dim_);
  bool any = false;
  for (std::size_t c = 0; c < seg.channels.size(); ++c) {
    if (!seg.channels[c].active || seg.channels[c].phase == 0.0) continue;
    angle += seg.channels[c].phase * iz_[c];
    any = true;
  }
  if (!any) return {};
  ComplexVector z(dim_);
  for (Index i = 0; i < dim_; ++i) z(i) = std::polar(1.0, -angle(i));
  return z;
}

void PropagatorCache::apply(const Segment& seg, ComplexMatrix& m) const {
  const ComplexVector z = phase_diagonal(seg);
  // U = Z X Z^dagger
  if (z.size()) scale_rows(z, m, true);
  multiply(entries_[seg.active_mask()], m, false);
  if (z.size()) scale_rows(z, m, false);
}

void PropagatorCache::apply_adjoint(const Segment& seg, ComplexMatrix& m) const {
  const ComplexVector z = phase_diagonal(seg);
  // U^dagger = Z X^dagger Z^dagger
  if (z.size()) scale_rows(z, m, true);
  multiply(entries_[seg.active_mask()], m, true);
  if (z.size()) scale_rows(z, m, false);
}

PropagatorCache precompute_propagators(const SpinSystem& sys, double dt,
                                       const NumericalPolicy& policy) {
  const CommutationReport report = validate_z_commutation(sys, policy);
  if (!report.passed)
    throw std::invalid_argument(
        "precompute_propagators: H0 does not commute with collective z rotations; "
        "use the weak coupling form between different species. " + report.summary());
  return PropagatorCache::build(build_control_model(sys), dt, policy);
}

UnitaryPropagator segment_unitary(const PropagatorCache& cache, const Segment& seg) {
  const ComplexVector z = cache.phase_diagonal(seg);
  const ComplexMatrix& x = cache.bang(seg.active_mask()).unitary.matrix();
  if (!z.size()) return UnitaryPropagator::assume_unitary(x, cache.dt());
  // (Z X Z^dagger)_ij = z_i X_ij conj(z_j), O(d^2).
  ComplexMatrix u = z.asDiagonal() * x * z.conjugate().asDiagonal();
  return UnitaryPropagator::assume_unitary(std::move(u), cache.dt());
}

UnitaryPropagator sequence_unitary(const PropagatorCache& cache, const BBSequence& seq) {
  ComplexMatrix u = ComplexMatrix::Identity(cache.dim(), cache.dim());
  for (const auto& seg : seq.segments()) cache.apply(seg, u);
  return UnitaryPropagator::assume_unitary(std::move(u), seq.total_duration());
}

double singlet_order_per_overlap(Index dim) { return 8.0 / (3.0 * static_cast<double>(dim)); }

TrajectoryRecord propagate_state(const PropagatorCache& cache, const BBSequence& seq,
                                 const DensityState& rho, const SingletMetric& metric,
                                 std::span<const HermitianOperator> observables, int stride) {
  if (stride < 1) throw std::invalid_argument("propagate_state: stride must be >= 1");
  if (rho.dim() != cache.dim() || metric.projector.dim() != cache.dim())
    throw std::invalid_argument("propagate_state: state or projector dimension mismatch");
  for (const auto& o : observables)
    if (o.dim() != cache.dim())
      throw std::invalid_argument("propagate_state: observable dimension mismatch");

  const bool deviation = rho.mode() == StateMode::Deviation;
  const double kappa = rho.full_scale();
  const double d = static_cast<double>(cache.dim());
  const double base = metric.projector.matrix().trace().real() / d;

  TrajectoryRecord rec;
  rec.observables.resize(observables.size());
  ComplexMatrix state = rho.matrix();
  auto record = [&](double t) {
    const double tr = expectation(state, metric.projector.matrix());
    const double overlap = deviation ? tr : tr - base;
    rec.times.push_back(t);
    rec.q_values.push_back(base + (deviation ? kappa * overlap : overlap));
    const double order = deviation ? singlet_order_per_overlap(cache.dim()) * overlap
                                   : 4.0 / 3.0 * overlap;
    rec.enhancement.push_back(order / metric.reference_polarization);
    for (std::size_t o = 0; o < observables.size(); ++o)
      rec.observables[o].push_back(expectation(state, observables[o].matrix()));
  };
  record(0.0);
  const auto& segs = seq.segments();
  for (std::size_t n = 0; n < segs.size(); ++n) {
    cache.apply(segs[n], state);
    state.adjointInPlace();
    cache.apply(segs[n], state);
    if ((n + 1) % static_cast<std::size_t>(stride) == 0 || n + 1 == segs.size())
      record(static_cast<double>(n + 1) * seq.dt());
  }
  return rec;
}

double readout_amplitude(const DensityState& rho, const SpinSystem& sys) {
  if (rho.dim() != sys.dim()) throw std::invalid_argument("readout_amplitude: dimension mismatch");
  const auto pair = sys.singlet_pair();
  const std::array<int, 2> keep{pair[0], pair[1]};
  const ComplexMatrix reduced = partial_trace(rho.matrix(), keep, TensorLayout::qubits(sys.size()));
  auto op = [](Axis a) { return site_operator(1, 0, a); };
  const ComplexMatrix readout = kron(op(Axis::Z), op(Axis::Y)) - kron(op(Axis::Y), op(Axis::Z)) +
                                kron(op(Axis::X), op(Axis::X));
  return -expectation(reduced, readout);
}

void write_pulse_table(std::ostream& os, const BBSequence& seq,
                       std::span<const double> amplitudes_hz) {
  if (amplitudes_hz.size() != seq.channel_count())
    throw std::invalid_argument("write_pulse_table: one amplitude per channel required");
  os << "index,duration_ms";
  for (const auto& l : seq.channel_labels()) os << "," << l << "_amp_hz," << l << "_phase_deg";
  os << "\n";
  char buf[64];
  const double duration_ms = seq.dt() * 1000.0;
  for (std::size_t n = 0; n < seq.size(); ++n) {
    os << n;
    std::snprintf(buf, sizeof buf, ",%.6f", duration_ms);
    os << buf;
    for (std::size_t c = 0; c < seq.channel_count(); ++c) {
      const auto& ch = seq.segments()[n].channels[c];
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", ch.active ? amplitudes_hz[c] : 0.0,
                    phase_to_degrees(ch.phase));
      os << buf;
    }
    os << "\n";
  }
}

BBSequence read_pulse_table(std::istream& is, const std::vector<std::string>& channel_labels,
                            std::span<const double> amplitudes_hz, double expected_dt) {
  if (amplitudes_hz.size() != channel_labels.size())
    throw std::invalid_argument("read_pulse_table: one amplitude per channel required");
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("pulse table: missing header");
  const auto header = split_csv(line);
  std::vector<std::string> expected{"index", "duration_ms"};
  for (const auto& l : channel_labels) {
    expected.push_back(l + "_amp_hz");
    expected.push_back(l + "_phase_deg");
  }
  if (header.size() != expected.size())
    throw std::invalid_argument("pulse table: expected " + std::to_string(expected.size()) +
                                " columns, found " + std::to_string(header.size()));
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (header[i] != expected[i])
      throw std::invalid_argument("pulse table: column " + std::to_string(i) + " is '" +
                                  header[i] + "', expected '" + expected[i] + "'");

  std::vector<Segment> segments;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != expected.size())
      throw std::invalid_argument("pulse table row " + std::to_string(row) + ": wrong column count");
    const double index = parse_number(cells[0], "index", row);
    if (index != static_cast<double>(segments.size()))
      throw std::invalid_argument("pulse table row " + std::to_string(row) +
                                  ": field index is out of sequence");
    const double dt = parse_number(cells[1], "duration_ms", row) / 1000.0;
    if (std::abs(dt - expected_dt) > 1e-9 * std::max(1.0, expected_dt * 1e3))
      throw std::invalid_argument("pulse table row " + std::to_string(row) +
                                  ": field duration_ms does not match the configured dt");
    Segment seg;
    for (std::size_t c = 0; c < channel_labels.size(); ++c) {
      const std::string amp_field = channel_labels[c] + "_amp_hz";
      const double amp = parse_number(cells[2 + 2 * c], amp_field, row);
      ChannelSetting cs;
      if (amp == 0.0) {
        cs.active = false;
      } else if (std::abs(amp - amplitudes_hz[c]) <= 1e-6 * std::max(1.0, amplitudes_hz[c])) {
        cs.active = true;
      } else {
        throw std::invalid_argument("pulse table row " + std::to_string(row) + ": field " +
                                    amp_field + " must be 0 or the channel amplitude");
      }
      cs.phase = phase_from_degrees(
          parse_number(cells[3 + 2 * c], channel_labels[c] + "_phase_deg", row));
      seg.channels.push_back(cs);
    }
    segments.push_back(std::move(seg));
  }
  return BBSequence(expected_dt, channel_labels, std::move(segments));
}

}  // namespace bbsinglet
