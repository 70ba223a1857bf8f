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

#include "bbsinglet/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bbsinglet {

const NumericalPolicy& default_policy() {
  static const NumericalPolicy policy{};
  return policy;
}

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return max_abs(m - m.adjoint());
}

double unitarity_defect(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  // Block-diagonal propagators are checked block by block.
  double worst = 0.0;
  for (const auto& block : connected_blocks(u)) {
    const auto n = static_cast<Index>(block.size());
    ComplexMatrix sub = u(block, block);
    ComplexMatrix gram = sub.adjoint() * sub;
    gram -= ComplexMatrix::Identity(n, n);
    worst = std::max(worst, max_abs(gram));
  }
  return worst;
}

bool is_diagonal(const ComplexMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
  return true;
}

std::vector<std::vector<Index>> connected_blocks(const ComplexMatrix& m) {
  const Index n = m.rows();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  std::function<Index(Index)> find = [&](Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j || m(i, j) == Complex(0.0, 0.0)) continue;
      const Index a = find(i), b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<std::vector<Index>> blocks;
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < n; ++i) {
    const Index root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[slot[root]].push_back(i);
  }
  return blocks;
}

HermitianOperator::HermitianOperator(ComplexMatrix m, const NumericalPolicy& policy)
    : m_(std::move(m)) {
  if (m_.rows() != m_.cols())
    throw std::invalid_argument("HermitianOperator: matrix is not square");
  const double scale = std::max(1.0, max_abs(m_));
  const double defect = hermiticity_defect(m_);
  if (defect > policy.hermiticity * scale) {
    std::ostringstream os;
    os << "HermitianOperator: ||M - M^dagger||_max = " << defect
       << " exceeds tolerance " << policy.hermiticity * scale;
    throw std::invalid_argument(os.str());
  }
}

UnitaryPropagator::UnitaryPropagator(ComplexMatrix m, double duration,
                                     const NumericalPolicy& policy)
    : m_(std::move(m)), duration_(duration) {
  const double defect = unitarity_defect(m_);
  if (!(defect < policy.unitarity)) {
    std::ostringstream os;
    os << "UnitaryPropagator: ||U^dagger U - 1||_max = " << defect
       << " exceeds tolerance " << policy.unitarity;
    throw NumericalError(os.str());
  }
}

UnitaryPropagator UnitaryPropagator::identity(Index dim) {
  return assume_unitary(ComplexMatrix::Identity(dim, dim), 0.0);
}

UnitaryPropagator UnitaryPropagator::assume_unitary(ComplexMatrix m, double duration) {
  UnitaryPropagator u;
  u.m_ = std::move(m);
  u.duration_ = duration;
  return u;
}

UnitaryPropagator UnitaryPropagator::adjoint() const {
  return assume_unitary(m_.adjoint(), duration_);
}

DiagonalPhaseOperator::DiagonalPhaseOperator(ComplexVector diagonal,
                                             const NumericalPolicy& policy)
    : diag_(std::move(diagonal)) {
  for (Index i = 0; i < diag_.size(); ++i) {
    if (std::abs(std::abs(diag_(i)) - 1.0) > policy.phase_modulus)
      throw std::invalid_argument("DiagonalPhaseOperator: entry is not of unit modulus");
  }
}

DiagonalPhaseOperator DiagonalPhaseOperator::from_generator(
    const RealVector& generator_diagonal, double phi) {
  ComplexVector d(generator_diagonal.size());
  for (Index i = 0; i < d.size(); ++i) d(i) = std::polar(1.0, -phi * generator_diagonal(i));
  return DiagonalPhaseOperator(std::move(d));
}

HermitianEigensystem eigh(const HermitianOperator& h) {
  const Index n = h.dim();
  HermitianEigensystem sys{RealVector::Zero(n), ComplexMatrix::Zero(n, n)};
  Index offset = 0;
  for (const auto& block : connected_blocks(h.matrix())) {
    const auto bn = static_cast<Index>(block.size());
    if (bn == 1) {
      sys.values(offset) = h.matrix()(block[0], block[0]).real();
      sys.vectors(block[0], offset) = 1.0;
      ++offset;
      continue;
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix()(block, block));
    if (solver.info() != Eigen::Success) {
      std::ostringstream os;
      os << "eigh: eigensolver failed on a block of size " << bn
         << " (max |entry| " << max_abs(h.matrix()(block, block)) << ")";
      throw NumericalError(os.str());
    }
    sys.values.segment(offset, bn) = solver.eigenvalues();
    for (Index k = 0; k < bn; ++k)
      for (Index r = 0; r < bn; ++r) sys.vectors(block[r], offset + k) = solver.eigenvectors()(r, k);
    offset += bn;
  }
  return sys;
}

RealVector hermitian_spectrum(const HermitianOperator& h) {
  RealVector values;
  if (is_diagonal(h.matrix())) {
    values = h.matrix().diagonal().real();
  } else {
    values = eigh(h).values;
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

UnitaryPropagator expm_hermitian(const HermitianOperator& h, double t,
                                 const NumericalPolicy& policy) {
  if (t < 0.0) throw std::invalid_argument("expm_hermitian: negative duration");
  const Index n = h.dim();
  ComplexMatrix u = ComplexMatrix::Zero(n, n);
  for (const auto& block : connected_blocks(h.matrix())) {
    const auto bn = static_cast<Index>(block.size());
    if (bn == 1) {
      u(block[0], block[0]) = std::polar(1.0, -h.matrix()(block[0], block[0]).real() * t);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix()(block, block));
    if (solver.info() != Eigen::Success) {
      std::ostringstream os;
      os << "expm_hermitian: eigensolver failed on a block of size " << bn
         << " (max |entry| " << max_abs(h.matrix()(block, block)) << ")";
      throw NumericalError(os.str());
    }
    ComplexVector phases(bn);
    for (Index k = 0; k < bn; ++k) phases(k) = std::polar(1.0, -solver.eigenvalues()(k) * t);
    const ComplexMatrix& v = solver.eigenvectors();
    ComplexMatrix sub = v * phases.asDiagonal() * v.adjoint();
    u(block, block) = sub;
  }
  return UnitaryPropagator(std::move(u), t, policy);
}

ComplexMatrix conjugate(const ComplexMatrix& u, const ComplexMatrix& a) {
  if (u.rows() != u.cols() || a.rows() != a.cols() || u.rows() != a.rows())
    throw std::invalid_argument("conjugate: dimension mismatch");
  ComplexMatrix tmp = u * a;
  return tmp * u.adjoint();
}

double expectation(const ComplexMatrix& rho, const ComplexMatrix& o,
                   const NumericalPolicy& policy) {
  if (rho.rows() != rho.cols() || o.rows() != o.cols() || rho.rows() != o.rows())
    throw std::invalid_argument("expectation: dimension mismatch");
  // Tr[rho O] = sum_ij rho_ij O_ji
  const Complex tr = rho.cwiseProduct(o.transpose()).sum();
  const double scale = std::max(1.0, std::abs(tr));
  if (std::abs(tr.imag()) > policy.imaginary_residue * scale) {
    std::ostringstream os;
    os << "expectation: imaginary residue " << tr.imag()
       << " signals non-Hermitian inputs";
    throw NumericalError(os.str());
  }
  return tr.real();
}

TensorLayout TensorLayout::qubits(int n) {
  return TensorLayout{std::vector<Index>(static_cast<std::size_t>(n), 2)};
}

Index TensorLayout::total_dim() const {
  Index d = 1;
  for (Index k : local_dims) d *= k;
  return d;
}

ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> keep,
                            const TensorLayout& layout) {
  const int n = layout.factors();
  if (rho.rows() != rho.cols() || rho.rows() != layout.total_dim())
    throw std::invalid_argument("partial_trace: matrix does not match tensor layout");
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (int k : keep) {
    if (k < 0 || k >= n) throw std::invalid_argument("partial_trace: factor index out of range");
    if (kept[k]) throw std::invalid_argument("partial_trace: repeated factor index");
    kept[k] = true;
  }
  std::vector<int> traced;
  for (int k = 0; k < n; ++k)
    if (!kept[k]) traced.push_back(k);

  // Stride of each factor in the full index.
  std::vector<Index> stride(static_cast<std::size_t>(n), 1);
  for (int k = n - 2; k >= 0; --k) stride[k] = stride[k + 1] * layout.local_dims[k + 1];

  auto offsets = [&](const std::vector<int>& factors) {
    std::vector<Index> out{0};
    for (int f : factors) {
      std::vector<Index> next;
      next.reserve(out.size() * layout.local_dims[f]);
      for (Index base : out)
        for (Index v = 0; v < layout.local_dims[f]; ++v) next.push_back(base + v * stride[f]);
      out = std::move(next);
    }
    return out;
  };
  const std::vector<int> keep_vec(keep.begin(), keep.end());
  const auto keep_off = offsets(keep_vec);
  const auto trace_off = offsets(traced);

  const auto dk = static_cast<Index>(keep_off.size());
  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  for (Index a = 0; a < dk; ++a)
    for (Index b = 0; b < dk; ++b) {
      Complex s = 0.0;
      for (Index t : trace_off) s += rho(keep_off[a] + t, keep_off[b] + t);
      out(a, b) = s;
    }
  return out;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double majorization_bound(std::vector<double> rho_spectrum, std::vector<double> p_spectrum) {
  if (rho_spectrum.size() != p_spectrum.size())
    throw std::invalid_argument("majorization_bound: spectra differ in length");
  std::sort(rho_spectrum.begin(), rho_spectrum.end(), std::greater<>());
  std::sort(p_spectrum.begin(), p_spectrum.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < rho_spectrum.size(); ++i) s += rho_spectrum[i] * p_spectrum[i];
  return s;
}

double majorization_bound(const HermitianOperator& rho, const HermitianOperator& p,
                          const NumericalPolicy& policy) {
  if (rho.dim() != p.dim()) throw std::invalid_argument("majorization_bound: dimension mismatch");
  const RealVector lr = hermitian_spectrum(rho);
  const RealVector lp = hermitian_spectrum(p);
  if (lp.size() > 0 && lp(lp.size() - 1) < -policy.positivity)
    throw std::invalid_argument("majorization_bound: P is not positive semidefinite");
  return majorization_bound(std::vector<double>(lr.begin(), lr.end()),
                            std::vector<double>(lp.begin(), lp.end()));
}

}  // namespace bbsinglet
