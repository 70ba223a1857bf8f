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

// Dense complex-matrix kernel. Tensor ordering: spin (factor) 0 is the most
// significant index of the product basis.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bbsinglet/numerical_policy.hpp"

namespace bbsinglet {

using Index = Eigen::Index;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Complex = std::complex<double>;

double max_abs(const ComplexMatrix& m);
double hermiticity_defect(const ComplexMatrix& m);
double unitarity_defect(const ComplexMatrix& u);
bool is_diagonal(const ComplexMatrix& m);

// Index sets of the connected components of the nonzero pattern of m
// (treated as an undirected graph). A block-diagonal matrix under some
// permutation yields one entry per block; each entry is sorted ascending.
std::vector<std::vector<Index>> connected_blocks(const ComplexMatrix& m);

class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(ComplexMatrix m,
                             const NumericalPolicy& policy = default_policy());

  const ComplexMatrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  ComplexMatrix m_;
};

class UnitaryPropagator {
 public:
  // Verifies ||U^dagger U - 1||_max against policy.unitarity.
  UnitaryPropagator(ComplexMatrix m, double duration,
                    const NumericalPolicy& policy = default_policy());

  static UnitaryPropagator identity(Index dim);
  // For products and diagonal conjugations of already verified propagators.
  static UnitaryPropagator assume_unitary(ComplexMatrix m, double duration);

  const ComplexMatrix& matrix() const { return m_; }
  double duration() const { return duration_; }
  Index dim() const { return m_.rows(); }
  UnitaryPropagator adjoint() const;

 private:
  UnitaryPropagator() = default;
  ComplexMatrix m_;
  double duration_ = 0.0;
};

class DiagonalPhaseOperator {
 public:
  explicit DiagonalPhaseOperator(ComplexVector diagonal,
                                 const NumericalPolicy& policy = default_policy());

  // exp(-i phi G) for a diagonal generator G given by its diagonal.
  static DiagonalPhaseOperator from_generator(const RealVector& generator_diagonal,
                                              double phi);

  const ComplexVector& diagonal() const { return diag_; }
  Index dim() const { return diag_.size(); }

 private:
  ComplexVector diag_;
};

struct HermitianEigensystem {
  RealVector values;      // ordered block by block, ascending within a block
  ComplexMatrix vectors;  // columns match values
};

// Eigendecomposition that splits the problem along connected_blocks().
HermitianEigensystem eigh(const HermitianOperator& h);

// Eigenvalues sorted descending.
RealVector hermitian_spectrum(const HermitianOperator& h);

// exp(-i H t) through the Hermitian eigendecomposition of H.
UnitaryPropagator expm_hermitian(const HermitianOperator& h, double t,
                                 const NumericalPolicy& policy = default_policy());

// U A U^dagger.
ComplexMatrix conjugate(const ComplexMatrix& u, const ComplexMatrix& a);

// Tr[rho O], after checking the imaginary residue.
double expectation(const ComplexMatrix& rho, const ComplexMatrix& o,
                   const NumericalPolicy& policy = default_policy());

// Dimensions of the tensor factors, most significant first.
struct TensorLayout {
  std::vector<Index> local_dims;

  static TensorLayout qubits(int n);
  Index total_dim() const;
  int factors() const { return static_cast<int>(local_dims.size()); }
};

// Reduced matrix on the kept factors, in the order given by keep.
ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> keep,
                            const TensorLayout& layout);

// Kronecker product A (x) B.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// sum_i lambda_i(rho) mu_i(P) with both spectra sorted descending: the
// maximum of Tr[U rho U^dagger P] over all unitaries U.
double majorization_bound(const HermitianOperator& rho, const HermitianOperator& p,
                          const NumericalPolicy& policy = default_policy());

// Same bound from precomputed spectra (any order; sorted internally).
double majorization_bound(std::vector<double> rho_spectrum,
                          std::vector<double> p_spectrum);

}  // namespace bbsinglet
