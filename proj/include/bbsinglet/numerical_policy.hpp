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

#include <stdexcept>
#include <string>

namespace bbsinglet {

// Tolerances shared by every module. A run may override them by passing its
// own instance; library functions default to default_policy().
struct NumericalPolicy {
  // ||M - M^dagger||_max, relative to max(1, ||M||_max).
  double hermiticity = 1e-12;
  // ||U^dagger U - 1||_max for a single propagator.
  double unitarity = 1e-10;
  // | |z| - 1 | for diagonal phase entries.
  double phase_modulus = 1e-12;
  // trace checks on density states.
  double trace = 1e-12;
  // smallest eigenvalue allowed for a full-mode density state.
  double positivity = 1e-10;
  // |Im Tr[rho O]| accepted before an expectation is declared non-Hermitian.
  double imaginary_residue = 1e-10;
  // ||[H0, exp(-i phi Iz)]||_max accepted by the z-commutation check.
  double commutation = 1e-9;
};

const NumericalPolicy& default_policy();

// Thrown when a numerical invariant is violated by a computed quantity.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bbsinglet
