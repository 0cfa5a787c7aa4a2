// Copyright 2026 The stbound Authors
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

#include <random>
#include <vector>

#include "stbound/qmat.hpp"

namespace stbound {

/// Every sampler takes the generator explicitly; there is no global state.
using Rng = std::mt19937_64;

/// Haar-distributed unitary (QR of a complex Ginibre matrix with phase fix).
ComplexMatrix random_unitary(int d, Rng& rng);

Eigen::VectorXcd random_unit_vector(int d, Rng& rng);
HermitianOperator random_pure_state(int d, Rng& rng);
/// Normalized mixture of `rank` random pure states (rank <= 0 means full).
HermitianOperator random_mixed_state(int d, Rng& rng, int rank = 0);

/// Haar-rotated diagonal projectors; each basis vector goes to a uniformly
/// chosen outcome, so every rank pattern occurs.
std::vector<HermitianOperator> random_projective_measurement(int d, int n_outcomes, Rng& rng);
/// Haar-rotated projectors with fixed ranks; ranks must sum to d.
std::vector<HermitianOperator> random_projective_measurement(const std::vector<int>& ranks, Rng& rng);
/// Generic full-rank POVM, E_b = T^{-1/2} G_b^dag G_b T^{-1/2}.
std::vector<HermitianOperator> random_povm(int d, int n_outcomes, Rng& rng);

/// Random Hermitian matrix with i.i.d. Gaussian entries.
HermitianOperator random_hermitian(int d, Rng& rng);

}  // namespace stbound
