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

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace stbound {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

/// Absolute entrywise tolerance used to accept a matrix as Hermitian.
inline constexpr double kHermitianTolerance = 1e-12;

class DimensionError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// A square complex matrix that equals its conjugate transpose.
///
/// Construction rejects inputs whose deviation from Hermiticity exceeds
/// kHermitianTolerance; nothing is symmetrized silently.
class HermitianOperator {
   public:
    HermitianOperator() = default;
    explicit HermitianOperator(ComplexMatrix m);

    static HermitianOperator identity(int dim);
    static HermitianOperator zero(int dim);
    /// |v><v| for a (not necessarily normalized) vector.
    static HermitianOperator projector(const Eigen::VectorXcd& v);
    /// Builds from a matrix that is Hermitian up to rounding, averaging with
    /// the adjoint. Only for operators produced by exact-arithmetic formulas.
    static HermitianOperator from_rounded(const ComplexMatrix& m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }
    double trace() const { return m_.trace().real(); }

    HermitianOperator transpose() const;
    HermitianOperator operator+(const HermitianOperator& o) const;
    HermitianOperator operator-(const HermitianOperator& o) const;
    HermitianOperator operator*(double s) const;
    friend HermitianOperator operator*(double s, const HermitianOperator& h) { return h * s; }

   private:
    ComplexMatrix m_;
};

/// Tensor-factor dimensions of a composite space, outermost factor first.
struct SubsystemShape {
    std::vector<int> dims;

    int total() const;
    bool operator==(const SubsystemShape&) const = default;
};

bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTolerance);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b);

/// Traces out every factor not listed in `keep`. Kept factors stay in their
/// original order.
ComplexMatrix partial_trace(const ComplexMatrix& m, const SubsystemShape& shape, std::span<const int> keep);
HermitianOperator partial_trace(const HermitianOperator& m, const SubsystemShape& shape, std::span<const int> keep);
HermitianOperator partial_trace(
    const HermitianOperator& m, const SubsystemShape& shape, std::initializer_list<int> keep);

/// tr(a^dagger b).
cplx trace_inner(const ComplexMatrix& a, const ComplexMatrix& b);
cplx trace_inner(const HermitianOperator& a, const HermitianOperator& b);

double min_eigenvalue(const HermitianOperator& m);
double min_eigenvalue(const RealMatrix& symmetric);

/// [[Re m, -Im m], [Im m, Re m]]. Real-linear, and maps Hermitian matrices to
/// symmetric ones with every eigenvalue duplicated.
RealMatrix real_embed(const ComplexMatrix& m);
RealMatrix real_embed(const HermitianOperator& m);

/// |psi+><psi+| with |psi+> = sum_k |k>|k>, divided by d when normalized.
HermitianOperator max_entangled(int d, bool normalized);

namespace pauli {
HermitianOperator I();
HermitianOperator X();
HermitianOperator Y();
HermitianOperator Z();
}  // namespace pauli

/// Computational-basis ket |k> in dimension d.
Eigen::VectorXcd basis_ket(int d, int k);

}  // namespace stbound
