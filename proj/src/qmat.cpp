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

#include "stbound/qmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace stbound {

bool is_hermitian(const ComplexMatrix& m, double tol) {
    if (m.rows() != m.cols()) {
        return false;
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i; j < m.cols(); ++j) {
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) {
                return false;
            }
        }
    }
    return m.allFinite();
}

HermitianOperator::HermitianOperator(ComplexMatrix m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) {
        throw DimensionError("HermitianOperator requires a non-empty square matrix");
    }
    if (!is_hermitian(m_)) {
        throw std::invalid_argument("matrix is not Hermitian within tolerance");
    }
}

HermitianOperator HermitianOperator::identity(int dim) {
    return HermitianOperator(ComplexMatrix::Identity(dim, dim));
}

HermitianOperator HermitianOperator::zero(int dim) {
    return HermitianOperator(ComplexMatrix::Zero(dim, dim));
}

HermitianOperator HermitianOperator::projector(const Eigen::VectorXcd& v) {
    return from_rounded(v * v.adjoint());
}

HermitianOperator HermitianOperator::from_rounded(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("from_rounded requires a square matrix");
    }
    ComplexMatrix h = 0.5 * (m + m.adjoint());
    return HermitianOperator(std::move(h));
}

HermitianOperator HermitianOperator::transpose() const {
    return HermitianOperator(m_.transpose());
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const {
    if (dim() != o.dim()) {
        throw DimensionError("operator dimension mismatch in sum");
    }
    return from_rounded(m_ + o.m_);
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const {
    if (dim() != o.dim()) {
        throw DimensionError("operator dimension mismatch in difference");
    }
    return from_rounded(m_ - o.m_);
}

HermitianOperator HermitianOperator::operator*(double s) const {
    return from_rounded(s * m_);
}

int SubsystemShape::total() const {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator::from_rounded(kron(a.matrix(), b.matrix()));
}

namespace {

void check_shape(Eigen::Index rows, Eigen::Index cols, const SubsystemShape& shape, std::span<const int> keep) {
    if (rows != cols) {
        throw DimensionError("partial_trace requires a square matrix");
    }
    if (shape.dims.empty() || std::any_of(shape.dims.begin(), shape.dims.end(), [](int d) { return d < 1; })) {
        throw DimensionError("subsystem dimensions must be positive");
    }
    if (shape.total() != rows) {
        throw DimensionError(
            "subsystem shape product " + std::to_string(shape.total()) + " does not match operator dimension " +
            std::to_string(rows));
    }
    std::vector<bool> seen(shape.dims.size(), false);
    for (int k : keep) {
        if (k < 0 || k >= static_cast<int>(shape.dims.size()) || seen[k]) {
            throw DimensionError("invalid subsystem index in keep set");
        }
        seen[k] = true;
    }
}

}  // namespace

ComplexMatrix partial_trace(const ComplexMatrix& m, const SubsystemShape& shape, std::span<const int> keep) {
    check_shape(m.rows(), m.cols(), shape, keep);
    const int n = static_cast<int>(shape.dims.size());
    std::vector<int> strides(n, 1);
    for (int k = n - 2; k >= 0; --k) {
        strides[k] = strides[k + 1] * shape.dims[k + 1];
    }
    std::vector<int> kept(keep.begin(), keep.end());
    std::sort(kept.begin(), kept.end());
    std::vector<int> traced;
    for (int k = 0; k < n; ++k) {
        if (!std::binary_search(kept.begin(), kept.end(), k)) {
            traced.push_back(k);
        }
    }
    auto offsets = [&](const std::vector<int>& factors) {
        // Flat index contribution of every multi-index over `factors`, in
        // row-major order of those factors.
        std::vector<int> out{0};
        for (int f : factors) {
            std::vector<int> next;
            next.reserve(out.size() * shape.dims[f]);
            for (int base : out) {
                for (int v = 0; v < shape.dims[f]; ++v) {
                    next.push_back(base + v * strides[f]);
                }
            }
            out = std::move(next);
        }
        return out;
    };
    const std::vector<int> keep_off = offsets(kept);
    const std::vector<int> trace_off = offsets(traced);
    const int dk = static_cast<int>(keep_off.size());
    ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
    for (int r = 0; r < dk; ++r) {
        for (int c = 0; c < dk; ++c) {
            cplx acc = 0.0;
            for (int t : trace_off) {
                acc += m(keep_off[r] + t, keep_off[c] + t);
            }
            out(r, c) = acc;
        }
    }
    return out;
}

HermitianOperator partial_trace(const HermitianOperator& m, const SubsystemShape& shape, std::span<const int> keep) {
    return HermitianOperator::from_rounded(partial_trace(m.matrix(), shape, keep));
}

HermitianOperator partial_trace(
    const HermitianOperator& m, const SubsystemShape& shape, std::initializer_list<int> keep) {
    std::vector<int> k(keep);
    return partial_trace(m, shape, std::span<const int>(k));
}

cplx trace_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("trace_inner dimension mismatch");
    }
    return (a.adjoint() * b).trace();
}

cplx trace_inner(const HermitianOperator& a, const HermitianOperator& b) {
    return trace_inner(a.matrix(), b.matrix());
}

double min_eigenvalue(const HermitianOperator& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m.matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double min_eigenvalue(const RealMatrix& symmetric) {
    if (symmetric.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

RealMatrix real_embed(const ComplexMatrix& m) {
    const Eigen::Index r = m.rows();
    const Eigen::Index c = m.cols();
    RealMatrix out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = m.real();
    out.topRightCorner(r, c) = -m.imag();
    out.bottomLeftCorner(r, c) = m.imag();
    out.bottomRightCorner(r, c) = m.real();
    return out;
}

RealMatrix real_embed(const HermitianOperator& m) {
    return real_embed(m.matrix());
}

HermitianOperator max_entangled(int d, bool normalized) {
    if (d < 1) {
        throw DimensionError("max_entangled requires d >= 1");
    }
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d * d);
    for (int k = 0; k < d; ++k) {
        psi(k * d + k) = 1.0;
    }
    ComplexMatrix m = psi * psi.adjoint();
    if (normalized) {
        m /= static_cast<double>(d);
    }
    return HermitianOperator(std::move(m));
}

namespace pauli {

HermitianOperator I() {
    return HermitianOperator::identity(2);
}

HermitianOperator X() {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return HermitianOperator(m);
}

HermitianOperator Y() {
    ComplexMatrix m(2, 2);
    m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
    return HermitianOperator(m);
}

HermitianOperator Z() {
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return HermitianOperator(m);
}

}  // namespace pauli

Eigen::VectorXcd basis_ket(int d, int k) {
    if (k < 0 || k >= d) {
        throw DimensionError("basis index out of range");
    }
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
    v(k) = 1.0;
    return v;
}

}  // namespace stbound
