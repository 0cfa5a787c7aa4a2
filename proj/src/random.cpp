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

#include "stbound/random.hpp"

#include <cmath>

namespace stbound {

namespace {

ComplexMatrix ginibre(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    ComplexMatrix g(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double re = normal(rng);
            const double im = normal(rng);
            g(i, j) = cplx(re, im);
        }
    }
    return g;
}

}  // namespace

ComplexMatrix random_unitary(int d, Rng& rng) {
    ComplexMatrix z = ginibre(d, d, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix& r = qr.matrixQR();
    for (int k = 0; k < d; ++k) {
        const double a = std::abs(r(k, k));
        const cplx phase = a > 0.0 ? r(k, k) / a : cplx(1.0);
        q.col(k) *= phase;
    }
    return q;
}

Eigen::VectorXcd random_unit_vector(int d, Rng& rng) {
    Eigen::VectorXcd v = ginibre(d, 1, rng).col(0);
    return v / v.norm();
}

HermitianOperator random_pure_state(int d, Rng& rng) {
    return HermitianOperator::projector(random_unit_vector(d, rng));
}

HermitianOperator random_mixed_state(int d, Rng& rng, int rank) {
    if (rank <= 0 || rank > d) {
        rank = d;
    }
    ComplexMatrix g = ginibre(d, rank, rng);
    ComplexMatrix m = g * g.adjoint();
    m /= m.trace().real();
    return HermitianOperator::from_rounded(m);
}

std::vector<HermitianOperator> random_projective_measurement(int d, int n_outcomes, Rng& rng) {
    ComplexMatrix u = random_unitary(d, rng);
    std::uniform_int_distribution<int> pick(0, n_outcomes - 1);
    std::vector<ComplexMatrix> effects(n_outcomes, ComplexMatrix::Zero(d, d));
    for (int k = 0; k < d; ++k) {
        const int b = pick(rng);
        effects[b] += u.col(k) * u.col(k).adjoint();
    }
    std::vector<HermitianOperator> out;
    out.reserve(n_outcomes);
    for (const auto& e : effects) {
        out.push_back(HermitianOperator::from_rounded(e));
    }
    return out;
}

std::vector<HermitianOperator> random_projective_measurement(const std::vector<int>& ranks, Rng& rng) {
    int d = 0;
    for (int r : ranks) {
        if (r < 0) {
            throw std::invalid_argument("projector ranks must be nonnegative");
        }
        d += r;
    }
    if (d < 1) {
        throw std::invalid_argument("projector ranks must sum to a positive dimension");
    }
    ComplexMatrix u = random_unitary(d, rng);
    std::vector<HermitianOperator> out;
    int col = 0;
    for (int r : ranks) {
        const ComplexMatrix v = u.middleCols(col, r);
        out.push_back(HermitianOperator::from_rounded(v * v.adjoint()));
        col += r;
    }
    return out;
}

std::vector<HermitianOperator> random_povm(int d, int n_outcomes, Rng& rng) {
    std::vector<ComplexMatrix> raw;
    ComplexMatrix total = ComplexMatrix::Zero(d, d);
    for (int b = 0; b < n_outcomes; ++b) {
        ComplexMatrix g = ginibre(d, d, rng);
        raw.push_back(g.adjoint() * g);
        total += raw.back();
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(total);
    ComplexMatrix inv_sqrt =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
    std::vector<HermitianOperator> out;
    out.reserve(n_outcomes);
    for (const auto& e : raw) {
        out.push_back(HermitianOperator::from_rounded(inv_sqrt * e * inv_sqrt));
    }
    return out;
}

HermitianOperator random_hermitian(int d, Rng& rng) {
    ComplexMatrix g = ginibre(d, d, rng);
    return HermitianOperator::from_rounded(g + g.adjoint());
}

}  // namespace stbound
