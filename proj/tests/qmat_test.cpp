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

#include <gtest/gtest.h>

#include "stbound/random.hpp"

using namespace stbound;

namespace {

ComplexMatrix brute_kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            for (int k = 0; k < b.rows(); ++k) {
                for (int l = 0; l < b.cols(); ++l) {
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
                }
            }
        }
    }
    return out;
}

}  // namespace

TEST(qmat, hermitian_rejects_asymmetric) {
    ComplexMatrix m(2, 2);
    m << 1, 2, 3, 4;
    EXPECT_THROW(HermitianOperator{m}, std::invalid_argument);
    m(1, 0) = 2.0 + 1e-13;
    EXPECT_NO_THROW(HermitianOperator{m});
}

TEST(qmat, kron_examples) {
    EXPECT_TRUE(kron(pauli::I(), pauli::I()).matrix().isApprox(ComplexMatrix::Identity(4, 4)));
    Eigen::VectorXcd d(4);
    d << 1, 1, -1, -1;
    EXPECT_TRUE(kron(pauli::Z(), pauli::I()).matrix().isApprox(ComplexMatrix(d.asDiagonal())));
    ComplexMatrix xz = kron(pauli::X().matrix(), pauli::Z().matrix());
    EXPECT_LT((xz - brute_kron(pauli::X().matrix(), pauli::Z().matrix())).norm(), 1e-15);
    EXPECT_TRUE(xz.block(0, 2, 2, 2).isApprox(pauli::Z().matrix()));
    EXPECT_TRUE(xz.block(0, 0, 2, 2).isZero());
}

TEST(qmat, kron_identities) {
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        ComplexMatrix a = random_unitary(2, rng);
        ComplexMatrix b = random_unitary(2, rng);
        ComplexMatrix c = random_unitary(2, rng);
        ComplexMatrix d = random_unitary(2, rng);
        EXPECT_LT((kron(kron(a, b), c) - kron(a, kron(b, c))).norm(), 1e-12);
        EXPECT_LT((kron(a, b) * kron(c, d) - kron(a * c, b * d)).norm(), 1e-12);
        ComplexMatrix r(2, 3);
        r.setRandom();
        EXPECT_LT((kron(a, r) - brute_kron(a, r)).norm(), 1e-15);
    }
}

TEST(qmat, partial_trace_examples) {
    Rng rng(3);
    HermitianOperator a = random_hermitian(2, rng);
    HermitianOperator b = random_hermitian(3, rng);
    SubsystemShape shape{{2, 3}};
    HermitianOperator ka = partial_trace(kron(a, b), shape, {0});
    EXPECT_LT((ka.matrix() - b.trace() * a.matrix()).norm(), 1e-12);
    HermitianOperator kb = partial_trace(kron(a, b), shape, {1});
    EXPECT_LT((kb.matrix() - a.trace() * b.matrix()).norm(), 1e-12);

    HermitianOperator phi = max_entangled(2, true);
    EXPECT_LT((partial_trace(phi, {{2, 2}}, {1}).matrix() - 0.5 * ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
    EXPECT_LT((partial_trace(phi, {{2, 2}}, {0}).matrix() - 0.5 * ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(qmat, partial_trace_matches_index_sum) {
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        HermitianOperator m = random_hermitian(12, rng);
        SubsystemShape shape{{2, 3, 2}};
        // Keep factors 0 and 2, trace factor 1.
        ComplexMatrix want = ComplexMatrix::Zero(4, 4);
        for (int i0 = 0; i0 < 2; ++i0) {
            for (int i2 = 0; i2 < 2; ++i2) {
                for (int j0 = 0; j0 < 2; ++j0) {
                    for (int j2 = 0; j2 < 2; ++j2) {
                        for (int k = 0; k < 3; ++k) {
                            want(i0 * 2 + i2, j0 * 2 + j2) += m.matrix()(i0 * 6 + k * 2 + i2, j0 * 6 + k * 2 + j2);
                        }
                    }
                }
            }
        }
        HermitianOperator got = partial_trace(m, shape, {0, 2});
        EXPECT_LT((got.matrix() - want).norm(), 1e-12);
        EXPECT_NEAR(got.trace(), m.trace(), 1e-12);
        HermitianOperator n = random_hermitian(12, rng);
        HermitianOperator lin = partial_trace(m + 2.0 * n, shape, {1});
        EXPECT_LT(
            (lin.matrix() - partial_trace(m, shape, {1}).matrix() - 2.0 * partial_trace(n, shape, {1}).matrix()).norm(),
            1e-12);
    }
}

TEST(qmat, partial_trace_bad_shape) {
    EXPECT_THROW(partial_trace(HermitianOperator::identity(4), {{2, 3}}, {0}), DimensionError);
}

TEST(qmat, trace_inner_examples) {
    EXPECT_NEAR(trace_inner(pauli::I(), pauli::I()).real(), 2.0, 1e-15);
    EXPECT_NEAR(std::abs(trace_inner(pauli::Z(), pauli::X())), 0.0, 1e-15);
    HermitianOperator zero = HermitianOperator::projector(basis_ket(2, 0));
    HermitianOperator e = HermitianOperator::from_rounded(
        0.5 * (ComplexMatrix::Identity(2, 2) + (pauli::Z().matrix() + pauli::X().matrix()) / std::sqrt(2.0)));
    EXPECT_NEAR(trace_inner(zero, e).real(), (2.0 + std::sqrt(2.0)) / 4.0, 1e-15);
    EXPECT_THROW(trace_inner(pauli::I(), HermitianOperator::identity(3)), DimensionError);
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
        HermitianOperator a = random_hermitian(3, rng);
        EXPECT_GT(trace_inner(a, a).real(), 0.0);
    }
}

TEST(qmat, min_eigenvalue_examples) {
    EXPECT_NEAR(min_eigenvalue(pauli::I()), 1.0, 1e-12);
    EXPECT_NEAR(min_eigenvalue(pauli::Z()), -1.0, 1e-12);
    Eigen::VectorXcd plus(2);
    plus << 1, 1;
    EXPECT_NEAR(min_eigenvalue(HermitianOperator::projector(plus / std::sqrt(2.0))), 0.0, 1e-12);
}

TEST(qmat, real_embed_spectrum) {
    EXPECT_TRUE(real_embed(pauli::I()).isApprox(RealMatrix::Identity(4, 4)));
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(real_embed(pauli::Y()));
    Eigen::Vector4d want(-1, -1, 1, 1);
    EXPECT_LT((es.eigenvalues() - want).norm(), 1e-12);
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        HermitianOperator h = random_hermitian(3, rng);
        EXPECT_NEAR(min_eigenvalue(real_embed(h)), min_eigenvalue(h), 1e-10);
        HermitianOperator psd = random_mixed_state(3, rng, 2);
        EXPECT_GE(min_eigenvalue(real_embed(psd)), -1e-12);
        EXPECT_EQ(min_eigenvalue(real_embed(h)) >= 0.0, min_eigenvalue(h) >= 0.0);
    }
}

TEST(qmat, max_entangled_examples) {
    HermitianOperator one = max_entangled(1, false);
    EXPECT_EQ(one.dim(), 1);
    EXPECT_NEAR(one.matrix()(0, 0).real(), 1.0, 1e-15);
    HermitianOperator un = max_entangled(2, false);
    EXPECT_NEAR(un.trace(), 2.0, 1e-15);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(un.matrix());
    EXPECT_NEAR(es.eigenvalues()(2), 0.0, 1e-12);
    EXPECT_NEAR(max_entangled(2, true).trace(), 1.0, 1e-15);
}
