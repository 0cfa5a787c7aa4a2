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

#include "stbound/moments.hpp"

#include <gtest/gtest.h>

#include <set>

#include "stbound/random.hpp"

using namespace stbound;

namespace {

OperatorWord word(std::initializer_list<EffectSymbol> s) {
    return OperatorWord{std::vector<EffectSymbol>(s)};
}

const EffectSymbol A{1, 0, 0};
const EffectSymbol B{1, 1, 0};

/// Every product of at most `level` symbols, reduced and deduplicated.
std::set<OperatorWord> brute_force_words(const std::vector<EffectSymbol>& symbols, int level, const ReductionRules& rules) {
    std::set<OperatorWord> out{OperatorWord{}};
    std::vector<OperatorWord> layer{OperatorWord{}};
    for (int len = 1; len <= level; ++len) {
        std::vector<OperatorWord> next;
        for (const auto& w : layer) {
            for (const auto& s : symbols) {
                next.push_back(w * word({s}));
                if (auto r = reduce_word(next.back(), rules)) {
                    out.insert(*r);
                }
            }
        }
        layer = std::move(next);
    }
    return out;
}

ComplexMatrix projector(const ComplexMatrix& obs) {
    return 0.5 * (ComplexMatrix::Identity(obs.rows(), obs.cols()) + obs);
}

Strategy qubit_strategy(const ComplexMatrix& e0, const ComplexMatrix& e1) {
    Strategy s;
    s.shape = SubsystemShape{{2}};
    const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
    s.povms = {
        {HermitianOperator::from_rounded(e0), HermitianOperator::from_rounded(id - e0)},
        {HermitianOperator::from_rounded(e1), HermitianOperator::from_rounded(id - e1)},
    };
    return s;
}

}  // namespace

TEST(moments, generate_words_examples) {
    const auto symbols = make_symbols(1, 2, 2);
    ASSERT_EQ(symbols.size(), 2u);
    auto l1 = generate_words(symbols, 1);
    ASSERT_EQ(l1.size(), 3u);
    EXPECT_TRUE(l1[0].is_identity());
    EXPECT_EQ(l1[1], word({A}));
    EXPECT_EQ(l1[2], word({B}));

    // Exhaustive enumeration: 1, A, B, AB, BA.
    auto l2 = generate_words(symbols, 2);
    auto oracle = brute_force_words(symbols, 2, {});
    EXPECT_EQ(l2.size(), oracle.size());
    EXPECT_EQ(l2.size(), 5u);
    EXPECT_EQ(std::set<OperatorWord>(l2.begin(), l2.end()), oracle);
    // Without projectivity the four length-two products are distinct.
    EXPECT_EQ(generate_words(symbols, 2, {}, {.projective = false}).size(), 7u);

    EXPECT_EQ(generate_words(std::vector<EffectSymbol>{}, 3).size(), 1u);
    EXPECT_THROW(generate_words(symbols, 0), std::invalid_argument);
}

TEST(moments, generate_words_matches_enumeration) {
    for (bool projective : {true, false}) {
        for (int level = 1; level <= 4; ++level) {
            const auto symbols = make_symbols(0, 2, 3);
            const ReductionRules rules{projective};
            auto got = generate_words(symbols, level, {}, rules);
            EXPECT_EQ(std::set<OperatorWord>(got.begin(), got.end()), brute_force_words(symbols, level, rules));
            EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
            for (const auto& w : got) {
                EXPECT_EQ(reduce_word(w, rules), w);
            }
        }
    }
}

TEST(moments, extras_are_appended_once) {
    const auto symbols = make_symbols(1, 2, 2);
    auto words = generate_words(symbols, 1, {word({A, B, A}), word({A, A}), word({A, B, A})});
    ASSERT_EQ(words.size(), 4u);
    EXPECT_EQ(words.back(), word({A, B, A}));
}

TEST(moments, reduce_word_examples) {
    const EffectSymbol a1{1, 0, 1};
    EXPECT_EQ(reduce_word(word({A, A}), {}), word({A}));
    EXPECT_FALSE(reduce_word(word({A, a1}), {}).has_value());
    EXPECT_EQ(reduce_word(word({A, B}), {.projective = false}), word({A, B}));
    EXPECT_EQ(reduce_word(word({A, A}), {.projective = false}), word({A, A}));
    EXPECT_EQ(reduce_word(word({A, A, B, B, B, A}), {}), word({A, B, A}));
}

TEST(moments, layout_examples) {
    MomentLayout two = build_layout({OperatorWord{}, word({A})}, {});
    EXPECT_EQ(two.num_moments(), 2);
    EXPECT_EQ(two.entry(0, 0).id, two.unit_id());
    EXPECT_EQ(two.entry(1, 1).id, two.entry(1, 0).id);
    MomentLayout one = build_layout({OperatorWord{}}, {});
    EXPECT_EQ(one.num_moments(), 1);
    EXPECT_THROW(build_layout({word({A})}, {}), std::invalid_argument);

    const auto symbols = make_symbols(1, 2, 2);
    MomentLayout l = build_layout(generate_words(symbols, 3), {});
    for (int i = 0; i < l.size(); ++i) {
        for (int j = 0; j < l.size(); ++j) {
            const MomentRef a = l.entry(i, j);
            const MomentRef b = l.entry(j, i);
            EXPECT_EQ(a.id, b.id);
            if (!a.is_zero() && !l.self_adjoint(a.id)) {
                EXPECT_NE(a.conjugate, b.conjugate);
            }
        }
    }
}

TEST(moments, realize_examples) {
    const auto symbols = make_symbols(1, 2, 2);
    const ComplexMatrix z = pauli::Z().matrix();
    const ComplexMatrix x = pauli::X().matrix();
    Strategy s1 = qubit_strategy(projector((z + x) / std::sqrt(2.0)), projector((z - x) / std::sqrt(2.0)));
    s1.validate();

    MomentLayout unit = build_layout({OperatorWord{}}, {});
    HermitianOperator rho = random_mixed_state(2, *std::make_unique<Rng>(1));
    EXPECT_NEAR(realize_moment_matrix(unit, s1, rho).matrix()(0, 0).real(), 1.0, 1e-12);

    MomentLayout l = build_layout(generate_words(symbols, 1), {});
    HermitianOperator sigma = 0.5 * HermitianOperator::projector(basis_ket(2, 0));
    HermitianOperator g = realize_moment_matrix(l, s1, sigma);
    EXPECT_NEAR(g.matrix()(1, 0).real(), (2.0 + std::sqrt(2.0)) / 8.0, 1e-12);
    EXPECT_TRUE(realize_moment_matrix(l, s1, HermitianOperator::zero(2)).matrix().isZero());
    EXPECT_THROW(realize_moment_matrix(l, s1, HermitianOperator::zero(3)), DimensionError);
}

TEST(moments, realized_entries_follow_layout) {
    Rng rng(17);
    const auto symbols = make_symbols(0, 2, 3);
    for (bool projective : {true, false}) {
        const ReductionRules rules{projective};
        MomentLayout l = build_layout(generate_words(symbols, 2, {}, rules), rules);
        for (int t = 0; t < 5; ++t) {
            Strategy s;
            s.shape = SubsystemShape{{3}};
            for (int y = 0; y < 2; ++y) {
                s.povms.push_back(projective ? random_projective_measurement(3, 3, rng) : random_povm(3, 3, rng));
            }
            HermitianOperator rho = random_mixed_state(3, rng);
            HermitianOperator g = realize_moment_matrix(l, s, rho);
            auto values = moment_values(l, s, rho);
            for (int i = 0; i < l.size(); ++i) {
                for (int j = 0; j < l.size(); ++j) {
                    const MomentRef r = l.entry(i, j);
                    const cplx want = r.is_zero() ? cplx(0.0) : (r.conjugate ? std::conj(values[r.id]) : values[r.id]);
                    EXPECT_LT(std::abs(g.matrix()(i, j) - want), 1e-12);
                }
            }
        }
    }
}

TEST(moments, block_moment_examples) {
    Rng rng(5);
    const auto symbols = make_symbols(0, 2, 2);
    MomentLayout l = build_layout(generate_words(symbols, 2), {});
    Strategy s;
    s.shape = SubsystemShape{{2, 2}};
    s.povms = {
        {HermitianOperator::from_rounded(projector(pauli::Z().matrix())),
         HermitianOperator::from_rounded(projector(-pauli::Z().matrix()))},
        {HermitianOperator::from_rounded(projector(pauli::X().matrix())),
         HermitianOperator::from_rounded(projector(-pauli::X().matrix()))},
    };
    s.validate();

    HermitianOperator ra = random_mixed_state(2, rng);
    HermitianOperator rb = random_mixed_state(2, rng);
    Strategy sa = s;
    sa.shape = SubsystemShape{{2}};
    HermitianOperator scalar = realize_moment_matrix(l, sa, ra);
    HermitianOperator block = realize_block_moment(l, s, kron(ra, rb));
    EXPECT_LT((block.matrix() - kron(scalar.matrix(), rb.matrix())).norm(), 1e-12);

    HermitianOperator phi = max_entangled(2, true);
    HermitianOperator bm = realize_block_moment(l, s, phi);
    const ComplexMatrix want = 0.25 * (ComplexMatrix::Identity(2, 2) + pauli::Z().matrix());
    EXPECT_LT((bm.matrix().block(2, 0, 2, 2) - want).norm(), 1e-12);
    EXPECT_TRUE(realize_block_moment(l, s, HermitianOperator::zero(4)).matrix().isZero());
    EXPECT_THROW(realize_block_moment(l, sa, ra), DimensionError);

    // Identity-row blocks reproduce tr_A((E (x) 1) rho).
    HermitianOperator rho = random_mixed_state(4, rng);
    HermitianOperator g = realize_block_moment(l, s, rho);
    for (int y = 0; y < 2; ++y) {
        const int row = static_cast<int>(
            std::find(l.words().begin(), l.words().end(), word({{0, y, 0}})) - l.words().begin());
        ComplexMatrix direct = partial_trace(
            ComplexMatrix(kron(s.povms[y][0].matrix(), ComplexMatrix::Identity(2, 2)) * rho.matrix()),
            s.shape,
            std::vector<int>{1});
        EXPECT_LT((g.matrix().block(row * 2, 0, 2, 2) - direct).norm(), 1e-10);
    }
}

TEST(moments, cp_positivity) {
    Rng rng(99);
    const auto symbols = make_symbols(0, 2, 2);
    MomentLayout l = build_layout(generate_words(symbols, 3), {});
    MomentLayout lp = build_layout(generate_words(symbols, 2, {}, {.projective = false}), {.projective = false});
    for (int t = 0; t < 100; ++t) {
        Strategy s;
        s.shape = SubsystemShape{{2, 2}};
        s.povms = {random_projective_measurement(2, 2, rng), random_projective_measurement(2, 2, rng)};
        HermitianOperator rho = random_mixed_state(4, rng);
        EXPECT_GE(min_eigenvalue(realize_moment_matrix(l, s, rho)), -1e-9);
        EXPECT_GE(min_eigenvalue(realize_block_moment(l, s, rho)), -1e-9);
        HermitianOperator r = random_mixed_state(2, rng);
        Strategy sp;
        sp.shape = SubsystemShape{{2}};
        sp.povms = {random_povm(2, 2, rng), random_povm(2, 2, rng)};
        HermitianOperator g = realize_moment_matrix(lp, sp, random_mixed_state(2, rng));
        EXPECT_GE(min_eigenvalue(kron(g, r.transpose())), -1e-9);
    }
}

TEST(moments, span_examples) {
    const auto symbols = make_symbols(0, 2, 2);
    MomentSpan trivial = sample_dim_span(symbols, {OperatorWord{}}, 2, 1);
    EXPECT_EQ(trivial.dimension(), 1);

    auto words = generate_words(symbols, 2);
    MomentSpan a = sample_dim_span(symbols, words, 2, 42);
    MomentSpan b = sample_dim_span(symbols, words, 2, 42);
    EXPECT_EQ(a.basis, b.basis);

    // Large d: every layout degree of freedom is reachable.
    MomentLayout l = build_layout(words, {});
    MomentSpan big = sample_dim_span(symbols, words, 6, 3);
    EXPECT_EQ(big.dimension(), l.real_dimension());
}

TEST(moments, span_contains_realized_matrices) {
    Rng rng(123);
    const auto symbols = make_symbols(0, 2, 2);
    auto words = generate_words(symbols, 3);
    MomentLayout l = build_layout(words, {});
    MomentSpan span = sample_dim_span(symbols, words, 2, 7);
    for (int t = 0; t < 50; ++t) {
        Strategy s;
        s.shape = SubsystemShape{{2}};
        s.povms = {random_projective_measurement(2, 2, rng), random_projective_measurement(2, 2, rng)};
        auto coords = moment_coordinates(l, moment_values(l, s, random_mixed_state(2, rng)));
        EXPECT_LE(span.residual(coords), 1e-7);
    }
    for (uint64_t seed : {1, 2, 3}) {
        EXPECT_EQ(sample_dim_span(symbols, words, 2, seed).dimension(), span.dimension());
    }
    RealMatrix comp = span.complement();
    EXPECT_EQ(comp.cols() + span.dimension(), l.real_dimension());
    EXPECT_LT((comp.transpose() * span.basis).norm(), 1e-10);
}

TEST(moments, joint_span_couples_components) {
    Rng rng(31);
    const auto symbols = make_symbols(0, 2, 2);
    for (int level = 1; level <= 2; ++level) {
        auto words = generate_words(symbols, level);
        MomentLayout l = build_layout(words, {});
        const int per = l.real_dimension();
        MomentSpan single = sample_dim_span(symbols, words, 2, 5);
        MomentSpan joint = sample_dim_span(symbols, words, 2, 5, 50, {}, 2, 1);
        // Shared measurements tie the components together in a qubit.
        EXPECT_LT(joint.dimension(), 3 * single.dimension());
        EXPECT_EQ(joint.basis.rows(), 3 * per);
        for (int t = 0; t < 20; ++t) {
            Strategy s;
            s.shape = SubsystemShape{{2}};
            s.povms = {random_projective_measurement(2, 2, rng), random_projective_measurement(2, 2, rng)};
            Eigen::VectorXd v(3 * per);
            v.segment(0, per) = moment_coordinates(l, moment_values(l, s, random_pure_state(2, rng)));
            v.segment(per, per) = moment_coordinates(l, moment_values(l, s, random_mixed_state(2, rng)));
            v.segment(2 * per, per) = moment_coordinates(l, moment_values(l, s, random_hermitian(2, rng)));
            EXPECT_LE(joint.residual(v), 1e-7 * v.norm());
        }
    }
}
