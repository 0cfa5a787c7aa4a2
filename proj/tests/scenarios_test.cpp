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

#include "stbound/scenarios.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "stbound/random.hpp"

using namespace stbound;

namespace {

const double kRoot2 = std::sqrt(2.0);

SolveReport solve_ok(const SdpProblem& p) {
    SolveReport r = solve(p);
    EXPECT_TRUE(r.converged()) << to_string(r.status) << ": " << r.message;
    return r;
}

FunctionalData chsh(double v) {
    return FunctionalData{"chsh", v, {}};
}

BuildOptions level(int l) {
    BuildOptions o;
    o.level = l;
    return o;
}

PmOptions pm_level(int l) {
    PmOptions o;
    o.level = l;
    return o;
}

/// Brute-force four-index contraction.
ComplexMatrix contract_oracle(const ComplexMatrix& x, const ComplexMatrix& w, int da) {
    const int db = static_cast<int>(x.rows());
    ComplexMatrix out = ComplexMatrix::Zero(da, da);
    for (int a1 = 0; a1 < da; ++a1)
        for (int a2 = 0; a2 < da; ++a2)
            for (int b = 0; b < db; ++b)
                for (int c = 0; c < db; ++c) out(a1, a2) += x(b, c) * w(a1 * db + b, a2 * db + c);
    return out;
}

}  // namespace

TEST(scenarios, functional_values_of_presets) {
    EXPECT_NEAR(evaluate_functional("chsh", preset_strategy("S1")), 2 * kRoot2, 1e-10);
    EXPECT_NEAR(evaluate_functional("chsh", preset_strategy("S2")), 2.0, 1e-10);
    EXPECT_NEAR(evaluate_functional("rac", preset_strategy("rac2_ideal")), (2 + kRoot2) / 4, 1e-10);
    EXPECT_NEAR(evaluate_functional("steering", preset_strategy("singlet_zx")), 2.0, 1e-10);
    EXPECT_THROW(preset_strategy("S3"), std::invalid_argument);
    EXPECT_THROW(evaluate_functional("nope", preset_strategy("S1")), std::invalid_argument);
}

TEST(scenarios, preset_operators) {
    const Strategy s1 = preset_strategy("S1");
    const ReferenceAssemblage bb84 = reference_bb84();
    for (size_t k = 0; k < 4; ++k) {
        EXPECT_LT((s1.states[k].matrix() - bb84.sigma[k].matrix()).norm(), 1e-12);
    }
    const Strategy s2 = preset_strategy("S2");
    EXPECT_LT((s2.states[2].matrix() - 0.25 * ComplexMatrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LT((s2.povms[1][0].matrix() - s2.povms[0][0].matrix()).norm(), 1e-12);
    EXPECT_NEAR(s2.povms[0][0].matrix()(0, 0).real(), 1.0, 1e-12);
}

TEST(scenarios, bb_contract_examples) {
    const ComplexMatrix z = pauli::Z().matrix();
    const ComplexMatrix x = pauli::X().matrix();
    EXPECT_LT((bb_contract(z, kron(x, z), 2) - 2.0 * x).norm(), 1e-12);
    const ComplexMatrix phi = max_entangled(2, true).matrix();
    const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
    EXPECT_LT((bb_contract(id, phi, 2) - contract_oracle(id, phi, 2)).norm(), 1e-12);
    EXPECT_LT(bb_contract(ComplexMatrix::Zero(2, 2), phi, 2).norm(), 1e-15);
    EXPECT_THROW(bb_contract(id, ComplexMatrix::Identity(6, 6), 2), DimensionError);
}

TEST(scenarios, bb_contract_product_and_linearity) {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const ComplexMatrix xb = random_hermitian(3, rng).matrix();
        const ComplexMatrix p = random_hermitian(2, rng).matrix();
        const ComplexMatrix q = random_hermitian(3, rng).matrix();
        const ComplexMatrix w = kron(p, q);
        EXPECT_LT((bb_contract(xb, w, 2) - (xb * q.transpose()).trace() * p).norm(), 1e-12);
        const ComplexMatrix w2 = random_hermitian(6, rng).matrix();
        const ComplexMatrix x2 = random_hermitian(3, rng).matrix();
        EXPECT_LT((bb_contract(xb, w2, 2) - contract_oracle(xb, w2, 2)).norm(), 1e-12);
        EXPECT_LT((bb_contract(ComplexMatrix(xb + 2.0 * x2), w2, 2) - bb_contract(xb, w2, 2) - 2.0 * bb_contract(x2, w2, 2))
                      .norm(),
                  1e-12);
        EXPECT_LT((bb_contract(xb, ComplexMatrix(w + w2), 2) - bb_contract(xb, w, 2) - bb_contract(xb, w2, 2)).norm(),
                  1e-12);
    }
}

TEST(scenarios, oracle_examples) {
    const ReferenceAssemblage bb84 = reference_bb84();
    EXPECT_NEAR(assemblage_fidelity(bb84, bb84.sigma), 1.0, 1e-6);
    const std::vector<HermitianOperator> mixed{0.5 * HermitianOperator::identity(2)};
    const std::vector<HermitianOperator> zero{HermitianOperator::projector(basis_ket(2, 0))};
    EXPECT_NEAR(fidelity_oracle_dual(mixed, zero, {{1.0}}), 1.0, 1e-6);
    EXPECT_NEAR(fidelity_oracle_choi(mixed, zero, {{1.0}}), 1.0, 1e-6);
    const Strategy s2 = preset_strategy("S2");
    EXPECT_NEAR(assemblage_fidelity(bb84, s2.states), 0.75, 1e-6);
    const FidelityWeights w = assemblage_weights(bb84, s2.states);
    EXPECT_NEAR(fidelity_oracle_choi(s2.states, bb84.sigma, w), 0.75, 1e-6);
    EXPECT_NEAR(fidelity_oracle_choi(bb84.sigma, bb84.sigma, assemblage_weights(bb84, bb84.sigma)), 1.0, 1e-6);
}

TEST(scenarios, choi_matches_dual_on_random_pairings) {
    Rng rng(11);
    for (int t = 0; t < 5; ++t) {
        std::vector<HermitianOperator> res, ref;
        FidelityWeights w;
        for (int k = 0; k < 3; ++k) {
            res.push_back(random_mixed_state(2, rng));
            ref.push_back(random_pure_state(2, rng));
            w.c.push_back(0.3 + 0.1 * k);
        }
        EXPECT_NEAR(fidelity_oracle_dual(res, ref, w), fidelity_oracle_choi(res, ref, w), 1e-6);
    }
}

TEST(scenarios, steering_oracle_examples) {
    const ReferenceBipartiteState phi = reference_phi_plus();
    EXPECT_NEAR(steering_fidelity_dual(phi.rho, 2, phi), 1.0, 1e-6);
    EXPECT_NEAR(steering_fidelity_choi(phi.rho, 2, phi), 1.0, 1e-6);
    // Product states admit no better than the best separable overlap, 1/2.
    const HermitianOperator prod = HermitianOperator::from_rounded(kron(
        HermitianOperator::projector(basis_ket(2, 0)).matrix(), HermitianOperator::projector(basis_ket(2, 0)).matrix()));
    EXPECT_NEAR(steering_fidelity_dual(prod, 2, phi), 0.5, 1e-6);
}

TEST(scenarios, validation_errors) {
    ReferenceAssemblage bad = reference_bb84();
    bad.sigma[2] = 0.25 * HermitianOperator::identity(2);
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    BellTable t = bell_table(preset_strategy("S1"), 2);
    t.n_x = 3;
    EXPECT_THROW(build_assemblage_bound(reference_bb84(), t, level(1)), std::invalid_argument);
    EXPECT_THROW(build_assemblage_bound(reference_bb84(), FunctionalData{"rac", 0.8, {}}, level(1)),
                 std::invalid_argument);
    EXPECT_THROW(build_pm_bound(reference_rac2(), chsh(2.0), pm_level(1)), std::invalid_argument);
    EXPECT_THROW(build_steering_bound(reference_phi_plus(), pm_table(preset_strategy("rac2_ideal")), level(1)),
                 std::invalid_argument);
}

TEST(scenarios, assemblage_bound_full_table_of_s1) {
    const BellTable t = bell_table(preset_strategy("S1"), 2);
    EXPECT_GE(solve_ok(build_assemblage_bound(reference_bb84(), t, level(2))).objective, 0.999);
}

TEST(scenarios, assemblage_bound_chsh_endpoints) {
    EXPECT_NEAR(solve_ok(build_assemblage_bound(reference_bb84(), chsh(2.0), level(3))).objective, 0.75, 2e-3);
    EXPECT_NEAR(solve_ok(build_assemblage_bound(reference_bb84(), chsh(1.0 + kRoot2), level(3))).objective, 0.875,
                2e-3);
    EXPECT_GE(solve_ok(build_assemblage_bound(reference_bb84(), chsh(2 * kRoot2), level(3))).objective, 0.999);
}

TEST(scenarios, assemblage_bound_above_quantum_max_is_infeasible) {
    const SolveReport r = solve(build_assemblage_bound(reference_bb84(), chsh(3.0), level(2)));
    EXPECT_EQ(r.status, SolveStatus::infeasible) << r.message;
}

TEST(scenarios, assemblage_metadata) {
    const SdpProblem p = build_assemblage_bound(reference_bb84(), chsh(2.5), level(1));
    EXPECT_EQ(p.metadata.at("scenario"), "bell-assemblage");
    EXPECT_EQ(p.metadata.at("level"), "1");
}

TEST(scenarios, pm_bound_rac_maximum) {
    const ObservedData d = FunctionalData{"rac", (2 + kRoot2) / 4, {}};
    const SolveReport r = solve_family(build_pm_family(reference_rac2(), d, pm_level(3)));
    EXPECT_TRUE(r.converged()) << r.message;
    EXPECT_GE(r.objective, 0.999);
    const ObservedData above = FunctionalData{"rac", 0.86, {}};
    EXPECT_EQ(solve_family(build_pm_family(reference_rac2(), above, pm_level(2))).status, SolveStatus::infeasible);
}

TEST(scenarios, pm_hierarchy_is_monotone) {
    for (double v : {0.78, 0.82, 0.85}) {
        double prev = -1.0;
        for (int l = 1; l <= 3; ++l) {
            const SolveReport r =
                solve_family(build_pm_family(reference_rac2(), FunctionalData{"rac", v, {}}, pm_level(l)));
            ASSERT_TRUE(r.converged()) << r.message;
            EXPECT_GE(r.objective, prev - 1e-7);
            prev = r.objective;
        }
    }
}

TEST(scenarios, projector_rank_patterns_examples) {
    EXPECT_EQ(projector_rank_patterns(2, 2, 2).size(), 9u);
    EXPECT_EQ(projector_rank_patterns(1, 3, 2).size(), 6u);
    const auto one = projector_rank_patterns(1, 2, 1);
    ASSERT_EQ(one.size(), 2u);
    EXPECT_EQ(one[0], (std::vector<std::vector<int>>{{1, 0}}));
    EXPECT_THROW(projector_rank_patterns(8, 4, 4), std::invalid_argument);
}

TEST(scenarios, pm_bound_below_oracle_for_random_strategy) {
    Rng rng(3);
    for (int t = 0; t < 3; ++t) {
        Strategy s;
        s.shape = SubsystemShape{{2}};
        for (int x = 0; x < 4; ++x) {
            s.states.push_back(random_pure_state(2, rng));
        }
        s.povms = {random_projective_measurement(2, 2, rng), random_projective_measurement(2, 2, rng)};
        const double oracle = ensemble_fidelity(reference_rac2(), s.states);
        const SolveReport r = solve_family(build_pm_family(reference_rac2(), pm_table(s), pm_level(2)));
        ASSERT_TRUE(r.converged()) << r.message;
        EXPECT_LE(r.objective, oracle + 1e-6);
    }
}

TEST(scenarios, pm_identical_references_give_constant_preparation_fidelity) {
    // Every state maps to the best constant output: bound is the max
    // average overlap 1 with a single reference.
    ReferenceEnsemble same;
    same.rho.assign(4, HermitianOperator::projector(basis_ket(2, 0)));
    const ObservedData d = pm_table(preset_strategy("rac2_ideal"));
    const SolveReport r = solve_family(build_pm_family(same, d, pm_level(2)));
    EXPECT_TRUE(r.converged()) << r.message;
    EXPECT_NEAR(r.objective, 1.0, 1e-5);
}

TEST(scenarios, pm_span_mismatch) {
    MomentSpan s = pm_span(4, 2, 2, pm_level(1));
    EXPECT_THROW(build_pm_bound(reference_rac2(), FunctionalData{"rac", 0.8, {}}, pm_level(2), s),
                 std::invalid_argument);
}

TEST(scenarios, steering_bound_endpoints) {
    const ObservedData ideal = FunctionalData{"steering", 2.0, {}};
    EXPECT_GE(solve_ok(build_steering_bound(reference_phi_plus(), ideal, level(2))).objective, 0.99);
    const AssemblageTomogram tomo = assemblage_tomogram(preset_strategy("singlet_zx"));
    EXPECT_GE(solve_ok(build_steering_bound(reference_phi_plus(), tomo, level(2))).objective, 0.999);
}

TEST(scenarios, steering_bound_at_lhs_point) {
    // |0><0| (x) psi with psi on the Z-X diagonal reaches I = sqrt 2.
    Strategy s;
    s.shape = SubsystemShape{{2, 2}};
    Eigen::VectorXcd psi(2);
    psi << std::cos(M_PI / 8), std::sin(M_PI / 8);
    const ComplexMatrix rho = kron(HermitianOperator::projector(basis_ket(2, 0)).matrix(),
                                   HermitianOperator::projector(psi).matrix());
    s.states = {HermitianOperator::from_rounded(rho)};
    const HermitianOperator p0 = HermitianOperator::projector(basis_ket(2, 0));
    const HermitianOperator p1 = HermitianOperator::projector(basis_ket(2, 1));
    s.povms = {{p0, p1}, {HermitianOperator::identity(2), 0.0 * HermitianOperator::identity(2)}};
    ASSERT_NEAR(evaluate_functional("steering", s), kRoot2, 1e-12);
    const double oracle = steering_fidelity_dual(s.states[0], 2, reference_phi_plus());
    EXPECT_NEAR(oracle, 0.5, 1e-6);
    const double bound =
        solve_ok(build_steering_bound(reference_phi_plus(), FunctionalData{"steering", kRoot2, {}}, level(2)))
            .objective;
    EXPECT_LE(bound, oracle + 1e-6);
}

TEST(scenarios, mix_strategies_interpolates) {
    const Strategy m = mix_strategies(preset_strategy("S1"), preset_strategy("S2"), 0.5);
    EXPECT_NEAR(evaluate_functional("chsh", m), 1.0 + kRoot2, 1e-10);
    EXPECT_NEAR(assemblage_fidelity(reference_bb84(), m.states), 0.875, 1e-6);
}

TEST(scenarios, bound_curve_examples) {
    EXPECT_TRUE(bound_curve([](double) { return SdpProblem{}; }, {}).empty());
    auto build = [](double v) { return build_assemblage_bound(reference_bb84(), chsh(v), level(1)); };
    const auto pts = bound_curve(build, {2.0, 2.5, 3.0}, {}, 2);
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_EQ(pts[2].report.status, SolveStatus::infeasible);
    EXPECT_TRUE(pts[0].report.converged());
    EXPECT_LE(pts[0].bound, pts[1].bound + 1e-7);
    const auto failed = bound_curve([](double) -> SdpProblem { throw std::invalid_argument("bad"); }, {1.0});
    EXPECT_EQ(failed[0].report.status, SolveStatus::numerical_failure);
}
