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

#include "stbound/sdp.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "stbound/random.hpp"

using namespace stbound;

namespace {

/// Fills an n x n Hermitian matrix of fresh variables into `expr` at offset 0.
std::vector<int> hermitian_variable(SdpProblem& p, LinearMatrixExpr& expr, int n) {
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const int v = i == j ? p.pool.add_real() : p.pool.add_complex();
            expr.place(i, j, v);
            ids.push_back(v);
        }
    }
    return ids;
}

ComplexMatrix mat2(cplx a, cplx b, cplx c, cplx d) {
    ComplexMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

/// min tr Y  s.t.  Y (x) 1 >= r.
SdpProblem replacer_problem(const ComplexMatrix& r, int din, int dout) {
    SdpProblem p;
    LinearMatrixExpr y(din);
    hermitian_variable(p, y, din);
    LinearMatrixExpr big = y.kron_right(ComplexMatrix::Identity(dout, dout));
    big.add_constant(-r);
    p.objective = trace_with(ComplexMatrix::Identity(din, din), y);
    p.add_psd(big, "dominance");
    return p;
}

/// Minimal SDPA sparse reader used as an independent check of the writer.
LmiProgram read_sdpa(const std::string& text, double& offset) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.front(), '"');
    std::istringstream head(line.substr(line.rfind(' ') + 1));
    head >> offset;
    int m = 0;
    int nb = 0;
    in >> m >> nb;
    std::vector<int> sizes(nb);
    for (auto& s : sizes) {
        in >> s;
    }
    LmiProgram p;
    p.num_vars = m;
    p.cost.resize(m);
    for (int i = 0; i < m; ++i) {
        in >> p.cost(i);
    }
    std::vector<std::vector<RealMatrix>> mats(nb);
    for (int k = 0; k < nb; ++k) {
        const int n = std::abs(sizes[k]);
        mats[k].assign(m + 1, RealMatrix::Zero(n, n));
    }
    int mat, blk, i, j;
    double v;
    while (in >> mat >> blk >> i >> j >> v) {
        mats[blk - 1][mat](i - 1, j - 1) = v;
        mats[blk - 1][mat](j - 1, i - 1) = v;
    }
    for (int k = 0; k < nb; ++k) {
        LmiBlock b;
        b.size = std::abs(sizes[k]);
        b.constant = -mats[k][0];
        for (int q = 0; q < m; ++q) {
            b.vars.push_back(q);
            b.coeffs.push_back(mats[k][q + 1]);
        }
        p.blocks.push_back(std::move(b));
    }
    return p;
}

}  // namespace

TEST(sdp, scalar_cone) {
    SdpProblem p;
    const int x = p.pool.add_real("x");
    LinearMatrixExpr e(1);
    e.place(0, 0, x);
    p.add_psd(e);
    p.objective.add(x, 1.0);
    SolveReport r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal) << r.message;
    EXPECT_NEAR(r.objective, 0.0, 1e-7);
}

TEST(sdp, eigenvalue_dominance) {
    SdpProblem p;
    const int y = p.pool.add_real("y");
    LinearMatrixExpr e(2);
    e.add_term(y, 0.5 * ComplexMatrix::Identity(2, 2));
    e.add_constant(-pauli::Z().matrix());
    p.add_psd(e);
    p.objective.add(y, 1.0);
    SolveReport r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal) << r.message;
    EXPECT_NEAR(r.objective, 1.0, 1e-7);
    EXPECT_NEAR(r.lower_bound, 1.0, 1e-6);
    EXPECT_TRUE(verify(r, p, 1e-6));
}

namespace {

/// [[1, 1, x], [1, 1, y], [x, y, z]] >= 0. The constant corner is singular,
/// so every feasible point has x = y and none is strictly feasible.
SdpProblem singular_corner(int& x, int& y, int& z) {
    SdpProblem p;
    x = p.pool.add_real("x");
    y = p.pool.add_real("y");
    z = p.pool.add_real("z");
    LinearMatrixExpr e(3);
    ComplexMatrix c = ComplexMatrix::Zero(3, 3);
    c.topLeftCorner(2, 2).setOnes();
    e.add_constant(c);
    e.place(0, 2, x);
    e.place(1, 2, y);
    e.place(2, 2, z);
    p.add_psd(e);
    return p;
}

}  // namespace

TEST(sdp, singular_constant_corner) {
    int x, y, z;
    SdpProblem p = singular_corner(x, y, z);
    // min z - x - y = min x^2 - 2x on the face x = y.
    p.objective.add(z, 1.0);
    p.objective.add(x, -1.0);
    p.objective.add(y, -1.0);
    SolveReport r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal) << r.message;
    EXPECT_NEAR(r.objective, -1.0, 1e-7);
    EXPECT_NEAR(r.assignment.at(x).real(), r.assignment.at(y).real(), 1e-7);
    EXPECT_TRUE(verify(r, p, 1e-7));
}

TEST(sdp, singular_corner_with_conflicting_equality) {
    int x, y, z;
    SdpProblem p = singular_corner(x, y, z);
    ScalarExpr e;
    e.add(x, 1.0).add(y, -1.0);
    e.constant = -1.0;
    p.add_equality(e);
    p.objective.add(z, 1.0);
    EXPECT_EQ(solve(p).status, SolveStatus::infeasible);
}

TEST(sdp, infeasible_toy) {
    SdpProblem p;
    const int x = p.pool.add_real("x");
    LinearMatrixExpr lo(1);
    lo.place(0, 0, x);
    lo.add_constant(-ComplexMatrix::Identity(1, 1));
    LinearMatrixExpr hi(1);
    hi.add_term(x, -0.5 * ComplexMatrix::Identity(1, 1));
    p.add_psd(lo);
    p.add_psd(hi);
    p.objective.add(x, 1.0);
    SolveReport r = solve(p);
    EXPECT_EQ(r.status, SolveStatus::infeasible) << r.message;
}

TEST(sdp, inconsistent_equalities_are_infeasible) {
    SdpProblem p;
    const int x = p.pool.add_real("x");
    LinearMatrixExpr e(1);
    e.place(0, 0, x);
    p.add_psd(e);
    p.pool.fix(x, 1.0);
    ScalarExpr eq;
    eq.add(x, 1.0);
    eq.constant = -2.0;
    p.add_equality(eq);
    EXPECT_EQ(solve(p).status, SolveStatus::infeasible);
}

TEST(sdp, unbounded_direction_is_reported) {
    SdpProblem p;
    const int x = p.pool.add_real("x");
    const int free = p.pool.add_real("free");
    LinearMatrixExpr e(1);
    e.place(0, 0, x);
    p.add_psd(e);
    p.objective.add(x, 1.0).add(free, 1.0);
    EXPECT_EQ(solve(p).status, SolveStatus::numerical_failure);
}

TEST(sdp, dominance_matches_commuting_oracle) {
    Rng rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const double p0 = u(rng);
        const double q0 = u(rng);
        const double c = 0.5 + u(rng);
        ComplexMatrix rho = mat2(p0, 0, 0, 1 - p0);
        ComplexMatrix ref = mat2(q0, 0, 0, 1 - q0);
        ComplexMatrix r = c * kron(rho, ref.transpose());
        // Y (x) 1 >= r for diagonal r: Y_a = max_b r_(a,b) is optimal.
        Eigen::VectorXd diag = r.diagonal().real();
        const double want = std::max(diag(0), diag(1)) + std::max(diag(2), diag(3));
        SdpProblem p = replacer_problem(r, 2, 2);
        SolveReport rep = solve(p);
        ASSERT_EQ(rep.status, SolveStatus::optimal) << rep.message;
        EXPECT_NEAR(rep.objective, want, 1e-7);
    }
}

TEST(sdp, complex_block_solve) {
    // For a pure target |v><v| the optimum is the squared nuclear norm of v
    // reshaped into a d_in x d_out matrix.
    Eigen::VectorXcd v(4);
    v << cplx(0.3, 0.1), cplx(0.2, -0.5), cplx(-0.4, 0.2), cplx(0.1, 0.6);
    ComplexMatrix r = v * v.adjoint();
    ComplexMatrix m = mat2(v(0), v(1), v(2), v(3));
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const double want = std::pow(svd.singularValues().sum(), 2);
    SdpProblem p = replacer_problem(r, 2, 2);
    SolveReport rep = solve(p);
    ASSERT_EQ(rep.status, SolveStatus::optimal) << rep.message;
    EXPECT_NEAR(rep.objective, want, 1e-7);
    EXPECT_NEAR(rep.lower_bound, want, 1e-6);
    EXPECT_TRUE(verify(rep, p, 1e-7));
}

TEST(sdp, complex_equality) {
    SdpProblem p;
    LinearMatrixExpr g(2);
    auto ids = hermitian_variable(p, g, 2);
    p.add_psd(g);
    p.pool.fix(ids[0], 1.0);
    p.pool.fix(ids[2], 1.0);
    p.add_complex_equality({{ids[1], 2.0}}, cplx(0.6, 0.8));
    p.objective.add(ids[0], 1.0);
    SolveReport r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal) << r.message;
    EXPECT_NEAR(std::abs(r.assignment[ids[1]] - cplx(0.3, 0.4)), 0.0, 1e-8);
    EXPECT_LT(equality_residual(p, r.assignment), 1e-8);
}

TEST(sdp, assemble_round_trip) {
    Rng rng(4);
    std::normal_distribution<double> n01;
    SdpProblem p;
    LinearMatrixExpr g(3);
    hermitian_variable(p, g, 3);
    const int w = p.pool.add_complex("w");
    LinearMatrixExpr h = g.kron_right(pauli::X().matrix());
    h.add_term(w, ComplexMatrix::Random(6, 6));
    p.add_psd(g);
    p.add_psd(h);
    LinearMatrixExpr real_only(2);
    const int a = p.pool.add_real();
    real_only.place(0, 1, a);
    p.add_psd(real_only);
    ConicProgram cp = assemble(p);
    EXPECT_TRUE(cp.blocks[0].embedded);
    EXPECT_FALSE(cp.blocks[2].embedded);
    for (int t = 0; t < 100; ++t) {
        Assignment asg(p.pool.size());
        for (int v = 0; v < p.pool.size(); ++v) {
            asg[v] = p.pool.is_real(v) ? cplx(n01(rng)) : cplx(n01(rng), n01(rng));
        }
        Eigen::VectorXd x = cp.to_coords(asg);
        for (size_t k = 0; k < p.psd.size(); ++k) {
            ComplexMatrix direct = p.psd[k].evaluate(asg);
            RealMatrix want = cp.blocks[k].embedded ? real_embed(direct) : RealMatrix(direct.real());
            EXPECT_LT((cp.evaluate_block(static_cast<int>(k), x) - want).cwiseAbs().maxCoeff(), 1e-12);
        }
        Assignment back = cp.to_assignment(x);
        for (int v = 0; v < p.pool.size(); ++v) {
            EXPECT_EQ(back[v], asg[v]);
        }
    }
}

TEST(sdp, assemble_rejects_non_hermitian_constant) {
    SdpProblem p;
    LinearMatrixExpr e(2);
    ComplexMatrix c = ComplexMatrix::Zero(2, 2);
    c(0, 1) = 1.0;
    e.add_constant(c);
    p.add_psd(e);
    EXPECT_THROW(assemble(p), std::invalid_argument);
}

TEST(sdp, validate_rejects_dangling_ids) {
    SdpProblem p;
    LinearMatrixExpr e(1);
    e.place(0, 0, 3);
    p.add_psd(e);
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(sdp, verify_examples) {
    SdpProblem p;
    const int y = p.pool.add_real("y");
    LinearMatrixExpr e(2);
    e.add_term(y, 0.5 * ComplexMatrix::Identity(2, 2));
    e.add_constant(-pauli::Z().matrix());
    p.add_psd(e);
    p.objective.add(y, 1.0);
    SolveReport r = solve(p);
    EXPECT_TRUE(verify(r, p, 1e-6));
    SolveReport bad = r;
    bad.assignment[y] -= 1e-3;
    EXPECT_FALSE(verify(bad, p, 1e-6));
    EXPECT_TRUE(verify(bad, p, std::numeric_limits<double>::infinity()));
}

TEST(sdp, weak_duality_and_scaling) {
    Rng rng(8);
    for (int t = 0; t < 5; ++t) {
        HermitianOperator rho = random_mixed_state(2, rng);
        HermitianOperator ref = random_pure_state(2, rng);
        ComplexMatrix r = kron(rho.matrix(), ref.matrix().transpose());
        SdpProblem p = replacer_problem(r, 2, 2);
        SolveReport rep = solve(p);
        ASSERT_EQ(rep.status, SolveStatus::optimal);
        // Any Y = lambda_max(r) 1 is feasible.
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(r);
        SolveReport feas = rep;
        const double lmax = es.eigenvalues().maxCoeff();
        for (int v = 0; v < p.pool.size(); ++v) {
            feas.assignment[v] = 0.0;
        }
        feas.assignment[0] = lmax;
        feas.assignment[2] = lmax;
        ASSERT_TRUE(verify(feas, p, 1e-12));
        EXPECT_LE(rep.objective, p.objective.evaluate(feas.assignment) + 1e-8);
        for (double lambda : {0.5, 2.0}) {
            SdpProblem q = p;
            for (auto& term : q.objective.terms) {
                term.coeff *= lambda;
            }
            SolveReport scaled = solve(q);
            ASSERT_EQ(scaled.status, SolveStatus::optimal);
            EXPECT_NEAR(scaled.objective, lambda * rep.objective, 1e-7);
        }
    }
}

TEST(sdpa, golden_toy) {
    SdpProblem p;
    const int x = p.pool.add_real("x");
    LinearMatrixExpr e(2);
    e.place(0, 0, x);
    e.place(1, 1, x);
    ComplexMatrix c = ComplexMatrix::Zero(2, 2);
    c(0, 1) = c(1, 0) = 1.0;
    e.add_constant(c);
    p.add_psd(e);
    p.objective.add(x, 1.0);
    std::ifstream golden(std::string(STBOUND_TEST_DATA) + "/toy.dat-s");
    ASSERT_TRUE(golden.good());
    std::stringstream want;
    want << golden.rdbuf();
    EXPECT_EQ(to_sdpa(p), want.str());
}

TEST(sdpa, empty_problem_is_header_only) {
    SdpProblem p;
    const std::string text = to_sdpa(p);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.front(), '"');
    int m = -1;
    int nb = -1;
    in >> m >> nb;
    EXPECT_EQ(m, 0);
    EXPECT_EQ(nb, 0);
    std::string rest;
    in >> rest;
    EXPECT_TRUE(rest.empty());
}

TEST(sdpa, round_trip_objective) {
    Rng rng(13);
    HermitianOperator rho = random_mixed_state(2, rng);
    HermitianOperator ref = random_pure_state(2, rng);
    SdpProblem p = replacer_problem(kron(rho.matrix(), ref.matrix().transpose()), 2, 2);
    SolveReport direct = solve(p);
    ASSERT_EQ(direct.status, SolveStatus::optimal);
    double offset = 0.0;
    LmiProgram parsed = read_sdpa(to_sdpa(p), offset);
    LmiResult res = make_backend("dense-ipm")->solve(parsed, {});
    ASSERT_EQ(res.status, SolveStatus::optimal) << res.message;
    EXPECT_NEAR(res.objective + offset, direct.objective, 1e-7);

    const auto path = std::filesystem::temp_directory_path() / "stbound_round_trip.dat-s";
    export_sdpa(p, path);
    std::ifstream f(path);
    std::stringstream s;
    s << f.rdbuf();
    EXPECT_EQ(s.str(), to_sdpa(p));
    std::filesystem::remove(path);
    EXPECT_THROW(export_sdpa(p, "/nonexistent-dir/x.dat-s"), std::runtime_error);
}

TEST(backend, unknown_id) {
    EXPECT_THROW(make_backend("nope"), SolverError);
}
