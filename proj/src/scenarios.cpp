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

#include <atomic>
#include <cmath>
#include <thread>

namespace stbound {

namespace {

constexpr double kDataTolerance = 1e-9;

void check_state_like(const HermitianOperator& s, const std::string& what) {
    if (min_eigenvalue(s) < -1e-10) {
        throw std::invalid_argument(what + " is not positive semidefinite");
    }
}

bool is_rank_one(const HermitianOperator& s) {
    const double t = s.trace();
    if (t <= 0.0) {
        return true;
    }
    const double purity = (s.matrix() * s.matrix()).trace().real();
    return std::abs(purity - t * t) <= 1e-9 * t * t;
}

/// Hermitian matrix of fresh variables: real diagonal, complex upper triangle.
struct HermitianVars {
    int n = 0;
    std::vector<int> ids;  ///< row-major upper triangle including the diagonal

    int at(int i, int j) const {
        const int r = std::min(i, j);
        const int c = std::max(i, j);
        return ids[static_cast<size_t>(r * n - r * (r - 1) / 2 + (c - r))];
    }
};

HermitianVars hermitian_vars(SdpProblem& p, int n, const std::string& label) {
    HermitianVars h;
    h.n = n;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const std::string name = label + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
            h.ids.push_back(i == j ? p.pool.add_real(name) : p.pool.add_complex(name));
        }
    }
    return h;
}

LinearMatrixExpr hermitian_expr(const HermitianVars& h) {
    LinearMatrixExpr e(h.n);
    for (int i = 0; i < h.n; ++i) {
        for (int j = i; j < h.n; ++j) {
            e.place(i, j, h.at(i, j));
        }
    }
    return e;
}

/// One variable per moment id of `layout`, placed into a moment matrix.
struct MomentVars {
    std::vector<int> ids;
    LinearMatrixExpr expr;

    int unit() const { return ids.front(); }
};

MomentVars moment_vars(SdpProblem& p, const MomentLayout& layout, const std::string& label) {
    MomentVars out;
    for (int id = 0; id < layout.num_moments(); ++id) {
        const std::string name = label + "<" + layout.moment_word(id).str() + ">";
        out.ids.push_back(layout.self_adjoint(id) ? p.pool.add_real(name) : p.pool.add_complex(name));
    }
    out.expr = LinearMatrixExpr(layout.size());
    for (int i = 0; i < layout.size(); ++i) {
        for (int j = i; j < layout.size(); ++j) {
            const MomentRef r = layout.entry(i, j);
            if (!r.is_zero()) {
                out.expr.place(i, j, out.ids[r.id], r.conjugate);
            }
        }
    }
    return out;
}

void pin(SdpProblem& p, int var, cplx value) {
    p.add_complex_equality({{var, 1.0}}, value);
}

OperatorWord effect_word(int party, int setting, int outcome) {
    return OperatorWord{{EffectSymbol{party, setting, outcome}}};
}

LinearMatrixExpr scaled(LinearMatrixExpr e, double s) {
    e *= s;
    return e;
}

ComplexMatrix identity(int d) {
    return ComplexMatrix::Identity(d, d);
}

double solve_or_throw(const SdpProblem& p, const SolverSettings& settings) {
    SolveReport r = solve(p, settings);
    if (!r.converged()) {
        throw SolverError("fidelity program did not converge: " + to_string(r.status) + " (" + r.message + ")");
    }
    return r.objective;
}

ComplexMatrix weighted_pairing(
    const std::vector<HermitianOperator>& resource,
    const std::vector<HermitianOperator>& reference,
    const FidelityWeights& weights) {
    if (resource.empty() || resource.size() != reference.size() || resource.size() != weights.c.size()) {
        throw std::invalid_argument("resource, reference and weights must be non-empty and aligned");
    }
    const int din = resource.front().dim();
    const int dout = reference.front().dim();
    ComplexMatrix r = ComplexMatrix::Zero(din * dout, din * dout);
    for (size_t i = 0; i < resource.size(); ++i) {
        if (resource[i].dim() != din || reference[i].dim() != dout) {
            throw DimensionError("resource or reference dimensions differ across members");
        }
        if (weights.c[i] < 0.0) {
            throw std::invalid_argument("fidelity weights must be nonnegative");
        }
        if (weights.c[i] == 0.0) {
            continue;
        }
        r += weights.c[i] * kron(resource[i].matrix(), reference[i].matrix().transpose());
    }
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------

void ReferenceAssemblage::validate() const {
    if (n_x < 1 || n_a < 1 || static_cast<int>(sigma.size()) != n_x * n_a) {
        throw std::invalid_argument("reference assemblage needs n_x * n_a members");
    }
    for (int x = 0; x < n_x; ++x) {
        double total = 0.0;
        for (int a = 0; a < n_a; ++a) {
            const auto& s = at(a, x);
            if (s.dim() != dim()) {
                throw DimensionError("reference assemblage members differ in dimension");
            }
            check_state_like(s, "reference assemblage member");
            if (!is_rank_one(s)) {
                throw std::invalid_argument("reference assemblage members must be pure after normalization");
            }
            total += s.trace();
        }
        if (std::abs(total - 1.0) > kDataTolerance) {
            throw std::invalid_argument("reference marginals do not sum to one");
        }
    }
}

void ReferenceEnsemble::validate() const {
    if (rho.empty()) {
        throw std::invalid_argument("reference ensemble is empty");
    }
    for (const auto& r : rho) {
        if (r.dim() != dim()) {
            throw DimensionError("reference states differ in dimension");
        }
        check_state_like(r, "reference state");
        if (std::abs(r.trace() - 1.0) > kDataTolerance || !is_rank_one(r)) {
            throw std::invalid_argument("reference states must be pure and normalized");
        }
    }
}

void ReferenceBipartiteState::validate() const {
    if (dims.dims.size() != 2 || dims.total() != rho.dim()) {
        throw DimensionError("reference state shape must have two factors matching its dimension");
    }
    check_state_like(rho, "reference state");
    if (std::abs(rho.trace() - 1.0) > kDataTolerance || !is_rank_one(rho)) {
        throw std::invalid_argument("reference state must be pure and normalized");
    }
}

namespace {

Eigen::VectorXcd ket(double c0, double c1) {
    Eigen::VectorXcd v(2);
    v << c0, c1;
    return v;
}

HermitianOperator proj(const Eigen::VectorXcd& v) {
    return HermitianOperator::projector(v);
}

const double kRootHalf = std::sqrt(0.5);

std::vector<HermitianOperator> dichotomic(const ComplexMatrix& observable) {
    return {HermitianOperator::from_rounded(0.5 * (identity(2) + observable)),
            HermitianOperator::from_rounded(0.5 * (identity(2) - observable))};
}

}  // namespace

ReferenceAssemblage reference_bb84() {
    ReferenceAssemblage r;
    r.n_x = 2;
    r.n_a = 2;
    r.sigma = {0.5 * proj(ket(1, 0)), 0.5 * proj(ket(0, 1)), 0.5 * proj(ket(kRootHalf, kRootHalf)),
               0.5 * proj(ket(kRootHalf, -kRootHalf))};
    return r;
}

ReferenceEnsemble reference_rac2() {
    ReferenceEnsemble r;
    r.rho = {proj(ket(1, 0)), proj(ket(kRootHalf, -kRootHalf)), proj(ket(kRootHalf, kRootHalf)), proj(ket(0, 1))};
    return r;
}

ReferenceBipartiteState reference_phi_plus() {
    return {SubsystemShape{{2, 2}}, max_entangled(2, true)};
}

// ---------------------------------------------------------------------------

double BellTable::at(int a, int b, int x, int y) const {
    return p.at(static_cast<size_t>(((x * n_a + a) * n_y + y) * n_b + b));
}

double& BellTable::at(int a, int b, int x, int y) {
    return p.at(static_cast<size_t>(((x * n_a + a) * n_y + y) * n_b + b));
}

double BellTable::marginal(int a, int x) const {
    double s = 0.0;
    for (int b = 0; b < n_b; ++b) {
        s += at(a, b, x, 0);
    }
    return s;
}

void BellTable::validate() const {
    if (n_x < 1 || n_a < 1 || n_y < 1 || n_b < 1 || static_cast<int>(p.size()) != n_x * n_a * n_y * n_b) {
        throw std::invalid_argument("Bell table has inconsistent shape");
    }
    for (double v : p) {
        if (!(v >= -kDataTolerance && v <= 1.0 + kDataTolerance)) {
            throw std::invalid_argument("Bell table entries must lie in [0, 1]");
        }
    }
    for (int x = 0; x < n_x; ++x) {
        for (int y = 0; y < n_y; ++y) {
            double s = 0.0;
            for (int a = 0; a < n_a; ++a) {
                for (int b = 0; b < n_b; ++b) {
                    s += at(a, b, x, y);
                }
            }
            if (std::abs(s - 1.0) > 1e-7) {
                throw std::invalid_argument("Bell table is not normalized for every (x, y)");
            }
        }
    }
}

double PmTable::at(int b, int x, int y) const {
    return p.at(static_cast<size_t>((x * n_y + y) * n_b + b));
}

double& PmTable::at(int b, int x, int y) {
    return p.at(static_cast<size_t>((x * n_y + y) * n_b + b));
}

void PmTable::validate() const {
    if (n_x < 1 || n_y < 1 || n_b < 1 || static_cast<int>(p.size()) != n_x * n_y * n_b) {
        throw std::invalid_argument("prepare-and-measure table has inconsistent shape");
    }
    for (int x = 0; x < n_x; ++x) {
        for (int y = 0; y < n_y; ++y) {
            double s = 0.0;
            for (int b = 0; b < n_b; ++b) {
                const double v = at(b, x, y);
                if (!(v >= -kDataTolerance && v <= 1.0 + kDataTolerance)) {
                    throw std::invalid_argument("prepare-and-measure table entries must lie in [0, 1]");
                }
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-7) {
                throw std::invalid_argument("prepare-and-measure table is not normalized for every (x, y)");
            }
        }
    }
}

void AssemblageTomogram::validate() const {
    if (n_x < 1 || n_a < 1 || static_cast<int>(sigma.size()) != n_x * n_a) {
        throw std::invalid_argument("assemblage tomogram needs n_x * n_a members");
    }
    for (const auto& s : sigma) {
        if (s.dim() != sigma.front().dim()) {
            throw DimensionError("assemblage members differ in dimension");
        }
    }
}

// ---------------------------------------------------------------------------

double channel_fidelity_dual(const ComplexMatrix& r, int d_in, int d_out, const SolverSettings& settings) {
    if (r.rows() != d_in * d_out || r.cols() != d_in * d_out) {
        throw DimensionError("pairing operator does not match d_in * d_out");
    }
    SdpProblem p;
    HermitianVars y = hermitian_vars(p, d_in, "Y");
    LinearMatrixExpr ye = hermitian_expr(y);
    LinearMatrixExpr big = ye.kron_right(identity(d_out));
    big.add_constant(-r);
    p.add_psd(std::move(big), "Y(x)1 - R");
    p.objective = trace_with(identity(d_in), ye);
    return solve_or_throw(p, settings);
}

double channel_fidelity_choi(const ComplexMatrix& r, int d_in, int d_out, const SolverSettings& settings) {
    if (r.rows() != d_in * d_out || r.cols() != d_in * d_out) {
        throw DimensionError("pairing operator does not match d_in * d_out");
    }
    SdpProblem p;
    const int n = d_in * d_out;
    HermitianVars omega = hermitian_vars(p, n, "Omega");
    LinearMatrixExpr oe = hermitian_expr(omega);
    p.add_psd(oe, "Omega");
    // tr_out Omega = 1 on the input space.
    for (int i = 0; i < d_in; ++i) {
        for (int j = i; j < d_in; ++j) {
            std::vector<ScalarTerm> terms;
            for (int k = 0; k < d_out; ++k) {
                terms.push_back({omega.at(i * d_out + k, j * d_out + k), 1.0});
            }
            p.add_complex_equality(terms, i == j ? 1.0 : 0.0);
        }
    }
    ScalarExpr pairing = trace_with(0.5 * (r + r.adjoint()), oe);
    for (auto& t : pairing.terms) {
        t.coeff = -t.coeff;
    }
    pairing.constant = -pairing.constant;
    p.objective = pairing;
    return -solve_or_throw(p, settings);
}

double fidelity_oracle_dual(
    const std::vector<HermitianOperator>& resource,
    const std::vector<HermitianOperator>& reference,
    const FidelityWeights& weights,
    const SolverSettings& settings) {
    ComplexMatrix r = weighted_pairing(resource, reference, weights);
    return channel_fidelity_dual(r, resource.front().dim(), reference.front().dim(), settings);
}

double fidelity_oracle_choi(
    const std::vector<HermitianOperator>& resource,
    const std::vector<HermitianOperator>& reference,
    const FidelityWeights& weights,
    const SolverSettings& settings) {
    ComplexMatrix r = weighted_pairing(resource, reference, weights);
    return channel_fidelity_choi(r, resource.front().dim(), reference.front().dim(), settings);
}

FidelityWeights assemblage_weights(const ReferenceAssemblage& ref, const std::vector<HermitianOperator>& sigma) {
    if (static_cast<int>(sigma.size()) != ref.n_x * ref.n_a) {
        throw std::invalid_argument("assemblage does not match the reference shape");
    }
    FidelityWeights w;
    for (int x = 0; x < ref.n_x; ++x) {
        for (int a = 0; a < ref.n_a; ++a) {
            const double p = sigma[static_cast<size_t>(x * ref.n_a + a)].trace();
            const double pr = ref.p(a, x);
            w.c.push_back(p > 0.0 && pr > 0.0 ? 1.0 / (ref.n_x * std::sqrt(p * pr)) : 0.0);
        }
    }
    return w;
}

double assemblage_fidelity(
    const ReferenceAssemblage& ref, const std::vector<HermitianOperator>& sigma, const SolverSettings& settings) {
    return fidelity_oracle_dual(sigma, ref.sigma, assemblage_weights(ref, sigma), settings);
}

double ensemble_fidelity(
    const ReferenceEnsemble& ref, const std::vector<HermitianOperator>& states, const SolverSettings& settings) {
    FidelityWeights w{std::vector<double>(states.size(), 1.0 / static_cast<double>(ref.n_x()))};
    return fidelity_oracle_dual(states, ref.rho, w, settings);
}

ComplexMatrix bb_contract(const ComplexMatrix& x, const ComplexMatrix& w, int d_a) {
    const int db = static_cast<int>(x.rows());
    if (x.cols() != db || d_a < 1 || w.rows() != d_a * db || w.cols() != d_a * db) {
        throw DimensionError("bb_contract: w must act on A' (x) B' with dim(B') = dim(x)");
    }
    ComplexMatrix out = ComplexMatrix::Zero(d_a, d_a);
    for (int a1 = 0; a1 < d_a; ++a1) {
        for (int a2 = 0; a2 < d_a; ++a2) {
            out(a1, a2) = (x.array() * w.block(a1 * db, a2 * db, db, db).array()).sum();
        }
    }
    return out;
}

HermitianOperator bb_contract(const HermitianOperator& x, const HermitianOperator& w, int d_a) {
    return HermitianOperator::from_rounded(bb_contract(x.matrix(), w.matrix(), d_a));
}

ComplexMatrix steering_pairing(const HermitianOperator& rho_ab, int d_a, const ReferenceBipartiteState& ref) {
    ref.validate();
    const int da_ref = ref.dims.dims[0];
    const int db = ref.dims.dims[1];
    if (d_a < 1 || rho_ab.dim() != d_a * db) {
        throw DimensionError("physical state must act on A (x) B with dim(B) = dim(B')");
    }
    const ComplexMatrix w = ref.rho.matrix().transpose();
    ComplexMatrix r(d_a * da_ref, d_a * da_ref);
    for (int a = 0; a < d_a; ++a) {
        for (int ah = 0; ah < d_a; ++ah) {
            r.block(a * da_ref, ah * da_ref, da_ref, da_ref) =
                bb_contract(ComplexMatrix(rho_ab.matrix().block(a * db, ah * db, db, db)), w, da_ref);
        }
    }
    return r;
}

double steering_fidelity_dual(
    const HermitianOperator& rho_ab, int d_a, const ReferenceBipartiteState& ref, const SolverSettings& settings) {
    return channel_fidelity_dual(steering_pairing(rho_ab, d_a, ref), d_a, ref.dims.dims[0], settings);
}

double steering_fidelity_choi(
    const HermitianOperator& rho_ab, int d_a, const ReferenceBipartiteState& ref, const SolverSettings& settings) {
    return channel_fidelity_choi(steering_pairing(rho_ab, d_a, ref), d_a, ref.dims.dims[0], settings);
}

// ---------------------------------------------------------------------------

MomentLayout scenario_layout(int party, int n_settings, int n_outcomes, int level, const ReductionRules& rules,
                             const std::vector<OperatorWord>& extras) {
    const auto symbols = make_symbols(party, n_settings, n_outcomes);
    return build_layout(generate_words(symbols, level, extras, rules), rules);
}

SdpProblem build_assemblage_bound(const ReferenceAssemblage& ref, const ObservedData& data, const BuildOptions& options) {
    ref.validate();
    const int n_x = ref.n_x;
    const int n_a = ref.n_a;
    int n_y = 2;
    int n_b = 2;
    std::vector<double> marg(static_cast<size_t>(n_x * n_a), 1.0 / n_a);
    const BellTable* table = std::get_if<BellTable>(&data);
    const FunctionalData* functional = std::get_if<FunctionalData>(&data);
    if (table) {
        table->validate();
        if (table->n_x != n_x || table->n_a != n_a) {
            throw std::invalid_argument("inconsistent data shapes: Bell table does not match the reference assemblage");
        }
        n_y = table->n_y;
        n_b = table->n_b;
        for (int x = 0; x < n_x; ++x) {
            for (int a = 0; a < n_a; ++a) {
                marg[static_cast<size_t>(x * n_a + a)] = table->marginal(a, x);
            }
        }
    } else if (functional) {
        if (functional->name != "chsh") {
            throw std::invalid_argument("inconsistent data shapes: the assemblage scenario supports the chsh functional");
        }
        if (n_x != 2 || n_a != 2) {
            throw std::invalid_argument("inconsistent data shapes: chsh needs two settings with two outcomes");
        }
        if (!functional->marginals.empty()) {
            if (functional->marginals.size() != marg.size()) {
                throw std::invalid_argument("inconsistent data shapes: marginals need n_x * n_a entries");
            }
            marg = functional->marginals;
        }
        for (int x = 0; x < n_x; ++x) {
            double s = 0.0;
            for (int a = 0; a < n_a; ++a) {
                s += marg[static_cast<size_t>(x * n_a + a)];
            }
            if (std::abs(s - 1.0) > kDataTolerance) {
                throw std::invalid_argument("assumed marginals do not sum to one");
            }
        }
    } else {
        throw std::invalid_argument("inconsistent data shapes: the assemblage scenario takes a Bell table or chsh");
    }

    const MomentLayout layout = scenario_layout(1, n_y, n_b, options.level, options.rules, options.extras);
    const int dref = ref.dim();
    SdpProblem p;
    MomentVars y = moment_vars(p, layout, "Y");
    p.pool.set_unit(y.unit());
    std::vector<MomentVars> g;
    for (int x = 0; x < n_x; ++x) {
        for (int a = 0; a < n_a; ++a) {
            g.push_back(moment_vars(p, layout, "sigma" + std::to_string(a) + "|" + std::to_string(x)));
        }
    }

    LinearMatrixExpr big = y.expr.kron_right(identity(dref));
    for (int x = 0; x < n_x; ++x) {
        for (int a = 0; a < n_a; ++a) {
            const size_t k = static_cast<size_t>(x * n_a + a);
            const double pm = marg[k];
            const double pr = ref.p(a, x);
            if (pm <= 0.0 || pr <= 0.0) {
                continue;
            }
            const double c = 1.0 / (n_x * std::sqrt(pm * pr));
            big -= scaled(g[k].expr, c).kron_right(ref.at(a, x).matrix().transpose());
        }
    }
    p.add_psd(std::move(big), "Gamma(Y)(x)1 - sum c Gamma(sigma)(x)ref^T");
    for (size_t k = 0; k < g.size(); ++k) {
        p.add_psd(g[k].expr, "Gamma(sigma)");
        pin(p, g[k].unit(), marg[k]);
    }

    auto moment_of = [&](int x, int a, int b, int yy) {
        return g[static_cast<size_t>(x * n_a + a)].ids[layout.lookup(effect_word(1, yy, b)).id];
    };
    if (table) {
        for (int x = 0; x < n_x; ++x) {
            for (int a = 0; a < n_a; ++a) {
                for (int yy = 0; yy < n_y; ++yy) {
                    for (int b = 0; b + 1 < n_b; ++b) {
                        pin(p, moment_of(x, a, b, yy), table->at(a, b, x, yy));
                    }
                }
            }
        }
    } else {
        // sum_xy s_xy sum_a (-1)^a (2 P(a,0|x,y) - P(a|x)) = value
        ScalarExpr e;
        e.constant = -functional->value;
        for (int x = 0; x < 2; ++x) {
            for (int yy = 0; yy < 2; ++yy) {
                const double s = (x == 1 && yy == 1) ? -1.0 : 1.0;
                for (int a = 0; a < 2; ++a) {
                    const double sign = s * (a == 0 ? 1.0 : -1.0);
                    e.add(moment_of(x, a, 0, yy), 2.0 * sign);
                    e.constant -= sign * marg[static_cast<size_t>(x * n_a + a)];
                }
            }
        }
        p.add_equality(std::move(e));
    }

    if (options.no_signalling) {
        for (int x = 1; x < n_x; ++x) {
            for (int id = 0; id < layout.num_moments(); ++id) {
                std::vector<ScalarTerm> terms;
                for (int a = 0; a < n_a; ++a) {
                    terms.push_back({g[static_cast<size_t>(x * n_a + a)].ids[id], 1.0});
                    terms.push_back({g[static_cast<size_t>(a)].ids[id], -1.0});
                }
                p.add_complex_equality(terms, 0.0);
            }
        }
    }

    p.objective.add(y.unit(), 1.0);
    p.metadata["scenario"] = "bell-assemblage";
    p.metadata["level"] = std::to_string(options.level);
    p.metadata["projective"] = options.rules.projective ? "true" : "false";
    p.metadata["no_signalling"] = options.no_signalling ? "true" : "false";
    p.metadata["moment_matrix_size"] = std::to_string(layout.size());
    return p;
}

MomentSpan pm_span(int n_x, int n_y, int n_b, const PmOptions& options) {
    const auto symbols = make_symbols(1, n_y, n_b);
    const auto words = generate_words(symbols, options.level, options.extras, options.rules);
    return sample_dim_span(
        symbols, words, options.dimension, options.seed, options.stabilization_window, options.rules, n_x, 1, options.ranks);
}

std::vector<std::vector<std::vector<int>>> projector_rank_patterns(int n_settings, int n_outcomes, int d) {
    if (n_settings < 1 || n_outcomes < 1 || d < 1) {
        throw std::invalid_argument("rank patterns need positive settings, outcomes and dimension");
    }
    // Compositions of d into n_outcomes nonnegative parts.
    std::vector<std::vector<int>> parts;
    std::vector<int> cur(static_cast<size_t>(n_outcomes), 0);
    std::function<void(int, int)> rec = [&](int k, int left) {
        if (k == n_outcomes - 1) {
            cur[static_cast<size_t>(k)] = left;
            parts.push_back(cur);
            return;
        }
        for (int r = left; r >= 0; --r) {
            cur[static_cast<size_t>(k)] = r;
            rec(k + 1, left - r);
        }
    };
    rec(0, d);
    double count = std::pow(static_cast<double>(parts.size()), n_settings);
    if (count > 4096) {
        throw std::invalid_argument("too many projector rank patterns; fix the ranks explicitly");
    }
    std::vector<std::vector<std::vector<int>>> out{{}};
    for (int y = 0; y < n_settings; ++y) {
        std::vector<std::vector<std::vector<int>>> next;
        for (const auto& prefix : out) {
            for (const auto& p : parts) {
                auto q = prefix;
                q.push_back(p);
                next.push_back(std::move(q));
            }
        }
        out = std::move(next);
    }
    return out;
}

namespace {

int rac_settings(int n_x) {
    int n = 0;
    while ((1 << n) < n_x) {
        ++n;
    }
    return n;
}

/// (n_y, n_b) implied by the data.
std::pair<int, int> pm_shape(int n_x, const ObservedData& data) {
    if (auto t = std::get_if<PmTable>(&data)) {
        return {t->n_y, t->n_b};
    }
    return {rac_settings(n_x), 2};
}

std::vector<PmOptions> pm_members(int n_y, int n_b, const PmOptions& options) {
    if (!options.ranks.empty() || !options.rules.projective) {
        return {options};
    }
    std::vector<PmOptions> out;
    for (auto& r : projector_rank_patterns(n_y, n_b, options.dimension)) {
        PmOptions o = options;
        o.ranks = std::move(r);
        out.push_back(std::move(o));
    }
    return out;
}

std::string ranks_str(const std::vector<std::vector<int>>& ranks) {
    std::string s;
    for (size_t y = 0; y < ranks.size(); ++y) {
        s += y ? ";" : "";
        for (size_t b = 0; b < ranks[y].size(); ++b) {
            s += (b ? "," : "") + std::to_string(ranks[y][b]);
        }
    }
    return s.empty() ? "any" : s;
}

}  // namespace

std::vector<MomentSpan> pm_spans(int n_x, int n_y, int n_b, const PmOptions& options) {
    std::vector<MomentSpan> out;
    for (const auto& o : pm_members(n_y, n_b, options)) {
        out.push_back(pm_span(n_x, n_y, n_b, o));
    }
    return out;
}

std::vector<SdpProblem> build_pm_family(const ReferenceEnsemble& ref, const ObservedData& data,
                                        const PmOptions& options, const std::vector<MomentSpan>& spans) {
    const auto [n_y, n_b] = pm_shape(ref.n_x(), data);
    const std::vector<PmOptions> members = pm_members(n_y, n_b, options);
    if (!spans.empty() && spans.size() != members.size()) {
        throw std::invalid_argument("span/word mismatch: need one span per rank pattern");
    }
    std::vector<SdpProblem> out;
    for (size_t k = 0; k < members.size(); ++k) {
        out.push_back(build_pm_bound(ref, data, members[k],
                                     spans.empty() ? std::nullopt : std::optional<MomentSpan>(spans[k])));
    }
    return out;
}

SdpProblem build_pm_bound(const ReferenceEnsemble& ref, const ObservedData& data, const PmOptions& options,
                          const std::optional<MomentSpan>& span) {
    ref.validate();
    if (options.dimension < 2) {
        throw std::invalid_argument("prepare-and-measure needs dimension >= 2");
    }
    const int n_x = ref.n_x();
    int n_y = 0;
    int n_b = 2;
    const PmTable* table = std::get_if<PmTable>(&data);
    const FunctionalData* functional = std::get_if<FunctionalData>(&data);
    if (table) {
        table->validate();
        if (table->n_x != n_x) {
            throw std::invalid_argument("inconsistent data shapes: table does not match the reference ensemble");
        }
        n_y = table->n_y;
        n_b = table->n_b;
    } else if (functional) {
        if (functional->name != "rac") {
            throw std::invalid_argument("inconsistent data shapes: prepare-and-measure supports the rac functional");
        }
        while ((1 << n_y) < n_x) {
            ++n_y;
        }
        if ((1 << n_y) != n_x || n_y < 1) {
            throw std::invalid_argument("inconsistent data shapes: rac needs 2^n reference states");
        }
    } else {
        throw std::invalid_argument("inconsistent data shapes: prepare-and-measure takes a table or rac");
    }

    const MomentLayout layout = scenario_layout(1, n_y, n_b, options.level, options.rules, options.extras);
    const MomentSpan g_d = span ? *span : pm_span(n_x, n_y, n_b, options);
    if (g_d.words != layout.words() || g_d.rules.projective != options.rules.projective || g_d.states != n_x ||
        g_d.free_operators != 1 || g_d.system_dim != options.dimension || g_d.ranks != options.ranks) {
        throw std::invalid_argument("span/word mismatch: the sampled span was built for a different layout");
    }

    SdpProblem p;
    MomentVars y = moment_vars(p, layout, "Y");
    p.pool.set_unit(y.unit());
    std::vector<MomentVars> g;
    for (int x = 0; x < n_x; ++x) {
        g.push_back(moment_vars(p, layout, "rho" + std::to_string(x)));
    }

    LinearMatrixExpr big = y.expr.kron_right(identity(ref.dim()));
    for (int x = 0; x < n_x; ++x) {
        big -= scaled(g[static_cast<size_t>(x)].expr, 1.0 / n_x).kron_right(ref.rho[static_cast<size_t>(x)].matrix().transpose());
    }
    p.add_psd(std::move(big), "Gamma(Y)(x)1 - sum Gamma(rho)(x)ref^T / n_x");
    for (auto& gx : g) {
        p.add_psd(gx.expr, "Gamma(rho)");
        pin(p, gx.unit(), 1.0);
    }

    // Joint membership in the span: every complement direction annihilates
    // the stacked coordinates.
    const RealMatrix comp = g_d.complement();
    std::vector<const MomentVars*> components;
    for (const auto& gx : g) {
        components.push_back(&gx);
    }
    components.push_back(&y);
    for (Eigen::Index r = 0; r < comp.cols(); ++r) {
        ScalarExpr e;
        Eigen::Index k = 0;
        for (const MomentVars* c : components) {
            for (int id = 0; id < layout.num_moments(); ++id) {
                cplx alpha = comp(k++, r);
                if (!layout.self_adjoint(id)) {
                    alpha += cplx(0.0, -comp(k++, r));
                }
                if (std::abs(alpha) > 1e-14) {
                    e.add(c->ids[id], alpha);
                }
            }
        }
        p.add_equality(std::move(e));
    }

    auto moment_of = [&](int x, int b, int yy) {
        return g[static_cast<size_t>(x)].ids[layout.lookup(effect_word(1, yy, b)).id];
    };
    if (table) {
        for (int x = 0; x < n_x; ++x) {
            for (int yy = 0; yy < n_y; ++yy) {
                for (int b = 0; b + 1 < n_b; ++b) {
                    pin(p, moment_of(x, b, yy), table->at(b, x, yy));
                }
            }
        }
    } else {
        // (1 / (n 2^n)) sum_{x,y} P(b = x_y | x, y) = value
        const double norm = 1.0 / (n_y * n_x);
        ScalarExpr e;
        e.constant = -functional->value;
        for (int x = 0; x < n_x; ++x) {
            for (int yy = 0; yy < n_y; ++yy) {
                if (((x >> yy) & 1) == 0) {
                    e.add(moment_of(x, 0, yy), norm);
                } else {
                    e.add(moment_of(x, 0, yy), -norm);
                    e.constant += norm;
                }
            }
        }
        p.add_equality(std::move(e));
    }

    p.objective.add(y.unit(), 1.0);
    p.metadata["scenario"] = "prepare-measure";
    p.metadata["level"] = std::to_string(options.level);
    p.metadata["projective"] = options.rules.projective ? "true" : "false";
    p.metadata["dimension"] = std::to_string(options.dimension);
    p.metadata["span_dimension"] = std::to_string(g_d.dimension());
    p.metadata["ranks"] = ranks_str(options.ranks);
    p.metadata["moment_matrix_size"] = std::to_string(layout.size());
    return p;
}

namespace {

/// d x d operator-valued moment: Hermitian for self-adjoint words, general otherwise.
struct BlockMoment {
    bool hermitian = true;
    int d = 0;
    std::vector<int> ids;  ///< Hermitian: upper triangle; general: row-major

    /// Variable and conjugation flag holding entry (p, q).
    std::pair<int, bool> entry(int p, int q) const {
        if (!hermitian) {
            return {ids[static_cast<size_t>(p * d + q)], false};
        }
        const int r = std::min(p, q);
        const int c = std::max(p, q);
        return {ids[static_cast<size_t>(r * d - r * (r - 1) / 2 + (c - r))], p > q};
    }

    /// tr(A X) for a Hermitian constant A.
    ScalarExpr trace_with(const ComplexMatrix& a) const {
        ScalarExpr e;
        for (int p = 0; p < d; ++p) {
            for (int q = hermitian ? p : 0; q < d; ++q) {
                auto [v, conj] = entry(p, q);
                (void)conj;
                if (hermitian && p != q) {
                    e.add(v, 2.0 * a(q, p));
                } else {
                    e.add(v, a(q, p));
                }
            }
        }
        return e;
    }
};

BlockMoment block_moment_vars(SdpProblem& p, bool hermitian, int d, const std::string& label) {
    BlockMoment b;
    b.hermitian = hermitian;
    b.d = d;
    for (int i = 0; i < d; ++i) {
        for (int j = hermitian ? i : 0; j < d; ++j) {
            const std::string name = label + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
            b.ids.push_back(hermitian && i == j ? p.pool.add_real(name) : p.pool.add_complex(name));
        }
    }
    return b;
}

void pin_block(SdpProblem& p, const BlockMoment& b, const ComplexMatrix& value) {
    for (int i = 0; i < b.d; ++i) {
        for (int j = b.hermitian ? i : 0; j < b.d; ++j) {
            pin(p, b.entry(i, j).first, value(i, j));
        }
    }
}

}  // namespace

SdpProblem build_steering_bound(const ReferenceBipartiteState& ref, const ObservedData& data, const BuildOptions& options) {
    ref.validate();
    const int da_ref = ref.dims.dims[0];
    const int db = ref.dims.dims[1];
    int n_x = 2;
    int n_a = 2;
    const AssemblageTomogram* tomo = std::get_if<AssemblageTomogram>(&data);
    const FunctionalData* functional = std::get_if<FunctionalData>(&data);
    if (tomo) {
        tomo->validate();
        if (tomo->sigma.front().dim() != db) {
            throw std::invalid_argument("inconsistent data shapes: assemblage dimension differs from dim(B')");
        }
        n_x = tomo->n_x;
        n_a = tomo->n_a;
    } else if (functional) {
        if (functional->name != "steering") {
            throw std::invalid_argument("inconsistent data shapes: the steering scenario supports the steering functional");
        }
        if (db != 2) {
            throw std::invalid_argument("inconsistent data shapes: the steering functional needs a qubit B'");
        }
    } else {
        throw std::invalid_argument("inconsistent data shapes: the steering scenario takes a tomogram or steering");
    }

    const MomentLayout layout = scenario_layout(0, n_x, n_a, options.level, options.rules, options.extras);
    const int m = layout.size();
    SdpProblem p;
    MomentVars y = moment_vars(p, layout, "Y");
    p.pool.set_unit(y.unit());
    std::vector<BlockMoment> blocks;
    for (int id = 0; id < layout.num_moments(); ++id) {
        blocks.push_back(block_moment_vars(p, layout.self_adjoint(id), db, "X<" + layout.moment_word(id).str() + ">"));
    }

    LinearMatrixExpr block(m * db);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const MomentRef r = layout.entry(i, j);
            if (r.is_zero()) {
                continue;
            }
            const BlockMoment& bm = blocks[static_cast<size_t>(r.id)];
            for (int pp = 0; pp < db; ++pp) {
                for (int qq = (i == j ? pp : 0); qq < db; ++qq) {
                    // Conjugated entries read X^dag, i.e. conj(X(q, p)).
                    auto [v, conj] = r.conjugate ? bm.entry(qq, pp) : bm.entry(pp, qq);
                    block.place(i * db + pp, j * db + qq, v, conj != r.conjugate);
                }
            }
        }
    }
    p.add_psd(block, "(Gamma(x)id)(rho_AB)");

    const ComplexMatrix w = ref.rho.matrix().transpose();
    LinearMatrixExpr contracted = block.map([&](const ComplexMatrix& mat) {
        ComplexMatrix out(m * da_ref, m * da_ref);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                out.block(i * da_ref, j * da_ref, da_ref, da_ref) =
                    bb_contract(ComplexMatrix(mat.block(i * db, j * db, db, db)), w, da_ref);
            }
        }
        return out;
    });
    LinearMatrixExpr big = y.expr.kron_right(identity(da_ref));
    big -= contracted;
    p.add_psd(std::move(big), "Gamma(Y)(x)1 - contracted block moment");

    const BlockMoment& unit = blocks[static_cast<size_t>(layout.unit_id())];
    auto effect_block = [&](int a, int x) -> const BlockMoment& {
        return blocks[static_cast<size_t>(layout.lookup(effect_word(0, x, a)).id)];
    };
    if (tomo) {
        for (int x = 0; x < n_x; ++x) {
            ComplexMatrix total = ComplexMatrix::Zero(db, db);
            for (int a = 0; a < n_a; ++a) {
                total += tomo->at(a, x).matrix();
                if (a + 1 < n_a) {
                    pin_block(p, effect_block(a, x), tomo->at(a, x).matrix());
                }
            }
            pin_block(p, unit, total);
        }
    } else {
        // tr[Z(2 X_{E0|0} - X_1)] + tr[X(2 X_{E0|1} - X_1)] = value, tr X_1 = 1
        const ComplexMatrix z = pauli::Z().matrix();
        const ComplexMatrix xm = pauli::X().matrix();
        ScalarExpr e;
        for (const auto& [blk, a] : {std::pair{&effect_block(0, 0), ComplexMatrix(2.0 * z)},
                                     std::pair{&effect_block(0, 1), ComplexMatrix(2.0 * xm)},
                                     std::pair{&unit, ComplexMatrix(-(z + xm))}}) {
            for (const auto& t : blk->trace_with(a).terms) {
                e.terms.push_back(t);
            }
        }
        e.constant = -functional->value;
        p.add_equality(std::move(e));
        ScalarExpr norm = unit.trace_with(identity(db));
        norm.constant = -1.0;
        p.add_equality(std::move(norm));
    }

    p.objective.add(y.unit(), 1.0);
    p.metadata["scenario"] = "steering";
    p.metadata["level"] = std::to_string(options.level);
    p.metadata["projective"] = options.rules.projective ? "true" : "false";
    p.metadata["moment_matrix_size"] = std::to_string(m);
    return p;
}

// ---------------------------------------------------------------------------

BellTable bell_table(const Strategy& assemblage, int n_a) {
    assemblage.validate();
    if (n_a < 1 || assemblage.states.size() % static_cast<size_t>(n_a) != 0 || assemblage.povms.empty()) {
        throw std::invalid_argument("assemblage strategy does not split into n_x * n_a members");
    }
    BellTable t;
    t.n_a = n_a;
    t.n_x = static_cast<int>(assemblage.states.size()) / n_a;
    t.n_y = static_cast<int>(assemblage.povms.size());
    t.n_b = static_cast<int>(assemblage.povms.front().size());
    t.p.assign(static_cast<size_t>(t.n_x * t.n_a * t.n_y * t.n_b), 0.0);
    for (int x = 0; x < t.n_x; ++x) {
        for (int a = 0; a < n_a; ++a) {
            for (int y = 0; y < t.n_y; ++y) {
                for (int b = 0; b < t.n_b; ++b) {
                    t.at(a, b, x, y) = trace_inner(assemblage.states[static_cast<size_t>(x * n_a + a)],
                                                   assemblage.povms[static_cast<size_t>(y)][static_cast<size_t>(b)])
                                           .real();
                }
            }
        }
    }
    return t;
}

PmTable pm_table(const Strategy& strategy) {
    strategy.validate();
    if (strategy.povms.empty()) {
        throw std::invalid_argument("strategy has no measurements");
    }
    PmTable t;
    t.n_x = static_cast<int>(strategy.states.size());
    t.n_y = static_cast<int>(strategy.povms.size());
    t.n_b = static_cast<int>(strategy.povms.front().size());
    t.p.assign(static_cast<size_t>(t.n_x * t.n_y * t.n_b), 0.0);
    for (int x = 0; x < t.n_x; ++x) {
        for (int y = 0; y < t.n_y; ++y) {
            for (int b = 0; b < t.n_b; ++b) {
                t.at(b, x, y) =
                    trace_inner(strategy.states[static_cast<size_t>(x)], strategy.povms[static_cast<size_t>(y)][static_cast<size_t>(b)])
                        .real();
            }
        }
    }
    return t;
}

AssemblageTomogram assemblage_tomogram(const Strategy& bipartite, int state_index) {
    bipartite.validate();
    if (bipartite.shape.dims.size() != 2 || bipartite.measured_factor != 0) {
        throw DimensionError("tomogram needs a bipartite strategy measured on the first factor");
    }
    const HermitianOperator& rho = bipartite.states.at(static_cast<size_t>(state_index));
    const int db = bipartite.shape.dims[1];
    AssemblageTomogram t;
    t.n_x = static_cast<int>(bipartite.povms.size());
    t.n_a = t.n_x ? static_cast<int>(bipartite.povms.front().size()) : 0;
    const std::vector<int> keep_b{1};
    for (const auto& setting : bipartite.povms) {
        for (const auto& e : setting) {
            ComplexMatrix lifted = kron(e.matrix(), identity(db)) * rho.matrix();
            t.sigma.push_back(HermitianOperator::from_rounded(partial_trace(lifted, bipartite.shape, keep_b)));
        }
    }
    return t;
}

double chsh_value(const BellTable& t) {
    if (t.n_x != 2 || t.n_a != 2 || t.n_y != 2 || t.n_b != 2) {
        throw std::invalid_argument("chsh needs a 2x2x2x2 table");
    }
    double v = 0.0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            double corr = 0.0;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    corr += ((a + b) % 2 == 0 ? 1.0 : -1.0) * t.at(a, b, x, y);
                }
            }
            v += (x == 1 && y == 1) ? -corr : corr;
        }
    }
    return v;
}

double rac_value(const PmTable& t) {
    const int n = t.n_y;
    if (n < 1 || t.n_b != 2 || t.n_x != (1 << n)) {
        throw std::invalid_argument("rac needs 2^n preparations, n settings and binary outcomes");
    }
    double s = 0.0;
    for (int x = 0; x < t.n_x; ++x) {
        for (int y = 0; y < n; ++y) {
            s += t.at((x >> y) & 1, x, y);
        }
    }
    return s / (n * t.n_x);
}

double steering_value(const AssemblageTomogram& t) {
    if (t.n_x != 2 || t.n_a != 2 || t.sigma.front().dim() != 2) {
        throw std::invalid_argument("steering needs two qubit settings with two outcomes");
    }
    const ComplexMatrix z = pauli::Z().matrix();
    const ComplexMatrix x = pauli::X().matrix();
    return (z * (t.at(0, 0).matrix() - t.at(1, 0).matrix())).trace().real() +
           (x * (t.at(0, 1).matrix() - t.at(1, 1).matrix())).trace().real();
}

double evaluate_functional(const std::string& name, const Strategy& strategy) {
    if (name == "chsh") {
        return chsh_value(bell_table(strategy, 2));
    }
    if (name == "rac") {
        return rac_value(pm_table(strategy));
    }
    if (name == "steering") {
        return steering_value(assemblage_tomogram(strategy));
    }
    throw std::invalid_argument("unknown functional '" + name + "'");
}

double evaluate_functional(const std::string& name, const ObservedData& data) {
    if (name == "chsh") {
        if (auto t = std::get_if<BellTable>(&data)) {
            return chsh_value(*t);
        }
    } else if (name == "rac") {
        if (auto t = std::get_if<PmTable>(&data)) {
            return rac_value(*t);
        }
    } else if (name == "steering") {
        if (auto t = std::get_if<AssemblageTomogram>(&data)) {
            return steering_value(*t);
        }
    } else {
        throw std::invalid_argument("unknown functional '" + name + "'");
    }
    if (auto f = std::get_if<FunctionalData>(&data); f && f->name == name) {
        return f->value;
    }
    throw std::invalid_argument("data does not match functional '" + name + "'");
}

Strategy preset_strategy(const std::string& name) {
    const ComplexMatrix z = pauli::Z().matrix();
    const ComplexMatrix x = pauli::X().matrix();
    Strategy s;
    s.shape = SubsystemShape{{2}};
    if (name == "S1") {
        s.states = reference_bb84().sigma;
        s.povms = {dichotomic((z + x) * kRootHalf), dichotomic((z - x) * kRootHalf)};
    } else if (name == "S2") {
        const HermitianOperator quarter = 0.25 * HermitianOperator::identity(2);
        s.states = {0.5 * proj(ket(1, 0)), 0.5 * proj(ket(0, 1)), quarter, quarter};
        s.povms = {dichotomic(z), dichotomic(z)};
    } else if (name == "rac2_ideal") {
        s.states = reference_rac2().rho;
        s.povms = {dichotomic((z + x) * kRootHalf), dichotomic((z - x) * kRootHalf)};
    } else if (name == "singlet_zx") {
        s.shape = SubsystemShape{{2, 2}};
        s.states = {max_entangled(2, true)};
        s.povms = {dichotomic(z), dichotomic(x)};
    } else {
        throw std::invalid_argument("unknown preset strategy '" + name + "'");
    }
    s.validate();
    return s;
}

Strategy mix_strategies(const Strategy& s1, const Strategy& s2, double w) {
    if (s1.shape.dims.size() != 1 || s2.shape.dims.size() != 1) {
        throw DimensionError("mixing needs single-factor strategies");
    }
    if (s1.states.size() != s2.states.size() || s1.povms.size() != s2.povms.size()) {
        throw std::invalid_argument("mixed strategies must have the same shape");
    }
    if (!(w >= 0.0 && w <= 1.0)) {
        throw std::invalid_argument("mixing weight must lie in [0, 1]");
    }
    const int d1 = s1.shape.total();
    const int d2 = s2.shape.total();
    auto direct_sum = [&](const ComplexMatrix& a, const ComplexMatrix& b) {
        ComplexMatrix out = ComplexMatrix::Zero(d1 + d2, d1 + d2);
        out.topLeftCorner(d1, d1) = a;
        out.bottomRightCorner(d2, d2) = b;
        return HermitianOperator::from_rounded(out);
    };
    Strategy out;
    out.shape = SubsystemShape{{d1 + d2}};
    for (size_t k = 0; k < s1.states.size(); ++k) {
        out.states.push_back(direct_sum(w * s1.states[k].matrix(), (1.0 - w) * s2.states[k].matrix()));
    }
    for (size_t y = 0; y < s1.povms.size(); ++y) {
        if (s1.povms[y].size() != s2.povms[y].size()) {
            throw std::invalid_argument("mixed strategies must have the same outcome counts");
        }
        std::vector<HermitianOperator> effects;
        for (size_t b = 0; b < s1.povms[y].size(); ++b) {
            effects.push_back(direct_sum(s1.povms[y][b].matrix(), s2.povms[y][b].matrix()));
        }
        out.povms.push_back(std::move(effects));
    }
    return out;
}

// ---------------------------------------------------------------------------

SolveReport solve_family(const std::vector<SdpProblem>& family, const SolverSettings& settings, int* best) {
    if (best) {
        *best = -1;
    }
    if (family.empty()) {
        throw std::invalid_argument("solve_family: empty family");
    }
    SolveReport out;
    int chosen = -1;
    bool near = false;
    double seconds = 0.0;
    for (size_t k = 0; k < family.size(); ++k) {
        SolveReport r = solve(family[k], settings);
        seconds += r.solve_seconds;
        if (r.status == SolveStatus::infeasible) {
            if (k == 0) {
                out = r;
            }
            continue;
        }
        if (!r.converged()) {
            r.message = "member " + std::to_string(k) + ": " + r.message;
            r.solve_seconds = seconds;
            if (best) {
                *best = static_cast<int>(k);
            }
            return r;
        }
        near = near || r.status == SolveStatus::near_optimal;
        if (chosen < 0 || r.objective < out.objective) {
            out = std::move(r);
            chosen = static_cast<int>(k);
        }
    }
    out.solve_seconds = seconds;
    if (chosen < 0) {
        out.status = SolveStatus::infeasible;
        if (family.size() > 1) {
            out.message = "every member of the family is infeasible";
        }
        return out;
    }
    if (near) {
        out.status = SolveStatus::near_optimal;
    }
    if (best) {
        *best = chosen;
    }
    return out;
}

namespace {

std::vector<CurvePoint> run_curve(
    const std::function<std::vector<SdpProblem>(double)>& build,
    const std::vector<double>& sweep,
    const SolverSettings& settings,
    int workers) {
    std::vector<CurvePoint> out(sweep.size());
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t i = next++; i < sweep.size(); i = next++) {
            CurvePoint& pt = out[i];
            pt.value = sweep[i];
            try {
                const std::vector<SdpProblem> family = build(sweep[i]);
                int best = -1;
                pt.report = solve_family(family, settings, &best);
                pt.bound = pt.report.status == SolveStatus::infeasible ? std::nan("") : pt.report.objective;
                if (best >= 0) {
                    const SdpProblem& chosen = family[static_cast<size_t>(best)];
                    pt.psd_residual = psd_residual(chosen, pt.report.assignment);
                    pt.verified = pt.report.converged() && verify(pt.report, chosen, settings.tol);
                } else {
                    pt.psd_residual = std::nan("");
                }
            } catch (const std::exception& e) {
                pt.report = SolveReport{};
                pt.report.status = SolveStatus::numerical_failure;
                pt.report.message = e.what();
                pt.bound = std::nan("");
                pt.psd_residual = std::nan("");
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(sweep.size())));
    if (n == 1) {
        work();
        return out;
    }
    std::vector<std::thread> threads;
    for (int t = 0; t < n; ++t) {
        threads.emplace_back(work);
    }
    for (auto& t : threads) {
        t.join();
    }
    return out;
}

}  // namespace

std::vector<CurvePoint> bound_curve(
    const std::function<SdpProblem(double)>& build,
    const std::vector<double>& sweep,
    const SolverSettings& settings,
    int workers) {
    return run_curve([&](double v) { return std::vector<SdpProblem>{build(v)}; }, sweep, settings, workers);
}

std::vector<CurvePoint> bound_curve_family(
    const std::function<std::vector<SdpProblem>(double)>& build,
    const std::vector<double>& sweep,
    const SolverSettings& settings,
    int workers) {
    return run_curve(build, sweep, settings, workers);
}

}  // namespace stbound
