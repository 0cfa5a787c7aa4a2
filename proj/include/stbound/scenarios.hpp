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

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stbound/moments.hpp"
#include "stbound/sdp.hpp"

namespace stbound {

// ---------------------------------------------------------------------------
// Reference resources.

/// Sub-normalized reference assemblage; member (a, x) is stored at x * n_a + a.
struct ReferenceAssemblage {
    int n_x = 0;
    int n_a = 0;
    std::vector<HermitianOperator> sigma;

    const HermitianOperator& at(int a, int x) const { return sigma.at(static_cast<size_t>(x * n_a + a)); }
    double p(int a, int x) const { return at(a, x).trace(); }
    int dim() const { return sigma.empty() ? 0 : sigma.front().dim(); }
    /// PSD members, rank one after normalization, marginals summing to 1.
    void validate() const;
};

/// Pure reference states indexed by x.
struct ReferenceEnsemble {
    std::vector<HermitianOperator> rho;

    int n_x() const { return static_cast<int>(rho.size()); }
    int dim() const { return rho.empty() ? 0 : rho.front().dim(); }
    void validate() const;
};

/// Pure reference state on A' (x) B'.
struct ReferenceBipartiteState {
    SubsystemShape dims;
    HermitianOperator rho;

    void validate() const;
};

/// {|0><0|, |1><1|, |+><+|, |-><-|} / 2.
ReferenceAssemblage reference_bb84();
/// {|0>, |->, |+>, |1>} in input order x = x_0 + 2 x_1.
ReferenceEnsemble reference_rac2();
/// |phi+><phi+| on two qubits.
ReferenceBipartiteState reference_phi_plus();

// ---------------------------------------------------------------------------
// Observed data.

/// A named functional and its observed value. `marginals` holds the assumed
/// P(a|x) (index x * n_a + a) for the Bell assemblage scenario; empty means
/// uniform.
struct FunctionalData {
    std::string name;
    double value = 0.0;
    std::vector<double> marginals;
};

/// P(a, b | x, y).
struct BellTable {
    int n_x = 0, n_a = 0, n_y = 0, n_b = 0;
    std::vector<double> p;

    double at(int a, int b, int x, int y) const;
    double& at(int a, int b, int x, int y);
    double marginal(int a, int x) const;
    void validate() const;
};

/// P(b | x, y).
struct PmTable {
    int n_x = 0, n_y = 0, n_b = 0;
    std::vector<double> p;

    double at(int b, int x, int y) const;
    double& at(int b, int x, int y);
    void validate() const;
};

/// sigma_{a|x} stored at x * n_a + a.
struct AssemblageTomogram {
    int n_x = 0;
    int n_a = 0;
    std::vector<HermitianOperator> sigma;

    const HermitianOperator& at(int a, int x) const { return sigma.at(static_cast<size_t>(x * n_a + a)); }
    void validate() const;
};

using ObservedData = std::variant<FunctionalData, BellTable, PmTable, AssemblageTomogram>;

// ---------------------------------------------------------------------------
// Fixed-resource fidelity.

struct FidelityWeights {
    std::vector<double> c;
};

/// max over channels of sum_i c_i tr(ref_i Lambda(resource_i)), via
/// min tr Y s.t. Y (x) 1 >= sum_i c_i resource_i (x) ref_i^T.
double fidelity_oracle_dual(
    const std::vector<HermitianOperator>& resource,
    const std::vector<HermitianOperator>& reference,
    const FidelityWeights& weights,
    const SolverSettings& settings = {});
/// Same value from the Choi side: max tr(Omega R), Omega >= 0, tr_out Omega = 1.
double fidelity_oracle_choi(
    const std::vector<HermitianOperator>& resource,
    const std::vector<HermitianOperator>& reference,
    const FidelityWeights& weights,
    const SolverSettings& settings = {});

/// The two programs for an explicit operator R on in (x) out.
double channel_fidelity_dual(const ComplexMatrix& r, int d_in, int d_out, const SolverSettings& settings = {});
double channel_fidelity_choi(const ComplexMatrix& r, int d_in, int d_out, const SolverSettings& settings = {});

/// Weights (1/n_x) / sqrt(P(a|x) P_ref(a|x)); members with P(a|x) = 0 get weight 0.
FidelityWeights assemblage_weights(const ReferenceAssemblage& ref, const std::vector<HermitianOperator>& sigma);
double assemblage_fidelity(
    const ReferenceAssemblage& ref, const std::vector<HermitianOperator>& sigma, const SolverSettings& settings = {});
double ensemble_fidelity(
    const ReferenceEnsemble& ref, const std::vector<HermitianOperator>& states, const SolverSettings& settings = {});

/// sum_{b,c} x[b,c] w[(a1,b),(a2,c)] for w on A' (x) B'.
ComplexMatrix bb_contract(const ComplexMatrix& x, const ComplexMatrix& w, int d_a);
HermitianOperator bb_contract(const HermitianOperator& x, const HermitianOperator& w, int d_a);

/// Operator on A (x) A' whose Choi pairing gives the fidelity of a local
/// channel on A: block (a, a^) is bb_contract(rho_{a a^}, ref^T).
ComplexMatrix steering_pairing(const HermitianOperator& rho_ab, int d_a, const ReferenceBipartiteState& ref);
double steering_fidelity_dual(
    const HermitianOperator& rho_ab, int d_a, const ReferenceBipartiteState& ref, const SolverSettings& settings = {});
double steering_fidelity_choi(
    const HermitianOperator& rho_ab, int d_a, const ReferenceBipartiteState& ref, const SolverSettings& settings = {});

// ---------------------------------------------------------------------------
// Relaxation builders.

struct BuildOptions {
    int level = 1;
    ReductionRules rules;
    std::vector<OperatorWord> extras;
    /// Bell scenario: sum_a Gamma(sigma_{a|x}) independent of x.
    bool no_signalling = true;
};

struct PmOptions {
    int level = 1;
    ReductionRules rules;
    std::vector<OperatorWord> extras;
    int dimension = 2;
    uint64_t seed = 1;
    int stabilization_window = 50;
    /// Projector ranks per setting for the span; empty samples all patterns.
    std::vector<std::vector<int>> ranks;
};

/// Words and layout shared by one party's moment matrices.
MomentLayout scenario_layout(int party, int n_settings, int n_outcomes, int level, const ReductionRules& rules,
                             const std::vector<OperatorWord>& extras = {});

SdpProblem build_assemblage_bound(const ReferenceAssemblage& ref, const ObservedData& data, const BuildOptions& options);

/// Span of (Gamma(rho_1), ..., Gamma(rho_nx), Gamma(Y)) realizable in dimension d.
MomentSpan pm_span(int n_x, int n_y, int n_b, const PmOptions& options);
/// `span` must come from pm_span with matching shape; it is sampled when absent.
SdpProblem build_pm_bound(const ReferenceEnsemble& ref, const ObservedData& data, const PmOptions& options,
                          const std::optional<MomentSpan>& span = std::nullopt);

/// Every way to give the outcomes of each setting projector ranks summing to d.
std::vector<std::vector<std::vector<int>>> projector_rank_patterns(int n_settings, int n_outcomes, int d);
/// Spans for every problem of build_pm_family, in the same order.
std::vector<MomentSpan> pm_spans(int n_x, int n_y, int n_b, const PmOptions& options);
/// With projective rules and no fixed ranks, one problem per rank pattern;
/// otherwise the single build_pm_bound problem. The bound is the least
/// optimum over the family (see solve_family).
std::vector<SdpProblem> build_pm_family(const ReferenceEnsemble& ref, const ObservedData& data,
                                        const PmOptions& options, const std::vector<MomentSpan>& spans = {});

SdpProblem build_steering_bound(const ReferenceBipartiteState& ref, const ObservedData& data, const BuildOptions& options);

// ---------------------------------------------------------------------------
// Functionals and strategies.

/// Assemblage strategy: states are sigma_{a|x} (index x * n_a + a) on Bob's
/// space; povms are Bob's measurements.
BellTable bell_table(const Strategy& assemblage, int n_a);
/// Prepare-and-measure strategy: states rho_x; povms are the receiver's.
PmTable pm_table(const Strategy& strategy);
/// Bipartite strategy measured on A: sigma_{a|x} = tr_A((E_{a|x} (x) 1) rho).
AssemblageTomogram assemblage_tomogram(const Strategy& bipartite, int state_index = 0);

double chsh_value(const BellTable& t);
/// Average success probability of the n -> 1 code, x_y = (x >> y) & 1.
double rac_value(const PmTable& t);
double steering_value(const AssemblageTomogram& t);

/// name in {chsh, rac, steering}.
double evaluate_functional(const std::string& name, const Strategy& strategy);
double evaluate_functional(const std::string& name, const ObservedData& data);

/// name in {S1, S2, rac2_ideal, singlet_zx}.
Strategy preset_strategy(const std::string& name);

/// Direct sum of two strategies weighted by w and 1 - w. States are
/// w s1 (+) (1-w) s2 and every effect is E1 (+) E2.
Strategy mix_strategies(const Strategy& s1, const Strategy& s2, double w);

// ---------------------------------------------------------------------------
// Sweeps.

/// Least optimum over a family of relaxations. Infeasible members are
/// skipped; the family is infeasible only when every member is. Any member
/// that fails numerically fails the whole family.
/// `best`, when given, receives the index of the member that set the bound.
SolveReport solve_family(const std::vector<SdpProblem>& family, const SolverSettings& settings = {},
                         int* best = nullptr);

struct CurvePoint {
    double value = 0.0;
    double bound = 0.0;
    double psd_residual = 0.0;
    SolveReport report;
    /// Converged and the assignment passes verify() at the solver tolerance.
    bool verified = false;
};

/// Solves build(v) for every v. Points run on up to `workers` threads and
/// come back in sweep order; builder errors become numerical_failure rows.
std::vector<CurvePoint> bound_curve(
    const std::function<SdpProblem(double)>& build,
    const std::vector<double>& sweep,
    const SolverSettings& settings = {},
    int workers = 1);
/// Same for builders that return a family; each point solves with solve_family.
std::vector<CurvePoint> bound_curve_family(
    const std::function<std::vector<SdpProblem>(double)>& build,
    const std::vector<double>& sweep,
    const SolverSettings& settings = {},
    int workers = 1);

}  // namespace stbound
