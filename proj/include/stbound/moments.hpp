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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stbound/qmat.hpp"

namespace stbound {

/// A POVM effect E_{outcome|setting} of one party.
///
/// Scenario symbol sets omit each setting's last outcome; that effect is
/// represented as the identity minus the kept ones.
struct EffectSymbol {
    int party = 0;
    int setting = 0;
    int outcome = 0;

    auto operator<=>(const EffectSymbol&) const = default;
    std::string str() const;
};

/// Symbols E_{b|y} for b < n_outcomes - 1, ordered by (setting, outcome).
std::vector<EffectSymbol> make_symbols(int party, int n_settings, int n_outcomes);

/// Product of effect symbols; the empty word is the identity.
struct OperatorWord {
    std::vector<EffectSymbol> symbols;

    size_t length() const { return symbols.size(); }
    bool is_identity() const { return symbols.empty(); }
    std::string str() const;

    bool operator==(const OperatorWord&) const = default;
    /// Graded lexicographic: shorter first, then symbol by symbol.
    std::strong_ordering operator<=>(const OperatorWord& o) const;
};

OperatorWord operator*(const OperatorWord& a, const OperatorWord& b);

/// Effects are Hermitian, so the adjoint of a word is its reversal.
OperatorWord adjoint(const OperatorWord& w);

struct ReductionRules {
    /// E^2 = E and E_{b|y} E_{b'|y} = 0 for b != b'.
    bool projective = true;
};

/// Rewrites to normal form; nullopt means the word is the zero operator.
std::optional<OperatorWord> reduce_word(const OperatorWord& w, const ReductionRules& rules);

/// Every distinct nonzero reduced word of length <= level, identity first,
/// graded-lexicographic, followed by the reduced extras not already present.
std::vector<OperatorWord> generate_words(
    std::span<const EffectSymbol> symbols,
    int level,
    const std::vector<OperatorWord>& extras = {},
    const ReductionRules& rules = {});

/// Reference from a moment-matrix entry to a shared moment.
/// `conjugate` means the entry holds the adjoint of the canonical moment.
struct MomentRef {
    int id = -1;
    bool conjugate = false;

    bool is_zero() const { return id < 0; }
};

/// Variable-sharing structure of Gamma(rho) = sum_ij |i><j| tr(S_j^dag S_i rho).
class MomentLayout {
   public:
    MomentLayout() = default;
    MomentLayout(std::vector<OperatorWord> words, ReductionRules rules);

    int size() const { return static_cast<int>(words_.size()); }
    const std::vector<OperatorWord>& words() const { return words_; }
    const ReductionRules& rules() const { return rules_; }

    int num_moments() const { return static_cast<int>(moments_.size()); }
    const OperatorWord& moment_word(int id) const { return moments_.at(id); }
    bool self_adjoint(int id) const { return self_adjoint_.at(id); }
    int unit_id() const { return 0; }

    MomentRef entry(int i, int j) const { return entries_[static_cast<size_t>(i) * words_.size() + j]; }

    /// Reference for an arbitrary word; throws if its moment is not in the layout.
    MomentRef lookup(const OperatorWord& w) const;
    std::optional<MomentRef> find(const OperatorWord& w) const;

    /// Real parameters of a Hermitian matrix with this sharing pattern.
    int real_dimension() const;

   private:
    std::vector<OperatorWord> words_;
    ReductionRules rules_;
    std::vector<OperatorWord> moments_;
    std::vector<bool> self_adjoint_;
    std::map<OperatorWord, MomentRef> index_;
    std::vector<MomentRef> entries_;
};

MomentLayout build_layout(const std::vector<OperatorWord>& words, const ReductionRules& rules);

/// Explicit finite-dimensional realization: states (or assemblage members)
/// together with the measurements the symbols refer to.
///
/// The measurements act on factor `measured_factor` of `shape`; states act on
/// the whole space.
struct Strategy {
    SubsystemShape shape;
    int measured_factor = 0;
    std::vector<HermitianOperator> states;
    /// povms[setting][outcome]
    std::vector<std::vector<HermitianOperator>> povms;

    int measured_dim() const { return shape.dims.at(measured_factor); }
    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
    ComplexMatrix word_operator(const OperatorWord& w) const;
};

/// Numeric Gamma(target) with entries tr(S_j^dag S_i target).
HermitianOperator realize_moment_matrix(
    const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& target);

/// (Gamma (x) id)(rho_AB): block (i,j) is tr_A((S_j^dag S_i (x) 1) rho_AB).
HermitianOperator realize_block_moment(
    const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& bipartite_state);

/// tr(W rho) for the canonical word W of every moment id.
std::vector<cplx> moment_values(const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& target);

/// tr_A((W (x) 1) rho_AB) for every moment id.
std::vector<ComplexMatrix> block_moment_values(
    const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& bipartite_state);

/// Real coordinates of a moment vector: Re per id, plus Im for ids that are
/// not self-adjoint.
int moment_coordinate_count(const MomentLayout& layout);
Eigen::VectorXd moment_coordinates(const MomentLayout& layout, std::span<const cplx> values);

/// Real-linear span of moment vectors realizable in dimension d.
///
/// With several components a point is the concatenation of the moment
/// vectors of `states` states and `free_operators` arbitrary Hermitian
/// operators, all read out with the same measurements.
struct MomentSpan {
    std::vector<OperatorWord> words;
    ReductionRules rules;
    int system_dim = 0;
    int states = 1;
    int free_operators = 0;
    /// Projector ranks per setting; empty means every rank pattern is sampled.
    std::vector<std::vector<int>> ranks;
    RealMatrix basis;  ///< orthonormal columns in moment coordinates
    int samples = 0;

    int dimension() const { return static_cast<int>(basis.cols()); }
    /// Orthonormal basis of the orthogonal complement of the span.
    RealMatrix complement() const;
    /// Norm of the component of `coords` outside the span.
    double residual(const Eigen::VectorXd& coords) const;
};

/// Relative singular-value cutoff used for rank decisions on sampled spans.
inline constexpr double kSpanRankCutoff = 1e-7;

/// Samples Haar-random d-dimensional strategies until the span of realized
/// moment vectors has not grown for `stabilization_window` consecutive draws.
/// `ranks`, when given, fixes the projector rank of every outcome per setting.
MomentSpan sample_dim_span(
    std::span<const EffectSymbol> symbols,
    const std::vector<OperatorWord>& words,
    int d,
    uint64_t seed,
    int stabilization_window = 50,
    const ReductionRules& rules = {},
    int states = 1,
    int free_operators = 0,
    const std::vector<std::vector<int>>& ranks = {});

}  // namespace stbound
