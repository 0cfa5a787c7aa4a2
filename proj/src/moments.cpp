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

#include <algorithm>
#include <set>
#include <sstream>

#include "stbound/random.hpp"

namespace stbound {

std::string EffectSymbol::str() const {
    std::ostringstream out;
    out << "E" << party << "[" << outcome << "|" << setting << "]";
    return out.str();
}

std::vector<EffectSymbol> make_symbols(int party, int n_settings, int n_outcomes) {
    if (n_settings < 0 || n_outcomes < 1) {
        throw std::invalid_argument("make_symbols: need n_settings >= 0 and n_outcomes >= 1");
    }
    std::vector<EffectSymbol> out;
    for (int y = 0; y < n_settings; ++y) {
        for (int b = 0; b + 1 < n_outcomes; ++b) {
            out.push_back({party, y, b});
        }
    }
    return out;
}

std::string OperatorWord::str() const {
    if (symbols.empty()) {
        return "1";
    }
    std::string out;
    for (const auto& s : symbols) {
        out += s.str();
    }
    return out;
}

std::strong_ordering OperatorWord::operator<=>(const OperatorWord& o) const {
    if (auto c = symbols.size() <=> o.symbols.size(); c != 0) {
        return c;
    }
    return std::lexicographical_compare_three_way(
        symbols.begin(), symbols.end(), o.symbols.begin(), o.symbols.end());
}

OperatorWord operator*(const OperatorWord& a, const OperatorWord& b) {
    OperatorWord out = a;
    out.symbols.insert(out.symbols.end(), b.symbols.begin(), b.symbols.end());
    return out;
}

OperatorWord adjoint(const OperatorWord& w) {
    OperatorWord out = w;
    std::reverse(out.symbols.begin(), out.symbols.end());
    return out;
}

std::optional<OperatorWord> reduce_word(const OperatorWord& w, const ReductionRules& rules) {
    OperatorWord out;
    out.symbols.reserve(w.symbols.size());
    for (const auto& s : w.symbols) {
        if (rules.projective && !out.symbols.empty()) {
            const auto& top = out.symbols.back();
            if (top.party == s.party && top.setting == s.setting) {
                if (top.outcome == s.outcome) {
                    continue;
                }
                return std::nullopt;
            }
        }
        out.symbols.push_back(s);
    }
    return out;
}

std::vector<OperatorWord> generate_words(
    std::span<const EffectSymbol> symbols,
    int level,
    const std::vector<OperatorWord>& extras,
    const ReductionRules& rules) {
    if (level < 1) {
        throw std::invalid_argument("generate_words: level must be >= 1");
    }
    std::vector<EffectSymbol> alphabet(symbols.begin(), symbols.end());
    std::sort(alphabet.begin(), alphabet.end());
    alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());

    std::vector<OperatorWord> out{OperatorWord{}};
    std::set<OperatorWord> seen{OperatorWord{}};
    std::vector<OperatorWord> frontier{OperatorWord{}};
    for (int len = 1; len <= level; ++len) {
        std::set<OperatorWord> next;
        for (const auto& prefix : frontier) {
            for (const auto& s : alphabet) {
                OperatorWord candidate = prefix;
                candidate.symbols.push_back(s);
                auto reduced = reduce_word(candidate, rules);
                if (reduced && static_cast<int>(reduced->length()) == len && !seen.count(*reduced)) {
                    next.insert(*reduced);
                }
            }
        }
        frontier.assign(next.begin(), next.end());
        for (const auto& w : frontier) {
            seen.insert(w);
            out.push_back(w);
        }
    }
    for (const auto& e : extras) {
        auto reduced = reduce_word(e, rules);
        if (reduced && seen.insert(*reduced).second) {
            out.push_back(*reduced);
        }
    }
    return out;
}

MomentLayout::MomentLayout(std::vector<OperatorWord> words, ReductionRules rules)
    : words_(std::move(words)), rules_(rules) {
    if (words_.empty() || !words_.front().is_identity()) {
        throw std::invalid_argument("moment layout word list must start with the identity");
    }
    const size_t m = words_.size();
    entries_.resize(m * m);
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < m; ++j) {
            auto w = reduce_word(adjoint(words_[j]) * words_[i], rules_);
            if (!w) {
                entries_[i * m + j] = MomentRef{};
                continue;
            }
            if (auto it = index_.find(*w); it != index_.end()) {
                entries_[i * m + j] = it->second;
                continue;
            }
            auto adj = reduce_word(adjoint(*w), rules_);
            const OperatorWord canonical = std::min(*w, *adj);
            const int id = static_cast<int>(moments_.size());
            moments_.push_back(canonical);
            self_adjoint_.push_back(*w == *adj);
            index_[canonical] = MomentRef{id, false};
            if (!(*w == *adj)) {
                const OperatorWord other = (canonical == *w) ? *adj : *w;
                index_[other] = MomentRef{id, true};
            }
            entries_[i * m + j] = index_.at(*w);
        }
    }
}

std::optional<MomentRef> MomentLayout::find(const OperatorWord& w) const {
    auto reduced = reduce_word(w, rules_);
    if (!reduced) {
        return MomentRef{};
    }
    auto it = index_.find(*reduced);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

MomentRef MomentLayout::lookup(const OperatorWord& w) const {
    auto ref = find(w);
    if (!ref) {
        throw std::out_of_range("word " + w.str() + " has no moment in this layout");
    }
    return *ref;
}

int MomentLayout::real_dimension() const {
    int n = 0;
    for (bool sa : self_adjoint_) {
        n += sa ? 1 : 2;
    }
    return n;
}

MomentLayout build_layout(const std::vector<OperatorWord>& words, const ReductionRules& rules) {
    return MomentLayout(words, rules);
}

void Strategy::validate() const {
    constexpr double tol = 1e-10;
    if (measured_factor < 0 || measured_factor >= static_cast<int>(shape.dims.size())) {
        throw std::invalid_argument("strategy: measured factor out of range");
    }
    const int d = shape.total();
    for (const auto& s : states) {
        if (s.dim() != d) {
            throw DimensionError("strategy: state dimension does not match shape");
        }
        if (min_eigenvalue(s) < -tol) {
            throw std::invalid_argument("strategy: state is not positive semidefinite");
        }
    }
    const int dm = measured_dim();
    for (const auto& setting : povms) {
        ComplexMatrix total = ComplexMatrix::Zero(dm, dm);
        for (const auto& e : setting) {
            if (e.dim() != dm) {
                throw DimensionError("strategy: effect dimension does not match measured factor");
            }
            if (min_eigenvalue(e) < -tol) {
                throw std::invalid_argument("strategy: effect is not positive semidefinite");
            }
            total += e.matrix();
        }
        if ((total - ComplexMatrix::Identity(dm, dm)).cwiseAbs().maxCoeff() > tol) {
            throw std::invalid_argument("strategy: effects do not sum to identity");
        }
    }
}

ComplexMatrix Strategy::word_operator(const OperatorWord& w) const {
    const int dm = measured_dim();
    ComplexMatrix out = ComplexMatrix::Identity(dm, dm);
    for (const auto& s : w.symbols) {
        if (s.setting < 0 || s.setting >= static_cast<int>(povms.size()) || s.outcome < 0 ||
            s.outcome >= static_cast<int>(povms[s.setting].size())) {
            throw std::out_of_range("strategy has no effect for symbol " + s.str());
        }
        out = out * povms[s.setting][s.outcome].matrix();
    }
    return out;
}

namespace {

/// Lifts an operator on the measured factor to the whole space.
ComplexMatrix lift(const Strategy& strategy, const ComplexMatrix& op) {
    int before = 1;
    int after = 1;
    for (int k = 0; k < static_cast<int>(strategy.shape.dims.size()); ++k) {
        if (k < strategy.measured_factor) {
            before *= strategy.shape.dims[k];
        } else if (k > strategy.measured_factor) {
            after *= strategy.shape.dims[k];
        }
    }
    ComplexMatrix out = op;
    if (before > 1) {
        out = kron(ComplexMatrix::Identity(before, before), out);
    }
    if (after > 1) {
        out = kron(out, ComplexMatrix::Identity(after, after));
    }
    return out;
}

void check_target(const Strategy& strategy, const HermitianOperator& target) {
    if (target.dim() != strategy.shape.total()) {
        throw DimensionError("target dimension does not match strategy shape");
    }
}

void check_bipartite(const Strategy& strategy, const HermitianOperator& state) {
    if (strategy.shape.dims.size() != 2 || strategy.measured_factor != 0) {
        throw DimensionError("block moments need a bipartite shape measured on the first factor");
    }
    check_target(strategy, state);
}

}  // namespace

HermitianOperator realize_moment_matrix(
    const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& target) {
    check_target(strategy, target);
    const int m = layout.size();
    std::vector<ComplexMatrix> ops;
    ops.reserve(m);
    for (const auto& w : layout.words()) {
        ops.push_back(lift(strategy, strategy.word_operator(w)));
    }
    ComplexMatrix gamma(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            gamma(i, j) = (ops[j].adjoint() * ops[i] * target.matrix()).trace();
        }
    }
    return HermitianOperator::from_rounded(gamma);
}

HermitianOperator realize_block_moment(
    const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& bipartite_state) {
    check_bipartite(strategy, bipartite_state);
    const int m = layout.size();
    const int db = strategy.shape.dims[1];
    const std::vector<int> keep_b{1};
    std::vector<ComplexMatrix> ops;
    for (const auto& w : layout.words()) {
        ops.push_back(lift(strategy, strategy.word_operator(w)));
    }
    ComplexMatrix gamma(m * db, m * db);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            gamma.block(i * db, j * db, db, db) =
                partial_trace(ops[j].adjoint() * ops[i] * bipartite_state.matrix(), strategy.shape, keep_b);
        }
    }
    return HermitianOperator::from_rounded(gamma);
}

std::vector<cplx> moment_values(const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& target) {
    check_target(strategy, target);
    std::vector<cplx> out;
    out.reserve(layout.num_moments());
    for (int id = 0; id < layout.num_moments(); ++id) {
        ComplexMatrix w = lift(strategy, strategy.word_operator(layout.moment_word(id)));
        out.push_back((w * target.matrix()).trace());
    }
    return out;
}

std::vector<ComplexMatrix> block_moment_values(
    const MomentLayout& layout, const Strategy& strategy, const HermitianOperator& bipartite_state) {
    check_bipartite(strategy, bipartite_state);
    const std::vector<int> keep_b{1};
    std::vector<ComplexMatrix> out;
    for (int id = 0; id < layout.num_moments(); ++id) {
        ComplexMatrix w = lift(strategy, strategy.word_operator(layout.moment_word(id)));
        out.push_back(partial_trace(w * bipartite_state.matrix(), strategy.shape, keep_b));
    }
    return out;
}

int moment_coordinate_count(const MomentLayout& layout) {
    return layout.real_dimension();
}

Eigen::VectorXd moment_coordinates(const MomentLayout& layout, std::span<const cplx> values) {
    if (static_cast<int>(values.size()) != layout.num_moments()) {
        throw DimensionError("moment vector length does not match layout");
    }
    Eigen::VectorXd out(layout.real_dimension());
    int k = 0;
    for (int id = 0; id < layout.num_moments(); ++id) {
        out(k++) = values[id].real();
        if (!layout.self_adjoint(id)) {
            out(k++) = values[id].imag();
        }
    }
    return out;
}

RealMatrix MomentSpan::complement() const {
    const Eigen::Index n = basis.rows();
    const Eigen::Index k = basis.cols();
    if (k == 0) {
        return RealMatrix::Identity(n, n);
    }
    Eigen::HouseholderQR<RealMatrix> qr(basis);
    RealMatrix q = qr.householderQ() * RealMatrix::Identity(n, n);
    return q.rightCols(n - k);
}

double MomentSpan::residual(const Eigen::VectorXd& coords) const {
    if (coords.size() != basis.rows()) {
        throw DimensionError("coordinate vector does not match span ambient dimension");
    }
    return (coords - basis * (basis.transpose() * coords)).norm();
}

MomentSpan sample_dim_span(
    std::span<const EffectSymbol> symbols,
    const std::vector<OperatorWord>& words,
    int d,
    uint64_t seed,
    int stabilization_window,
    const ReductionRules& rules,
    int states,
    int free_operators,
    const std::vector<std::vector<int>>& ranks) {
    if (d < 1) {
        throw std::invalid_argument("sample_dim_span: d must be >= 1");
    }
    if (states < 0 || free_operators < 0 || states + free_operators < 1) {
        throw std::invalid_argument("sample_dim_span: need at least one component");
    }
    const MomentLayout layout(words, rules);
    std::vector<int> outcomes;
    for (const auto& s : symbols) {
        if (s.setting >= static_cast<int>(outcomes.size())) {
            outcomes.resize(s.setting + 1, 1);
        }
        outcomes[s.setting] = std::max(outcomes[s.setting], s.outcome + 2);
    }

    if (!ranks.empty()) {
        if (!rules.projective || ranks.size() != outcomes.size()) {
            throw std::invalid_argument("sample_dim_span: ranks need projective rules and one entry per setting");
        }
        for (size_t y = 0; y < ranks.size(); ++y) {
            int total = 0;
            for (int r : ranks[y]) {
                total += r;
            }
            if (static_cast<int>(ranks[y].size()) != outcomes[y] || total != d) {
                throw std::invalid_argument("sample_dim_span: ranks must cover every outcome and sum to d");
            }
        }
    }

    Rng rng(seed);
    const int per = layout.real_dimension();
    const int n = per * (states + free_operators);
    std::vector<Eigen::VectorXd> samples;
    std::vector<Eigen::VectorXd> ortho;
    int unchanged = 0;
    constexpr int kMaxSamples = 200000;
    while (unchanged < stabilization_window && static_cast<int>(samples.size()) < kMaxSamples) {
        Strategy s;
        s.shape = SubsystemShape{{d}};
        for (size_t y = 0; y < outcomes.size(); ++y) {
            const int n_out = outcomes[y];
            s.povms.push_back(!ranks.empty()     ? random_projective_measurement(ranks[y], rng)
                              : rules.projective ? random_projective_measurement(d, n_out, rng)
                                                 : random_povm(d, n_out, rng));
        }
        const bool pure = samples.size() % 2 == 0;
        Eigen::VectorXd v(n);
        for (int c = 0; c < states + free_operators; ++c) {
            const HermitianOperator rho = c >= states ? random_hermitian(d, rng)
                                          : pure      ? random_pure_state(d, rng)
                                                      : random_mixed_state(d, rng);
            v.segment(c * per, per) = moment_coordinates(layout, moment_values(layout, s, rho));
        }
        v /= v.norm();
        samples.push_back(v);

        Eigen::VectorXd r = v;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : ortho) {
                r -= q.dot(r) * q;
            }
        }
        if (r.norm() > kSpanRankCutoff) {
            ortho.push_back(r / r.norm());
            unchanged = 0;
        } else {
            ++unchanged;
        }
    }

    RealMatrix stacked(n, static_cast<Eigen::Index>(samples.size()));
    for (size_t k = 0; k < samples.size(); ++k) {
        stacked.col(static_cast<Eigen::Index>(k)) = samples[k];
    }
    Eigen::BDCSVD<RealMatrix> svd(stacked, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv(0) > 0.0) {
        while (rank < sv.size() && sv(rank) > kSpanRankCutoff * sv(0)) {
            ++rank;
        }
    }
    MomentSpan out;
    out.words = words;
    out.rules = rules;
    out.system_dim = d;
    out.states = states;
    out.free_operators = free_operators;
    out.ranks = ranks;
    out.basis = svd.matrixU().leftCols(rank);
    out.samples = static_cast<int>(samples.size());
    return out;
}

}  // namespace stbound
