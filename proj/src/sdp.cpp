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

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace stbound {

int MomentVariablePool::add_real(std::string label) {
    real_.push_back(true);
    labels_.push_back(std::move(label));
    return size() - 1;
}

int MomentVariablePool::add_complex(std::string label) {
    real_.push_back(false);
    labels_.push_back(std::move(label));
    return size() - 1;
}

void MomentVariablePool::fix(int id, cplx value) {
    if (id < 0 || id >= size()) {
        throw std::out_of_range("fix: unknown variable id");
    }
    if (real_[id] && value.imag() != 0.0) {
        throw std::invalid_argument("fix: real variable pinned to a complex value");
    }
    fixed_[id] = value;
}

LinearMatrixExpr::LinearMatrixExpr(int size) : size_(size), constant_(ComplexMatrix::Zero(size, size)) {}

void LinearMatrixExpr::add_constant(const ComplexMatrix& c) {
    if (c.rows() != size_ || c.cols() != size_) {
        throw DimensionError("constant does not match expression size");
    }
    constant_ += c;
}

void LinearMatrixExpr::add_term(int var, const ComplexMatrix& coeff) {
    if (coeff.rows() != size_ || coeff.cols() != size_) {
        throw DimensionError("coefficient does not match expression size");
    }
    if (auto it = index_.find(var); it != index_.end()) {
        terms_[it->second].coeff += coeff;
        return;
    }
    index_[var] = terms_.size();
    terms_.push_back({var, coeff});
}

void LinearMatrixExpr::place(int r, int c, int var, bool conjugate) {
    ComplexMatrix m = ComplexMatrix::Zero(size_, size_);
    if (r == c) {
        m(r, r) = 0.5;
    } else if (!conjugate) {
        m(r, c) = 1.0;
    } else {
        m(c, r) = 1.0;
    }
    add_term(var, m);
}

LinearMatrixExpr& LinearMatrixExpr::operator+=(const LinearMatrixExpr& o) {
    if (o.size_ != size_) {
        throw DimensionError("expression size mismatch in sum");
    }
    constant_ += o.constant_;
    for (const auto& t : o.terms_) {
        add_term(t.var, t.coeff);
    }
    return *this;
}

LinearMatrixExpr& LinearMatrixExpr::operator-=(const LinearMatrixExpr& o) {
    if (o.size_ != size_) {
        throw DimensionError("expression size mismatch in difference");
    }
    constant_ -= o.constant_;
    for (const auto& t : o.terms_) {
        add_term(t.var, -t.coeff);
    }
    return *this;
}

LinearMatrixExpr& LinearMatrixExpr::operator*=(double s) {
    constant_ *= s;
    for (auto& t : terms_) {
        t.coeff *= s;
    }
    return *this;
}

LinearMatrixExpr LinearMatrixExpr::kron_right(const ComplexMatrix& k) const {
    if (!is_hermitian(k)) {
        throw std::invalid_argument("kron_right needs a Hermitian factor");
    }
    return map([&](const ComplexMatrix& m) { return kron(m, k); });
}

ComplexMatrix LinearMatrixExpr::evaluate(const Assignment& a) const {
    ComplexMatrix out = constant_;
    for (const auto& t : terms_) {
        const cplx v = a.at(t.var);
        out += v * t.coeff + std::conj(v) * t.coeff.adjoint();
    }
    return out;
}

ScalarExpr& ScalarExpr::add(int var, cplx coeff) {
    terms.push_back({var, coeff});
    return *this;
}

double ScalarExpr::evaluate(const Assignment& a) const {
    double out = constant;
    for (const auto& t : terms) {
        out += (t.coeff * a.at(t.var)).real();
    }
    return out;
}

ScalarExpr trace_with(const ComplexMatrix& a, const LinearMatrixExpr& expr) {
    if (a.rows() != expr.size() || a.cols() != expr.size()) {
        throw DimensionError("trace_with size mismatch");
    }
    ScalarExpr out;
    out.constant = (a * expr.constant()).trace().real();
    for (const auto& t : expr.terms()) {
        out.add(t.var, 2.0 * (a * t.coeff).trace());
    }
    return out;
}

void SdpProblem::add_psd(LinearMatrixExpr e, std::string label) {
    psd.push_back(std::move(e));
    psd_labels.push_back(std::move(label));
}

void SdpProblem::add_equality(ScalarExpr e) {
    equalities.push_back(std::move(e));
}

void SdpProblem::add_complex_equality(const std::vector<ScalarTerm>& terms, cplx rhs) {
    ScalarExpr re;
    ScalarExpr im;
    re.constant = -rhs.real();
    im.constant = -rhs.imag();
    bool all_real = true;
    for (const auto& t : terms) {
        re.add(t.var, t.coeff);
        im.add(t.var, cplx(0.0, -1.0) * t.coeff);
        all_real = all_real && pool.is_real(t.var) && t.coeff.imag() == 0.0;
    }
    add_equality(std::move(re));
    if (!all_real || rhs.imag() != 0.0) {
        add_equality(std::move(im));
    }
}

void SdpProblem::validate() const {
    auto check_var = [&](int v) {
        if (v < 0 || v >= pool.size()) {
            throw std::invalid_argument("expression references unknown variable " + std::to_string(v));
        }
    };
    for (const auto& e : psd) {
        for (const auto& t : e.terms()) {
            check_var(t.var);
        }
    }
    for (const auto& e : equalities) {
        for (const auto& t : e.terms) {
            check_var(t.var);
        }
    }
    for (const auto& t : objective.terms) {
        check_var(t.var);
    }
    if (psd.size() != psd_labels.size()) {
        throw std::invalid_argument("psd label count mismatch");
    }
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal:
            return "optimal";
        case SolveStatus::near_optimal:
            return "near_optimal";
        case SolveStatus::infeasible:
            return "infeasible";
        case SolveStatus::numerical_failure:
            return "numerical_failure";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

Eigen::VectorXd ConicProgram::to_coords(const Assignment& a) const {
    Eigen::VectorXd x(num_coords());
    for (int i = 0; i < num_coords(); ++i) {
        const cplx v = a.at(coord_var[i]);
        x(i) = coord_imag[i] ? v.imag() : v.real();
    }
    return x;
}

Assignment ConicProgram::to_assignment(const Eigen::VectorXd& x) const {
    Assignment a(num_vars, cplx(0.0));
    for (int i = 0; i < num_coords(); ++i) {
        if (coord_imag[i]) {
            a[coord_var[i]] += cplx(0.0, x(i));
        } else {
            a[coord_var[i]] += x(i);
        }
    }
    return a;
}

double ConicProgram::evaluate_objective(const Eigen::VectorXd& x) const {
    return objective.dot(x) + objective_offset;
}

RealMatrix ConicProgram::evaluate_block(int k, const Eigen::VectorXd& x) const {
    const auto& b = blocks.at(k);
    RealMatrix out = b.constant;
    for (const auto& [i, m] : b.coeffs) {
        out += x(i) * m;
    }
    return out;
}

namespace {

constexpr double kImagZero = 1e-15;

/// Real-coordinate Hermitian coefficients of one expression term.
std::vector<std::pair<int, ComplexMatrix>> hermitian_parts(const ConicProgram& cp, const SdpProblem& p, const MatrixTerm& t) {
    const int c0 = cp.var_coord[t.var];
    ComplexMatrix sym = t.coeff + t.coeff.adjoint();
    if (p.pool.is_real(t.var)) {
        return {{c0, std::move(sym)}};
    }
    ComplexMatrix anti = cplx(0.0, 1.0) * (t.coeff - t.coeff.adjoint());
    return {{c0, std::move(sym)}, {c0 + 1, std::move(anti)}};
}

void scalar_row(const ConicProgram& cp, const SdpProblem& p, const ScalarExpr& e, Eigen::Ref<Eigen::VectorXd> row) {
    for (const auto& t : e.terms) {
        const int c0 = cp.var_coord[t.var];
        row(c0) += t.coeff.real();
        if (!p.pool.is_real(t.var)) {
            row(c0 + 1) -= t.coeff.imag();
        }
    }
}

}  // namespace

ConicProgram assemble(const SdpProblem& problem) {
    problem.validate();
    ConicProgram cp;
    cp.num_vars = problem.pool.size();
    for (int v = 0; v < cp.num_vars; ++v) {
        cp.var_coord.push_back(cp.num_coords());
        cp.coord_var.push_back(v);
        cp.coord_imag.push_back(false);
        if (!problem.pool.is_real(v)) {
            cp.coord_var.push_back(v);
            cp.coord_imag.push_back(true);
        }
    }
    const int n = cp.num_coords();

    for (const auto& e : problem.psd) {
        if (!is_hermitian(e.constant())) {
            throw std::invalid_argument("malformed expression: constant term is not Hermitian");
        }
        std::map<int, ComplexMatrix> coeffs;
        for (const auto& t : e.terms()) {
            for (auto& [coord, h] : hermitian_parts(cp, problem, t)) {
                auto it = coeffs.find(coord);
                if (it == coeffs.end()) {
                    coeffs.emplace(coord, std::move(h));
                } else {
                    it->second += h;
                }
            }
        }
        bool complex_block = e.constant().imag().cwiseAbs().maxCoeff() > kImagZero;
        for (const auto& [coord, h] : coeffs) {
            complex_block = complex_block || h.imag().cwiseAbs().maxCoeff() > kImagZero;
        }
        ConicBlock block;
        block.embedded = complex_block;
        block.size = complex_block ? 2 * e.size() : e.size();
        auto lower = [&](const ComplexMatrix& m) -> RealMatrix {
            return complex_block ? real_embed(m) : RealMatrix(m.real());
        };
        block.constant = lower(0.5 * (e.constant() + e.constant().adjoint()));
        for (const auto& [coord, h] : coeffs) {
            if (h.cwiseAbs().maxCoeff() == 0.0) {
                continue;
            }
            block.coeffs.emplace_back(coord, lower(h));
        }
        cp.blocks.push_back(std::move(block));
    }

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    for (const auto& e : problem.equalities) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        scalar_row(cp, problem, e, row);
        rows.push_back(std::move(row));
        rhs.push_back(-e.constant);
    }
    for (const auto& [v, value] : problem.pool.fixed()) {
        const int c0 = cp.var_coord[v];
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        row(c0) = 1.0;
        rows.push_back(row);
        rhs.push_back(value.real());
        if (!problem.pool.is_real(v)) {
            Eigen::VectorXd row_im = Eigen::VectorXd::Zero(n);
            row_im(c0 + 1) = 1.0;
            rows.push_back(row_im);
            rhs.push_back(value.imag());
        }
    }
    cp.eq_matrix = RealMatrix::Zero(static_cast<Eigen::Index>(rows.size()), n);
    cp.eq_rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        cp.eq_matrix.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        cp.eq_rhs(static_cast<Eigen::Index>(r)) = rhs[r];
    }

    cp.objective = Eigen::VectorXd::Zero(n);
    scalar_row(cp, problem, problem.objective, cp.objective);
    cp.objective_offset = problem.objective.constant;
    return cp;
}

EqualityElimination eliminate_equalities(const ConicProgram& conic) {
    const int n = conic.num_coords();
    const RealMatrix& a = conic.eq_matrix;
    const Eigen::VectorXd& b = conic.eq_rhs;
    EqualityElimination out;
    out.offset = Eigen::VectorXd::Zero(n);
    if (a.rows() == 0) {
        out.basis = RealMatrix::Identity(n, n);
        return out;
    }
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    const double tol = 1e-9 * scale;

    // Single-coordinate rows are pins; substitute them before the dense step.
    std::vector<bool> pinned(n, false);
    std::vector<bool> pin_row(a.rows(), false);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        int nz = -1;
        int count = 0;
        for (int c = 0; c < n; ++c) {
            if (a(r, c) != 0.0) {
                nz = c;
                ++count;
            }
        }
        if (count == 0) {
            out.inconsistency = std::max(out.inconsistency, std::abs(b(r)));
            pin_row[r] = true;
            continue;
        }
        if (count == 1) {
            pin_row[r] = true;
            const double value = b(r) / a(r, nz);
            if (pinned[nz]) {
                out.inconsistency = std::max(out.inconsistency, std::abs(out.offset(nz) - value) * std::abs(a(r, nz)));
            } else {
                pinned[nz] = true;
                out.offset(nz) = value;
            }
        }
    }
    std::vector<int> free_cols;
    for (int c = 0; c < n; ++c) {
        if (!pinned[c]) {
            free_cols.push_back(c);
        }
    }
    std::vector<Eigen::Index> dense_rows;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        if (!pin_row[r]) {
            dense_rows.push_back(r);
        }
    }
    const int nf = static_cast<int>(free_cols.size());
    RealMatrix af(static_cast<Eigen::Index>(dense_rows.size()), nf);
    Eigen::VectorXd bf(static_cast<Eigen::Index>(dense_rows.size()));
    for (size_t i = 0; i < dense_rows.size(); ++i) {
        const Eigen::Index r = dense_rows[i];
        double rhs = b(r);
        for (int c = 0; c < n; ++c) {
            if (pinned[c]) {
                rhs -= a(r, c) * out.offset(c);
            }
        }
        bf(static_cast<Eigen::Index>(i)) = rhs;
        for (int j = 0; j < nf; ++j) {
            af(static_cast<Eigen::Index>(i), j) = a(r, free_cols[j]);
        }
    }

    RealMatrix null_free;
    Eigen::VectorXd particular = Eigen::VectorXd::Zero(nf);
    if (af.rows() == 0 || nf == 0) {
        null_free = RealMatrix::Identity(nf, nf);
        if (nf == 0 && af.rows() > 0) {
            out.inconsistency = std::max(out.inconsistency, bf.cwiseAbs().maxCoeff());
        }
    } else {
        Eigen::JacobiSVD<RealMatrix> svd(af, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        int rank = 0;
        while (rank < sv.size() && sv(rank) > 1e-10 * std::max(1.0, sv(0))) {
            ++rank;
        }
        const RealMatrix& u = svd.matrixU();
        const RealMatrix& v = svd.matrixV();
        Eigen::VectorXd coeff = (u.leftCols(rank).transpose() * bf).cwiseQuotient(sv.head(rank));
        particular = v.leftCols(rank) * coeff;
        out.inconsistency = std::max(out.inconsistency, (af * particular - bf).cwiseAbs().maxCoeff());
        null_free = v.rightCols(nf - rank);
    }
    for (int j = 0; j < nf; ++j) {
        out.offset(free_cols[j]) = particular(j);
    }
    out.basis = RealMatrix::Zero(n, null_free.cols());
    for (int j = 0; j < nf; ++j) {
        out.basis.row(free_cols[j]) = null_free.row(j);
    }
    out.consistent = out.inconsistency <= tol;
    return out;
}

LmiProgram to_lmi(const ConicProgram& conic, const EqualityElimination& elim) {
    const RealMatrix& nb = elim.basis;
    const int nz = static_cast<int>(nb.cols());
    LmiProgram out;
    out.num_vars = nz;
    out.cost = nb.transpose() * conic.objective;
    out.offset = conic.objective_offset + conic.objective.dot(elim.offset);

    LmiBlock diag;
    diag.diagonal = true;
    std::vector<std::vector<double>> diag_coeffs(nz);
    std::vector<double> diag_const;

    for (const auto& block : conic.blocks) {
        RealMatrix constant = block.constant;
        std::vector<RealMatrix> zc(nz);
        std::vector<bool> used(nz, false);
        for (const auto& [i, m] : block.coeffs) {
            constant += elim.offset(i) * m;
            for (int j = 0; j < nz; ++j) {
                const double w = nb(i, j);
                if (w == 0.0) {
                    continue;
                }
                if (!used[j]) {
                    zc[j] = w * m;
                    used[j] = true;
                } else {
                    zc[j] += w * m;
                }
            }
        }
        if (block.size == 1) {
            diag_const.push_back(constant(0, 0));
            for (int j = 0; j < nz; ++j) {
                diag_coeffs[j].push_back(used[j] ? zc[j](0, 0) : 0.0);
            }
            continue;
        }
        LmiBlock lb;
        lb.size = block.size;
        lb.constant = std::move(constant);
        for (int j = 0; j < nz; ++j) {
            if (used[j] && zc[j].cwiseAbs().maxCoeff() > 1e-14) {
                lb.vars.push_back(j);
                lb.coeffs.push_back(std::move(zc[j]));
            }
        }
        out.blocks.push_back(std::move(lb));
    }
    if (!diag_const.empty()) {
        diag.size = static_cast<int>(diag_const.size());
        diag.constant = Eigen::Map<Eigen::VectorXd>(diag_const.data(), diag.size);
        for (int j = 0; j < nz; ++j) {
            Eigen::VectorXd col = Eigen::Map<Eigen::VectorXd>(diag_coeffs[j].data(), diag.size);
            if (col.cwiseAbs().maxCoeff() > 1e-14) {
                diag.vars.push_back(j);
                diag.coeffs.push_back(col);
            }
        }
        out.blocks.push_back(std::move(diag));
    }
    return out;
}

namespace {

/// Restricts z to directions that move some matrix inequality. Returns the
/// basis W (z = W w); fails when the objective decreases along a direction
/// the constraints do not see.
std::optional<RealMatrix> constrained_directions(const LmiProgram& p, LmiProgram& reduced, std::string& why) {
    const int nz = p.num_vars;
    Eigen::Index rows = 0;
    for (const auto& b : p.blocks) {
        rows += b.diagonal ? b.size : b.size * (b.size + 1) / 2;
    }
    RealMatrix phi = RealMatrix::Zero(rows, nz);
    Eigen::Index r0 = 0;
    for (const auto& b : p.blocks) {
        for (size_t k = 0; k < b.vars.size(); ++k) {
            Eigen::Index r = r0;
            if (b.diagonal) {
                phi.block(r0, b.vars[k], b.size, 1) = b.coeffs[k];
            } else {
                for (int i = 0; i < b.size; ++i) {
                    for (int j = i; j < b.size; ++j) {
                        phi(r++, b.vars[k]) = (i == j ? 1.0 : std::sqrt(2.0)) * b.coeffs[k](i, j);
                    }
                }
            }
        }
        r0 += b.diagonal ? b.size : b.size * (b.size + 1) / 2;
    }
    if (nz == 0) {
        reduced = p;
        return RealMatrix::Identity(0, 0);
    }
    Eigen::JacobiSVD<RealMatrix> svd(phi, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-10 * std::max(1.0, sv(0))) {
        ++rank;
    }
    if (rank == nz) {
        reduced = p;
        return RealMatrix::Identity(nz, nz);
    }
    const RealMatrix& v = svd.matrixV();
    RealMatrix kernel = v.rightCols(nz - rank);
    if ((kernel.transpose() * p.cost).norm() > 1e-9 * (1.0 + p.cost.norm())) {
        why = "objective is unbounded along directions free of every constraint";
        return std::nullopt;
    }
    RealMatrix w = v.leftCols(rank);
    reduced = LmiProgram{};
    reduced.num_vars = rank;
    reduced.cost = w.transpose() * p.cost;
    reduced.offset = p.offset;
    for (const auto& b : p.blocks) {
        LmiBlock nb;
        nb.diagonal = b.diagonal;
        nb.size = b.size;
        nb.constant = b.constant;
        for (int l = 0; l < rank; ++l) {
            RealMatrix acc;
            bool any = false;
            for (size_t k = 0; k < b.vars.size(); ++k) {
                const double c = w(b.vars[k], l);
                if (c == 0.0) {
                    continue;
                }
                if (!any) {
                    acc = c * b.coeffs[k];
                    any = true;
                } else {
                    acc += c * b.coeffs[k];
                }
            }
            if (any && acc.cwiseAbs().maxCoeff() > 1e-14) {
                nb.vars.push_back(l);
                nb.coeffs.push_back(std::move(acc));
            }
        }
        reduced.blocks.push_back(std::move(nb));
    }
    return w;
}

/// Result of restricting z to the face of the cone singled out by constant
/// principal submatrices: z = offset + basis w.
struct FaceReduction {
    LmiProgram program;
    Eigen::VectorXd offset;
    RealMatrix basis;
    bool empty = false;
};

/// Substitutes z = z0 + n w into every block.
LmiProgram substitute(const LmiProgram& p, const Eigen::VectorXd& z0, const RealMatrix& n) {
    LmiProgram out;
    out.num_vars = static_cast<int>(n.cols());
    out.cost = n.transpose() * p.cost;
    out.offset = p.offset + p.cost.dot(z0);
    for (const auto& b : p.blocks) {
        LmiBlock nb;
        nb.diagonal = b.diagonal;
        nb.size = b.size;
        nb.constant = b.constant;
        for (size_t k = 0; k < b.vars.size(); ++k) {
            nb.constant += z0(b.vars[k]) * b.coeffs[k];
        }
        for (int l = 0; l < out.num_vars; ++l) {
            RealMatrix acc = RealMatrix::Zero(b.constant.rows(), b.constant.cols());
            bool any = false;
            for (size_t k = 0; k < b.vars.size(); ++k) {
                const double c = n(b.vars[k], l);
                if (c != 0.0) {
                    acc += c * b.coeffs[k];
                    any = true;
                }
            }
            if (any && acc.cwiseAbs().maxCoeff() > 1e-14) {
                nb.vars.push_back(l);
                nb.coeffs.push_back(std::move(acc));
            }
        }
        out.blocks.push_back(std::move(nb));
    }
    return out;
}

/// If a PSD block M has a constant principal submatrix P with P k = 0, every
/// feasible M satisfies M [k; 0] = 0. Those rows become equalities on z and
/// the block shrinks to the orthogonal complement of the kernel vectors.
/// Data pinned from rank-deficient strategies otherwise leave the program
/// without any strictly feasible point.
FaceReduction reduce_faces(const LmiProgram& p) {
    FaceReduction out;
    out.program = p;
    out.offset = Eigen::VectorXd::Zero(p.num_vars);
    out.basis = RealMatrix::Identity(p.num_vars, p.num_vars);
    for (int round = 0; round < 8; ++round) {
        const LmiProgram& cur = out.program;
        std::vector<Eigen::VectorXd> rows;
        std::vector<double> rhs;
        std::vector<std::optional<RealMatrix>> shrink(cur.blocks.size());
        for (size_t bi = 0; bi < cur.blocks.size(); ++bi) {
            const LmiBlock& b = cur.blocks[bi];
            if (b.diagonal || b.size < 2) {
                continue;
            }
            const double scale = 1.0 + b.constant.cwiseAbs().maxCoeff();
            // Entries that no variable touches.
            Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> fixed =
                Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(b.size, b.size, true);
            for (const auto& c : b.coeffs) {
                fixed = fixed.array() && (c.array().abs() <= 1e-14 * scale);
            }
            std::vector<int> r;
            for (int i = 0; i < b.size; ++i) {
                if (fixed(i, i)) {
                    r.push_back(i);
                }
            }
            // Drop rows until the R x R submatrix is constant.
            for (;;) {
                int worst = -1;
                int worst_count = 0;
                for (size_t a = 0; a < r.size(); ++a) {
                    int count = 0;
                    for (int j : r) {
                        count += !fixed(r[a], j);
                    }
                    if (count > worst_count) {
                        worst_count = count;
                        worst = static_cast<int>(a);
                    }
                }
                if (worst < 0) {
                    break;
                }
                r.erase(r.begin() + worst);
            }
            if (r.empty()) {
                continue;
            }
            const int nr = static_cast<int>(r.size());
            RealMatrix pm(nr, nr);
            for (int a = 0; a < nr; ++a) {
                for (int c = 0; c < nr; ++c) {
                    pm(a, c) = b.constant(r[a], r[c]);
                }
            }
            Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (pm + pm.transpose()));
            const double cut = 1e-9 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
            if (es.eigenvalues()(0) < -cut) {
                continue;  // already infeasible; phase I reports it
            }
            int nk = 0;
            while (nk < nr && es.eigenvalues()(nk) <= cut) {
                ++nk;
            }
            if (nk == 0) {
                continue;
            }
            RealMatrix u = RealMatrix::Zero(b.size, nk);
            for (int a = 0; a < nr; ++a) {
                u.row(r[a]) = es.eigenvectors().row(a).head(nk);
            }
            // M u = 0 on the rows outside R; rows inside R hold already.
            std::vector<bool> in_r(b.size, false);
            for (int i : r) {
                in_r[i] = true;
            }
            const RealMatrix cu = b.constant * u;
            std::vector<RealMatrix> au;
            for (const auto& c : b.coeffs) {
                au.push_back(c * u);
            }
            for (int i = 0; i < b.size; ++i) {
                if (in_r[i]) {
                    continue;
                }
                for (int k = 0; k < nk; ++k) {
                    Eigen::VectorXd row = Eigen::VectorXd::Zero(cur.num_vars);
                    for (size_t v = 0; v < b.vars.size(); ++v) {
                        row(b.vars[v]) = au[v](i, k);
                    }
                    rows.push_back(std::move(row));
                    rhs.push_back(-cu(i, k));
                }
            }
            // Orthonormal complement of the kernel vectors.
            Eigen::JacobiSVD<RealMatrix> svd(u, Eigen::ComputeFullU);
            shrink[bi] = svd.matrixU().rightCols(b.size - nk);
        }
        bool any = false;
        for (const auto& v : shrink) {
            any = any || v.has_value();
        }
        if (!any) {
            break;
        }

        Eigen::VectorXd z0 = Eigen::VectorXd::Zero(cur.num_vars);
        RealMatrix n = RealMatrix::Identity(cur.num_vars, cur.num_vars);
        if (!rows.empty() && cur.num_vars > 0) {
            RealMatrix a(static_cast<Eigen::Index>(rows.size()), cur.num_vars);
            Eigen::VectorXd bv(static_cast<Eigen::Index>(rows.size()));
            for (size_t k = 0; k < rows.size(); ++k) {
                a.row(static_cast<Eigen::Index>(k)) = rows[k];
                bv(static_cast<Eigen::Index>(k)) = rhs[k];
            }
            Eigen::JacobiSVD<RealMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            int rank = 0;
            while (rank < sv.size() && sv(rank) > 1e-10 * std::max(1.0, sv(0))) {
                ++rank;
            }
            z0 = svd.matrixV().leftCols(rank) *
                 (svd.matrixU().leftCols(rank).transpose() * bv).cwiseQuotient(sv.head(rank));
            if ((a * z0 - bv).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + bv.cwiseAbs().maxCoeff())) {
                out.empty = true;
                return out;
            }
            n = svd.matrixV().rightCols(cur.num_vars - rank);
        } else if (!rows.empty()) {
            Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
            if (bv.cwiseAbs().maxCoeff() > 1e-9) {
                out.empty = true;
                return out;
            }
        }
        LmiProgram next = substitute(cur, z0, n);
        for (size_t bi = 0; bi < next.blocks.size(); ++bi) {
            if (!shrink[bi]) {
                continue;
            }
            const RealMatrix& v = *shrink[bi];
            LmiBlock& b = next.blocks[bi];
            b.size = static_cast<int>(v.cols());
            b.constant = v.transpose() * b.constant * v;
            b.constant = 0.5 * (b.constant + b.constant.transpose()).eval();
            std::vector<int> vars;
            std::vector<RealMatrix> coeffs;
            for (size_t k = 0; k < b.vars.size(); ++k) {
                RealMatrix c = v.transpose() * b.coeffs[k] * v;
                if (c.cwiseAbs().maxCoeff() > 1e-14) {
                    vars.push_back(b.vars[k]);
                    coeffs.push_back(0.5 * (c + c.transpose()));
                }
            }
            b.vars = std::move(vars);
            b.coeffs = std::move(coeffs);
        }
        std::erase_if(next.blocks, [](const LmiBlock& b) { return b.size == 0; });
        out.offset += out.basis * z0;
        out.basis = out.basis * n;
        out.program = std::move(next);
    }
    return out;
}

/// min t s.t. every block + t I >= 0, t >= -1, |z_i| <= box.
LmiProgram feasibility_program(const LmiProgram& p, double box) {
    LmiProgram out;
    const int nz = p.num_vars;
    const int t = nz;
    out.num_vars = nz + 1;
    out.cost = Eigen::VectorXd::Zero(nz + 1);
    out.cost(t) = 1.0;
    for (const auto& b : p.blocks) {
        LmiBlock nb = b;
        nb.vars.push_back(t);
        if (b.diagonal) {
            nb.coeffs.push_back(Eigen::VectorXd::Ones(b.size));
        } else {
            nb.coeffs.push_back(RealMatrix::Identity(b.size, b.size));
        }
        out.blocks.push_back(std::move(nb));
    }
    LmiBlock bounds;
    bounds.diagonal = true;
    bounds.size = 1 + 2 * nz;
    bounds.constant = Eigen::VectorXd::Constant(bounds.size, box);
    bounds.constant(0) = 1.0;
    for (int j = 0; j < nz; ++j) {
        Eigen::VectorXd col = Eigen::VectorXd::Zero(bounds.size);
        col(1 + 2 * j) = 1.0;
        col(2 + 2 * j) = -1.0;
        bounds.vars.push_back(j);
        bounds.coeffs.push_back(col);
    }
    Eigen::VectorXd tcol = Eigen::VectorXd::Zero(bounds.size);
    tcol(0) = 1.0;
    bounds.vars.push_back(t);
    bounds.coeffs.push_back(tcol);
    out.blocks.push_back(std::move(bounds));
    return out;
}

}  // namespace

SolveReport solve(const SdpProblem& problem, const SolverSettings& settings) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    SolveReport report;
    const ConicProgram conic = assemble(problem);
    const EqualityElimination elim = eliminate_equalities(conic);
    if (!elim.consistent) {
        report.status = SolveStatus::infeasible;
        report.message = "equality constraints are inconsistent";
        report.assignment = conic.to_assignment(elim.offset);
        report.solve_seconds = elapsed();
        return report;
    }
    const FaceReduction face = reduce_faces(to_lmi(conic, elim));
    if (face.empty) {
        report.status = SolveStatus::infeasible;
        report.message = "pinned moments force equalities that cannot hold";
        report.assignment = conic.to_assignment(elim.offset + elim.basis * face.offset);
        report.solve_seconds = elapsed();
        return report;
    }
    LmiProgram reduced;
    std::string why;
    auto w = constrained_directions(face.program, reduced, why);
    if (!w) {
        report.status = SolveStatus::numerical_failure;
        report.message = why;
        report.assignment = conic.to_assignment(elim.offset);
        report.solve_seconds = elapsed();
        return report;
    }
    auto backend = make_backend(settings.solver);
    LmiResult res = backend->solve(reduced, settings);
    const Eigen::VectorXd x = elim.offset + elim.basis * (face.offset + face.basis * (*w * res.z));

    report.status = res.status;
    report.objective = conic.evaluate_objective(x);
    report.lower_bound = res.lower_bound;
    report.primal_residual = res.primal_residual;
    report.dual_residual = res.dual_residual;
    report.gap = res.gap;
    report.iterations = res.iterations;
    report.message = res.message;
    report.assignment = conic.to_assignment(x);

    if (!report.converged()) {
        // Distinguish an empty feasible set from a backend breakdown.
        const LmiProgram phase1 = feasibility_program(reduced, 1e3);
        SolverSettings s1 = settings;
        s1.tol = std::max(settings.tol, 1e-9);
        LmiResult feas = backend->solve(phase1, s1);
        if (feas.status == SolveStatus::optimal || feas.status == SolveStatus::near_optimal) {
            const double shift = feas.z(phase1.num_vars - 1);
            if (shift > 1e-6) {
                report.status = SolveStatus::infeasible;
                report.message = "matrix inequalities cannot be satisfied (minimal eigenvalue shift " +
                                 std::to_string(shift) + ")";
            } else {
                report.message += "; problem is feasible (shift " + std::to_string(shift) + ")";
            }
        } else {
            report.message += "; feasibility check did not converge";
        }
    }
    report.solve_seconds = elapsed();
    return report;
}

double psd_residual(const SdpProblem& problem, const Assignment& a) {
    double worst = 0.0;
    for (const auto& e : problem.psd) {
        const ComplexMatrix m = e.evaluate(a);
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
        worst = std::max(worst, -es.eigenvalues().minCoeff());
    }
    return worst;
}

double equality_residual(const SdpProblem& problem, const Assignment& a) {
    double worst = 0.0;
    for (const auto& e : problem.equalities) {
        worst = std::max(worst, std::abs(e.evaluate(a)));
    }
    for (const auto& [v, value] : problem.pool.fixed()) {
        worst = std::max(worst, std::abs(a.at(v) - value));
    }
    for (int v = 0; v < problem.pool.size(); ++v) {
        if (problem.pool.is_real(v)) {
            worst = std::max(worst, std::abs(a.at(v).imag()));
        }
    }
    return worst;
}

bool verify(const SolveReport& report, const SdpProblem& problem, double tol) {
    if (static_cast<int>(report.assignment.size()) != problem.pool.size()) {
        return false;
    }
    if (std::isinf(tol)) {
        return true;
    }
    return psd_residual(problem, report.assignment) <= tol && equality_residual(problem, report.assignment) <= tol;
}

}  // namespace stbound
