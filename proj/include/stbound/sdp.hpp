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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stbound/qmat.hpp"

namespace stbound {

/// Value of every pool variable, indexed by variable id.
using Assignment = std::vector<cplx>;

/// Scalar unknowns of an SDP. Real variables hold moments of self-adjoint
/// words; complex ones hold the remaining moments (and their conjugates).
class MomentVariablePool {
   public:
    int add_real(std::string label = {});
    int add_complex(std::string label = {});

    int size() const { return static_cast<int>(real_.size()); }
    bool is_real(int id) const { return real_.at(id); }
    const std::string& label(int id) const { return labels_.at(id); }

    /// Pins a variable. Real variables only accept values with zero imaginary part.
    void fix(int id, cplx value);
    const std::map<int, cplx>& fixed() const { return fixed_; }

    void set_unit(int id) { unit_ = id; }
    std::optional<int> unit() const { return unit_; }

   private:
    std::vector<bool> real_;
    std::vector<std::string> labels_;
    std::map<int, cplx> fixed_;
    std::optional<int> unit_;
};

struct MatrixTerm {
    int var;
    ComplexMatrix coeff;
};

/// Affine Hermitian-matrix-valued function of the pool:
///   constant + sum_k (v_k M_k + conj(v_k) M_k^dag).
/// For a real variable the term reads v (M + M^dag).
class LinearMatrixExpr {
   public:
    LinearMatrixExpr() = default;
    explicit LinearMatrixExpr(int size);

    int size() const { return size_; }
    const ComplexMatrix& constant() const { return constant_; }
    const std::vector<MatrixTerm>& terms() const { return terms_; }

    void add_constant(const ComplexMatrix& c);
    void add_term(int var, const ComplexMatrix& coeff);
    /// Makes entry (r, c) equal v (or conj(v)) and entry (c, r) its conjugate.
    void place(int r, int c, int var, bool conjugate = false);

    LinearMatrixExpr& operator+=(const LinearMatrixExpr& o);
    LinearMatrixExpr& operator-=(const LinearMatrixExpr& o);
    LinearMatrixExpr& operator*=(double s);

    /// expr (x) k for a Hermitian constant k.
    LinearMatrixExpr kron_right(const ComplexMatrix& k) const;

    /// Applies a linear map f with f(M^dag) = f(M)^dag to the constant and
    /// every coefficient.
    template <typename F>
    LinearMatrixExpr map(F&& f) const {
        ComplexMatrix c = f(constant_);
        LinearMatrixExpr out(static_cast<int>(c.rows()));
        out.constant_ = std::move(c);
        for (const auto& t : terms_) {
            out.add_term(t.var, f(t.coeff));
        }
        return out;
    }

    ComplexMatrix evaluate(const Assignment& a) const;

   private:
    int size_ = 0;
    ComplexMatrix constant_;
    std::vector<MatrixTerm> terms_;
    std::map<int, size_t> index_;
};

struct ScalarTerm {
    int var;
    cplx coeff;
};

/// Real affine form constant + sum_k Re(coeff_k v_k).
struct ScalarExpr {
    double constant = 0.0;
    std::vector<ScalarTerm> terms;

    ScalarExpr& add(int var, cplx coeff);
    double evaluate(const Assignment& a) const;
};

/// tr(A L) as a ScalarExpr, for a Hermitian constant A.
ScalarExpr trace_with(const ComplexMatrix& a, const LinearMatrixExpr& expr);

struct SdpProblem {
    MomentVariablePool pool;
    std::vector<LinearMatrixExpr> psd;
    std::vector<std::string> psd_labels;
    std::vector<ScalarExpr> equalities;  ///< each constrained to 0
    ScalarExpr objective;                ///< minimized
    std::map<std::string, std::string> metadata;

    void add_psd(LinearMatrixExpr e, std::string label = {});
    void add_equality(ScalarExpr e);
    /// Pins the complex value of a general affine combination: two real rows.
    void add_complex_equality(const std::vector<ScalarTerm>& terms, cplx rhs);
    /// Throws std::invalid_argument for dangling ids or size mismatches.
    void validate() const;
};

enum class SolveStatus { optimal, near_optimal, infeasible, numerical_failure };
std::string to_string(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::numerical_failure;
    double objective = 0.0;        ///< objective at `assignment`
    double lower_bound = 0.0;      ///< value of the dual certificate
    double primal_residual = 0.0;  ///< relative infeasibility of the matrix inequalities
    double dual_residual = 0.0;    ///< relative infeasibility of the dual certificate
    double gap = 0.0;              ///< relative duality gap
    int iterations = 0;
    double solve_seconds = 0.0;
    Assignment assignment;
    std::string message;

    bool converged() const { return status == SolveStatus::optimal || status == SolveStatus::near_optimal; }
};

struct SolverSettings {
    double tol = 1e-8;
    int max_iter = 200;
    std::string solver = "dense-ipm";
};

class SolverError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Real standard form.

/// PSD block over the real coordinates. `embedded` blocks are the real
/// embeddings of complex Hermitian constraints.
struct ConicBlock {
    int size = 0;
    bool embedded = false;
    RealMatrix constant;
    std::vector<std::pair<int, RealMatrix>> coeffs;  ///< (coordinate, matrix)
};

/// min objective.x + offset  s.t.  eq_matrix x = eq_rhs,  constant_k + sum_i x_i coeff_ik >= 0.
/// Coordinate i is the real or imaginary part of pool variable coord_var[i].
struct ConicProgram {
    int num_vars = 0;
    std::vector<int> coord_var;
    std::vector<bool> coord_imag;
    std::vector<int> var_coord;  ///< first coordinate of every pool variable
    std::vector<ConicBlock> blocks;
    RealMatrix eq_matrix;
    Eigen::VectorXd eq_rhs;
    Eigen::VectorXd objective;
    double objective_offset = 0.0;

    int num_coords() const { return static_cast<int>(coord_var.size()); }
    Eigen::VectorXd to_coords(const Assignment& a) const;
    Assignment to_assignment(const Eigen::VectorXd& x) const;
    double evaluate_objective(const Eigen::VectorXd& x) const;
    RealMatrix evaluate_block(int k, const Eigen::VectorXd& x) const;
};

ConicProgram assemble(const SdpProblem& problem);

// ---------------------------------------------------------------------------
// Solver backends work on the equality-free linear matrix inequality form
//   min cost.z + offset  s.t.  constant_k + sum_i z_i coeff_ik >= 0.

struct LmiBlock {
    bool diagonal = false;  ///< constant and coefficients are stored as columns
    int size = 0;
    RealMatrix constant;
    std::vector<int> vars;
    std::vector<RealMatrix> coeffs;
};

struct LmiProgram {
    int num_vars = 0;
    std::vector<LmiBlock> blocks;
    Eigen::VectorXd cost;
    double offset = 0.0;
};

struct LmiResult {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd z;
    double objective = 0.0;    ///< cost.z + offset
    double lower_bound = 0.0;  ///< dual objective
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
    std::string message;
};

class SolverBackend {
   public:
    virtual ~SolverBackend() = default;
    virtual std::string id() const = 0;
    virtual LmiResult solve(const LmiProgram& program, const SolverSettings& settings) const = 0;
};

/// "dense-ipm": primal-dual interior point method (HKM direction, Mehrotra
/// predictor-corrector) on dense blocks.
std::unique_ptr<SolverBackend> make_backend(const std::string& id);

/// Affine parametrization x = offset + basis z of the equality-feasible set.
struct EqualityElimination {
    Eigen::VectorXd offset;
    RealMatrix basis;
    bool consistent = true;
    double inconsistency = 0.0;
};

EqualityElimination eliminate_equalities(const ConicProgram& conic);
/// Substitutes the parametrization; 1x1 blocks are merged into one diagonal block.
LmiProgram to_lmi(const ConicProgram& conic, const EqualityElimination& elim);

SolveReport solve(const SdpProblem& problem, const SolverSettings& settings = {});

/// Largest violation max(0, -min eig) over all PSD constraints.
double psd_residual(const SdpProblem& problem, const Assignment& a);
/// Largest |equality| or |v - fixed| violation.
double equality_residual(const SdpProblem& problem, const Assignment& a);

/// True iff the report's assignment satisfies every constraint within tol.
bool verify(const SolveReport& report, const SdpProblem& problem, double tol);

/// SDPA sparse (.dat-s) text for the equality-eliminated problem.
std::string to_sdpa(const SdpProblem& problem);
void export_sdpa(const SdpProblem& problem, const std::filesystem::path& destination);

}  // namespace stbound
