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

#include <cmath>
#include <limits>

#include "stbound/sdp.hpp"

namespace stbound {

namespace {

// Blocks of the standard-form pair
//   primal: min <C, X>  s.t. <A_i, X> = b_i, X >= 0
//   dual:   max b.y     s.t. C - sum_i y_i A_i = S >= 0
// with C = constant, A_i = -coeff_i, b = -cost, y = z. Diagonal blocks keep
// every matrix as a column vector.
template <typename T>
struct Block {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    bool diagonal = false;
    int n = 0;
    Mat c;
    std::vector<int> vars;
    std::vector<Mat> a;
};

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using BlockMats = std::vector<Mat<T>>;

template <typename T>
T inner(const Block<T>& b, const Mat<T>& x, const Mat<T>& y) {
    return b.diagonal ? x.col(0).dot(y.col(0)) : (x.array() * y.array()).sum();
}

template <typename T>
Mat<T> identity(const Block<T>& b, T s) {
    return b.diagonal ? Mat<T>(Vec<T>::Constant(b.n, s)) : Mat<T>(s * Mat<T>::Identity(b.n, b.n));
}

template <typename T>
Mat<T> sym(const Mat<T>& m) {
    return 0.5 * (m + m.transpose());
}

/// Largest alpha with x + alpha dx >= 0 (infinity if unconstrained).
template <typename T>
T max_step(const Block<T>& b, const Mat<T>& x, const Mat<T>& dx) {
    if (b.diagonal) {
        T out = std::numeric_limits<T>::infinity();
        for (int k = 0; k < b.n; ++k) {
            if (dx(k, 0) < 0.0) {
                out = std::min(out, -x(k, 0) / dx(k, 0));
            }
        }
        return out;
    }
    Eigen::LLT<Mat<T>> llt(x);
    if (llt.info() != Eigen::Success) {
        return 0;
    }
    Mat<T> tmp = llt.matrixL().solve(dx);
    tmp = llt.matrixL().solve(tmp.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<Mat<T>> es(sym<T>(tmp), Eigen::EigenvaluesOnly);
    const T lmin = es.eigenvalues()(0);
    return lmin >= 0 ? std::numeric_limits<T>::infinity() : T(-1) / lmin;
}

class DenseIpm : public SolverBackend {
   public:
    std::string id() const override { return "dense-ipm"; }
    LmiResult solve(const LmiProgram& program, const SolverSettings& settings) const override;
};

template <typename T>
struct Iterate {
    BlockMats<T> x;
    BlockMats<T> s;
    Vec<T> y;
};

template <typename T>
LmiResult solve_in(const LmiProgram& program, const SolverSettings& settings) {
    using std::abs;
    using std::pow;
    using std::max;
    using std::min;
    using std::sqrt;
    using Block = stbound::Block<T>;
    using BlockMats = stbound::BlockMats<T>;
    using RealMatrix = Mat<T>;
    using VectorT = Vec<T>;
    const int m = program.num_vars;
    std::vector<Block> blocks;
    for (const auto& lb : program.blocks) {
        Block b;
        b.diagonal = lb.diagonal;
        b.n = lb.size;
        b.c = lb.constant.template cast<T>();
        b.vars = lb.vars;
        for (const auto& f : lb.coeffs) {
            b.a.push_back(-f.template cast<T>());
        }
        blocks.push_back(std::move(b));
    }
    const VectorT bvec = -program.cost.template cast<T>();

    LmiResult out;
    out.z = Eigen::VectorXd::Zero(m);
    if (blocks.empty()) {
        if (program.cost.size() > 0 && program.cost.norm() > 0.0) {
            out.status = SolveStatus::numerical_failure;
            out.message = "unconstrained objective";
            return out;
        }
        out.status = SolveStatus::optimal;
        out.objective = out.lower_bound = program.offset;
        return out;
    }

    int n_total = 0;
    T c_norm = 0.0;
    for (const auto& b : blocks) {
        n_total += b.n;
        c_norm += b.c.squaredNorm();
    }
    c_norm = sqrt(c_norm);
    const T b_norm = bvec.norm();

    // Per-variable Frobenius norms of A_i, for the starting point.
    VectorT a_norm = VectorT::Zero(m);
    for (const auto& b : blocks) {
        for (size_t k = 0; k < b.vars.size(); ++k) {
            a_norm(b.vars[k]) += b.a[k].squaredNorm();
        }
    }
    a_norm = a_norm.cwiseSqrt();

    Iterate<T> it;
    it.y = VectorT::Zero(m);
    for (const auto& b : blocks) {
        const T rn = sqrt(T(b.n));
        T xi = max(T(10), rn);
        T eta = max({T(10), rn, b.c.norm()});
        for (size_t k = 0; k < b.vars.size(); ++k) {
            const int v = b.vars[k];
            xi = max(xi, b.n * (1.0 + abs(bvec(v))) / (1.0 + b.a[k].norm()));
            eta = max(eta, b.a[k].norm());
        }
        it.x.push_back(identity(b, xi));
        it.s.push_back(identity(b, eta));
    }

    auto apply_a = [&](const BlockMats& x) {
        VectorT r = VectorT::Zero(m);
        for (size_t j = 0; j < blocks.size(); ++j) {
            const auto& b = blocks[j];
            for (size_t k = 0; k < b.vars.size(); ++k) {
                r(b.vars[k]) += inner(b, b.a[k], x[j]);
            }
        }
        return r;
    };
    auto apply_at = [&](const VectorT& y) {
        BlockMats r;
        for (const auto& b : blocks) {
            RealMatrix acc = RealMatrix::Zero(b.c.rows(), b.c.cols());
            for (size_t k = 0; k < b.vars.size(); ++k) {
                acc += y(b.vars[k]) * b.a[k];
            }
            r.push_back(std::move(acc));
        }
        return r;
    };

    struct Metrics {
        T relp, reld, relgap, pobj, dobj;
        T worst() const { return max({relp, reld, relgap}); }
    };
    auto metrics = [&](const Iterate<T>& s) {
        Metrics mt{};
        VectorT rp = bvec - apply_a(s.x);
        BlockMats aty = apply_at(s.y);
        T rd = 0.0;
        mt.pobj = 0.0;
        for (size_t j = 0; j < blocks.size(); ++j) {
            rd += (blocks[j].c - s.s[j] - aty[j]).squaredNorm();
            mt.pobj += inner(blocks[j], blocks[j].c, s.x[j]);
        }
        mt.dobj = bvec.dot(s.y);
        mt.relp = rp.norm() / (1.0 + b_norm);
        mt.reld = sqrt(rd) / (1.0 + c_norm);
        mt.relgap = abs(mt.pobj - mt.dobj) / (1.0 + abs(mt.pobj) + abs(mt.dobj));
        return mt;
    };

    Iterate<T> best = it;
    Metrics best_m = metrics(it);
    int since_improvement = 0;
    std::string stop_reason = "iteration limit reached";
    int iter = 0;
    T last_ap = 1;
    T last_ad = 1;

    for (; iter < settings.max_iter; ++iter) {
        const Metrics mt = metrics(it);
        if (mt.worst() < best_m.worst()) {
            best = it;
            best_m = mt;
            since_improvement = 0;
        } else if (++since_improvement > 20) {
            stop_reason = "progress stalled";
            break;
        }
        if (mt.worst() <= settings.tol) {
            stop_reason.clear();
            break;
        }
        T big = 0.0;
        for (size_t j = 0; j < blocks.size(); ++j) {
            big = max({big, it.x[j].cwiseAbs().maxCoeff(), it.s[j].cwiseAbs().maxCoeff()});
        }
        if (big > 1e12) {
            stop_reason = "iterates diverged";
            break;
        }

        T mu = 0.0;
        for (size_t j = 0; j < blocks.size(); ++j) {
            mu += inner(blocks[j], it.x[j], it.s[j]);
        }
        mu /= n_total;

        // S^{-1} and the dual residual.
        BlockMats sinv;
        bool factor_ok = true;
        for (size_t j = 0; j < blocks.size(); ++j) {
            const auto& b = blocks[j];
            if (b.diagonal) {
                sinv.push_back(it.s[j].cwiseInverse());
                continue;
            }
            Eigen::LLT<RealMatrix> llt(it.s[j]);
            if (llt.info() != Eigen::Success) {
                factor_ok = false;
                break;
            }
            sinv.push_back(sym<T>(llt.solve(RealMatrix::Identity(b.n, b.n))));
        }
        if (!factor_ok) {
            stop_reason = "lost positive definiteness";
            break;
        }
        BlockMats aty = apply_at(it.y);
        BlockMats rd;
        for (size_t j = 0; j < blocks.size(); ++j) {
            rd.push_back(blocks[j].c - it.s[j] - aty[j]);
        }

        // Schur complement M_ij = <A_i, X A_j S^{-1}>.
        RealMatrix schur = RealMatrix::Zero(m, m);
        for (size_t j = 0; j < blocks.size(); ++j) {
            const auto& b = blocks[j];
            for (size_t q = 0; q < b.vars.size(); ++q) {
                RealMatrix g = b.diagonal ? RealMatrix(it.x[j].cwiseProduct(b.a[q]).cwiseProduct(sinv[j]))
                                          : RealMatrix(it.x[j] * b.a[q] * sinv[j]);
                for (size_t p = 0; p <= q; ++p) {
                    const T v = inner(b, b.a[p], g);
                    schur(b.vars[p], b.vars[q]) += v;
                    if (p != q) {
                        schur(b.vars[q], b.vars[p]) += v;
                    }
                }
            }
        }
        Eigen::LLT<RealMatrix> schur_llt(schur);
        const bool use_llt = schur_llt.info() == Eigen::Success;
        Eigen::LDLT<RealMatrix> schur_ldlt;
        if (!use_llt) {
            schur_ldlt.compute(schur);
        }
        auto schur_solve = [&](const VectorT& r) -> VectorT {
            return use_llt ? VectorT(schur_llt.solve(r)) : VectorT(schur_ldlt.solve(r));
        };

        // X R_d S^{-1}
        BlockMats xrs;
        for (size_t j = 0; j < blocks.size(); ++j) {
            xrs.push_back(blocks[j].diagonal ? RealMatrix(it.x[j].cwiseProduct(rd[j]).cwiseProduct(sinv[j]))
                                             : RealMatrix(it.x[j] * rd[j] * sinv[j]));
        }
        const VectorT a_xrs = apply_a(xrs);
        const VectorT a_sinv = apply_a(sinv);

        auto direction = [&](T sigma, const BlockMats* corr, VectorT& dy, BlockMats& dx, BlockMats& ds) {
            VectorT rhs = bvec + a_xrs - sigma * mu * a_sinv;
            if (corr) {
                rhs += apply_a(*corr);
            }
            dy = schur_solve(rhs);
            BlockMats atdy = apply_at(dy);
            dx.clear();
            ds.clear();
            for (size_t j = 0; j < blocks.size(); ++j) {
                const auto& b = blocks[j];
                RealMatrix dsj = rd[j] - atdy[j];
                RealMatrix dxj;
                if (b.diagonal) {
                    dxj = sigma * mu * sinv[j] - it.x[j] - it.x[j].cwiseProduct(dsj).cwiseProduct(sinv[j]);
                    if (corr) {
                        dxj -= (*corr)[j];
                    }
                } else {
                    dxj = sigma * mu * sinv[j] - it.x[j] - it.x[j] * dsj * sinv[j];
                    if (corr) {
                        dxj -= (*corr)[j];
                    }
                    dxj = sym(dxj);
                    dsj = sym(dsj);
                }
                dx.push_back(std::move(dxj));
                ds.push_back(std::move(dsj));
            }
        };
        auto steps = [&](const BlockMats& dx, const BlockMats& ds, T frac) {
            T ap = std::numeric_limits<T>::infinity();
            T ad = ap;
            for (size_t j = 0; j < blocks.size(); ++j) {
                ap = min(ap, max_step(blocks[j], it.x[j], dx[j]));
                ad = min(ad, max_step(blocks[j], it.s[j], ds[j]));
            }
            return std::pair{min(T(1), frac * ap), min(T(1), frac * ad)};
        };

        VectorT dy;
        BlockMats dx;
        BlockMats ds;
        direction(0.0, nullptr, dy, dx, ds);
        if (!dy.allFinite()) {
            stop_reason = "Schur complement is singular";
            break;
        }
        auto [ap0, ad0] = steps(dx, ds, 1.0);
        T mu_aff = 0.0;
        for (size_t j = 0; j < blocks.size(); ++j) {
            mu_aff += inner<T>(blocks[j], it.x[j] + ap0 * dx[j], it.s[j] + ad0 * ds[j]);
        }
        mu_aff /= n_total;
        T sigma = std::clamp(pow(max(mu_aff, T(0)) / mu, T(3)), T(0), T(1));
        // Short steps mean the iterate hugs the boundary; recentre.
        if (min(last_ap, last_ad) < T(0.2)) {
            sigma = max(sigma, T(0.5));
        }

        BlockMats corr;
        for (size_t j = 0; j < blocks.size(); ++j) {
            corr.push_back(blocks[j].diagonal ? RealMatrix(dx[j].cwiseProduct(ds[j]).cwiseProduct(sinv[j]))
                                              : RealMatrix(dx[j] * ds[j] * sinv[j]));
        }
        direction(sigma, &corr, dy, dx, ds);
        if (!dy.allFinite()) {
            stop_reason = "Schur complement is singular";
            break;
        }
        auto [ap, ad] = steps(dx, ds, T(0.9) + T(0.09) * min({ap0, ad0, T(1)}));
        if (ap < 1e-10 && ad < 1e-10) {
            stop_reason = "step length vanished";
            break;
        }
        for (size_t j = 0; j < blocks.size(); ++j) {
            it.x[j] += ap * dx[j];
            it.s[j] += ad * ds[j];
            if (!blocks[j].diagonal) {
                it.x[j] = sym(it.x[j]);
                it.s[j] = sym(it.s[j]);
            }
        }
        it.y += ad * dy;
        last_ap = ap;
        last_ad = ad;
    }
    if (iter == settings.max_iter || !stop_reason.empty()) {
        const Metrics mt = metrics(it);
        if (mt.worst() < best_m.worst()) {
            best = it;
            best_m = mt;
        }
    } else {
        best = it;
        best_m = metrics(it);
    }

    out.iterations = iter;
    out.z = best.y.template cast<double>();
    out.objective = program.cost.dot(out.z) + program.offset;
    out.lower_bound = static_cast<double>(-best_m.pobj) + program.offset;
    out.primal_residual = static_cast<double>(best_m.reld);
    out.dual_residual = static_cast<double>(best_m.relp);
    out.gap = static_cast<double>(best_m.relgap);
    if (best_m.worst() <= settings.tol) {
        out.status = SolveStatus::optimal;
    } else if (best_m.worst() <= std::sqrt(settings.tol) / 10.0) {
        out.status = SolveStatus::near_optimal;
        out.message = stop_reason;
    } else {
        out.status = SolveStatus::numerical_failure;
        out.message = stop_reason.empty() ? "did not converge" : stop_reason;
    }
    return out;
}

}  // namespace

LmiResult DenseIpm::solve(const LmiProgram& program, const SolverSettings& settings) const {
    LmiResult out = solve_in<double>(program, settings);
    if (out.status == SolveStatus::optimal) {
        return out;
    }
    // Programs without a strictly feasible point stall in double precision;
    // the retry in extended precision usually gets much further.
    LmiResult ext = solve_in<long double>(program, settings);
    auto worst = [](const LmiResult& r) { return std::max({r.primal_residual, r.dual_residual, r.gap}); };
    return worst(ext) < worst(out) ? ext : out;
}

std::unique_ptr<SolverBackend> make_backend(const std::string& id) {
    if (id == "dense-ipm") {
        return std::make_unique<DenseIpm>();
    }
    throw SolverError("unknown solver backend '" + id + "'");
}

}  // namespace stbound
