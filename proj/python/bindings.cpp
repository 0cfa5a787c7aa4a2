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

// Python bindings: bounds per scenario, fixed-resource oracles and the CLI
// operations.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/iostream.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <iostream>

#include "stbound/cli.hpp"
#include "stbound/scenarios.hpp"

namespace py = pybind11;
using namespace stbound;

namespace {

std::vector<HermitianOperator> hermitian_list(const std::vector<ComplexMatrix>& ms) {
    std::vector<HermitianOperator> out;
    for (const auto& m : ms) {
        out.emplace_back(m);
    }
    return out;
}

std::vector<ComplexMatrix> matrix_list(const std::vector<HermitianOperator>& hs) {
    std::vector<ComplexMatrix> out;
    for (const auto& h : hs) {
        out.push_back(h.matrix());
    }
    return out;
}

SolverSettings settings(double tol, int max_iter) {
    SolverSettings s;
    s.tol = tol;
    s.max_iter = max_iter;
    return s;
}

ReferenceAssemblage assemblage_ref(const std::optional<std::vector<ComplexMatrix>>& sigma, int n_a) {
    if (!sigma) {
        return reference_bb84();
    }
    if (n_a < 1) {
        throw py::value_error("n_a must be positive");
    }
    ReferenceAssemblage r{static_cast<int>(sigma->size()) / n_a, n_a, hermitian_list(*sigma)};
    r.validate();
    return r;
}

ReferenceEnsemble ensemble_ref(const std::optional<std::vector<ComplexMatrix>>& rho) {
    if (!rho) {
        return reference_rac2();
    }
    ReferenceEnsemble r{hermitian_list(*rho)};
    r.validate();
    return r;
}

ReferenceBipartiteState bipartite_ref(const std::optional<ComplexMatrix>& rho, const std::vector<int>& dims) {
    if (!rho) {
        return reference_phi_plus();
    }
    ReferenceBipartiteState r{SubsystemShape{dims}, HermitianOperator(*rho)};
    r.validate();
    return r;
}

/// p[x][y][a][b]
BellTable bell_from(const std::vector<std::vector<std::vector<std::vector<double>>>>& p) {
    BellTable t;
    t.n_x = static_cast<int>(p.size());
    t.n_y = t.n_x ? static_cast<int>(p[0].size()) : 0;
    t.n_a = t.n_y ? static_cast<int>(p[0][0].size()) : 0;
    t.n_b = t.n_a ? static_cast<int>(p[0][0][0].size()) : 0;
    t.p.assign(static_cast<size_t>(t.n_x * t.n_y * t.n_a * t.n_b), 0.0);
    for (int x = 0; x < t.n_x; ++x) {
        for (int y = 0; y < t.n_y; ++y) {
            for (int a = 0; a < t.n_a; ++a) {
                for (int b = 0; b < t.n_b; ++b) {
                    t.at(a, b, x, y) = p.at(x).at(y).at(a).at(b);
                }
            }
        }
    }
    t.validate();
    return t;
}

/// p[x][y][b]
PmTable pm_from(const std::vector<std::vector<std::vector<double>>>& p) {
    PmTable t;
    t.n_x = static_cast<int>(p.size());
    t.n_y = t.n_x ? static_cast<int>(p[0].size()) : 0;
    t.n_b = t.n_y ? static_cast<int>(p[0][0].size()) : 0;
    t.p.assign(static_cast<size_t>(t.n_x * t.n_y * t.n_b), 0.0);
    for (int x = 0; x < t.n_x; ++x) {
        for (int y = 0; y < t.n_y; ++y) {
            for (int b = 0; b < t.n_b; ++b) {
                t.at(b, x, y) = p.at(x).at(y).at(b);
            }
        }
    }
    t.validate();
    return t;
}

ObservedData observed(const std::string& functional, double value, const std::vector<double>& marginals) {
    return FunctionalData{functional, value, marginals};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Self-testing robustness bounds from moment-matrix relaxations";

    py::class_<SolveReport>(m, "SolveReport")
        .def_property_readonly("status", [](const SolveReport& r) { return to_string(r.status); })
        .def_readonly("objective", &SolveReport::objective)
        .def_readonly("lower_bound", &SolveReport::lower_bound)
        .def_readonly("primal_residual", &SolveReport::primal_residual)
        .def_readonly("dual_residual", &SolveReport::dual_residual)
        .def_readonly("gap", &SolveReport::gap)
        .def_readonly("iterations", &SolveReport::iterations)
        .def_readonly("solve_seconds", &SolveReport::solve_seconds)
        .def_readonly("message", &SolveReport::message)
        .def_property_readonly("converged", &SolveReport::converged)
        .def("__repr__", [](const SolveReport& r) {
            return "SolveReport(status=" + to_string(r.status) + ", objective=" + std::to_string(r.objective) + ")";
        });

    // References.
    m.def("reference_bb84", [] { return matrix_list(reference_bb84().sigma); },
          "BB84 assemblage members sigma_{a|x}, stored at index x * 2 + a.");
    m.def("reference_rac2", [] { return matrix_list(reference_rac2().rho); },
          "2 -> 1 random access code states in input order x = x_0 + 2 x_1.");
    m.def("reference_phi_plus", [] { return reference_phi_plus().rho.matrix(); });

    // Bounds.
    m.def(
        "assemblage_bound",
        [](double value, const std::string& functional, int level, const std::vector<double>& marginals,
           const std::optional<std::vector<ComplexMatrix>>& reference, int n_a, double tol, int max_iter) {
            const auto ref = assemblage_ref(reference, n_a);
            BuildOptions o;
            o.level = level;
            py::gil_scoped_release release;
            return solve(build_assemblage_bound(ref, observed(functional, value, marginals), o), settings(tol, max_iter));
        },
        py::arg("value"), py::arg("functional") = "chsh", py::arg("level") = 1,
        py::arg("marginals") = std::vector<double>{}, py::arg("reference") = py::none(), py::arg("n_a") = 2,
        py::arg("tol") = 1e-8, py::arg("max_iter") = 200);
    m.def(
        "assemblage_bound_table",
        [](const std::vector<std::vector<std::vector<std::vector<double>>>>& p, int level,
           const std::optional<std::vector<ComplexMatrix>>& reference, int n_a, double tol, int max_iter) {
            const auto ref = assemblage_ref(reference, n_a);
            const BellTable t = bell_from(p);
            BuildOptions o;
            o.level = level;
            py::gil_scoped_release release;
            return solve(build_assemblage_bound(ref, t, o), settings(tol, max_iter));
        },
        py::arg("p"), py::arg("level") = 1, py::arg("reference") = py::none(), py::arg("n_a") = 2,
        py::arg("tol") = 1e-8, py::arg("max_iter") = 200, "Bound from a table p[x][y][a][b].");
    m.def(
        "pm_bound",
        [](double value, int level, int dimension, const std::optional<std::vector<ComplexMatrix>>& reference,
           uint64_t seed, double tol, int max_iter) {
            const auto ref = ensemble_ref(reference);
            PmOptions o;
            o.level = level;
            o.dimension = dimension;
            o.seed = seed;
            py::gil_scoped_release release;
            return solve_family(build_pm_family(ref, observed("rac", value, {}), o), settings(tol, max_iter));
        },
        py::arg("value"), py::arg("level") = 1, py::arg("dimension") = 2, py::arg("reference") = py::none(),
        py::arg("seed") = 1, py::arg("tol") = 1e-8, py::arg("max_iter") = 200,
        "Bound from the average success probability of the random access code.");
    m.def(
        "pm_bound_table",
        [](const std::vector<std::vector<std::vector<double>>>& p, int level, int dimension,
           const std::optional<std::vector<ComplexMatrix>>& reference, uint64_t seed, double tol, int max_iter) {
            const auto ref = ensemble_ref(reference);
            const PmTable t = pm_from(p);
            PmOptions o;
            o.level = level;
            o.dimension = dimension;
            o.seed = seed;
            py::gil_scoped_release release;
            return solve_family(build_pm_family(ref, t, o), settings(tol, max_iter));
        },
        py::arg("p"), py::arg("level") = 1, py::arg("dimension") = 2, py::arg("reference") = py::none(),
        py::arg("seed") = 1, py::arg("tol") = 1e-8, py::arg("max_iter") = 200, "Bound from a table p[x][y][b].");
    m.def(
        "steering_bound",
        [](double value, int level, double tol, int max_iter) {
            BuildOptions o;
            o.level = level;
            py::gil_scoped_release release;
            return solve(build_steering_bound(reference_phi_plus(), observed("steering", value, {}), o),
                         settings(tol, max_iter));
        },
        py::arg("value"), py::arg("level") = 1, py::arg("tol") = 1e-8, py::arg("max_iter") = 200);
    m.def(
        "steering_bound_tomogram",
        [](const std::vector<ComplexMatrix>& sigma, int n_a, int level, const std::optional<ComplexMatrix>& reference,
           const std::vector<int>& dims, double tol, int max_iter) {
            const auto ref = bipartite_ref(reference, dims);
            AssemblageTomogram t;
            t.n_a = n_a;
            t.n_x = n_a > 0 ? static_cast<int>(sigma.size()) / n_a : 0;
            t.sigma = hermitian_list(sigma);
            BuildOptions o;
            o.level = level;
            py::gil_scoped_release release;
            return solve(build_steering_bound(ref, t, o), settings(tol, max_iter));
        },
        py::arg("sigma"), py::arg("n_a") = 2, py::arg("level") = 1, py::arg("reference") = py::none(),
        py::arg("dims") = std::vector<int>{2, 2}, py::arg("tol") = 1e-8, py::arg("max_iter") = 200,
        "Bound from sigma_{a|x} stored at index x * n_a + a.");

    // Oracles.
    m.def(
        "assemblage_fidelity",
        [](const std::vector<ComplexMatrix>& sigma, const std::optional<std::vector<ComplexMatrix>>& reference,
           int n_a) { return assemblage_fidelity(assemblage_ref(reference, n_a), hermitian_list(sigma)); },
        py::arg("sigma"), py::arg("reference") = py::none(), py::arg("n_a") = 2);
    m.def(
        "ensemble_fidelity",
        [](const std::vector<ComplexMatrix>& states, const std::optional<std::vector<ComplexMatrix>>& reference) {
            return ensemble_fidelity(ensemble_ref(reference), hermitian_list(states));
        },
        py::arg("states"), py::arg("reference") = py::none());
    m.def(
        "steering_fidelity",
        [](const ComplexMatrix& rho_ab, int d_a, const std::optional<ComplexMatrix>& reference,
           const std::vector<int>& dims) {
            return steering_fidelity_dual(HermitianOperator(rho_ab), d_a, bipartite_ref(reference, dims));
        },
        py::arg("rho_ab"), py::arg("d_a") = 2, py::arg("reference") = py::none(),
        py::arg("dims") = std::vector<int>{2, 2});

    // CLI operations.
    m.def(
        "run_config",
        [](const std::string& path, int workers) {
            const RunConfig cfg = load_config(path);
            py::scoped_ostream_redirect out(std::cerr, py::module_::import("sys").attr("stderr"));
            return run(cfg, workers, std::cerr);
        },
        py::arg("path"), py::arg("workers") = 1, "Runs a config file; returns the CLI exit code.");
    m.def(
        "compare",
        [](const std::string& csv, const std::string& expected, double tol) {
            std::ifstream a(csv);
            std::ifstream b(expected);
            if (!a || !b) {
                throw py::value_error("cannot open " + (!a ? csv : expected));
            }
            py::scoped_ostream_redirect out(std::cerr, py::module_::import("sys").attr("stderr"));
            return compare(a, b, tol, std::cerr);
        },
        py::arg("csv"), py::arg("expected"), py::arg("tol") = 1e-6, "Compares two curve CSVs; returns the exit code.");
}
