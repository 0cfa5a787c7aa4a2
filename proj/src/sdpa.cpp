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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stbound/sdp.hpp"

namespace stbound {

namespace {

constexpr double kDropBelow = 1e-14;

std::string fmt(double v) {
    if (v == 0.0) {
        return "0";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_entries(std::ostringstream& os, int matno, int blk, const LmiBlock& b, const RealMatrix& m, double sign) {
    if (b.diagonal) {
        for (int i = 0; i < b.size; ++i) {
            const double v = sign * m(i, 0);
            if (std::abs(v) > kDropBelow) {
                os << matno << ' ' << blk << ' ' << i + 1 << ' ' << i + 1 << ' ' << fmt(v) << '\n';
            }
        }
        return;
    }
    for (int i = 0; i < b.size; ++i) {
        for (int j = i; j < b.size; ++j) {
            const double v = sign * m(i, j);
            if (std::abs(v) > kDropBelow) {
                os << matno << ' ' << blk << ' ' << i + 1 << ' ' << j + 1 << ' ' << fmt(v) << '\n';
            }
        }
    }
}

}  // namespace

std::string to_sdpa(const SdpProblem& problem) {
    const ConicProgram conic = assemble(problem);
    const EqualityElimination elim = eliminate_equalities(conic);
    if (!elim.consistent) {
        throw SolverError("cannot export: equality constraints are inconsistent");
    }
    const LmiProgram lmi = to_lmi(conic, elim);

    std::ostringstream os;
    os << "\"stbound objective offset " << fmt(lmi.offset) << '\n';
    os << lmi.num_vars << '\n';
    os << lmi.blocks.size() << '\n';
    for (size_t k = 0; k < lmi.blocks.size(); ++k) {
        os << (k ? " " : "") << (lmi.blocks[k].diagonal ? -lmi.blocks[k].size : lmi.blocks[k].size);
    }
    os << '\n';
    for (int i = 0; i < lmi.num_vars; ++i) {
        os << (i ? " " : "") << fmt(lmi.cost(i));
    }
    os << '\n';
    for (size_t k = 0; k < lmi.blocks.size(); ++k) {
        const auto& b = lmi.blocks[k];
        const int blk = static_cast<int>(k) + 1;
        write_entries(os, 0, blk, b, b.constant, -1.0);
        // Entries are grouped by matrix number, as most readers expect.
        std::vector<size_t> order(b.vars.size());
        for (size_t q = 0; q < order.size(); ++q) {
            order[q] = q;
        }
        std::sort(order.begin(), order.end(), [&](size_t l, size_t r) { return b.vars[l] < b.vars[r]; });
        for (size_t q : order) {
            write_entries(os, b.vars[q] + 1, blk, b, b.coeffs[q], 1.0);
        }
    }
    return os.str();
}

void export_sdpa(const SdpProblem& problem, const std::filesystem::path& destination) {
    const std::string text = to_sdpa(problem);
    std::ofstream out(destination, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + destination.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + destination.string());
    }
}

}  // namespace stbound
