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
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stbound/scenarios.hpp"

namespace stbound {

/// Problem with a config file. `line` is 1-based; 0 when no line applies.
class ConfigError : public std::runtime_error {
   public:
    ConfigError(int line, const std::string& what);
    int line() const { return line_; }

   private:
    int line_;
};

enum class Scenario { bell_assemblage, prepare_measure, steering };

struct RunConfig {
    Scenario scenario = Scenario::bell_assemblage;
    int level = 1;
    bool projective = true;
    std::optional<int> dimension;
    uint64_t seed = 1;

    /// Resolved reference; only the member matching `scenario` is set.
    std::optional<ReferenceAssemblage> assemblage_ref;
    std::optional<ReferenceEnsemble> ensemble_ref;
    std::optional<ReferenceBipartiteState> bipartite_ref;

    /// Functional mode: name and the swept values.
    std::string functional;
    std::vector<double> sweep;
    std::vector<double> marginals;
    /// Table mode: data read from a table file.
    std::optional<ObservedData> table;

    SolverSettings solver;
    std::filesystem::path csv;
    std::optional<std::filesystem::path> dump_sdpa;
};

/// INI text, schema 1. Relative paths resolve against `base_dir`.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

std::string to_string(Scenario s);
/// Functional measured by a scenario's tables: chsh, rac or steering.
std::string default_functional(Scenario s);

/// Table files: comma-separated with a header naming the index columns.
///   bell-assemblage  x,y,a,b,p
///   prepare-measure  x,y,b,p
///   steering         x,a,row,col,re,im
ObservedData read_table(std::istream& in, Scenario s);

struct CurveRow {
    double functional_value = 0.0;
    double bound = 0.0;
    std::string status;
    double solve_seconds = 0.0;
    double psd_residual = 0.0;
    int level = 0;
};

inline constexpr const char* kCsvHeader = "functional_value,bound,status,solve_seconds,psd_residual,level";

void write_csv(std::ostream& out, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_csv(std::istream& in);

/// Problems for one sweep point (a family for prepare-and-measure).
std::vector<SdpProblem> build_point(const RunConfig& cfg, const ObservedData& data);

/// Runs every point, writes the CSV and optional dumps.
/// Returns 0 when every point converged and verified, 2 otherwise.
int run(const RunConfig& cfg, int workers, std::ostream& log);

/// 0 when every bound matches within tol, 1 on a grid mismatch or unreadable
/// file, 2 when some bound is off.
int compare(std::istream& csv, std::istream& expected, double tol, std::ostream& log);

/// STBOUND_WORKERS, default 1.
int workers_from_env();

/// Entry point behind tools/stbound.
int cli_main(int argc, char** argv);

}  // namespace stbound
