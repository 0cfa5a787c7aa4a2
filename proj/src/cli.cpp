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

#include "stbound/cli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace stbound {

namespace pt = boost::property_tree;

ConfigError::ConfigError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        out.push_back(trim(cur));
    }
    return out;
}

/// Line of every `section.key` and `[section]` in the INI text.
std::map<std::string, int> index_lines(const std::string& text) {
    std::map<std::string, int> lines;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int n = 0;
    while (std::getline(in, raw)) {
        ++n;
        const std::string l = trim(raw);
        if (l.empty() || l[0] == ';' || l[0] == '#') {
            continue;
        }
        if (l[0] == '[') {
            section = trim(l.substr(1, l.find(']') - 1));
            lines.emplace("[" + section + "]", n);
            continue;
        }
        const auto eq = l.find('=');
        if (eq != std::string::npos) {
            const std::string key = trim(l.substr(0, eq));
            lines.emplace(section.empty() ? key : section + "." + key, n);
        }
    }
    return lines;
}

class Reader {
   public:
    Reader(const pt::ptree& root, std::map<std::string, int> lines) : root_(root), lines_(std::move(lines)) {}

    int line(const std::string& path) const {
        auto it = lines_.find(path);
        if (it != lines_.end()) {
            return it->second;
        }
        const auto dot = path.find('.');
        if (dot != std::string::npos) {
            it = lines_.find("[" + path.substr(0, dot) + "]");
            if (it != lines_.end()) {
                return it->second;
            }
        }
        return 0;
    }

    bool has(const std::string& path) const { return root_.get_optional<std::string>(path).has_value(); }

    std::string text(const std::string& path) const {
        auto v = root_.get_optional<std::string>(path);
        if (!v) {
            throw ConfigError(line(path), "missing required key '" + path + "'");
        }
        return trim(*v);
    }

    std::string text(const std::string& path, const std::string& fallback) const {
        return has(path) ? text(path) : fallback;
    }

    double real(const std::string& path) const { return parse_real(text(path), path); }

    double real(const std::string& path, double fallback) const { return has(path) ? real(path) : fallback; }

    long long integer(const std::string& path, long long fallback) const {
        if (!has(path)) {
            return fallback;
        }
        const std::string s = text(path);
        long long v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ConfigError(line(path), "'" + path + "' must be an integer, got '" + s + "'");
        }
        return v;
    }

    bool flag(const std::string& path, bool fallback) const {
        if (!has(path)) {
            return fallback;
        }
        const std::string s = text(path);
        if (s == "true" || s == "yes" || s == "1" || s == "on") {
            return true;
        }
        if (s == "false" || s == "no" || s == "0" || s == "off") {
            return false;
        }
        throw ConfigError(line(path), "'" + path + "' must be true or false, got '" + s + "'");
    }

    std::vector<double> reals(const std::string& path) const {
        std::vector<double> out;
        for (const auto& item : split(text(path), ',')) {
            out.push_back(parse_real(item, path));
        }
        return out;
    }

    double parse_real(const std::string& s, const std::string& path) const {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw ConfigError(line(path), "'" + path + "' must be a finite number, got '" + s + "'");
        }
        return v;
    }

    /// Rows separated by ';', entries by whitespace, each `re` or `(re,im)`.
    ComplexMatrix matrix(const std::string& path) const {
        std::vector<std::vector<cplx>> rows;
        for (const auto& r : split(text(path), ';')) {
            std::istringstream in(r);
            std::vector<cplx> row;
            std::string tok;
            while (in >> tok) {
                std::istringstream t(tok);
                cplx c;
                if (!(t >> c) || t.peek() != EOF) {
                    throw ConfigError(line(path), "'" + path + "': bad matrix entry '" + tok + "'");
                }
                row.push_back(c);
            }
            rows.push_back(std::move(row));
        }
        const size_t n = rows.size();
        ComplexMatrix m(n, n);
        for (size_t i = 0; i < n; ++i) {
            if (rows[i].size() != n) {
                throw ConfigError(line(path), "'" + path + "' must be a square matrix");
            }
            for (size_t j = 0; j < n; ++j) {
                m(i, j) = rows[i][j];
            }
        }
        return m;
    }

    HermitianOperator hermitian(const std::string& path) const {
        try {
            return HermitianOperator(matrix(path));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(line(path), "'" + path + "': " + e.what());
        }
    }

    /// Keys of a section (or the root when `section` is empty) must be known.
    void check_keys(const std::string& section, const std::set<std::string>& allowed) const {
        const pt::ptree* node = &root_;
        if (!section.empty()) {
            auto child = root_.get_child_optional(section);
            if (!child) {
                return;
            }
            node = &*child;
        }
        for (const auto& [key, value] : *node) {
            if (section.empty() && !value.empty()) {
                if (!allowed.count("[" + key + "]")) {
                    throw ConfigError(line("[" + key + "]") ? line("[" + key + "]") : 0, "unknown section [" + key + "]");
                }
                continue;
            }
            if (!allowed.count(key)) {
                const std::string path = section.empty() ? key : section + "." + key;
                throw ConfigError(line(path), "unknown key '" + path + "'");
            }
        }
    }

   private:
    const pt::ptree& root_;
    std::map<std::string, int> lines_;
};

Scenario parse_scenario(const Reader& r) {
    const std::string s = r.text("scenario");
    if (s == "bell-assemblage") {
        return Scenario::bell_assemblage;
    }
    if (s == "prepare-measure") {
        return Scenario::prepare_measure;
    }
    if (s == "steering") {
        return Scenario::steering;
    }
    throw ConfigError(r.line("scenario"), "unknown scenario '" + s + "' (bell-assemblage, prepare-measure, steering)");
}

void read_reference(const Reader& r, RunConfig& cfg) {
    const std::string name = r.text("reference", "");
    const int at = r.line("reference");
    auto guard = [&](auto&& fn) {
        try {
            fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(at, std::string("invalid reference: ") + e.what());
        }
    };
    switch (cfg.scenario) {
        case Scenario::bell_assemblage:
            if (name.empty() || name == "bb84") {
                cfg.assemblage_ref = reference_bb84();
            } else if (name == "inline") {
                ReferenceAssemblage ref;
                ref.n_a = static_cast<int>(r.integer("inline.n_a", 2));
                for (int k = 0; r.has("inline.m" + std::to_string(k)); ++k) {
                    ref.sigma.push_back(r.hermitian("inline.m" + std::to_string(k)));
                }
                ref.n_x = ref.n_a > 0 ? static_cast<int>(ref.sigma.size()) / ref.n_a : 0;
                cfg.assemblage_ref = ref;
                guard([&] { cfg.assemblage_ref->validate(); });
            } else {
                throw ConfigError(at, "unknown assemblage reference '" + name + "' (bb84, inline)");
            }
            break;
        case Scenario::prepare_measure:
            if (name.empty() || name == "rac2") {
                cfg.ensemble_ref = reference_rac2();
            } else if (name == "inline") {
                ReferenceEnsemble ref;
                for (int k = 0; r.has("inline.s" + std::to_string(k)); ++k) {
                    ref.rho.push_back(r.hermitian("inline.s" + std::to_string(k)));
                }
                cfg.ensemble_ref = ref;
                guard([&] { cfg.ensemble_ref->validate(); });
            } else {
                throw ConfigError(at, "unknown ensemble reference '" + name + "' (rac2, inline)");
            }
            break;
        case Scenario::steering:
            if (name.empty() || name == "phi_plus") {
                cfg.bipartite_ref = reference_phi_plus();
            } else if (name == "inline") {
                ReferenceBipartiteState ref;
                for (double d : r.reals("inline.dims")) {
                    ref.dims.dims.push_back(static_cast<int>(d));
                }
                ref.rho = r.hermitian("inline.state");
                cfg.bipartite_ref = ref;
                guard([&] { cfg.bipartite_ref->validate(); });
            } else {
                throw ConfigError(at, "unknown bipartite reference '" + name + "' (phi_plus, inline)");
            }
            break;
    }
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool same_value(double a, double b, double tol) {
    if (std::isnan(a) || std::isnan(b)) {
        return std::isnan(a) && std::isnan(b);
    }
    return std::abs(a - b) <= tol;
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::bell_assemblage:
            return "bell-assemblage";
        case Scenario::prepare_measure:
            return "prepare-measure";
        case Scenario::steering:
            return "steering";
    }
    return "?";
}

std::string default_functional(Scenario s) {
    switch (s) {
        case Scenario::bell_assemblage:
            return "chsh";
        case Scenario::prepare_measure:
            return "rac";
        case Scenario::steering:
            return "steering";
    }
    return "?";
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    pt::ptree root;
    try {
        std::istringstream s(text);
        pt::read_ini(s, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(static_cast<int>(e.line()), e.message());
    }
    const Reader r(root, index_lines(text));
    r.check_keys("", {"schema", "scenario", "reference", "level", "projective", "dimension", "seed", "[data]",
                      "[solver]", "[output]", "[inline]"});
    r.check_keys("data", {"functional", "from", "to", "steps", "values", "marginals", "table"});
    r.check_keys("solver", {"tol", "max_iter", "backend"});
    r.check_keys("output", {"csv", "dump_sdpa"});

    if (r.integer("schema", 0) != 1) {
        throw ConfigError(r.line("schema"), "expected 'schema = 1'");
    }
    RunConfig cfg;
    cfg.scenario = parse_scenario(r);
    cfg.level = static_cast<int>(r.integer("level", 1));
    if (cfg.level < 1) {
        throw ConfigError(r.line("level"), "level must be >= 1");
    }
    cfg.projective = r.flag("projective", true);
    cfg.seed = static_cast<uint64_t>(r.integer("seed", 1));
    if (r.has("dimension")) {
        if (cfg.scenario != Scenario::prepare_measure) {
            throw ConfigError(r.line("dimension"), "dimension applies only to prepare-measure");
        }
        cfg.dimension = static_cast<int>(r.integer("dimension", 2));
        if (*cfg.dimension < 2) {
            throw ConfigError(r.line("dimension"), "dimension must be >= 2");
        }
    } else if (cfg.scenario == Scenario::prepare_measure) {
        throw ConfigError(0, "missing required key 'dimension' for prepare-measure");
    }
    read_reference(r, cfg);

    const bool has_table = r.has("data.table");
    const bool has_functional = r.has("data.functional");
    if (has_table == has_functional) {
        throw ConfigError(r.line("[data]"), "[data] needs exactly one of 'functional' or 'table'");
    }
    if (has_table) {
        for (const char* k : {"from", "to", "steps", "values", "marginals"}) {
            if (r.has(std::string("data.") + k)) {
                throw ConfigError(r.line(std::string("data.") + k), std::string("'data.") + k + "' needs a functional");
            }
        }
        std::filesystem::path p = r.text("data.table");
        if (p.is_relative()) {
            p = base_dir / p;
        }
        std::ifstream tf(p);
        if (!tf) {
            throw ConfigError(r.line("data.table"), "cannot open table file " + p.string());
        }
        try {
            cfg.table = read_table(tf, cfg.scenario);
        } catch (const std::exception& e) {
            throw ConfigError(r.line("data.table"), p.string() + ": " + e.what());
        }
    } else {
        cfg.functional = r.text("data.functional");
        if (cfg.functional != default_functional(cfg.scenario)) {
            throw ConfigError(r.line("data.functional"), "functional '" + cfg.functional + "' does not fit " +
                                                             to_string(cfg.scenario) + " (expected " +
                                                             default_functional(cfg.scenario) + ")");
        }
        if (r.has("data.values")) {
            if (r.has("data.from") || r.has("data.to") || r.has("data.steps")) {
                throw ConfigError(r.line("data.values"), "give either 'values' or 'from'/'to'/'steps'");
            }
            cfg.sweep = r.reals("data.values");
        } else {
            const double from = r.real("data.from");
            const double to = r.real("data.to");
            const long long steps = r.integer("data.steps", 1);
            if (from > to) {
                throw ConfigError(r.line("data.to"), "sweep needs from <= to");
            }
            if (steps < 1) {
                throw ConfigError(r.line("data.steps"), "sweep needs steps >= 1");
            }
            for (long long k = 0; k < steps; ++k) {
                cfg.sweep.push_back(steps == 1 ? from : from + (to - from) * static_cast<double>(k) / (steps - 1));
            }
        }
        if (r.has("data.marginals")) {
            if (cfg.scenario != Scenario::bell_assemblage) {
                throw ConfigError(r.line("data.marginals"), "marginals apply only to bell-assemblage");
            }
            cfg.marginals = r.reals("data.marginals");
        }
    }

    cfg.solver.tol = r.real("solver.tol", cfg.solver.tol);
    cfg.solver.max_iter = static_cast<int>(r.integer("solver.max_iter", cfg.solver.max_iter));
    cfg.solver.solver = r.text("solver.backend", cfg.solver.solver);
    if (!(cfg.solver.tol > 0.0) || cfg.solver.max_iter < 1) {
        throw ConfigError(r.line("[solver]"), "solver needs tol > 0 and max_iter >= 1");
    }

    cfg.csv = r.text("output.csv");
    if (cfg.csv.is_relative()) {
        cfg.csv = base_dir / cfg.csv;
    }
    if (r.has("output.dump_sdpa")) {
        std::filesystem::path d = r.text("output.dump_sdpa");
        cfg.dump_sdpa = d.is_relative() ? base_dir / d : d;
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(0, "cannot open config " + path.string());
    }
    return parse_config(in, path.parent_path());
}

ObservedData read_table(std::istream& in, Scenario s) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("empty table file");
    }
    const std::vector<std::string> header = split(line, ',');
    std::vector<std::string> expect;
    switch (s) {
        case Scenario::bell_assemblage:
            expect = {"x", "y", "a", "b", "p"};
            break;
        case Scenario::prepare_measure:
            expect = {"x", "y", "b", "p"};
            break;
        case Scenario::steering:
            expect = {"x", "a", "row", "col", "re", "im"};
            break;
    }
    if (header != expect) {
        std::string want;
        for (const auto& e : expect) {
            want += (want.empty() ? "" : ",") + e;
        }
        throw std::invalid_argument("table header must be '" + want + "'");
    }
    const size_t n_idx = expect.size() - (s == Scenario::steering ? 2 : 1);
    std::vector<std::vector<int>> idx;
    std::vector<cplx> val;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != expect.size()) {
            throw std::invalid_argument("row " + std::to_string(row_no) + " has the wrong number of columns");
        }
        std::vector<int> ix;
        for (size_t k = 0; k < n_idx; ++k) {
            int v = -1;
            auto [p, ec] = std::from_chars(cells[k].data(), cells[k].data() + cells[k].size(), v);
            if (ec != std::errc() || p != cells[k].data() + cells[k].size() || v < 0) {
                throw std::invalid_argument("row " + std::to_string(row_no) + ": bad index '" + cells[k] + "'");
            }
            ix.push_back(v);
        }
        double re = 0.0, im = 0.0;
        for (size_t k = n_idx; k < cells.size(); ++k) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(cells[k].data(), cells[k].data() + cells[k].size(), v);
            if (ec != std::errc() || p != cells[k].data() + cells[k].size()) {
                throw std::invalid_argument("row " + std::to_string(row_no) + ": bad value '" + cells[k] + "'");
            }
            (k == n_idx ? re : im) = v;
        }
        idx.push_back(std::move(ix));
        val.emplace_back(re, im);
    }
    if (idx.empty()) {
        throw std::invalid_argument("table has no rows");
    }
    std::vector<int> extent(n_idx, 0);
    for (const auto& ix : idx) {
        for (size_t k = 0; k < n_idx; ++k) {
            extent[k] = std::max(extent[k], ix[k] + 1);
        }
    }
    std::set<std::vector<int>> seen;
    for (const auto& ix : idx) {
        if (!seen.insert(ix).second) {
            throw std::invalid_argument("duplicate table entry");
        }
    }
    switch (s) {
        case Scenario::bell_assemblage: {
            BellTable t;
            t.n_x = extent[0];
            t.n_y = extent[1];
            t.n_a = extent[2];
            t.n_b = extent[3];
            t.p.assign(static_cast<size_t>(t.n_x * t.n_a * t.n_y * t.n_b), 0.0);
            for (size_t k = 0; k < idx.size(); ++k) {
                t.at(idx[k][2], idx[k][3], idx[k][0], idx[k][1]) = val[k].real();
            }
            t.validate();
            return t;
        }
        case Scenario::prepare_measure: {
            PmTable t;
            t.n_x = extent[0];
            t.n_y = extent[1];
            t.n_b = extent[2];
            t.p.assign(static_cast<size_t>(t.n_x * t.n_y * t.n_b), 0.0);
            for (size_t k = 0; k < idx.size(); ++k) {
                t.at(idx[k][2], idx[k][0], idx[k][1]) = val[k].real();
            }
            t.validate();
            return t;
        }
        case Scenario::steering: {
            const int d = std::max(extent[2], extent[3]);
            AssemblageTomogram t;
            t.n_x = extent[0];
            t.n_a = extent[1];
            std::vector<ComplexMatrix> mats(static_cast<size_t>(t.n_x * t.n_a), ComplexMatrix::Zero(d, d));
            for (size_t k = 0; k < idx.size(); ++k) {
                mats[static_cast<size_t>(idx[k][0] * t.n_a + idx[k][1])](idx[k][2], idx[k][3]) = val[k];
            }
            for (const auto& m : mats) {
                t.sigma.push_back(HermitianOperator(m));
            }
            t.validate();
            return t;
        }
    }
    throw std::logic_error("unreachable");
}

void write_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << fmt17(r.functional_value) << ',' << fmt17(r.bound) << ',' << r.status << ',' << fmt17(r.solve_seconds)
            << ',' << fmt17(r.psd_residual) << ',' << r.level << '\n';
    }
}

std::vector<CurveRow> read_csv(std::istream& in) {
    std::vector<CurveRow> rows;
    std::string line;
    if (!std::getline(in, line)) {
        return rows;
    }
    if (trim(line) != kCsvHeader) {
        throw std::invalid_argument("unexpected CSV header '" + trim(line) + "'");
    }
    auto num = [](const std::string& s) {
        if (s == "nan" || s == "-nan") {
            return std::nan("");
        }
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument("bad number '" + s + "'");
        }
        return v;
    };
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto c = split(line, ',');
        if (c.size() != 6) {
            throw std::invalid_argument("CSV row needs 6 columns: '" + line + "'");
        }
        rows.push_back({num(c[0]), num(c[1]), c[2], num(c[3]), num(c[4]), std::stoi(c[5])});
    }
    return rows;
}

namespace {

struct PointBuilder {
    const RunConfig& cfg;
    std::vector<MomentSpan> spans;  ///< prepare-and-measure only

    PmOptions pm_options() const {
        PmOptions o;
        o.level = cfg.level;
        o.rules.projective = cfg.projective;
        o.dimension = cfg.dimension.value_or(2);
        o.seed = cfg.seed;
        return o;
    }

    BuildOptions options() const {
        BuildOptions o;
        o.level = cfg.level;
        o.rules.projective = cfg.projective;
        return o;
    }

    std::vector<SdpProblem> operator()(const ObservedData& data) const {
        switch (cfg.scenario) {
            case Scenario::bell_assemblage:
                return {build_assemblage_bound(*cfg.assemblage_ref, data, options())};
            case Scenario::prepare_measure:
                return build_pm_family(*cfg.ensemble_ref, data, pm_options(), spans);
            case Scenario::steering:
                return {build_steering_bound(*cfg.bipartite_ref, data, options())};
        }
        throw std::logic_error("unreachable");
    }
};

ObservedData point_data(const RunConfig& cfg, double v) {
    if (cfg.table) {
        return *cfg.table;
    }
    return FunctionalData{cfg.functional, v, cfg.marginals};
}

}  // namespace

std::vector<SdpProblem> build_point(const RunConfig& cfg, const ObservedData& data) {
    return PointBuilder{cfg, {}}(data);
}

int run(const RunConfig& cfg, int workers, std::ostream& log) {
    PointBuilder builder{cfg, {}};
    std::vector<double> sweep = cfg.sweep;
    if (cfg.table) {
        double v = std::nan("");
        try {
            v = evaluate_functional(default_functional(cfg.scenario), *cfg.table);
        } catch (const std::exception&) {
        }
        sweep = {v};
    }
    if (cfg.scenario == Scenario::prepare_measure) {
        const ReferenceEnsemble& ref = *cfg.ensemble_ref;
        int n_y = 0;
        int n_b = 2;
        if (cfg.table) {
            const auto& t = std::get<PmTable>(*cfg.table);
            n_y = t.n_y;
            n_b = t.n_b;
        } else {
            while ((1 << n_y) < ref.n_x()) {
                ++n_y;
            }
        }
        try {
            builder.spans = pm_spans(ref.n_x(), n_y, n_b, builder.pm_options());
        } catch (const std::exception& e) {
            throw ConfigError(0, std::string("cannot sample the dimension span: ") + e.what());
        }
    }

    std::mutex warn_mu;
    std::vector<std::string> warnings;
    if (cfg.dump_sdpa) {
        std::filesystem::create_directories(*cfg.dump_sdpa);
    }
    auto index_of = [&](double v) {
        for (size_t k = 0; k < sweep.size(); ++k) {
            if (sweep[k] == v || (std::isnan(v) && std::isnan(sweep[k]))) {
                return k;
            }
        }
        return size_t{0};
    };
    auto build = [&](double v) {
        std::vector<SdpProblem> family = builder(point_data(cfg, v));
        if (cfg.dump_sdpa) {
            const size_t k = index_of(v);
            for (size_t j = 0; j < family.size(); ++j) {
                std::string name = "point_" + std::to_string(k);
                if (family.size() > 1) {
                    name += "_" + std::to_string(j);
                }
                try {
                    export_sdpa(family[j], *cfg.dump_sdpa / (name + ".dat-s"));
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(warn_mu);
                    warnings.push_back(name + ": not exported: " + e.what());
                }
            }
        }
        return family;
    };
    const auto points = bound_curve_family(build, sweep, cfg.solver, workers);

    std::vector<CurveRow> rows;
    bool ok = true;
    for (const auto& p : points) {
        CurveRow row;
        row.functional_value = p.value;
        row.bound = p.bound;
        row.status = to_string(p.report.status);
        row.solve_seconds = p.report.solve_seconds;
        row.psd_residual = p.psd_residual;
        row.level = cfg.level;
        if (p.report.converged() && !p.verified) {
            row.status = to_string(SolveStatus::numerical_failure);
            log << "value " << fmt17(p.value) << ": solution failed verification\n";
        }
        if (!p.report.converged()) {
            log << "value " << fmt17(p.value) << ": " << row.status
                << (p.report.message.empty() ? "" : " (" + p.report.message + ")") << '\n';
        }
        ok = ok && p.report.converged() && p.verified;
        rows.push_back(row);
    }
    for (const auto& w : warnings) {
        log << w << '\n';
    }
    if (cfg.csv.has_parent_path()) {
        std::filesystem::create_directories(cfg.csv.parent_path());
    }
    std::ofstream out(cfg.csv);
    if (!out) {
        throw std::runtime_error("cannot write " + cfg.csv.string());
    }
    write_csv(out, rows);
    log << "wrote " << rows.size() << " rows to " << cfg.csv.string() << '\n';
    return ok ? 0 : 2;
}

int compare(std::istream& csv, std::istream& expected, double tol, std::ostream& log) {
    std::vector<CurveRow> got, want;
    try {
        got = read_csv(csv);
        want = read_csv(expected);
    } catch (const std::exception& e) {
        log << "cannot read CSV: " << e.what() << '\n';
        return 1;
    }
    if (got.size() != want.size()) {
        log << "grid mismatch: " << got.size() << " rows vs " << want.size() << " expected\n";
        return 1;
    }
    for (size_t k = 0; k < got.size(); ++k) {
        if (!same_value(got[k].functional_value, want[k].functional_value, 1e-9)) {
            log << "grid mismatch at row " << k + 1 << ": " << fmt17(got[k].functional_value) << " vs "
                << fmt17(want[k].functional_value) << '\n';
            return 1;
        }
    }
    int code = 0;
    for (size_t k = 0; k < got.size(); ++k) {
        if (!same_value(got[k].bound, want[k].bound, tol)) {
            log << "row " << k + 1 << " (value " << fmt17(got[k].functional_value) << "): bound " << fmt17(got[k].bound)
                << " vs expected " << fmt17(want[k].bound) << '\n';
            code = 2;
        }
    }
    return code;
}

int workers_from_env() {
    const char* s = std::getenv("STBOUND_WORKERS");
    if (!s || !*s) {
        return 1;
    }
    int v = 0;
    auto [p, ec] = std::from_chars(s, s + std::strlen(s), v);
    if (ec != std::errc() || *p != '\0' || v < 1) {
        std::cerr << "ignoring STBOUND_WORKERS='" << s << "'; using 1 worker\n";
        return 1;
    }
    return v;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Self-testing robustness bounds from moment-matrix relaxations"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Solve the sweep described by a config file");
    run_cmd->add_option("config", config_path, "INI config (schema 1)")->required();

    std::string csv_path, expected_path;
    double tol = 1e-6;
    auto* cmp_cmd = app.add_subcommand("compare", "Compare a bound curve against an expected one");
    cmp_cmd->add_option("csv", csv_path, "CSV produced by run")->required();
    cmp_cmd->add_option("expected", expected_path, "expected CSV")->required();
    cmp_cmd->add_option("--tol", tol, "absolute tolerance on bounds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (*run_cmd) {
        try {
            const RunConfig cfg = load_config(config_path);
            return run(cfg, workers_from_env(), std::cerr);
        } catch (const ConfigError& e) {
            std::cerr << config_path << ": " << e.what() << '\n';
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    std::ifstream a(csv_path), b(expected_path);
    if (!a || !b) {
        std::cerr << "cannot open " << (!a ? csv_path : expected_path) << '\n';
        return 1;
    }
    return compare(a, b, tol, std::cerr);
}

}  // namespace stbound
