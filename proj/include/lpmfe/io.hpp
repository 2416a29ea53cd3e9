#pragma once

#include "lpmfe/equilibrium.hpp"
#include "lpmfe/error.hpp"
#include "lpmfe/flow.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/lp.hpp"
#include "lpmfe/simulate.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lpmfe {

/// Shortest-safe decimal form: 17 significant digits round-trip every double.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw InvalidArgument(where + ": bad number '" + s + "'");
    return v;
}

inline std::size_t parse_index(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) throw InvalidArgument(where + ": bad index '" + s + "'");
    return static_cast<std::size_t>(v);
}

/// Rows of a CSV with the expected header; every row must have the header's width.
inline std::vector<std::vector<std::string>> read_rows(std::istream& is, const std::string& header,
                                                       const std::string& what) {
    std::string line;
    if (!std::getline(is, line) || line != header)
        throw InvalidArgument(what + ": expected header '" + header + "'");
    const auto width = split_csv(header).size();
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto r = split_csv(line);
        if (r.size() != width) throw InvalidArgument(what + ": row " + std::to_string(rows.size() + 1) + " has " +
                                                     std::to_string(r.size()) + " fields");
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw InvalidArgument("missing artifact " + p.string());
    return is;
}

} // namespace detail

inline constexpr const char* kFlowHeader = "n,t,i,x,rho";
inline constexpr const char* kOccupationHeader = "n,i,k,t,x,a,m";
inline constexpr const char* kBoundaryHeader = "n,face,t,x,lambda_b";
inline constexpr const char* kTerminalHeader = "i,x,nu";
inline constexpr const char* kTraceHeader = "iter,residual,exploitability,cost,flow_gap";

inline void write_flow_csv(std::ostream& os, const MeanFieldFlow& f, const DiscreteGrid& g) {
    f.check(g, 1e-6);
    os << kFlowHeader << "\n";
    for (std::size_t n = 0; n < f.rho.size(); ++n)
        for (std::size_t i = 0; i < f.rho[n].size(); ++i)
            os << n << "," << fmt17(g.t_nodes[n]) << "," << i << "," << fmt17(g.x_nodes[i]) << "," << fmt17(f.rho[n][i])
               << "\n";
}

/// Reads a flow written for `g`; any shape mismatch is an InvalidArgument.
inline MeanFieldFlow read_flow_csv(std::istream& is, const DiscreteGrid& g) {
    const auto rows = detail::read_rows(is, kFlowHeader, "flow csv");
    if (rows.size() != g.num_times() * g.num_states())
        throw InvalidArgument("flow csv has " + std::to_string(rows.size()) + " rows; grid needs " +
                              std::to_string(g.num_times() * g.num_states()));
    MeanFieldFlow f;
    f.rho.assign(g.num_times(), std::vector<double>(g.num_states(), 0.0));
    for (const auto& r : rows) {
        const auto n = detail::parse_index(r[0], "flow csv n"), i = detail::parse_index(r[2], "flow csv i");
        if (n >= g.num_times() || i >= g.num_states()) throw InvalidArgument("flow csv index out of the grid");
        const double x = detail::parse_double(r[3], "flow csv x");
        if (std::abs(x - g.x_nodes[i]) > 1e-12 * std::max(1.0, std::abs(x)))
            throw InvalidArgument("flow csv node x does not match the grid");
        f.rho[n][i] = detail::parse_double(r[4], "flow csv rho");
    }
    return f;
}

inline void write_occupation_csv(std::ostream& os, const OccupationTriple& t, const DiscreteGrid& g) {
    os << kOccupationHeader << "\n";
    for (std::size_t n = 0; n < t.N; ++n)
        for (std::size_t i = 0; i < t.S; ++i)
            for (std::size_t k = 0; k < t.A; ++k)
                os << n << "," << i << "," << k << "," << fmt17(g.t_nodes[n]) << "," << fmt17(g.x_nodes[i]) << ","
                   << fmt17(g.a_nodes[k]) << "," << fmt17(t.occ(n, i, k)) << "\n";
}

inline void write_boundary_csv(std::ostream& os, const std::vector<double>& lambda_b, std::size_t F,
                               const DiscreteGrid& g) {
    os << kBoundaryHeader << "\n";
    for (std::size_t n = 0; n < g.N; ++n)
        for (std::size_t f = 0; f < F; ++f)
            os << n << "," << f << "," << fmt17(g.t_nodes[n]) << "," << fmt17(g.x_nodes[g.boundary_index[f]]) << ","
               << fmt17(lambda_b[n * F + f]) << "\n";
}

inline void write_terminal_csv(std::ostream& os, const std::vector<double>& nu, const DiscreteGrid& g) {
    os << kTerminalHeader << "\n";
    for (std::size_t i = 0; i < nu.size(); ++i) os << i << "," << fmt17(g.x_nodes[i]) << "," << fmt17(nu[i]) << "\n";
}

inline void write_triple(const std::filesystem::path& dir, const OccupationTriple& t, const DiscreteGrid& g,
                         const std::string& prefix = "") {
    auto m = detail::open_out(dir / (prefix + "occupation.csv"));
    write_occupation_csv(m, t, g);
    auto b = detail::open_out(dir / (prefix + "boundary.csv"));
    write_boundary_csv(b, t.lambda_b, t.F, g);
    auto nu = detail::open_out(dir / (prefix + "terminal.csv"));
    write_terminal_csv(nu, t.nu, g);
}

inline OccupationTriple read_triple(const std::filesystem::path& dir, const DiscreteGrid& g,
                                    const std::string& prefix = "") {
    OccupationTriple t = OccupationTriple::zeros(g);
    {
        auto is = detail::open_in(dir / (prefix + "occupation.csv"));
        const auto rows = detail::read_rows(is, kOccupationHeader, "occupation csv");
        if (rows.size() != t.m.size())
            throw InvalidArgument("occupation csv has " + std::to_string(rows.size()) + " rows; grid needs " +
                                  std::to_string(t.m.size()));
        for (const auto& r : rows) {
            const auto n = detail::parse_index(r[0], "occupation n"), i = detail::parse_index(r[1], "occupation i"),
                       k = detail::parse_index(r[2], "occupation k");
            if (n >= t.N || i >= t.S || k >= t.A) throw InvalidArgument("occupation csv index out of the grid");
            t.occ(n, i, k) = detail::parse_double(r[6], "occupation m");
        }
    }
    {
        auto is = detail::open_in(dir / (prefix + "boundary.csv"));
        const auto rows = detail::read_rows(is, kBoundaryHeader, "boundary csv");
        if (rows.size() != t.lambda_b.size()) throw InvalidArgument("boundary csv does not match the grid");
        for (const auto& r : rows) {
            const auto n = detail::parse_index(r[0], "boundary n"), f = detail::parse_index(r[1], "boundary face");
            if (n >= t.N || f >= t.F) throw InvalidArgument("boundary csv index out of the grid");
            t.boundary(n, f) = detail::parse_double(r[4], "boundary lambda_b");
        }
    }
    {
        auto is = detail::open_in(dir / (prefix + "terminal.csv"));
        const auto rows = detail::read_rows(is, kTerminalHeader, "terminal csv");
        if (rows.size() != t.S) throw InvalidArgument("terminal csv does not match the grid");
        for (const auto& r : rows) {
            const auto i = detail::parse_index(r[0], "terminal i");
            if (i >= t.S) throw InvalidArgument("terminal csv index out of the grid");
            t.nu[i] = detail::parse_double(r[2], "terminal nu");
        }
    }
    return t;
}

inline void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
    os << kTraceHeader << "\n";
    for (const auto& r : trace)
        os << r.iter << "," << fmt17(r.residual) << "," << fmt17(r.exploitability) << "," << fmt17(r.cost) << ","
           << fmt17(r.flow_gap) << "\n";
}

inline std::vector<IterationRecord> read_trace_csv(std::istream& is) {
    std::vector<IterationRecord> out;
    for (const auto& r : detail::read_rows(is, kTraceHeader, "trace csv"))
        out.push_back({detail::parse_index(r[0], "trace iter"), detail::parse_double(r[1], "trace residual"),
                       detail::parse_double(r[2], "trace exploitability"), detail::parse_double(r[3], "trace cost"),
                       detail::parse_double(r[4], "trace flow_gap")});
    return out;
}

inline void write_simulation(const std::filesystem::path& dir, const SimulationEstimate& est, const DiscreteGrid& g) {
    {
        auto os = detail::open_out(dir / "sim_occupation.csv");
        OccupationTriple t = OccupationTriple::zeros(g);
        t.m = est.m;
        write_occupation_csv(os, t, g);
    }
    {
        auto os = detail::open_out(dir / "sim_boundary.csv");
        write_boundary_csv(os, est.lambda_b, est.F, g);
    }
    auto os = detail::open_out(dir / "sim_terminal.csv");
    os << "i,x,nu,se\n";
    for (std::size_t i = 0; i < est.nu.size(); ++i)
        os << i << "," << fmt17(g.x_nodes[i]) << "," << fmt17(est.nu[i]) << "," << fmt17(est.nu_se[i]) << "\n";
}

inline constexpr const char* kComparisonHeader =
    "lp_cost,sim_cost,sim_cost_se,cost_gap,eps_disc,cost_ratio,w1,max_tv,lp_boundary,sim_boundary";

inline void write_comparison_csv(std::ostream& os, const ComparisonReport& r) {
    os << kComparisonHeader << "\n";
    os << fmt17(r.lp_cost) << "," << fmt17(r.sim_cost) << "," << fmt17(r.sim_cost_se) << "," << fmt17(r.cost_gap) << ","
       << fmt17(r.eps_disc) << "," << fmt17(r.cost_ratio) << "," << fmt17(r.w1) << "," << fmt17(r.max_tv) << ","
       << fmt17(r.lp_boundary) << "," << fmt17(r.sim_boundary) << "\n";
}

} // namespace lpmfe
