#pragma once

#include "lpmfe/error.hpp"
#include "lpmfe/flow.hpp"
#include "lpmfe/generator.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/model.hpp"
#include "lpmfe/simplex.hpp"
#include "lpmfe/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lpmfe {

/// Discrete occupation triple (nu, m, lambda_b).
///
/// m[n, i, k] is the occupation mass of cell n at (x_i, a_k) and carries units
/// of time; a feasible triple has sum_{i,k} m[n, i, k] = dt for every cell.
/// lambda_b[n, f] is the boundary (local time) mass of face f during cell n.
struct OccupationTriple {
    std::size_t N = 0, S = 0, A = 0, F = 0;
    std::vector<double> nu;
    std::vector<double> m;
    std::vector<double> lambda_b;

    static OccupationTriple zeros(const DiscreteGrid& g) {
        OccupationTriple t;
        t.N = g.N;
        t.S = g.num_states();
        t.A = g.num_actions();
        t.F = g.num_faces();
        t.nu.assign(t.S, 0.0);
        t.m.assign(t.N * t.S * t.A, 0.0);
        t.lambda_b.assign(t.N * t.F, 0.0);
        return t;
    }

    [[nodiscard]] double& occ(std::size_t n, std::size_t i, std::size_t k) { return m[(n * S + i) * A + k]; }
    [[nodiscard]] double occ(std::size_t n, std::size_t i, std::size_t k) const { return m[(n * S + i) * A + k]; }
    [[nodiscard]] double& boundary(std::size_t n, std::size_t f) { return lambda_b[n * F + f]; }
    [[nodiscard]] double boundary(std::size_t n, std::size_t f) const { return lambda_b[n * F + f]; }

    [[nodiscard]] double state_mass(std::size_t n, std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = 0; k < A; ++k) s += occ(n, i, k);
        return s;
    }
    [[nodiscard]] double boundary_total() const {
        double s = 0.0;
        for (double v : lambda_b) s += v;
        return s;
    }

    [[nodiscard]] bool matches(const DiscreteGrid& g) const {
        return N == g.N && S == g.num_states() && A == g.num_actions() && F == g.num_faces() && nu.size() == S &&
               m.size() == N * S * A && lambda_b.size() == N * F;
    }
};

/// Column and row numbering of the occupation LP.
///
/// Columns: m (n, i, k) | rho[1..N] (n, i) | lambda_b (n, face) | nu (i).
/// Rows: forward (n, i) | coupling (n, i) | local time (n, face) | terminal (i).
struct LpLayout {
    std::size_t N = 0, S = 0, A = 0, F = 0;

    explicit LpLayout(const DiscreteGrid& g) : N(g.N), S(g.num_states()), A(g.num_actions()), F(g.num_faces()) {}
    LpLayout() = default;

    [[nodiscard]] std::size_t m(std::size_t n, std::size_t i, std::size_t k) const { return (n * S + i) * A + k; }
    [[nodiscard]] std::size_t rho(std::size_t n, std::size_t i) const { return N * S * A + (n - 1) * S + i; }
    [[nodiscard]] std::size_t lambda(std::size_t n, std::size_t f) const { return N * S * A + N * S + n * F + f; }
    [[nodiscard]] std::size_t nu(std::size_t i) const { return N * S * A + N * S + N * F + i; }
    [[nodiscard]] std::size_t num_vars() const { return N * S * A + N * S + N * F + S; }

    [[nodiscard]] std::size_t forward_row(std::size_t n, std::size_t i) const { return n * S + i; }
    [[nodiscard]] std::size_t coupling_row(std::size_t n, std::size_t i) const { return N * S + n * S + i; }
    [[nodiscard]] std::size_t local_time_row(std::size_t n, std::size_t f) const { return 2 * N * S + n * F + f; }
    [[nodiscard]] std::size_t terminal_row(std::size_t i) const { return 2 * N * S + N * F + i; }
    [[nodiscard]] std::size_t num_rows() const { return 2 * N * S + N * F + S; }

    [[nodiscard]] std::string describe_row(std::size_t r) const {
        std::ostringstream os;
        if (r < N * S)
            os << "forward(n=" << r / S << ", i=" << r % S << ")";
        else if (r < 2 * N * S)
            os << "coupling(n=" << (r - N * S) / S << ", i=" << (r - N * S) % S << ")";
        else if (r < 2 * N * S + N * F)
            os << "local-time(n=" << (r - 2 * N * S) / F << ", face=" << (r - 2 * N * S) % F << ")";
        else
            os << "terminal(i=" << r - 2 * N * S - N * F << ")";
        return os.str();
    }

    [[nodiscard]] std::string describe_var(std::size_t j) const {
        std::ostringstream os;
        if (j < N * S * A)
            os << "m(n=" << j / (S * A) << ",i=" << (j / A) % S << ",k=" << j % A << ")";
        else if (j < N * S * A + N * S)
            os << "rho(n=" << (j - N * S * A) / S + 1 << ",i=" << (j - N * S * A) % S << ")";
        else if (j < N * S * A + N * S + N * F)
            os << "lambda(n=" << (j - N * S * A - N * S) / F << ",f=" << (j - N * S * A - N * S) % F << ")";
        else
            os << "nu(i=" << j - N * S * A - N * S - N * F << ")";
        return os.str();
    }
};

struct AssembleOptions {
    bool override_cfl = false;
};

struct LpProblem {
    LpLayout layout;
    LpStandardForm form;
    std::vector<double> initial; // m0 on the nodes
    double dt = 0.0;
    CflReport cfl;
};

/// Objective weights: f(t_n, x_i, z_f[n], a_k) on m, h(t_n, x_face) on lambda_b, g(x_i, z_g) on nu.
inline std::vector<double> objective_weights(const MfgModel& model, const DiscreteGrid& grid, const FlowStats& stats) {
    const LpLayout L(grid);
    std::vector<double> c(L.num_vars(), 0.0);
    for (std::size_t n = 0; n < L.N; ++n) {
        const double t = grid.t_nodes[n];
        for (std::size_t i = 0; i < L.S; ++i)
            for (std::size_t k = 0; k < L.A; ++k)
                c[L.m(n, i, k)] = detail::checked(model.running_cost(t, grid.x_nodes[i], stats.cost[n], grid.a_nodes[k]),
                                                  "running cost", t, grid.x_nodes[i], grid.a_nodes[k]);
        for (std::size_t f = 0; f < L.F; ++f) {
            const double x = grid.x_nodes[grid.boundary_index[f]];
            c[L.lambda(n, f)] = detail::checked(model.boundary_cost(t, x), "boundary cost", t, x, 0.0);
        }
    }
    for (std::size_t i = 0; i < L.S; ++i)
        c[L.nu(i)] = detail::checked(model.terminal_cost(grid.x_nodes[i], stats.terminal), "terminal cost",
                                     grid.horizon, grid.x_nodes[i], 0.0);
    return c;
}

/// Builds the occupation LP for a frozen flow:
///   rho[n+1] = rho[n] + sum_k G(n,k)^T m[n,.,k]       (forward, rho[0] = m0)
///   sum_k m[n,i,k] = dt rho[n,i]                      (coupling)
///   lambda_b[n,f] = sum_k ell(n,k,f) m[n,face,k]      (local time)
///   nu = rho[N]                                        (terminal)
inline LpProblem assemble_lp(const MfgModel& model, const DiscreteGrid& grid, const GeneratorTensors& gen,
                             const FlowStats& stats, const AssembleOptions& opts = {}) {
    if (gen.N != grid.N || gen.S != grid.num_states() || gen.A != grid.num_actions())
        throw InvalidArgument("assemble_lp: generator tensors do not match the grid");
    if (stats.drift.size() != grid.num_times())
        throw InvalidArgument("assemble_lp: flow statistics do not match the grid");

    LpProblem P;
    P.layout = LpLayout(grid);
    P.dt = grid.dt;
    P.cfl = cfl_report(model, grid, stats);
    if (!P.cfl.stable() && !opts.override_cfl) {
        std::ostringstream os;
        os << "CFL number " << P.cfl.number << " > 1 at (n=" << P.cfl.n << ", i=" << P.cfl.i << ", k=" << P.cfl.k
           << "); refine N or pass the CFL override";
        throw CflError(os.str());
    }
    P.initial = model.initial.on_grid(grid);

    const auto& L = P.layout;
    const double dt = grid.dt;
    std::vector<Eigen::Triplet<double, int>> trip;
    trip.reserve(L.N * L.S * L.A * 8 + L.N * L.S * 3);
    auto put = [&trip](std::size_t r, std::size_t c, double v) {
        trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    };

    for (std::size_t n = 0; n < L.N; ++n) {
        for (std::size_t k = 0; k < L.A; ++k) {
            const auto& G = gen.at(n, k);
            for (Eigen::Index l = 0; l < G.outerSize(); ++l)
                for (SparseRowMatrix::InnerIterator it(G, l); it; ++it)
                    put(L.forward_row(n, static_cast<std::size_t>(it.col())), L.m(n, static_cast<std::size_t>(l), k),
                        -it.value());
            for (std::size_t i = 0; i < L.S; ++i) put(L.coupling_row(n, i), L.m(n, i, k), 1.0);
            for (std::size_t f = 0; f < L.F; ++f) {
                const double ell = gen.local_time(n, k, f);
                if (ell != 0.0) put(L.local_time_row(n, f), L.m(n, grid.boundary_index[f], k), -ell);
            }
        }
        for (std::size_t f = 0; f < L.F; ++f) put(L.local_time_row(n, f), L.lambda(n, f), 1.0);
    }
    for (std::size_t p = 1; p <= L.N; ++p) {
        for (std::size_t i = 0; i < L.S; ++i) {
            const auto col = L.rho(p, i);
            put(L.forward_row(p - 1, i), col, 1.0);
            if (p < L.N) {
                put(L.forward_row(p, i), col, -1.0);
                put(L.coupling_row(p, i), col, -dt);
            } else {
                put(L.terminal_row(i), col, -1.0);
            }
        }
    }
    for (std::size_t i = 0; i < L.S; ++i) put(L.terminal_row(i), L.nu(i), 1.0);

    P.form.A.resize(static_cast<Eigen::Index>(L.num_rows()), static_cast<Eigen::Index>(L.num_vars()));
    P.form.A.setFromTriplets(trip.begin(), trip.end());
    P.form.A.prune(0.0);
    P.form.A.makeCompressed();

    P.form.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.num_rows()));
    for (std::size_t i = 0; i < L.S; ++i) {
        P.form.b[static_cast<Eigen::Index>(L.forward_row(0, i))] = P.initial[i];
        P.form.b[static_cast<Eigen::Index>(L.coupling_row(0, i))] = dt * P.initial[i];
    }
    const auto w = objective_weights(model, grid, stats);
    P.form.c = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));

    // Time-major elimination order: within step n, coupling rows pair with m(n, i, .),
    // local-time rows with lambda(n, .), forward rows with rho(n + 1, .).
    const auto W = static_cast<long long>(std::max(L.S, L.F) + 1);
    auto key = [W](std::size_t n, int group, std::size_t idx) {
        return (static_cast<long long>(n) * 3 + group) * W + static_cast<long long>(idx);
    };
    P.form.row_key.assign(L.num_rows(), 0);
    P.form.col_key.assign(L.num_vars(), 0);
    for (std::size_t n = 0; n < L.N; ++n) {
        for (std::size_t i = 0; i < L.S; ++i) {
            P.form.row_key[L.coupling_row(n, i)] = key(n, 0, i);
            P.form.row_key[L.forward_row(n, i)] = key(n, 2, i);
            P.form.col_key[L.rho(n + 1, i)] = key(n, 2, i);
            for (std::size_t k = 0; k < L.A; ++k) P.form.col_key[L.m(n, i, k)] = key(n, 0, i);
        }
        for (std::size_t f = 0; f < L.F; ++f) {
            P.form.row_key[L.local_time_row(n, f)] = key(n, 1, f);
            P.form.col_key[L.lambda(n, f)] = key(n, 1, f);
        }
    }
    for (std::size_t i = 0; i < L.S; ++i) {
        P.form.row_key[L.terminal_row(i)] = key(L.N, 0, i);
        P.form.col_key[L.nu(i)] = key(L.N, 0, i);
    }
    return P;
}

/// Basis of the chain that plays action k at every (n, i): one m column per
/// (n, i) plus every rho, lambda_b and nu column. Primal feasible whenever the
/// explicit chain is (CFL number <= 1).
inline std::vector<int> constant_action_basis(const LpLayout& L, std::size_t k) {
    std::vector<int> basis;
    basis.reserve(L.num_rows());
    for (std::size_t n = 0; n < L.N; ++n)
        for (std::size_t i = 0; i < L.S; ++i) basis.push_back(static_cast<int>(L.m(n, i, k)));
    for (std::size_t j = L.rho(1, 0); j < L.num_vars(); ++j) basis.push_back(static_cast<int>(j));
    return basis;
}

inline OccupationTriple unpack(const LpLayout& L, const Eigen::VectorXd& x) {
    OccupationTriple t;
    t.N = L.N;
    t.S = L.S;
    t.A = L.A;
    t.F = L.F;
    t.m.resize(L.N * L.S * L.A);
    for (std::size_t j = 0; j < t.m.size(); ++j) t.m[j] = x[static_cast<Eigen::Index>(j)];
    t.lambda_b.resize(L.N * L.F);
    for (std::size_t n = 0; n < L.N; ++n)
        for (std::size_t f = 0; f < L.F; ++f) t.lambda_b[n * L.F + f] = x[static_cast<Eigen::Index>(L.lambda(n, f))];
    t.nu.resize(L.S);
    for (std::size_t i = 0; i < L.S; ++i) t.nu[i] = x[static_cast<Eigen::Index>(L.nu(i))];
    return t;
}

/// Flat LP vector for a triple; rho is recovered through the coupling rows
/// (rho[n] = state mass / dt for n < N, rho[N] = nu).
inline Eigen::VectorXd pack(const LpLayout& L, const OccupationTriple& t, double dt) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.num_vars()));
    for (std::size_t j = 0; j < t.m.size(); ++j) x[static_cast<Eigen::Index>(j)] = t.m[j];
    for (std::size_t n = 1; n <= L.N; ++n)
        for (std::size_t i = 0; i < L.S; ++i)
            x[static_cast<Eigen::Index>(L.rho(n, i))] = n < L.N ? t.state_mass(n, i) / dt : t.nu[i];
    for (std::size_t n = 0; n < L.N; ++n)
        for (std::size_t f = 0; f < L.F; ++f) x[static_cast<Eigen::Index>(L.lambda(n, f))] = t.boundary(n, f);
    for (std::size_t i = 0; i < L.S; ++i) x[static_cast<Eigen::Index>(L.nu(i))] = t.nu[i];
    return x;
}

/// Occupation invariants: total terminal mass, per-cell occupation time, signs.
struct TripleCheck {
    double nu_mass_error = 0.0;   // |sum nu - 1|
    double cell_mass_error = 0.0; // max_n |sum m[n] - dt|
    double min_entry = 0.0;       // most negative entry over nu, m, lambda_b
    double boundary_total = 0.0;

    [[nodiscard]] bool ok(double tol) const {
        return nu_mass_error <= tol && cell_mass_error <= tol && min_entry >= -tol;
    }
};

inline TripleCheck check_triple(const OccupationTriple& t, const DiscreteGrid& g) {
    TripleCheck c;
    double s = 0.0;
    for (double v : t.nu) {
        s += v;
        c.min_entry = std::min(c.min_entry, v);
    }
    c.nu_mass_error = std::abs(s - 1.0);
    for (std::size_t n = 0; n < t.N; ++n) {
        double cell = 0.0;
        for (std::size_t i = 0; i < t.S; ++i)
            for (std::size_t k = 0; k < t.A; ++k) {
                cell += t.occ(n, i, k);
                c.min_entry = std::min(c.min_entry, t.occ(n, i, k));
            }
        c.cell_mass_error = std::max(c.cell_mass_error, std::abs(cell - g.dt));
    }
    for (double v : t.lambda_b) c.min_entry = std::min(c.min_entry, v);
    c.boundary_total = t.boundary_total();
    return c;
}

struct LpResult {
    OccupationTriple triple;
    double objective = 0.0;
    SolverStats stats;
    std::vector<int> basis;
    TripleCheck check;
};

/// Solves the occupation LP; the result is the best response to the frozen flow.
///
/// The constant-action chain of the default action is the starting basis when
/// `opts` has none, and the fallback when the given one is infeasible. Throws SolverError on infeasibility (naming the
/// row with the largest residual artificial) or when a post-solve invariant
/// misses by more than `invariant_tol`.
inline LpResult solve_lp(const LpProblem& P, SolverOptions opts = {}, const LpSolver& solver = RevisedSimplex{},
                         double invariant_tol = 1e-8) {
    auto crash = constant_action_basis(P.layout, MfgModel::default_action());
    if (opts.initial_basis.empty())
        opts.initial_basis = std::move(crash);
    else if (opts.fallback_basis.empty())
        opts.fallback_basis = std::move(crash);
    const LpSolution sol = solver.solve(P.form, opts);
    switch (sol.status) {
    case LpStatus::Optimal: break;
    case LpStatus::Infeasible:
        throw SolverError("occupation LP infeasible; worst row " +
                          (sol.worst_row >= 0 ? P.layout.describe_row(static_cast<std::size_t>(sol.worst_row))
                                              : std::string("?")) +
                          " carries residual " + std::to_string(sol.worst_violation));
    case LpStatus::Unbounded: throw SolverError("occupation LP reported unbounded (internal error: costs are bounded)");
    case LpStatus::IterationLimit: throw SolverError("occupation LP hit the iteration limit");
    }
    LpResult r;
    r.triple = unpack(P.layout, sol.x);
    r.objective = sol.objective;
    r.stats = sol.stats;
    r.basis = sol.basis;
    DiscreteGrid shape;
    shape.dt = P.dt;
    r.check = check_triple(r.triple, shape);
    if (!r.check.ok(invariant_tol)) {
        std::ostringstream os;
        os << "post-solve invariants violated: |sum nu - 1| = " << r.check.nu_mass_error
           << ", max cell mass error = " << r.check.cell_mass_error << ", min entry = " << r.check.min_entry;
        throw SolverError(os.str());
    }
    return r;
}

/// Discrete objective sum f m + sum h lambda_b + sum g nu for any triple on the grid.
inline double lp_cost(const OccupationTriple& t, const MfgModel& model, const DiscreteGrid& grid, const FlowStats& stats) {
    if (!t.matches(grid)) throw InvalidArgument("lp_cost: triple does not match the grid");
    const LpLayout L(grid);
    const auto c = objective_weights(model, grid, stats);
    double s = 0.0;
    for (std::size_t j = 0; j < t.m.size(); ++j) s += c[j] * t.m[j];
    for (std::size_t n = 0; n < L.N; ++n)
        for (std::size_t f = 0; f < L.F; ++f) s += c[L.lambda(n, f)] * t.boundary(n, f);
    for (std::size_t i = 0; i < L.S; ++i) s += c[L.nu(i)] * t.nu[i];
    return s;
}

struct RowViolation {
    std::size_t row = 0;
    double value = 0.0;
    std::string name;
};

/// Largest |A x - b| over the LP rows for the packed triple.
inline RowViolation worst_row_violation(const LpProblem& P, const OccupationTriple& t) {
    const Eigen::VectorXd x = pack(P.layout, t, P.dt);
    const Eigen::VectorXd r = P.form.A * x - P.form.b;
    RowViolation v;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        if (std::abs(r[i]) > v.value) {
            v.value = std::abs(r[i]);
            v.row = static_cast<std::size_t>(i);
        }
    v.name = P.layout.describe_row(v.row);
    return v;
}

/// Smooth test function u(t, x) with the derivatives the continuum generator needs.
struct TestFunction {
    std::function<double(double, double)> u;
    std::function<double(double, double)> u_t;
    std::function<double(double, double)> u_x;
    std::function<double(double, double)> u_xx;
};

/// (L u)(t, x, z, a): drift + diffusion + lambda (u(x + beta) - u(x) - beta u_x).
inline double continuum_generator(const MfgModel& model, const TestFunction& f, double t, double x,
                                  const FlowStats& st, std::size_t n, double a) {
    const double b = model.drift(t, x, st.drift[n], a);
    const double s = model.diffusion(t, x, st.diffusion[n], a);
    const double beta = model.jump(t, x, st.jump[n], a);
    const double lam = model.intensity(t);
    const double ux = f.u_x(t, x);
    return b * ux + 0.5 * s * s * f.u_xx(t, x) + lam * (f.u(t, x + beta) - f.u(t, x) - beta * ux);
}

/// Residual of the occupation identity for one test function:
/// sum u(T) nu - sum u(0) m0 - sum (u_t + L u) m - sum A u lambda_b, with L and A
/// evaluated from the continuum formulas at the nodes (left endpoints in time).
inline double dynkin_residual(const MfgModel& model, const DiscreteGrid& grid, const FlowStats& stats,
                              const OccupationTriple& t, const TestFunction& f) {
    const auto m0 = model.initial.on_grid(grid);
    double r = 0.0;
    for (std::size_t i = 0; i < t.S; ++i)
        r += f.u(grid.horizon, grid.x_nodes[i]) * t.nu[i] - f.u(0.0, grid.x_nodes[i]) * m0[i];
    for (std::size_t n = 0; n < t.N; ++n) {
        const double tn = grid.t_nodes[n];
        for (std::size_t i = 0; i < t.S; ++i) {
            const double x = grid.x_nodes[i];
            for (std::size_t k = 0; k < t.A; ++k) {
                const double mass = t.occ(n, i, k);
                if (mass == 0.0) continue;
                r -= (f.u_t(tn, x) + continuum_generator(model, f, tn, x, stats, n, grid.a_nodes[k])) * mass;
            }
        }
        for (std::size_t face = 0; face < t.F; ++face) {
            const double x = grid.x_nodes[grid.boundary_index[face]];
            const double normal = face == 0 ? 1.0 : -1.0;
            r -= normal * f.u_x(tn, x) * t.boundary(n, face);
        }
    }
    return r;
}

/// Free-format MPS dump (all rows are equalities, all columns >= 0).
inline void write_mps(std::ostream& os, const LpProblem& P, const std::string& name = "OCCUPATION") {
    os.precision(17);
    const auto& A = P.form.A;
    os << "NAME " << name << "\nROWS\n N COST\n";
    for (Eigen::Index r = 0; r < A.rows(); ++r) os << " E R" << r << "\n";
    os << "COLUMNS\n";
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        if (P.form.c[j] != 0.0) os << " C" << j << " COST " << P.form.c[j] << "\n";
        for (SparseColMatrix::InnerIterator it(A, j); it; ++it) os << " C" << j << " R" << it.row() << " " << it.value() << "\n";
    }
    os << "RHS\n";
    for (Eigen::Index r = 0; r < P.form.b.size(); ++r)
        if (P.form.b[r] != 0.0) os << " RHS R" << r << " " << P.form.b[r] << "\n";
    os << "ENDATA\n";
}

} // namespace lpmfe
