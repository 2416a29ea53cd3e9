#pragma once

#include "lpmfe/error.hpp"
#include "lpmfe/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace lpmfe {

using StatVec = std::span<const double>;

/// b, sigma, beta and f: (t, x, z, a) -> real, where z is the integrated statistic vector.
using CoefficientFn = std::function<double(double t, double x, StatVec z, double a)>;
using IntensityFn = std::function<double(double t)>;
using BoundaryCostFn = std::function<double(double t, double x)>;
using TerminalCostFn = std::function<double(double x, StatVec z)>;
/// Statistic functions b^, sigma^, beta^, f^: (t, y) -> R^{n_stat}.
using StatisticFn = std::function<std::vector<double>(double t, double y)>;
using TerminalStatisticFn = std::function<std::vector<double>(double y)>;

/// Initial law m0* on the state interval.
///
/// Discretized onto nodes by nearest-node cell mass, i.e. node i receives the
/// probability of [x_i - dx/2, x_i + dx/2] intersected with the domain. The
/// simulator bins paths the same way, so both sides see the same histogram.
struct InitialLaw {
    enum class Kind { Uniform, PointMass, Histogram };

    Kind kind = Kind::Uniform;
    double point = 0.0;
    std::vector<double> weights; // equal-width bins over the domain

    static InitialLaw uniform() { return {}; }
    static InitialLaw point_mass(double x0) { return {Kind::PointMass, x0, {}}; }
    static InitialLaw histogram(std::vector<double> w) {
        if (w.empty()) throw InvalidArgument("initial law: histogram needs at least one bin");
        double total = 0.0;
        for (double v : w) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("initial law: histogram weights must be >= 0");
            total += v;
        }
        if (!(total > 0.0)) throw InvalidArgument("initial law: histogram weights sum to zero");
        for (double& v : w) v /= total;
        return {Kind::Histogram, 0.0, std::move(w)};
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind) {
        case Kind::Uniform: return "uniform";
        case Kind::PointMass: os << "point-mass(" << point << ")"; return os.str();
        case Kind::Histogram:
            os << "histogram(";
            for (std::size_t i = 0; i < weights.size(); ++i) os << (i ? "," : "") << weights[i];
            os << ")";
            return os.str();
        }
        return "?";
    }

    /// Cumulative distribution on [lo, hi] (not used for point masses).
    [[nodiscard]] double cdf(const StateDomain& d, double x) const {
        if (x <= d.lo) return 0.0;
        if (x >= d.hi) return 1.0;
        const double s = (x - d.lo) / d.length();
        if (kind == Kind::Uniform) return s;
        const double pos = s * static_cast<double>(weights.size());
        const auto b = std::min(static_cast<std::size_t>(pos), weights.size() - 1);
        double acc = 0.0;
        for (std::size_t j = 0; j < b; ++j) acc += weights[j];
        return acc + weights[b] * (pos - static_cast<double>(b));
    }

    /// Nodal probability vector on the grid.
    [[nodiscard]] std::vector<double> on_grid(const DiscreteGrid& g) const {
        std::vector<double> p(g.num_states(), 0.0);
        if (kind == Kind::PointMass) {
            if (!g.domain.contains(point, 1e-12))
                throw InvalidArgument("initial law: point mass " + std::to_string(point) + " outside the domain");
            p[g.nearest_node(point)] = 1.0;
            return p;
        }
        for (std::size_t i = 0; i <= g.M; ++i) {
            const double a = g.x_nodes[i] - 0.5 * g.dx;
            const double b = g.x_nodes[i] + 0.5 * g.dx;
            p[i] = std::max(0.0, cdf(g.domain, b) - cdf(g.domain, a));
        }
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& v : p) v /= total;
        return p;
    }

    /// Inverse-CDF sample from a uniform variate u in [0, 1).
    [[nodiscard]] double sample(const StateDomain& d, double u) const {
        switch (kind) {
        case Kind::PointMass: return point;
        case Kind::Uniform: return d.lo + u * d.length();
        case Kind::Histogram: {
            const double width = d.length() / static_cast<double>(weights.size());
            double acc = 0.0;
            for (std::size_t j = 0; j < weights.size(); ++j) {
                if (weights[j] > 0.0 && (u < acc + weights[j] || j + 1 == weights.size())) {
                    const double frac = std::clamp((u - acc) / weights[j], 0.0, 1.0);
                    return d.lo + (static_cast<double>(j) + frac) * width;
                }
                acc += weights[j];
            }
            return d.hi;
        }
        }
        return d.lo;
    }
};

/// Mean-field game data for reflected jump-diffusion dynamics on a box.
///
/// The population flow enters the coefficients only through statistic vectors
/// z = int stat(t, y) mu_t(dy), one per coefficient family. Models are immutable
/// after construction and can be shared across threads.
struct MfgModel {
    std::string name;
    StateDomain domain;
    double horizon = 1.0;
    std::size_t n_stat = 0;

    CoefficientFn drift;
    CoefficientFn diffusion; // sigma, so the diffusion matrix is sigma^2
    CoefficientFn jump;      // beta
    IntensityFn intensity;   // lambda(t)
    CoefficientFn running_cost;
    BoundaryCostFn boundary_cost;
    TerminalCostFn terminal_cost;

    StatisticFn drift_stat;
    StatisticFn diffusion_stat;
    StatisticFn jump_stat;
    StatisticFn cost_stat;
    TerminalStatisticFn terminal_stat;

    InitialLaw initial;

    /// Default action a0 used where a control kernel is undetermined: the first action node.
    [[nodiscard]] static std::size_t default_action() { return 0; }
};

struct InventoryParams {
    double capacity = 1.0;       // U
    double base_demand = 0.5;    // D0
    double competition = 0.3;    // c
    double volatility = 0.1;     // sigma0
    double spoilage = 0.3;       // delta
    double production_cost = 1.0; // k
    double holding_cost = 0.1;   // c_h
    double salvage_price = 0.5;  // p
    double stockout_penalty = 1.0;
    double overflow_penalty = 1.0;
    double jump_intensity = 0.5; // lambda0

    void check() const {
        const double all[] = {capacity,     base_demand,      competition,      volatility,
                              spoilage,     production_cost,  holding_cost,     salvage_price,
                              stockout_penalty, overflow_penalty, jump_intensity};
        for (double v : all)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw InvalidArgument("inventory: parameters must be finite and nonnegative");
        if (!(capacity > 0.0)) throw InvalidArgument("inventory: capacity U must be > 0");
        if (!(production_cost > 0.0)) throw InvalidArgument("inventory: production cost k must be > 0");
        if (!(spoilage > 0.0 && spoilage < 1.0)) throw InvalidArgument("inventory: spoilage delta must lie in (0,1)");
    }
};

/// Inventory game on [0, U]: dX = (a - D0 + c * mean(mu_t)) dt + sigma0 dW - delta X dN~ + reflection.
///
/// One statistic (the mean inventory) feeds the drift; f = k/2 a^2 + c_h x,
/// h = C_stockout at 0 and C_overflow at U, g = -p x.
inline MfgModel inventory_model(const InventoryParams& p, double horizon, InitialLaw m0) {
    p.check();
    if (!(horizon > 0.0)) throw InvalidArgument("inventory: horizon must be > 0");
    MfgModel m;
    m.name = "inventory";
    m.domain = StateDomain(0.0, p.capacity);
    m.horizon = horizon;
    m.n_stat = 1;
    const double D0 = p.base_demand, c = p.competition, s0 = p.volatility, delta = p.spoilage;
    const double k = p.production_cost, ch = p.holding_cost, price = p.salvage_price;
    const double lam = p.jump_intensity, U = p.capacity;
    const double c_low = p.stockout_penalty, c_high = p.overflow_penalty;

    m.drift = [D0, c](double, double, StatVec z, double a) { return a - (D0 - c * z[0]); };
    m.diffusion = [s0](double, double, StatVec, double) { return s0; };
    m.jump = [delta](double, double x, StatVec, double) { return -delta * x; };
    m.intensity = [lam](double) { return lam; };
    m.running_cost = [k, ch](double, double x, StatVec, double a) { return 0.5 * k * a * a + ch * x; };
    m.boundary_cost = [c_low, c_high, U](double, double x) { return x <= 0.5 * U ? c_low : c_high; };
    m.terminal_cost = [price](double x, StatVec) { return -price * x; };

    auto mean = [](double, double y) { return std::vector<double>{y}; };
    auto none = [](double, double) { return std::vector<double>{0.0}; };
    m.drift_stat = mean;
    m.diffusion_stat = none;
    m.jump_stat = none;
    m.cost_stat = none;
    m.terminal_stat = [](double) { return std::vector<double>{0.0}; };
    m.initial = std::move(m0);
    return m;
}

/// Uncoupled linear-quadratic test family on [lo, hi]:
/// b = drift + gain a, sigma constant, beta = -fraction (x - lo), lambda constant,
/// f = w_x x + w_a a^2, h constant on both faces, g = g1 x + g2 x^2.
struct DiffusionParams {
    double drift = 0.0;
    double control_gain = 0.0;
    double sigma = 0.0;
    double jump_fraction = 0.0;
    double intensity = 0.0;
    double running_state = 0.0;
    double running_action = 0.0;
    double boundary_cost = 0.0;
    double terminal_linear = 0.0;
    double terminal_quadratic = 0.0;
};

inline MfgModel diffusion_model(const DiffusionParams& p, StateDomain domain, double horizon, InitialLaw m0) {
    if (!(horizon > 0.0)) throw InvalidArgument("diffusion model: horizon must be > 0");
    if (p.jump_fraction < 0.0 || p.jump_fraction >= 1.0)
        throw InvalidArgument("diffusion model: jump_fraction must lie in [0,1)");
    if (p.intensity < 0.0) throw InvalidArgument("diffusion model: intensity must be >= 0");
    MfgModel m;
    m.name = "reflected-diffusion";
    m.domain = domain;
    m.horizon = horizon;
    m.n_stat = 0;
    const double lo = domain.lo;
    m.drift = [p](double, double, StatVec, double a) { return p.drift + p.control_gain * a; };
    m.diffusion = [p](double, double, StatVec, double) { return p.sigma; };
    m.jump = [p, lo](double, double x, StatVec, double) { return -p.jump_fraction * (x - lo); };
    m.intensity = [p](double) { return p.intensity; };
    m.running_cost = [p](double, double x, StatVec, double a) {
        return p.running_state * x + p.running_action * a * a;
    };
    m.boundary_cost = [p](double, double) { return p.boundary_cost; };
    m.terminal_cost = [p](double x, StatVec) { return p.terminal_linear * x + p.terminal_quadratic * x * x; };
    auto none = [](double, double) { return std::vector<double>{}; };
    m.drift_stat = none;
    m.diffusion_stat = none;
    m.jump_stat = none;
    m.cost_stat = none;
    m.terminal_stat = [](double) { return std::vector<double>{}; };
    m.initial = std::move(m0);
    return m;
}

struct Violation {
    enum class Kind { Unbounded, JumpContainment, NegativeIntensity };
    Kind kind;
    double t = 0.0;
    double x = 0.0;
    double a = 0.0;
    double value = 0.0;
    std::string what;
};

/// Sup-norm bounds of the coefficients over the sampled grid.
struct CoefficientBounds {
    double drift = 0.0;
    double diffusion2 = 0.0; // sup sigma^2
    double jump = 0.0;
    double intensity = 0.0;
    double running_cost = 0.0;
    double boundary_cost = 0.0;
    double terminal_cost = 0.0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    CoefficientBounds bounds;
    [[nodiscard]] bool admissible() const { return violations.empty(); }
};

namespace detail {
inline std::vector<double> eval_stat(const StatisticFn& fn, std::size_t n_stat, double t, double y) {
    if (!fn || n_stat == 0) return std::vector<double>(n_stat, 0.0);
    auto v = fn(t, y);
    if (v.size() != n_stat)
        throw ModelError("statistic function returned " + std::to_string(v.size()) + " entries, expected " +
                         std::to_string(n_stat));
    return v;
}

inline std::string sample_name(double t, double x, double a) {
    std::ostringstream os;
    os << "(t=" << t << ", x=" << x << ", a=" << a << ")";
    return os.str();
}

inline double checked(double v, const char* what, double t, double x, double a) {
    if (!std::isfinite(v)) throw ModelError(std::string("non-finite ") + what + " at " + sample_name(t, x, a));
    return v;
}
} // namespace detail

/// Sweeps every grid sample (t_n, x_i, a_k) against the admissibility assumptions.
///
/// The statistic argument z ranges over the convex hull of the statistic
/// function's nodal values; the sweep uses its extreme points (point-mass flows
/// at each node). Non-finite evaluations throw ModelError. Each (kind, n, i, k)
/// is reported once.
inline ValidationReport validate_model(const MfgModel& model, const DiscreteGrid& grid, double limit = 1e8) {
    if (model.domain.lo != grid.domain.lo || model.domain.hi != grid.domain.hi)
        throw InvalidArgument("validate_model: grid domain differs from model domain");
    if (!model.drift || !model.diffusion || !model.jump || !model.intensity || !model.running_cost ||
        !model.boundary_cost || !model.terminal_cost)
        throw InvalidArgument("validate_model: model '" + model.name + "' has unset coefficient functions");

    ValidationReport rep;
    auto& bd = rep.bounds;
    const double tol = 1e-12 * grid.domain.length();
    const std::size_t S = grid.num_states();

    for (std::size_t n = 0; n < grid.num_times(); ++n) {
        const double t = grid.t_nodes[n];
        const double lam = detail::checked(model.intensity(t), "intensity", t, 0.0, 0.0);
        bd.intensity = std::max(bd.intensity, std::abs(lam));
        if (lam < 0.0)
            rep.violations.push_back({Violation::Kind::NegativeIntensity, t, 0.0, 0.0, lam, "lambda(t) < 0"});

        std::vector<std::vector<double>> zb(S), zs(S), zj(S), zf(S);
        for (std::size_t j = 0; j < S; ++j) {
            const double y = grid.x_nodes[j];
            zb[j] = detail::eval_stat(model.drift_stat, model.n_stat, t, y);
            zs[j] = detail::eval_stat(model.diffusion_stat, model.n_stat, t, y);
            zj[j] = detail::eval_stat(model.jump_stat, model.n_stat, t, y);
            zf[j] = detail::eval_stat(model.cost_stat, model.n_stat, t, y);
        }
        // Extreme points of the statistic hull; one sample suffices when nothing couples.
        const std::size_t n_hull = model.n_stat == 0 ? 1 : S;

        for (std::size_t i = 0; i < S; ++i) {
            const double x = grid.x_nodes[i];
            for (std::size_t k = 0; k < grid.num_actions(); ++k) {
                const double a = grid.a_nodes[k];
                bool unbounded = false, escaped = false;
                double worst_escape = 0.0;
                for (std::size_t j = 0; j < n_hull; ++j) {
                    const double b = detail::checked(model.drift(t, x, zb[j], a), "drift", t, x, a);
                    const double s = detail::checked(model.diffusion(t, x, zs[j], a), "diffusion", t, x, a);
                    const double be = detail::checked(model.jump(t, x, zj[j], a), "jump size", t, x, a);
                    const double f = detail::checked(model.running_cost(t, x, zf[j], a), "running cost", t, x, a);
                    bd.drift = std::max(bd.drift, std::abs(b));
                    bd.diffusion2 = std::max(bd.diffusion2, s * s);
                    bd.jump = std::max(bd.jump, std::abs(be));
                    bd.running_cost = std::max(bd.running_cost, std::abs(f));
                    if (std::abs(b) > limit || s * s > limit || std::abs(be) > limit || std::abs(f) > limit)
                        unbounded = true;
                    if (!model.domain.contains(x + be, tol)) {
                        escaped = true;
                        worst_escape = x + be;
                    }
                }
                if (unbounded)
                    rep.violations.push_back({Violation::Kind::Unbounded, t, x, a, 0.0,
                                              "coefficient magnitude above " + std::to_string(limit)});
                if (escaped)
                    rep.violations.push_back(
                        {Violation::Kind::JumpContainment, t, x, a, worst_escape, "x + beta leaves the domain"});
            }
        }
        for (std::size_t face : grid.boundary_index) {
            const double x = grid.x_nodes[face];
            const double h = detail::checked(model.boundary_cost(t, x), "boundary cost", t, x, 0.0);
            bd.boundary_cost = std::max(bd.boundary_cost, std::abs(h));
        }
    }
    const auto zg_fn = model.terminal_stat;
    for (std::size_t j = 0; j < (model.n_stat == 0 ? 1 : S); ++j) {
        std::vector<double> zg(model.n_stat, 0.0);
        if (zg_fn && model.n_stat > 0) zg = zg_fn(grid.x_nodes[j]);
        for (std::size_t i = 0; i < S; ++i) {
            const double g = detail::checked(model.terminal_cost(grid.x_nodes[i], zg), "terminal cost",
                                             grid.horizon, grid.x_nodes[i], 0.0);
            bd.terminal_cost = std::max(bd.terminal_cost, std::abs(g));
        }
    }
    return rep;
}

/// Upper bound on the total boundary-measure mass implied by the coefficient bounds.
///
/// Tests the LP identity with phi(x) = L/8 - (x - c)^2 / L, whose derivative is the
/// inward normal at both faces (A phi = 1) and |phi| <= L/8, so
/// lambda_total <= 2 sup|phi| + T sup|L phi| with
/// |L phi| <= sup|b| + sup sigma^2 / L + sup lambda * sup beta^2 / L.
inline double boundary_mass_bound(const CoefficientBounds& b, const StateDomain& d, double horizon) {
    const double L = d.length();
    return L / 4.0 + horizon * (b.drift + b.diffusion2 / L + b.intensity * b.jump * b.jump / L);
}

} // namespace lpmfe
