#pragma once

#include "lpmfe/equilibrium.hpp"
#include "lpmfe/error.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/io.hpp"
#include "lpmfe/model.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace lpmfe {

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct SimulationParams {
    std::size_t paths = 100000;
    std::size_t substeps = 4;
    std::uint64_t seed = 1;
    double eps_disc_rel = 0.02;
    double eps_disc_abs = 0.01;
    double w1_bound = 0.05;

    [[nodiscard]] double eps_disc(double lp_cost) const { return eps_disc_rel * std::abs(lp_cost) + eps_disc_abs; }
};

/// A run as read from an INI file.
///
///   [model]        kind = inventory | reflected-diffusion, horizon, lo, hi (diffusion only),
///                  initial = uniform | point-mass(x) | histogram(w1, w2, ...)
///   [inventory]    InventoryParams fields
///   [diffusion]    DiffusionParams fields
///   [grid]         N, M, K, action_lo, action_hi
///   [equilibrium]  damping, max_iters, flow_tolerance, exploitability_tolerance, initial_flow
///   [simulation]   paths, substeps, seed, eps_disc_rel, eps_disc_abs, w1_bound
///   [output]       dir
struct RunConfig {
    std::string kind = "inventory";
    double horizon = 0.5;
    StateDomain domain{0.0, 1.0};
    InitialLaw initial = InitialLaw::uniform();
    InventoryParams inventory;
    DiffusionParams diffusion;
    std::size_t N = 50, M = 60, K = 5;
    ActionRange actions{0.0, 1.0};
    FixedPointParams equilibrium;
    SimulationParams simulation;
    std::string output_dir = "lpmfe-out";
    std::map<std::string, std::string> raw; // "section.key" -> text as given

    [[nodiscard]] MfgModel model() const {
        if (kind == "inventory") return inventory_model(inventory, horizon, initial);
        return diffusion_model(diffusion, domain, horizon, initial);
    }
    [[nodiscard]] StateDomain state_domain() const {
        return kind == "inventory" ? StateDomain{0.0, inventory.capacity} : domain;
    }
    [[nodiscard]] DiscreteGrid grid() const { return build_grid(state_domain(), horizon, N, M, K, actions); }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"model", {"kind", "horizon", "lo", "hi", "initial"}},
        {"inventory",
         {"capacity", "base_demand", "competition", "volatility", "spoilage", "production_cost", "holding_cost",
          "salvage_price", "stockout_penalty", "overflow_penalty", "jump_intensity"}},
        {"diffusion",
         {"drift", "control_gain", "sigma", "jump_fraction", "intensity", "running_state", "running_action",
          "boundary_cost", "terminal_linear", "terminal_quadratic"}},
        {"grid", {"N", "M", "K", "action_lo", "action_hi"}},
        {"equilibrium", {"damping", "max_iters", "flow_tolerance", "exploitability_tolerance", "initial_flow"}},
        {"simulation", {"paths", "substeps", "seed", "eps_disc_rel", "eps_disc_abs", "w1_bound"}},
        {"output", {"dir"}},
    };
    return s;
}

inline InitialLaw parse_initial(const std::string& text) {
    static const std::regex point(R"(\s*point-mass\(\s*([^)]+?)\s*\)\s*)");
    static const std::regex hist(R"(\s*histogram\(([^)]*)\)\s*)");
    std::smatch m;
    if (text == "uniform") return InitialLaw::uniform();
    if (std::regex_match(text, m, point)) return InitialLaw::point_mass(parse_double(m[1], "model.initial"));
    if (std::regex_match(text, m, hist)) {
        std::vector<double> w;
        for (auto& cell : split_csv(m[1])) {
            const auto b = cell.find_first_not_of(' '), e = cell.find_last_not_of(' ');
            w.push_back(parse_double(b == std::string::npos ? "" : cell.substr(b, e - b + 1), "model.initial"));
        }
        return InitialLaw::histogram(std::move(w));
    }
    throw ConfigError("model.initial: expected uniform, point-mass(x) or histogram(w1, ...), got '" + text + "'");
}

} // namespace detail

namespace detail {

inline RunConfig parse_config_text(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig c;
    const auto& schema = config_schema();
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (it == schema.end()) {
            if (body.empty() && !body.data().empty())
                throw ConfigError("config: key '" + section + "' outside any section");
            throw ConfigError("config: unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) throw ConfigError("config: unknown key " + section + "." + key);
            c.raw[section + "." + key] = value.data();
        }
    }

    auto has = [&](const std::string& k) { return c.raw.count(k) > 0; };
    auto text = [&](const std::string& k) { return c.raw.at(k); };
    auto real = [&](const std::string& k, double& dst) {
        if (has(k)) dst = parse_double(text(k), k);
    };
    auto count = [&](const std::string& k, std::size_t& dst) {
        if (!has(k)) return;
        const auto& s = text(k);
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError(k + ": expected a nonnegative integer, got '" + s + "'");
        dst = parse_index(s, k);
    };

    if (has("model.kind")) c.kind = text("model.kind");
    if (c.kind != "inventory" && c.kind != "reflected-diffusion")
        throw ConfigError("model.kind: expected inventory or reflected-diffusion, got '" + c.kind + "'");
    real("model.horizon", c.horizon);
    if (!(c.horizon > 0.0)) throw ConfigError("model.horizon must be > 0");
    if (c.kind == "inventory" && (has("model.lo") || has("model.hi")))
        throw ConfigError("model.lo/model.hi: the inventory domain is [0, inventory.capacity]");
    real("model.lo", c.domain.lo);
    real("model.hi", c.domain.hi);
    if (!(c.domain.lo < c.domain.hi)) throw ConfigError("model.lo must be < model.hi");
    if (has("model.initial")) c.initial = parse_initial(text("model.initial"));
    if (c.kind == "inventory" && tree.find("diffusion") != tree.not_found())
        throw ConfigError("config: section [diffusion] given for an inventory model");
    if (c.kind == "reflected-diffusion" && tree.find("inventory") != tree.not_found())
        throw ConfigError("config: section [inventory] given for a reflected-diffusion model");

    auto& inv = c.inventory;
    real("inventory.capacity", inv.capacity);
    real("inventory.base_demand", inv.base_demand);
    real("inventory.competition", inv.competition);
    real("inventory.volatility", inv.volatility);
    real("inventory.spoilage", inv.spoilage);
    real("inventory.production_cost", inv.production_cost);
    real("inventory.holding_cost", inv.holding_cost);
    real("inventory.salvage_price", inv.salvage_price);
    real("inventory.stockout_penalty", inv.stockout_penalty);
    real("inventory.overflow_penalty", inv.overflow_penalty);
    real("inventory.jump_intensity", inv.jump_intensity);
    if (c.kind == "inventory") inv.check();

    auto& d = c.diffusion;
    real("diffusion.drift", d.drift);
    real("diffusion.control_gain", d.control_gain);
    real("diffusion.sigma", d.sigma);
    real("diffusion.jump_fraction", d.jump_fraction);
    real("diffusion.intensity", d.intensity);
    real("diffusion.running_state", d.running_state);
    real("diffusion.running_action", d.running_action);
    real("diffusion.boundary_cost", d.boundary_cost);
    real("diffusion.terminal_linear", d.terminal_linear);
    real("diffusion.terminal_quadratic", d.terminal_quadratic);

    count("grid.N", c.N);
    count("grid.M", c.M);
    count("grid.K", c.K);
    real("grid.action_lo", c.actions.lo);
    real("grid.action_hi", c.actions.hi);
    if (c.N < 1) throw ConfigError("grid.N must be >= 1, got " + std::to_string(c.N));
    if (c.M < 1) throw ConfigError("grid.M must be >= 1, got " + std::to_string(c.M));
    if (c.K >= 1 && !(c.actions.lo < c.actions.hi))
        throw ConfigError("grid.action_lo must be < grid.action_hi when grid.K >= 1");

    auto& e = c.equilibrium;
    real("equilibrium.damping", e.damping);
    count("equilibrium.max_iters", e.max_iters);
    real("equilibrium.flow_tolerance", e.flow_tolerance);
    real("equilibrium.exploitability_tolerance", e.exploitability_tolerance);
    if (has("equilibrium.initial_flow")) {
        const auto& v = text("equilibrium.initial_flow");
        if (v == "frozen-m0")
            e.initial = InitialFlow::FrozenInitial;
        else if (v == "uncontrolled-rollforward")
            e.initial = InitialFlow::UncontrolledRollforward;
        else
            throw ConfigError("equilibrium.initial_flow: expected frozen-m0 or uncontrolled-rollforward, got '" + v +
                              "'");
    }
    try {
        e.check();
    } catch (const InvalidArgument& ex) {
        throw ConfigError(std::string("equilibrium.") + ex.what());
    }

    auto& s = c.simulation;
    count("simulation.paths", s.paths);
    count("simulation.substeps", s.substeps);
    if (has("simulation.seed")) {
        std::size_t seed = 0;
        count("simulation.seed", seed);
        s.seed = seed;
    }
    real("simulation.eps_disc_rel", s.eps_disc_rel);
    real("simulation.eps_disc_abs", s.eps_disc_abs);
    real("simulation.w1_bound", s.w1_bound);
    if (s.paths < 1) throw ConfigError("simulation.paths must be >= 1");
    if (s.substeps < 1) throw ConfigError("simulation.substeps must be >= 1");
    if (s.eps_disc_rel < 0.0 || s.eps_disc_abs < 0.0) throw ConfigError("simulation.eps_disc_* must be >= 0");
    if (!(s.w1_bound > 0.0)) throw ConfigError("simulation.w1_bound must be > 0");

    if (has("output.dir")) c.output_dir = text("output.dir");
    return c;
}

} // namespace detail

/// Every failure, including bad numbers and bad model parameters, is a ConfigError.
inline RunConfig parse_config(std::istream& is) {
    try {
        return detail::parse_config_text(is);
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

inline RunConfig load_config(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot open config " + p.string());
    try {
        return parse_config(is);
    } catch (const ConfigError& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

/// Every effective setting, INI style, so the file can be fed back as a config.
inline void write_config(std::ostream& os, const RunConfig& c) {
    os << "[model]\nkind = " << c.kind << "\nhorizon = " << fmt17(c.horizon) << "\n";
    if (c.kind != "inventory") os << "lo = " << fmt17(c.domain.lo) << "\nhi = " << fmt17(c.domain.hi) << "\n";
    os << "initial = " << c.initial.describe() << "\n\n";
    if (c.kind == "inventory") {
        const auto& p = c.inventory;
        os << "[inventory]\ncapacity = " << fmt17(p.capacity) << "\nbase_demand = " << fmt17(p.base_demand)
           << "\ncompetition = " << fmt17(p.competition) << "\nvolatility = " << fmt17(p.volatility)
           << "\nspoilage = " << fmt17(p.spoilage) << "\nproduction_cost = " << fmt17(p.production_cost)
           << "\nholding_cost = " << fmt17(p.holding_cost) << "\nsalvage_price = " << fmt17(p.salvage_price)
           << "\nstockout_penalty = " << fmt17(p.stockout_penalty)
           << "\noverflow_penalty = " << fmt17(p.overflow_penalty)
           << "\njump_intensity = " << fmt17(p.jump_intensity) << "\n\n";
    } else {
        const auto& p = c.diffusion;
        os << "[diffusion]\ndrift = " << fmt17(p.drift) << "\ncontrol_gain = " << fmt17(p.control_gain)
           << "\nsigma = " << fmt17(p.sigma) << "\njump_fraction = " << fmt17(p.jump_fraction)
           << "\nintensity = " << fmt17(p.intensity) << "\nrunning_state = " << fmt17(p.running_state)
           << "\nrunning_action = " << fmt17(p.running_action) << "\nboundary_cost = " << fmt17(p.boundary_cost)
           << "\nterminal_linear = " << fmt17(p.terminal_linear)
           << "\nterminal_quadratic = " << fmt17(p.terminal_quadratic) << "\n\n";
    }
    os << "[grid]\nN = " << c.N << "\nM = " << c.M << "\nK = " << c.K << "\naction_lo = " << fmt17(c.actions.lo)
       << "\naction_hi = " << fmt17(c.actions.hi) << "\n\n";
    const auto& e = c.equilibrium;
    os << "[equilibrium]\ndamping = " << fmt17(e.damping) << "\nmax_iters = " << e.max_iters
       << "\nflow_tolerance = " << fmt17(e.flow_tolerance)
       << "\nexploitability_tolerance = " << fmt17(e.exploitability_tolerance)
       << "\ninitial_flow = " << to_string(e.initial) << "\n\n";
    const auto& s = c.simulation;
    os << "[simulation]\npaths = " << s.paths << "\nsubsteps = " << s.substeps << "\nseed = " << s.seed
       << "\neps_disc_rel = " << fmt17(s.eps_disc_rel) << "\neps_disc_abs = " << fmt17(s.eps_disc_abs)
       << "\nw1_bound = " << fmt17(s.w1_bound) << "\n\n";
    os << "[output]\ndir = " << c.output_dir << "\n";
}

} // namespace lpmfe
