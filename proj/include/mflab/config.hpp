#pragma once

// Experiment configuration: one struct holding everything a run needs (grid,
// modes, potential, cutoff, epsilon sweep, state family, observable panel,
// times, flow, outputs, seed, tolerances), with JSON as the canonical wire
// format and a TOML reader accepted by file extension. Parsing is strict:
// unknown keys are config errors, so typos fail loudly instead of silently
// running defaults. Serialization covers every field, and parse(serialize(x))
// reproduces x exactly.
//
// Occupation-carrying families scale with epsilon through targets: at each
// sweep point the realized occupation is round(target / eps), so the family
// tracks a fixed phase-space radius instead of a fixed particle count.

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflab/common.hpp"
#include "mflab/hartree.hpp"
#include "mflab/states.hpp"
#include "mflab/toml_lite.hpp"

namespace mflab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PotentialSpec {
    std::string kind = "soft_coulomb";  // soft_coulomb | gaussian | constant
    double strength = 0.6;
    double width = 0.3;  // unused by `constant`
};

struct FamilySpec {
    StateKind kind = StateKind::coherent;
    std::vector<cxd> psi1, psi2, z0;  // mode coefficients; sized by `modes`
    double target1 = 0.5, target2 = 0.25;
    std::vector<double> contraction;  // diagonal mode contraction, quasifree only
};

struct ToleranceSpec {
    double invariant = 1e-8;     // algebraic identity residuals
    double drift = 1e-8;         // conserved-quantity relative drift
    double final_error = 0.05;   // sup-panel error allowed at the smallest epsilon
};

struct ExperimentConfig {
    double grid_length = 2.0 * pi;
    int grid_dim = 1;
    int grid_points = 32;
    int modes = 2;
    PotentialSpec potential;
    int n_max = 12;
    std::vector<double> epsilons = {0.5, 0.25, 0.125, 0.0625};
    FamilySpec family;
    std::vector<std::vector<cxd>> panel_xis;
    double xi_bound = 4.0;
    std::vector<double> times = {0.25, 0.5};
    std::string integrator = "splitstep";
    double dt = 1e-3;
    double blowup_threshold = 1e6;
    int resolution = 64;  // angles per circle factor when sampling limit measures
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    ToleranceSpec tolerances;

    ExperimentConfig() {
        family.z0 = {cxd(0.3, 0.1), cxd(0.0, -0.2)};
        family.psi1 = {cxd(1.0, 0.0), cxd(0.0, 0.0)};
        family.psi2 = {cxd(0.0, 0.0), cxd(1.0, 0.0)};
        panel_xis = {{cxd(1.0, 0.0), cxd(0.0, 0.0)},
                     {cxd(0.0, 0.0), cxd(1.0, 0.0)},
                     {cxd(0.5, 0.0), cxd(0.0, 0.5)}};
    }

    Grid make_grid() const { return Grid(grid_length, grid_dim, grid_points); }

    PairPotential make_potential(const Grid& g) const {
        if (potential.kind == "soft_coulomb")
            return PairPotential::soft_coulomb(g, potential.strength, potential.width);
        if (potential.kind == "gaussian")
            return PairPotential::gaussian(g, potential.strength, potential.width);
        if (potential.kind == "constant") return PairPotential::constant(g, potential.strength);
        throw ConfigError("unknown potential kind: " + potential.kind);
    }

    FlowConfig make_flow() const {
        FlowConfig cfg;
        cfg.integrator = integrator_from(integrator);
        cfg.dt = dt;
        cfg.blowup_threshold = blowup_threshold;
        return cfg;
    }

    // epsilon-dependent family member, occupations scaled by the targets
    StateFamily realize_family(double eps) const {
        auto vec_of = [](const std::vector<cxd>& v) {
            Vec out(static_cast<Eigen::Index>(v.size()));
            for (size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
            return out;
        };
        switch (family.kind) {
            case StateKind::hermite:
                return StateFamily::hermite(vec_of(family.psi1), occupation_for(eps, family.target1));
            case StateKind::coherent: return StateFamily::coherent(vec_of(family.z0));
            case StateKind::torus:
                return StateFamily::torus(vec_of(family.psi1), occupation_for(eps, family.target1),
                                          vec_of(family.psi2), occupation_for(eps, family.target2));
            default: {
                RVec t(static_cast<Eigen::Index>(family.contraction.size()));
                for (size_t i = 0; i < family.contraction.size(); ++i)
                    t[static_cast<Eigen::Index>(i)] = family.contraction[i];
                return StateFamily::quasifree(Mat(t.cast<cxd>().asDiagonal()));
            }
        }
    }

    void validate() const {
        auto require = [](bool ok, const std::string& msg) {
            if (!ok) throw ConfigError("config: " + msg);
        };
        require(grid_length > 0.0, "grid_length must be positive");
        require(grid_dim == 1 || grid_dim == 2, "grid_dim must be 1 or 2");
        require(grid_points >= 2, "grid_points must be at least 2");
        require(modes >= 1, "modes must be at least 1");
        const long npoints = static_cast<long>(std::pow(grid_points, grid_dim));
        require(modes <= npoints, "modes exceed the grid resolution");
        require(n_max >= 1, "n_max must be at least 1");
        require(!epsilons.empty(), "epsilon list is empty");
        for (double e : epsilons) require(e > 0.0, "epsilons must be positive");
        for (size_t i = 1; i < epsilons.size(); ++i)
            require(epsilons[i] < epsilons[i - 1], "epsilon list must be strictly decreasing");
        require(potential.kind == "soft_coulomb" || potential.kind == "gaussian" ||
                    potential.kind == "constant",
                "unknown potential kind: " + potential.kind);
        require(potential.width > 0.0 || potential.kind == "constant", "potential width must be positive");

        const size_t d = static_cast<size_t>(modes);
        switch (family.kind) {
            case StateKind::hermite:
                require(family.psi1.size() == d, "family psi1 must list one coefficient per mode");
                require(family.target1 > 0.0, "family target1 must be positive");
                break;
            case StateKind::coherent:
                require(family.z0.size() == d, "family z0 must list one coefficient per mode");
                break;
            case StateKind::torus:
                require(family.psi1.size() == d && family.psi2.size() == d,
                        "family psi1/psi2 must list one coefficient per mode");
                require(family.target1 > 0.0 && family.target2 > 0.0,
                        "family targets must be positive");
                break;
            default:
                require(family.contraction.size() == d,
                        "family contraction must list one diagonal entry per mode");
                for (double t : family.contraction)
                    require(t >= 0.0 && t < 1.0, "contraction entries must lie in [0, 1)");
        }
        require(!panel_xis.empty(), "observable panel is empty");
        require(xi_bound > 0.0, "xi_bound must be positive");
        for (const auto& xi : panel_xis) {
            require(xi.size() == d, "panel vectors must list one coefficient per mode");
            double norm2 = 0.0;
            for (cxd c : xi) norm2 += std::norm(c);
            require(std::sqrt(norm2) <= xi_bound, "panel vector exceeds xi_bound");
        }
        require(!times.empty(), "time list is empty");
        for (double t : times) require(t >= 0.0, "times must be nonnegative");
        try {
            integrator_from(integrator);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        require(dt > 0.0, "dt must be positive");
        require(blowup_threshold > 0.0, "blowup_threshold must be positive");
        require(resolution >= 1, "resolution must be at least 1");
        require(!output_dir.empty(), "output_dir is empty");
        require(tolerances.invariant > 0.0 && tolerances.drift > 0.0 && tolerances.final_error > 0.0,
                "tolerances must be positive");
    }
};

// ---------------------------------------------------------------------------
// JSON mapping; complex numbers are [re, im] pairs

namespace detail {

inline nlohmann::json cx_json(const std::vector<cxd>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (cxd c : v) arr.push_back({c.real(), c.imag()});
    return arr;
}

inline std::vector<cxd> cx_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError("config: " + where + " must be an array of [re, im] pairs");
    std::vector<cxd> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError("config: " + where + " entries must be [re, im] pairs");
        out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return out;
}

// pull a field if present, erasing it so leftovers can be reported
template <typename T>
void take(nlohmann::json& j, const char* key, T& slot, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        slot = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: bad value for " + where + "." + key);
    }
    j.erase(it);
}

inline void reject_leftovers(const nlohmann::json& j, const std::string& where) {
    if (j.empty()) return;
    throw ConfigError("config: unknown key " + where + "." + j.begin().key());
}

}  // namespace detail

inline nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["grid"] = {{"length", c.grid_length}, {"dim", c.grid_dim}, {"points", c.grid_points}};
    j["modes"] = c.modes;
    j["potential"] = {{"kind", c.potential.kind},
                      {"strength", c.potential.strength},
                      {"width", c.potential.width}};
    j["n_max"] = c.n_max;
    j["epsilons"] = c.epsilons;
    nlohmann::json fam;
    fam["kind"] = to_string(c.family.kind);
    fam["psi1"] = detail::cx_json(c.family.psi1);
    fam["psi2"] = detail::cx_json(c.family.psi2);
    fam["z0"] = detail::cx_json(c.family.z0);
    fam["target1"] = c.family.target1;
    fam["target2"] = c.family.target2;
    fam["contraction"] = c.family.contraction;
    j["family"] = fam;
    nlohmann::json panel;
    panel["xis"] = nlohmann::json::array();
    for (const auto& xi : c.panel_xis) panel["xis"].push_back(detail::cx_json(xi));
    panel["xi_bound"] = c.xi_bound;
    j["panel"] = panel;
    j["times"] = c.times;
    j["flow"] = {{"integrator", c.integrator}, {"dt", c.dt}, {"blowup_threshold", c.blowup_threshold}};
    j["resolution"] = c.resolution;
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["tolerances"] = {{"invariant", c.tolerances.invariant},
                       {"drift", c.tolerances.drift},
                       {"final_error", c.tolerances.final_error}};
    return j;
}

inline ExperimentConfig config_from_json(nlohmann::json j) {
    if (!j.is_object()) throw ConfigError("config: document root must be a table");
    ExperimentConfig c;
    if (j.contains("grid")) {
        nlohmann::json g = j["grid"];
        j.erase("grid");
        detail::take(g, "length", c.grid_length, "grid");
        detail::take(g, "dim", c.grid_dim, "grid");
        detail::take(g, "points", c.grid_points, "grid");
        detail::reject_leftovers(g, "grid");
    }
    detail::take(j, "modes", c.modes, "");
    if (j.contains("potential")) {
        nlohmann::json p = j["potential"];
        j.erase("potential");
        detail::take(p, "kind", c.potential.kind, "potential");
        detail::take(p, "strength", c.potential.strength, "potential");
        detail::take(p, "width", c.potential.width, "potential");
        detail::reject_leftovers(p, "potential");
    }
    detail::take(j, "n_max", c.n_max, "");
    detail::take(j, "epsilons", c.epsilons, "");
    if (j.contains("family")) {
        nlohmann::json f = j["family"];
        j.erase("family");
        if (f.contains("kind")) {
            std::string kind = f["kind"].get<std::string>();
            f.erase("kind");
            try {
                c.family.kind = state_kind_from(kind);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
        if (f.contains("psi1")) {
            c.family.psi1 = detail::cx_from_json(f["psi1"], "family.psi1");
            f.erase("psi1");
        }
        if (f.contains("psi2")) {
            c.family.psi2 = detail::cx_from_json(f["psi2"], "family.psi2");
            f.erase("psi2");
        }
        if (f.contains("z0")) {
            c.family.z0 = detail::cx_from_json(f["z0"], "family.z0");
            f.erase("z0");
        }
        detail::take(f, "target1", c.family.target1, "family");
        detail::take(f, "target2", c.family.target2, "family");
        detail::take(f, "contraction", c.family.contraction, "family");
        detail::reject_leftovers(f, "family");
    }
    if (j.contains("panel")) {
        nlohmann::json p = j["panel"];
        j.erase("panel");
        if (p.contains("xis")) {
            if (!p["xis"].is_array()) throw ConfigError("config: panel.xis must be an array");
            c.panel_xis.clear();
            for (const auto& xi : p["xis"]) c.panel_xis.push_back(detail::cx_from_json(xi, "panel.xis"));
            p.erase("xis");
        }
        detail::take(p, "xi_bound", c.xi_bound, "panel");
        detail::reject_leftovers(p, "panel");
    }
    detail::take(j, "times", c.times, "");
    if (j.contains("flow")) {
        nlohmann::json f = j["flow"];
        j.erase("flow");
        detail::take(f, "integrator", c.integrator, "flow");
        detail::take(f, "dt", c.dt, "flow");
        detail::take(f, "blowup_threshold", c.blowup_threshold, "flow");
        detail::reject_leftovers(f, "flow");
    }
    detail::take(j, "resolution", c.resolution, "");
    detail::take(j, "output_dir", c.output_dir, "");
    detail::take(j, "seed", c.seed, "");
    if (j.contains("tolerances")) {
        nlohmann::json t = j["tolerances"];
        j.erase("tolerances");
        detail::take(t, "invariant", c.tolerances.invariant, "tolerances");
        detail::take(t, "drift", c.tolerances.drift, "tolerances");
        detail::take(t, "final_error", c.tolerances.final_error, "tolerances");
        detail::reject_leftovers(t, "tolerances");
    }
    detail::reject_leftovers(j, "");
    c.validate();
    return c;
}

inline std::string config_text(const ExperimentConfig& c) { return config_json(c).dump(2) + "\n"; }

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& extension) {
    nlohmann::json j;
    if (extension == ".json") {
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    } else if (extension == ".toml") {
        try {
            j = toml::parse_string(text);
        } catch (const std::runtime_error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    } else {
        throw ConfigError("config: unsupported extension '" + extension + "' (use .toml or .json)");
    }
    return config_from_json(std::move(j));
}

inline ExperimentConfig load_config(const std::string& path) {
    const size_t dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), ext);
}

}  // namespace mflab
