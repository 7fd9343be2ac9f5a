#pragma once

// End-to-end experiment drivers behind the command-line tool. Three runners
// share one tabular result format:
//
//   run_convergence  per epsilon: build the family state on the truncated
//                    space, propagate it under the many-body Hamiltonian,
//                    push the limiting measure through the mode-truncated
//                    mean-field flow, and compare characteristic functions
//                    on the observable panel. One row per (eps, t, xi),
//                    one summary row per eps with the sup-panel error and
//                    a step-halving transport distance.
//   run_hartree      integrate the mean-field equation on the grid for the
//                    family representative and track mass/energy drift. The
//                    value columns are reused: the quantum pair holds
//                    (mass, 0), the classical pair (energy, 0), and abs_err
//                    is the larger relative deviation from the start.
//   check_invariants fast in-process identity checks across every module,
//                    one printed line each, exit status style return.
//
// Row order is deterministic (epsilon in config order, then time, then panel
// index) and all writers format floats with fmt_full, so reruns of the same
// config are byte-identical. Failures inside a runner are rethrown with the
// failing stage named.
//
// The summary w2 column reports the distance between push-forwards computed
// at dt and dt/2: the exact optimal-transport value when both supports are
// small enough for the dense solver, and the identity-coupling bound (same
// initial point, two step sizes) for larger ensembles.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflab/common.hpp"
#include "mflab/config.hpp"
#include "mflab/csv.hpp"
#include "mflab/fock.hpp"
#include "mflab/hamiltonian.hpp"
#include "mflab/hartree.hpp"
#include "mflab/measures.hpp"
#include "mflab/phase_space.hpp"
#include "mflab/states.hpp"
#include "mflab/svg.hpp"
#include "mflab/wick.hpp"

namespace mflab {

struct ResultRow {
    std::string id;
    double eps = 0.0;
    double t = 0.0;
    int xi_index = 0;
    cxd quantum;
    cxd classical;
    double abs_err = 0.0;
};

struct SummaryRow {
    double eps = 0.0;
    double sup_error = 0.0;
    double w2 = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
};

// ---------------------------------------------------------------------------
// serialization

inline void result_csv(std::ostream& os, const ResultTable& table) {
    os << "id,eps,t,xi_index,q_re,q_im,c_re,c_im,abs_err\n";
    for (const auto& r : table.rows)
        os << r.id << "," << fmt_full(r.eps) << "," << fmt_full(r.t) << "," << r.xi_index << ","
           << fmt_full(r.quantum.real()) << "," << fmt_full(r.quantum.imag()) << ","
           << fmt_full(r.classical.real()) << "," << fmt_full(r.classical.imag()) << ","
           << fmt_full(r.abs_err) << "\n";
}

inline void summary_csv(std::ostream& os, const ResultTable& table) {
    os << "eps,sup_error,w2\n";
    for (const auto& s : table.summary)
        os << fmt_full(s.eps) << "," << fmt_full(s.sup_error) << "," << fmt_full(s.w2) << "\n";
}

inline ResultTable read_result_csv(std::istream& is) {
    auto cells = read_csv_cells(is);
    if (cells.empty() || cells.front() != std::vector<std::string>{"id", "eps", "t", "xi_index", "q_re",
                                                                   "q_im", "c_re", "c_im", "abs_err"})
        throw std::invalid_argument("read_result_csv: missing result header");
    ResultTable table;
    for (size_t i = 1; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (c.size() != 9) throw std::invalid_argument("read_result_csv: bad row width");
        ResultRow r;
        r.id = c[0];
        r.eps = std::stod(c[1]);
        r.t = std::stod(c[2]);
        r.xi_index = std::stoi(c[3]);
        r.quantum = cxd(std::stod(c[4]), std::stod(c[5]));
        r.classical = cxd(std::stod(c[6]), std::stod(c[7]));
        r.abs_err = std::stod(c[8]);
        table.rows.push_back(std::move(r));
    }
    return table;
}

inline ResultTable read_summary_csv(std::istream& is) {
    auto cells = read_csv_cells(is);
    if (cells.empty() || cells.front() != std::vector<std::string>{"eps", "sup_error", "w2"})
        throw std::invalid_argument("read_summary_csv: missing summary header");
    ResultTable table;
    for (size_t i = 1; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (c.size() != 3) throw std::invalid_argument("read_summary_csv: bad row width");
        table.summary.push_back({std::stod(c[0]), std::stod(c[1]), std::stod(c[2])});
    }
    return table;
}

// ---------------------------------------------------------------------------
// shared pieces

namespace detail {

template <typename Fn>
auto stage(const char* runner, const char* name, double eps, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(strf("%s: stage '%s' failed at eps=%g: %s", runner, name, eps, e.what()));
    }
}

inline Vec panel_vec(const std::vector<cxd>& xi) {
    Vec v(static_cast<Eigen::Index>(xi.size()));
    for (size_t i = 0; i < xi.size(); ++i) v[static_cast<Eigen::Index>(i)] = xi[i];
    return v;
}

// Sobolev-weighted distance under the identity coupling: both ensembles carry
// the same support points in the same order (here: one flow, two step sizes),
// so this bounds the optimal-transport distance from above.
inline double paired_distance(const MeasureEnsemble& a, const MeasureEnsemble& b, const RVec& kappa) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_distance: size mismatch");
    const RVec w = kappa.array() + 1.0;
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const auto& pa = a.points()[static_cast<size_t>(i)];
        const auto& pb = b.points()[static_cast<size_t>(i)];
        double c = 0.0;
        for (Eigen::Index k = 0; k < pa.z.size(); ++k) c += w[k] * std::norm(pa.z[k] - pb.z[k]);
        s += pa.weight * c;
    }
    return std::sqrt(s);
}

// mode coefficients of the point the family concentrates near, used to seed
// the grid-level mean-field run
inline Vec representative_coefficients(const ExperimentConfig& cfg) {
    const auto& fam = cfg.family;
    switch (fam.kind) {
        case StateKind::coherent: return panel_vec(fam.z0);
        case StateKind::hermite: return std::sqrt(fam.target1) * panel_vec(fam.psi1);
        case StateKind::torus:
            return std::sqrt(fam.target1) * panel_vec(fam.psi1) +
                   std::sqrt(fam.target2) * panel_vec(fam.psi2);
        default:
            throw ConfigError(
                "run_hartree: the quasifree family concentrates at the origin; pick a family with a "
                "nonzero representative");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// convergence sweep

inline ResultTable run_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string id = to_string(cfg.family.kind);
    const Grid g = cfg.make_grid();
    const ModeSpace ms = make_mode_space(g, cfg.modes);
    const PairPotential pot = cfg.make_potential(g);
    const Mat B = pair_kernel(ms, pot).matrix();
    const RVec kappa = ms.kinetic();
    const FlowConfig flow = cfg.make_flow();
    const double t_final = *std::max_element(cfg.times.begin(), cfg.times.end());

    ResultTable table;
    for (double eps : cfg.epsilons) {
        StateFamily fam = detail::stage("run_convergence", "family", eps, [&] {
            StateFamily f = cfg.realize_family(eps);
            if (f.modes() != cfg.modes)
                throw std::invalid_argument("family mode count does not match the config");
            return f;
        });
        FockSpace F(ms, cfg.n_max, eps);
        DensityOp rho0 = detail::stage("run_convergence", "state", eps, [&] { return fam.build(F); });
        SectorPropagator prop = detail::stage("run_convergence", "hamiltonian", eps, [&] {
            return SectorPropagator(build_hamiltonian(F, kappa, B));
        });
        MeasureEnsemble mu0 = detail::stage("run_convergence", "measure", eps,
                                            [&] { return fam.limit_measure(eps, cfg.resolution); });

        double sup = 0.0;
        for (double t : cfg.times) {
            DensityOp rho_t = detail::stage("run_convergence", "propagate", eps,
                                            [&] { return prop.apply(rho0, t); });
            MeasureEnsemble mu_t = detail::stage("run_convergence", "pushforward", eps, [&] {
                return pushforward_galerkin(mu0, kappa, B, 0.0, t, flow);
            });
            for (size_t k = 0; k < cfg.panel_xis.size(); ++k) {
                const Vec xi = detail::panel_vec(cfg.panel_xis[k]);
                const cxd q = quantum_char(rho_t, xi).value;
                const cxd c = classical_char(mu_t, xi);
                const double err = std::abs(q - c);
                sup = std::max(sup, err);
                table.rows.push_back({id, eps, t, static_cast<int>(k), q, c, err});
            }
        }

        const double w2 = detail::stage("run_convergence", "transport", eps, [&] {
            FlowConfig halved = flow;
            halved.dt = flow.dt / 2.0;
            MeasureEnsemble coarse = pushforward_galerkin(mu0, kappa, B, 0.0, t_final, flow);
            MeasureEnsemble fine = pushforward_galerkin(mu0, kappa, B, 0.0, t_final, halved);
            if (coarse.size() <= 200) return wasserstein2(coarse, fine, kappa);
            return detail::paired_distance(coarse, fine, kappa);
        });
        table.summary.push_back({eps, sup, w2});
    }
    return table;
}

// ---------------------------------------------------------------------------
// mean-field run on the grid

struct HartreeRun {
    ResultTable table;
    Trajectory trajectory;
};

inline HartreeRun run_hartree(const ExperimentConfig& cfg) {
    cfg.validate();
    const Grid g = cfg.make_grid();
    const ModeSpace ms = make_mode_space(g, cfg.modes);
    const PairPotential pot = cfg.make_potential(g);
    const Vec field0 = ms.synthesize(detail::representative_coefficients(cfg));
    const double t_final = *std::max_element(cfg.times.begin(), cfg.times.end());

    HartreeRun run;
    run.trajectory = detail::stage("run_hartree", "flow", 0.0, [&] {
        return hartree_flow(pot, field0, 0.0, t_final, cfg.make_flow());
    });
    const Trajectory& traj = run.trajectory;
    const double m0 = traj.masses[0], e0 = traj.energies[0];
    for (double t : cfg.times) {
        size_t best = 0;
        for (size_t k = 1; k < traj.states.size(); ++k)
            if (std::abs(traj.states[k].time - t) < std::abs(traj.states[best].time - t)) best = k;
        const auto idx = static_cast<Eigen::Index>(best);
        const double mass = traj.masses[idx], energy = traj.energies[idx];
        const double dev = std::max(detail::relative_deviation(mass, m0),
                                    detail::relative_deviation(energy, e0));
        run.table.rows.push_back(
            {"hartree", 0.0, traj.states[best].time, 0, cxd(mass, 0.0), cxd(energy, 0.0), dev});
    }
    run.table.summary.push_back({0.0, std::max(traj.mass_drift, traj.energy_drift), 0.0});
    return run;
}

// ---------------------------------------------------------------------------
// invariant suite

struct InvariantCheck {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool ok = false;
};

inline std::vector<InvariantCheck> invariant_suite(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<InvariantCheck> checks;
    auto push = [&](const std::string& name, double value, double bound) {
        checks.push_back({name, value, bound, value <= bound});
    };
    const double tol = cfg.tolerances.invariant;
    Rng rng(cfg.seed);

    // mode-pair commutation below the top sector
    {
        FockSpace F(make_mode_space(Grid(2.0 * pi, 1, 8), 2), 6, 0.3);
        const Eigen::Index off = F.offset(F.n_max());
        double worst = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                Vec ei = Vec::Zero(2), ej = Vec::Zero(2);
                ei[i] = 1.0;
                ej[j] = 1.0;
                Mat C = commutator(annihilate(F, ei), create(F, ej)).matrix().topLeftCorner(off, off);
                if (i == j) C -= F.epsilon() * Mat::Identity(off, off);
                worst = std::max(worst, max_abs(C));
            }
        push("ccr_pairing", worst, tol);
    }

    // displacement composition law on a deep space
    {
        FockSpace F(make_mode_space(Grid(2.0 * pi, 1, 8), 2), 24, 0.05);
        Vec f = rng.cnormal_vec(2), h = rng.cnormal_vec(2);
        f *= 0.7 / f.norm();
        h *= 0.7 / h.norm();
        FockVector om = FockVector::vacuum(F);
        FockVector lhs = weyl_apply(F, f, weyl_apply(F, h, om));
        FockVector rhs = weyl_apply(F, Vec(f + h), om);
        const cxd phase = std::exp(-iu * (F.epsilon() / 2.0) * f.dot(h).imag());
        push("weyl_composition", (lhs.flat() - phase * rhs.flat()).norm(), tol);
    }

    // quadratic symbol |z|^2 quantizes to the number operator
    {
        FockSpace F(make_mode_space(Grid(2.0 * pi, 1, 4), 1), 10, 0.25);
        Mat diff = wick_quantize(F, wick_of_quadratic(Mat::Identity(1, 1))).matrix() -
                   number_op(F).matrix();
        push("wick_number_identity", max_abs(diff), tol);
    }

    // symbol composition reproduces the operator product
    {
        FockSpace F(make_mode_space(Grid(2.0 * pi, 1, 8), 2), 6, 0.45);
        Mat A = rng.cnormal_vec(4).reshaped(2, 2);
        Mat C = rng.cnormal_vec(4).reshaped(2, 2);
        WickSymbol ba = wick_of_quadratic(A), bc = wick_of_quadratic(C);
        Mat got = wick_quantize(F, compose(ba, bc, F.epsilon())).matrix();
        Mat want = wick_quantize(F, ba).matrix() * wick_quantize(F, bc).matrix();
        push("wick_composition", max_abs(Mat(got - want)) / (1.0 + max_abs(want)), tol);
    }

    // quadratic-symbol bound relative to the number scale
    {
        Mat A = rng.cnormal_vec(4).reshaped(2, 2);
        FockSpace F(make_mode_space(Grid(2.0 * pi, 1, 8), 2), 8, 0.3);
        NumberEstimate est = number_estimate_check(F, wick_of_quadratic(A));
        push("number_estimate", est.sandwiched_norm - est.symbol_norm, tol);
    }

    // config-driven many-body generator and its propagation
    const Grid g = cfg.make_grid();
    const ModeSpace ms = make_mode_space(g, cfg.modes);
    const PairPotential pot = cfg.make_potential(g);
    const Mat B = pair_kernel(ms, pot).matrix();
    const RVec kappa = ms.kinetic();
    {
        const double eps = cfg.epsilons.front();
        FockSpace F(ms, std::min(cfg.n_max, 6), eps);
        ManyBodyHamiltonian H = build_hamiltonian(F, kappa, B);
        push("hamiltonian_hermitian", max_abs(Mat(H.op.matrix() - H.op.matrix().adjoint())), tol);
        SectorPropagator prop(H);
        Mat U = prop.evolution(0.37).matrix();
        push("evolution_unitary", max_abs(Mat(U.adjoint() * U - Mat::Identity(F.dim(), F.dim()))), tol);
        Vec zsmall = 0.35 * rng.cnormal_vec(cfg.modes);
        DensityOp rho0 = coherent_state(zsmall, F);
        const double E0 = std::real(expectation(rho0, H.op));
        const double E1 = std::real(expectation(prop.apply(rho0, 0.5), H.op));
        push("energy_conservation", std::abs(E1 - E0) / (1.0 + std::abs(E0)), cfg.tolerances.drift);
    }

    // grid-level mean-field conservation
    {
        Vec c0;
        try {
            c0 = detail::representative_coefficients(cfg);
        } catch (const ConfigError&) {
            c0 = 0.4 * rng.cnormal_vec(cfg.modes);
        }
        Trajectory traj = hartree_flow(pot, ms.synthesize(c0), 0.0, 0.25, cfg.make_flow());
        push("hartree_drift", std::max(traj.mass_drift, traj.energy_drift), cfg.tolerances.drift);
    }

    // mode-truncated flow reduces to exact phase rotation without interaction
    {
        const Mat B0 = Mat::Zero(B.rows(), B.cols());
        Vec z0 = 0.5 * rng.cnormal_vec(cfg.modes);
        Trajectory traj = galerkin_flow(kappa, B0, z0, 0.0, 0.4, cfg.make_flow());
        Vec zt = traj.states.back().data;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < z0.size(); ++j)
            worst = std::max(worst, std::abs(zt[j] - std::exp(-iu * (kappa[j] * 0.4)) * z0[j]));
        push("free_flow_phases", worst, tol);
    }

    // transport solver against exhaustive assignment on a small support
    {
        RVec kappa2(2);
        kappa2 << 0.0, 1.0;
        std::vector<WeightedPoint> pa, pb;
        for (int k = 0; k < 4; ++k) {
            pa.push_back({0.25, Vec(rng.cnormal_vec(2))});
            pb.push_back({0.25, Vec(rng.cnormal_vec(2))});
        }
        MeasureEnsemble ma(pa), mb(pb);
        const RVec w = kappa2.array() + 1.0;
        std::array<int, 4> perm = {0, 1, 2, 3};
        double best = std::numeric_limits<double>::infinity();
        do {
            double c = 0.0;
            for (int i = 0; i < 4; ++i) {
                const Vec& zi = pa[static_cast<size_t>(i)].z;
                const Vec& zj = pb[static_cast<size_t>(perm[static_cast<size_t>(i)])].z;
                for (Eigen::Index k = 0; k < 2; ++k) c += 0.25 * w[k] * std::norm(zi[k] - zj[k]);
            }
            best = std::min(best, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
        push("transport_exact", std::abs(wasserstein2(ma, mb, kappa2) - std::sqrt(best)), tol);
    }

    // weak transport identity at the initial time
    {
        MeasureEnsemble mu = MeasureEnsemble::gaussian_cloud(cfg.modes, 8, 0.4, cfg.seed);
        Vec xi = Vec::Zero(cfg.modes);
        xi[0] = 0.8;
        push("liouville_defect", liouville_residual(kappa, B, mu, xi, 1e-3, cfg.make_flow()), 1e-4);
    }

    // two-mode product state reduces to the occupancy mixture
    {
        FockSpace F(make_mode_space(Grid(2.0 * pi, 1, 8), 2), 6, 0.3);
        Vec e0 = Vec::Zero(2), e1 = Vec::Zero(2);
        e0[0] = 1.0;
        e1[1] = 1.0;
        DensityOp rho = torus_state(e0, 2, e1, 1, F);
        Mat want = (2.0 * e0 * e0.adjoint() + 1.0 * e1 * e1.adjoint()) / 3.0;
        push("torus_reduction", max_abs(Mat(rdm(rho, 1) - want)), tol);
    }

    // quasifree pair correlation against its closed form
    {
        FockSpace F(make_mode_space(Grid(2.0 * pi, 1, 8), 2), 20, 0.3);
        RVec t(2);
        t << 0.3, 0.2;
        DensityOp rho = quasifree_state(t, F);
        Mat T = t.cast<cxd>().asDiagonal();
        Vec f = rng.cnormal_vec(2), h = rng.cnormal_vec(2);
        cxd lhs = expectation(rho, create(F, f) * annihilate(F, h));
        push("quasifree_pairing", std::abs(lhs - quasifree_two_point(T, F.epsilon(), f, h)), tol);
    }

    // wire-format identity for the configuration itself
    {
        const std::string once = config_text(cfg);
        std::string twice;
        try {
            twice = config_text(parse_config_text(once, ".json"));
        } catch (const ConfigError&) {
            twice = "";
        }
        push("config_roundtrip", once == twice ? 0.0 : 1.0, 0.5);
    }

    return checks;
}

inline int check_invariants(const ExperimentConfig& cfg, std::ostream& os) {
    int failures = 0;
    for (const auto& c : invariant_suite(cfg)) {
        os << (c.ok ? "ok   " : "FAIL ") << c.name << "  value=" << strf("%.3e", c.value)
           << " bound=" << strf("%.3e", c.bound) << "\n";
        if (!c.ok) ++failures;
    }
    os << (failures == 0 ? "all invariants hold\n" : strf("%d invariant(s) failed\n", failures));
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// plots

inline void plot_convergence(std::ostream& os, const ResultTable& table) {
    if (table.summary.empty()) throw std::invalid_argument("plot: empty table");
    PlotAxes axes;
    axes.title = "sup-panel error vs eps";
    axes.xlabel = "eps";
    axes.ylabel = "error";
    axes.log_x = true;
    axes.log_y = true;
    PlotSeries err{"sup_error", {}}, w2{"w2", {}};
    for (const auto& s : table.summary) {
        if (s.sup_error > 0.0) err.points.push_back({s.eps, s.sup_error});
        if (s.w2 > 0.0) w2.points.push_back({s.eps, s.w2});
    }
    std::vector<PlotSeries> series;
    if (!err.points.empty()) series.push_back(std::move(err));
    if (!w2.points.empty()) series.push_back(std::move(w2));
    if (series.empty()) throw std::invalid_argument("plot: no positive values to draw on log axes");
    svg_line_chart(os, axes, series);
}

inline void plot_hartree(std::ostream& os, const ResultTable& table) {
    if (table.rows.empty()) throw std::invalid_argument("plot: empty table");
    PlotAxes axes;
    axes.title = "mean-field conserved quantities";
    axes.xlabel = "t";
    axes.ylabel = "value";
    PlotSeries mass{"mass", {}}, energy{"energy", {}};
    for (const auto& r : table.rows) {
        mass.points.push_back({r.t, r.quantum.real()});
        energy.points.push_back({r.t, r.classical.real()});
    }
    svg_line_chart(os, axes, {mass, energy});
}

inline void plot(std::ostream& os, const ResultTable& table, const std::string& kind) {
    if (kind == "convergence") return plot_convergence(os, table);
    if (kind == "hartree") return plot_hartree(os, table);
    throw std::invalid_argument("plot: unknown kind '" + kind + "' (use convergence or hartree)");
}

// ---------------------------------------------------------------------------
// file outputs

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

}  // namespace detail

inline void write_convergence_outputs(const ExperimentConfig& cfg, const ResultTable& table) {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    std::ostringstream rows, summary, svg;
    result_csv(rows, table);
    summary_csv(summary, table);
    plot_convergence(svg, table);
    detail::write_text(dir / "results.csv", rows.str());
    detail::write_text(dir / "summary.csv", summary.str());
    detail::write_text(dir / "convergence.svg", svg.str());
}

inline void write_hartree_outputs(const ExperimentConfig& cfg, const HartreeRun& run) {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    std::ostringstream rows, summary, traj, svg;
    result_csv(rows, run.table);
    summary_csv(summary, run.table);
    trajectory_csv(traj, run.trajectory, 8, 10);
    plot_hartree(svg, run.table);
    detail::write_text(dir / "results.csv", rows.str());
    detail::write_text(dir / "summary.csv", summary.str());
    detail::write_text(dir / "trajectory.csv", traj.str());
    detail::write_text(dir / "hartree.svg", svg.str());
}

}  // namespace mflab
