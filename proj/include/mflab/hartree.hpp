#pragma once

// Classical mean-field flow on the periodic grid:
//
//   i dz/dt = -Laplacian z + (V * |z|^2) z ,
//
// with the convolution taken over the torus. Mass is the quadrature integral of
// |z|^2 and the conserved energy is kinetic plus (1/2) <|z|^2, V * |z|^2>.
//
// Two integrators are provided. splitstep is Strang splitting: a half step of
// the free flow e^{i t Laplacian}, a full nonlinear phase with the density
// frozen (exact for that sub-flow, since a pure phase leaves |z| unchanged),
// and another half free step. rk4_interaction transforms to w = e^{-i t Lap} z,
// whose equation of motion is dw/dt = -i v(t, w) with the interaction-picture
// vector field
//
//   v(t, w) = e^{-i t Lap} [ (V * |u|^2) u ],   u = e^{i t Lap} w ,
//
// and applies classical RK4 to w. The field v obeys two closed bounds with
// grid-computable constants,
//
//   |v(t,z)|_{L2} <= C0 |z|_{L2}^2 |z|_{H1},   C0 = || V (1-Lap)^{-1/2} || ,
//   |v(t,z)|_{H1} <= C1 |z|_{L2}^2 |z|_{H1},   C1 = || (1-Lap)^{1/2} V (1-Lap)^{-1/2} || ,
//
// because V * rho is a superposition of translates of V weighted by the density
// and translations commute with the Sobolev multipliers. velocity_bound_report
// checks both inequalities for a given state.
//
// galerkin_flow evolves coefficients on a retained mode band instead: RK4 on
// i dz/dt = kappa . z + grad_{conj(z)} <m2(z), B m2(z)> with m2 the normalized
// degree-2 monomials, which is the restriction of the grid flow to the band
// when the potential only transfers momenta inside it.
//
// Flows record every accepted step (state, time, mass, energy) and abort by
// throwing when the H1 norm passes the blow-up threshold.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflab/combinatorics.hpp"
#include "mflab/common.hpp"
#include "mflab/grid.hpp"
#include "mflab/phase_space.hpp"

namespace mflab {

// grid field or retained-mode coefficient vector at a fixed time
struct ClassicalState {
    Vec data;
    double time = 0.0;
};

enum class Integrator { splitstep, rk4_interaction };

inline const char* to_string(Integrator i) {
    return i == Integrator::splitstep ? "splitstep" : "rk4_interaction";
}

inline Integrator integrator_from(const std::string& s) {
    if (s == "splitstep") return Integrator::splitstep;
    if (s == "rk4_interaction") return Integrator::rk4_interaction;
    throw std::invalid_argument("unknown integrator: " + s);
}

struct FlowConfig {
    Integrator integrator = Integrator::splitstep;
    double dt = 1e-3;
    int galerkin_modes = 0;          // retained band size for the mode-space flow; 0 = full grid
    double blowup_threshold = 1e6;   // abort when the H1 norm passes this
};

// ---------------------------------------------------------------------------
// quadrature functionals

inline double grid_mass(const Grid& g, const Vec& z) { return std::real(quad_inner(g, z, z)); }

inline double grid_kinetic_energy(const Grid& g, const Vec& z) {
    Vec zh = dft_forward(g, z);
    double s = 0.0;
    for (Eigen::Index i = 0; i < zh.size(); ++i) s += grid_kinetic_eig(g, i) * std::norm(zh[i]);
    return g.cell() / static_cast<double>(g.npoints()) * s;
}

inline double grid_h1_norm(const Grid& g, const Vec& z) {
    Vec zh = dft_forward(g, z);
    double s = 0.0;
    for (Eigen::Index i = 0; i < zh.size(); ++i)
        s += (1.0 + grid_kinetic_eig(g, i)) * std::norm(zh[i]);
    return std::sqrt(g.cell() / static_cast<double>(g.npoints()) * s);
}

inline double grid_interaction_energy(const PairPotential& pot, const Vec& z) {
    const Grid& g = pot.grid();
    Vec rho = z.cwiseAbs2().cast<cxd>();
    RVec phi = convolve_density(pot, rho).real();
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += std::real(rho[i]) * phi[i];
    return 0.5 * g.cell() * s;
}

inline double grid_energy(const PairPotential& pot, const Vec& z) {
    return grid_kinetic_energy(pot.grid(), z) + grid_interaction_energy(pot, z);
}

// ---------------------------------------------------------------------------
// free flow and interaction-picture vector field

// e^{i t Laplacian}: multiplies Fourier mode k by e^{-i t |2 pi k / L|^2}
inline Vec free_evolve(const Grid& g, const Vec& z, double t) {
    if (z.size() != g.npoints()) throw std::invalid_argument("free_evolve: field size mismatch");
    Vec s = dft_forward(g, z);
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] *= std::polar(1.0, -t * grid_kinetic_eig(g, i));
    return dft_inverse(g, s);
}

// v(t, w) = e^{-i t Lap} [ (V * |u|^2) u ] with u = e^{i t Lap} w
inline Vec hartree_velocity(const PairPotential& pot, double t, const Vec& w) {
    const Grid& g = pot.grid();
    Vec u = free_evolve(g, w, t);
    Vec rho = u.cwiseAbs2().cast<cxd>();
    RVec phi = convolve_density(pot, rho).real();
    Vec f(u.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) f[j] = phi[j] * u[j];
    return free_evolve(g, f, -t);
}

struct VelocityBoundReport {
    double l2_value = 0.0;         // |v|_{L2}
    double l2_bound = 0.0;         // C0 |z|_{L2}^2 |z|_{H1}
    double h1_value = 0.0;         // |v|_{H1}
    double h1_bound = 0.0;         // C1 |z|_{L2}^2 |z|_{H1}
    double smoothing_norm = 0.0;   // C0 = || V (1-Lap)^{-1/2} ||
    double conjugated_norm = 0.0;  // C1 = || (1-Lap)^{1/2} V (1-Lap)^{-1/2} ||
    bool ok = false;
};

inline VelocityBoundReport velocity_bound_report(const PairPotential& pot, double t, const Vec& z) {
    const Grid& g = pot.grid();
    VelocityBoundReport r;
    Vec v = hartree_velocity(pot, t, z);
    r.smoothing_norm = grid_vsob_norm(pot);
    r.conjugated_norm = grid_vsob_conjugated_norm(pot);
    const double mass = grid_mass(g, z);
    const double h1 = grid_h1_norm(g, z);
    r.l2_value = quad_norm(g, v);
    r.h1_value = grid_h1_norm(g, v);
    r.l2_bound = r.smoothing_norm * mass * h1;
    r.h1_bound = r.conjugated_norm * mass * h1;
    r.ok = r.l2_value <= r.l2_bound * (1.0 + 1e-12) && r.h1_value <= r.h1_bound * (1.0 + 1e-12);
    return r;
}

// ---------------------------------------------------------------------------
// trajectories

struct Trajectory {
    std::vector<ClassicalState> states;  // every accepted step, initial state first
    RVec masses;                         // mass at each recorded state
    RVec energies;                       // energy at each recorded state
    double mass_drift = 0.0;             // max relative deviation from the initial mass
    double energy_drift = 0.0;           // max relative deviation from the initial energy
};

namespace detail {

// step boundaries t0, t0 + dt, ..., t1; a shorter padded final step when dt
// does not divide t1 - t0, and steps run backward when t1 < t0
inline std::vector<double> step_times(double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("FlowConfig: dt must be positive");
    const double span = t1 - t0;
    const double asp = std::abs(span);
    const double sgn = span < 0.0 ? -1.0 : 1.0;
    auto nfull = static_cast<long>(std::floor(asp / dt + 1e-9));
    double rem = asp - static_cast<double>(nfull) * dt;
    if (rem <= 1e-12 * dt) rem = 0.0;
    std::vector<double> ts;
    ts.reserve(static_cast<size_t>(nfull) + 2);
    ts.push_back(t0);
    for (long k = 1; k <= nfull; ++k) ts.push_back(t0 + sgn * dt * static_cast<double>(k));
    if (rem > 0.0)
        ts.push_back(t1);
    else if (nfull > 0)
        ts.back() = t1;
    return ts;
}

inline double relative_deviation(double value, double base) {
    const double d = std::abs(value - base);
    return std::abs(base) > 0.0 ? d / std::abs(base) : d;
}

}  // namespace detail

inline Trajectory hartree_flow(const PairPotential& pot, const Vec& z0, double t0, double t1,
                               const FlowConfig& cfg) {
    const Grid& g = pot.grid();
    if (z0.size() != g.npoints()) throw std::invalid_argument("hartree_flow: field size mismatch");
    if (!z0.allFinite()) throw std::invalid_argument("hartree_flow: initial state is not finite");
    const std::vector<double> ts = detail::step_times(t0, t1, cfg.dt);
    const auto m = static_cast<Eigen::Index>(ts.size());

    Trajectory out;
    out.states.reserve(ts.size());
    out.masses = RVec(m);
    out.energies = RVec(m);
    auto record = [&](const Vec& z, double t, Eigen::Index k) {
        const double h1 = grid_h1_norm(g, z);
        if (!(h1 <= cfg.blowup_threshold))
            throw std::runtime_error(
                strf("hartree_flow: H1 norm %.3e tripped the blow-up guard at t = %.6g", h1, t));
        out.states.push_back({z, t});
        out.masses[k] = grid_mass(g, z);
        out.energies[k] = grid_energy(pot, z);
        out.mass_drift = std::max(out.mass_drift, detail::relative_deviation(out.masses[k], out.masses[0]));
        out.energy_drift =
            std::max(out.energy_drift, detail::relative_deviation(out.energies[k], out.energies[0]));
    };

    if (cfg.integrator == Integrator::splitstep) {
        Vec z = z0;
        record(z, ts[0], 0);
        for (Eigen::Index k = 1; k < m; ++k) {
            const double h = ts[static_cast<size_t>(k)] - ts[static_cast<size_t>(k - 1)];
            z = free_evolve(g, z, 0.5 * h);
            Vec rho = z.cwiseAbs2().cast<cxd>();
            RVec phi = convolve_density(pot, rho).real();
            for (Eigen::Index j = 0; j < z.size(); ++j) z[j] *= std::polar(1.0, -h * phi[j]);
            z = free_evolve(g, z, 0.5 * h);
            record(z, ts[static_cast<size_t>(k)], k);
        }
    } else {
        auto f = [&](double t, const Vec& w) { return Vec(-iu * hartree_velocity(pot, t, w)); };
        Vec w = free_evolve(g, z0, -ts[0]);
        record(z0, ts[0], 0);
        for (Eigen::Index k = 1; k < m; ++k) {
            const double t = ts[static_cast<size_t>(k - 1)];
            const double h = ts[static_cast<size_t>(k)] - t;
            Vec k1 = f(t, w);
            Vec k2 = f(t + 0.5 * h, Vec(w + 0.5 * h * k1));
            Vec k3 = f(t + 0.5 * h, Vec(w + 0.5 * h * k2));
            Vec k4 = f(t + h, Vec(w + h * k3));
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            record(free_evolve(g, w, ts[static_cast<size_t>(k)]), ts[static_cast<size_t>(k)], k);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// retained-band flow on mode coefficients

inline double mode_mass(const Vec& z) { return z.squaredNorm(); }

// <z, kappa z> + <m2(z), B m2(z)> with m2 the normalized degree-2 monomials
inline double mode_energy(const RVec& kappa, const Mat& pair_kernel, const Vec& z) {
    OccBasis basis(static_cast<int>(kappa.size()), 2);
    Vec m2 = basis.monomials(z);
    double quad = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) quad += kappa[j] * std::norm(z[j]);
    return quad + std::real(m2.dot(pair_kernel * m2));
}

namespace detail {

inline Vec galerkin_field(const OccBasis& basis, const RVec& kappa, const Mat& pair_kernel,
                          const Vec& z) {
    Vec bm = pair_kernel * basis.monomials(z);
    Vec w(z.size());
    for (int j = 0; j < static_cast<int>(z.size()); ++j)
        w[j] = kappa[j] * z[j] + basis.monomials_dz(z, j).dot(bm);
    return Vec(-iu * w);
}

}  // namespace detail

// mode-space vector field dz/dt = -i (kappa . z + grad_{conj z} <m2(z), B m2(z)>)
inline Vec galerkin_velocity(const RVec& kappa, const Mat& pair_kernel, const Vec& z) {
    OccBasis basis(static_cast<int>(kappa.size()), 2);
    if (pair_kernel.rows() != basis.dim() || pair_kernel.cols() != basis.dim())
        throw std::invalid_argument("galerkin_velocity: pair kernel dimension mismatch");
    if (z.size() != kappa.size()) throw std::invalid_argument("galerkin_velocity: size mismatch");
    return detail::galerkin_field(basis, kappa, pair_kernel, z);
}

// RK4 on i dz/dt = kappa . z + grad_{conj(z)} <m2(z), B m2(z)>, the restriction
// of the mean-field flow to the retained mode band
inline Trajectory galerkin_flow(const RVec& kappa, const Mat& pair_kernel, const Vec& z0, double t0,
                                double t1, const FlowConfig& cfg) {
    const auto d = static_cast<int>(kappa.size());
    if (d < 1) throw std::invalid_argument("galerkin_flow: need at least one mode");
    OccBasis basis(d, 2);
    if (pair_kernel.rows() != basis.dim() || pair_kernel.cols() != basis.dim())
        throw std::invalid_argument("galerkin_flow: pair kernel dimension mismatch");
    if (max_abs(Mat(pair_kernel - pair_kernel.adjoint())) > 1e-10 * (1.0 + max_abs(pair_kernel)))
        throw std::invalid_argument("galerkin_flow: pair kernel must be Hermitian");
    if (z0.size() != d) throw std::invalid_argument("galerkin_flow: coefficient count mismatch");
    if (!z0.allFinite()) throw std::invalid_argument("galerkin_flow: initial state is not finite");

    auto sobolev_norm = [&](const Vec& z) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < z.size(); ++j) s += (1.0 + std::abs(kappa[j])) * std::norm(z[j]);
        return std::sqrt(s);
    };
    auto f = [&](const Vec& z) { return detail::galerkin_field(basis, kappa, pair_kernel, z); };

    const std::vector<double> ts = detail::step_times(t0, t1, cfg.dt);
    const auto m = static_cast<Eigen::Index>(ts.size());
    Trajectory out;
    out.states.reserve(ts.size());
    out.masses = RVec(m);
    out.energies = RVec(m);
    auto record = [&](const Vec& z, double t, Eigen::Index k) {
        const double s = sobolev_norm(z);
        if (!(s <= cfg.blowup_threshold))
            throw std::runtime_error(
                strf("galerkin_flow: mode norm %.3e tripped the blow-up guard at t = %.6g", s, t));
        out.states.push_back({z, t});
        out.masses[k] = mode_mass(z);
        out.energies[k] = mode_energy(kappa, pair_kernel, z);
        out.mass_drift = std::max(out.mass_drift, detail::relative_deviation(out.masses[k], out.masses[0]));
        out.energy_drift =
            std::max(out.energy_drift, detail::relative_deviation(out.energies[k], out.energies[0]));
    };

    Vec z = z0;
    record(z, ts[0], 0);
    for (Eigen::Index k = 1; k < m; ++k) {
        const double h = ts[static_cast<size_t>(k)] - ts[static_cast<size_t>(k - 1)];
        Vec k1 = f(z);
        Vec k2 = f(Vec(z + 0.5 * h * k1));
        Vec k3 = f(Vec(z + 0.5 * h * k2));
        Vec k4 = f(Vec(z + h * k3));
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        record(z, ts[static_cast<size_t>(k)], k);
    }
    return out;
}

// ---------------------------------------------------------------------------
// export

// Rows "t,mass,energy,re_j,im_j,..." for up to max_components state entries,
// evenly downsampled across the component index; every stride-th step plus the
// final one.
inline void trajectory_csv(std::ostream& os, const Trajectory& traj, Eigen::Index max_components = 8,
                           Eigen::Index stride = 1) {
    if (traj.states.empty()) throw std::invalid_argument("trajectory_csv: empty trajectory");
    if (stride < 1) throw std::invalid_argument("trajectory_csv: stride must be >= 1");
    const Eigen::Index ncomp = traj.states.front().data.size();
    const Eigen::Index nc = std::min(std::max<Eigen::Index>(max_components, 0), ncomp);
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < nc; ++j) cols.push_back(j * ncomp / nc);
    os << "t,mass,energy";
    for (Eigen::Index c : cols) os << ",re_" << c << ",im_" << c;
    os << "\n";
    auto row = [&](size_t k) {
        os << fmt_full(traj.states[k].time) << "," << fmt_full(traj.masses[static_cast<Eigen::Index>(k)])
           << "," << fmt_full(traj.energies[static_cast<Eigen::Index>(k)]);
        for (Eigen::Index c : cols) {
            const cxd v = traj.states[k].data[c];
            os << "," << fmt_full(v.real()) << "," << fmt_full(v.imag());
        }
        os << "\n";
    };
    const size_t last = traj.states.size() - 1;
    for (size_t k = 0; k <= last; k += static_cast<size_t>(stride)) row(k);
    if (last % static_cast<size_t>(stride) != 0) row(last);
}

}  // namespace mflab
