#pragma once

// Phase-space measures as weighted point ensembles, identified through their
// characteristic functions
//
//   classical:  sum_k w_k exp(i sqrt(2) Re<xi, z_k>) ,
//   quantum:    Tr[rho W(xi)] on the truncated Fock space,
//
// which agree in the small-epsilon limit for matched state families. The same
// pairing convention is used on both sides; the inverse-Fourier convention
// (test vector scaled by pi sqrt(2), limit pairing exp(2 pi i Re<xi,z>)) is a
// thin wrapper.
//
// Ensembles are pushed forward point by point along the retained-band
// mean-field flow, weights untouched. Distances between ensembles use exact
// optimal transport with the squared Sobolev metric sum_j (1 + kappa_j)|dz_j|^2
// (a flat-metric variant exists for diagnostics): a transportation simplex with
// Bland's pivoting rule, returning the optimal plan's dual certificate so
// callers can assert the reduced costs are nonnegative to tolerance.
//
// liouville_residual checks the weak transport equation
//
//   d/dt int f dmu_t = int df(z; X(z)) dmu_t ,   X = the mode-space vector field,
//
// with the left side by centered differences; an empirical measure transported
// by the flow satisfies the identity exactly, so the residual is pure
// finite-difference error and shrinks at second order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflab/common.hpp"
#include "mflab/fock.hpp"
#include "mflab/hartree.hpp"

namespace mflab {

// ---------------------------------------------------------------------------
// ensembles

struct WeightedPoint {
    double weight = 0.0;
    Vec z;
};

class MeasureEnsemble {
  public:
    MeasureEnsemble(std::vector<WeightedPoint> points, std::uint64_t seed = 0)
        : points_(std::move(points)), seed_(seed) {
        if (points_.empty()) throw std::invalid_argument("MeasureEnsemble: no points");
        const Eigen::Index d = points_.front().z.size();
        double total = 0.0;
        for (const auto& p : points_) {
            if (!(p.weight > 0.0)) throw std::invalid_argument("MeasureEnsemble: weights must be positive");
            if (p.z.size() != d) throw std::invalid_argument("MeasureEnsemble: mode count mismatch");
            if (!p.z.allFinite()) throw std::invalid_argument("MeasureEnsemble: point is not finite");
            total += p.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument(strf("MeasureEnsemble: weights sum to 1 %+.3e", total - 1.0));
    }

    static MeasureEnsemble delta(const Vec& z) { return MeasureEnsemble({{1.0, z}}); }

    // uniform measure on the circle {e^{i theta} psi}, sampled at n equal angles
    static MeasureEnsemble uniform_circle(const Vec& psi, int n_angles) {
        if (n_angles < 1) throw std::invalid_argument("MeasureEnsemble: need at least one angle");
        std::vector<WeightedPoint> pts;
        pts.reserve(static_cast<size_t>(n_angles));
        for (int k = 0; k < n_angles; ++k) {
            const double theta = 2.0 * pi * k / n_angles;
            pts.push_back({1.0 / n_angles, Vec(std::polar(1.0, theta) * psi)});
        }
        return MeasureEnsemble(std::move(pts));
    }

    // n equally weighted complex-Gaussian points of the given scale
    static MeasureEnsemble gaussian_cloud(int d, int n, double scale, std::uint64_t seed) {
        if (n < 1) throw std::invalid_argument("MeasureEnsemble: need at least one point");
        Rng rng(seed);
        std::vector<WeightedPoint> pts;
        pts.reserve(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) pts.push_back({1.0 / n, Vec(scale * rng.cnormal_vec(d))});
        return MeasureEnsemble(std::move(pts), seed);
    }

    const std::vector<WeightedPoint>& points() const { return points_; }
    std::uint64_t seed() const { return seed_; }
    int size() const { return static_cast<int>(points_.size()); }
    int d() const { return static_cast<int>(points_.front().z.size()); }

    // weighted mode-mass moment int |z|^2 dmu
    double mass_moment() const {
        double s = 0.0;
        for (const auto& p : points_) s += p.weight * p.z.squaredNorm();
        return s;
    }

  private:
    std::vector<WeightedPoint> points_;
    std::uint64_t seed_;
};

// test directions and sample times for characteristic-function panels
struct ObservablePanel {
    std::vector<Vec> xis;
    std::vector<double> times;
    double xi_bound = 4.0;

    void validate() const {
        if (xis.empty() || times.empty()) throw std::invalid_argument("ObservablePanel: empty panel");
        for (const Vec& xi : xis)
            if (!(xi.norm() <= xi_bound))
                throw std::invalid_argument(
                    strf("ObservablePanel: |xi| = %.3g exceeds the bound %.3g", xi.norm(), xi_bound));
    }
};

// ---------------------------------------------------------------------------
// characteristic functions

inline cxd classical_char(const MeasureEnsemble& mu, const Vec& xi) {
    if (xi.size() != mu.d()) throw std::invalid_argument("classical_char: mode count mismatch");
    cxd s = 0.0;
    for (const auto& p : mu.points())
        s += p.weight * std::exp(iu * std::sqrt(2.0) * std::real(xi.dot(p.z)));
    return s;
}

struct QuantumChar {
    cxd value;
    double leakage = 0.0;  // protected-window leakage of the Weyl compression
    bool warn = false;     // leakage above 1e-6
};

inline QuantumChar quantum_char(const DensityOp& rho, const Vec& xi) {
    const FockSpace& F = rho.space();
    if (xi.size() != F.d()) throw std::invalid_argument("quantum_char: mode count mismatch");
    WeylOp w = weyl(F, xi);
    const cxd value = (rho.matrix() * w.op.matrix()).trace();
    return {value, w.leakage, w.warn};
}

// inverse-Fourier convention: Tr[rho W(pi sqrt(2) xi)], limit exp(2 pi i Re<xi,z>)
inline QuantumChar quantum_char_fourier(const DensityOp& rho, const Vec& xi) {
    return quantum_char(rho, Vec(pi * std::sqrt(2.0) * xi));
}

// ---------------------------------------------------------------------------
// push-forward

template <typename FlowMap>
MeasureEnsemble pushforward(const MeasureEnsemble& mu, FlowMap&& map) {
    std::vector<WeightedPoint> pts;
    pts.reserve(mu.points().size());
    for (const auto& p : mu.points()) pts.push_back({p.weight, map(p.z)});
    return MeasureEnsemble(std::move(pts), mu.seed());
}

inline MeasureEnsemble pushforward_galerkin(const MeasureEnsemble& mu, const RVec& kappa,
                                            const Mat& pair_kernel, double t0, double t1,
                                            const FlowConfig& cfg) {
    return pushforward(mu, [&](const Vec& z) {
        return galerkin_flow(kappa, pair_kernel, z, t0, t1, cfg).states.back().data;
    });
}

// ---------------------------------------------------------------------------
// exact optimal transport

namespace detail {

struct TransportSolution {
    double cost = 0.0;
    double min_reduced = 0.0;  // dual certificate: >= -tolerance at optimality
    RMat plan;
};

// transportation simplex with Bland's pivoting rule; supplies and demands are
// rescaled to a common total, the basis is kept as a spanning tree of rows and
// columns, and the dual variables certify optimality on exit
inline TransportSolution solve_transport(const RMat& cost, const RVec& a_in, const RVec& b_in) {
    const int m = static_cast<int>(cost.rows()), n = static_cast<int>(cost.cols());
    if (a_in.size() != m || b_in.size() != n)
        throw std::invalid_argument("solve_transport: marginal size mismatch");
    RVec a = a_in, b = b_in;
    if (!(a.minCoeff() > 0.0) || !(b.minCoeff() > 0.0))
        throw std::invalid_argument("solve_transport: marginals must be positive");
    b *= a.sum() / b.sum();

    struct Cell {
        int i, j;
        double flow;
    };
    std::vector<Cell> basis;
    basis.reserve(static_cast<size_t>(m + n - 1));
    {
        RVec ra = a, rb = b;
        int i = 0, j = 0;
        while (true) {
            const double f = std::min(ra[i], rb[j]);
            basis.push_back({i, j, f});
            ra[i] -= f;
            rb[j] -= f;
            if (i == m - 1 && j == n - 1) break;
            if (i < m - 1 && (ra[i] <= rb[j] || j == n - 1))
                ++i;
            else
                ++j;
        }
    }

    std::vector<std::vector<int>> row_cells(static_cast<size_t>(m)), col_cells(static_cast<size_t>(n));
    std::vector<int> cell_of(static_cast<size_t>(m) * static_cast<size_t>(n), -1);
    auto rebuild_adjacency = [&]() {
        for (auto& r : row_cells) r.clear();
        for (auto& c : col_cells) c.clear();
        std::fill(cell_of.begin(), cell_of.end(), -1);
        for (int idx = 0; idx < static_cast<int>(basis.size()); ++idx) {
            row_cells[static_cast<size_t>(basis[static_cast<size_t>(idx)].i)].push_back(idx);
            col_cells[static_cast<size_t>(basis[static_cast<size_t>(idx)].j)].push_back(idx);
            cell_of[static_cast<size_t>(basis[static_cast<size_t>(idx)].i) * static_cast<size_t>(n) +
                    static_cast<size_t>(basis[static_cast<size_t>(idx)].j)] = idx;
        }
    };

    RVec u(m), v(n);
    auto compute_duals = [&]() {
        rebuild_adjacency();
        std::vector<char> udone(static_cast<size_t>(m), 0), vdone(static_cast<size_t>(n), 0);
        std::vector<int> stack{0};
        u[0] = 0.0;
        udone[0] = 1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node < m) {
                for (int idx : row_cells[static_cast<size_t>(node)]) {
                    const int j = basis[static_cast<size_t>(idx)].j;
                    if (!vdone[static_cast<size_t>(j)]) {
                        v[j] = cost(node, j) - u[node];
                        vdone[static_cast<size_t>(j)] = 1;
                        stack.push_back(m + j);
                    }
                }
            } else {
                const int j = node - m;
                for (int idx : col_cells[static_cast<size_t>(j)]) {
                    const int i = basis[static_cast<size_t>(idx)].i;
                    if (!udone[static_cast<size_t>(i)]) {
                        u[i] = cost(i, j) - v[j];
                        udone[static_cast<size_t>(i)] = 1;
                        stack.push_back(i);
                    }
                }
            }
        }
        for (int i = 0; i < m; ++i)
            if (!udone[static_cast<size_t>(i)]) throw std::logic_error("solve_transport: basis not spanning");
        for (int j = 0; j < n; ++j)
            if (!vdone[static_cast<size_t>(j)]) throw std::logic_error("solve_transport: basis not spanning");
    };

    const double tol = 1e-14 * (1.0 + cost.cwiseAbs().maxCoeff());
    const long max_pivots = 200000;
    for (long pivot = 0;; ++pivot) {
        if (pivot >= max_pivots) throw std::runtime_error("solve_transport: pivot limit exceeded");
        compute_duals();
        int ei = -1, ej = -1;
        for (int i = 0; i < m && ei < 0; ++i)
            for (int j = 0; j < n; ++j) {
                if (cell_of[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)] >= 0)
                    continue;
                if (cost(i, j) - u[i] - v[j] < -tol) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        if (ei < 0) break;

        // unique tree path from row node ei to column node m + ej
        std::vector<int> prev_node(static_cast<size_t>(m + n), -2),
            prev_cell(static_cast<size_t>(m + n), -1);
        std::vector<int> stack{ei};
        prev_node[static_cast<size_t>(ei)] = -1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node < m) {
                for (int idx : row_cells[static_cast<size_t>(node)]) {
                    const int to = m + basis[static_cast<size_t>(idx)].j;
                    if (prev_node[static_cast<size_t>(to)] == -2) {
                        prev_node[static_cast<size_t>(to)] = node;
                        prev_cell[static_cast<size_t>(to)] = idx;
                        stack.push_back(to);
                    }
                }
            } else {
                for (int idx : col_cells[static_cast<size_t>(node - m)]) {
                    const int to = basis[static_cast<size_t>(idx)].i;
                    if (prev_node[static_cast<size_t>(to)] == -2) {
                        prev_node[static_cast<size_t>(to)] = node;
                        prev_cell[static_cast<size_t>(to)] = idx;
                        stack.push_back(to);
                    }
                }
            }
        }
        if (prev_node[static_cast<size_t>(m + ej)] == -2)
            throw std::logic_error("solve_transport: entering cell not reachable");
        std::vector<int> path;
        for (int node = m + ej; node != ei; node = prev_node[static_cast<size_t>(node)])
            path.push_back(prev_cell[static_cast<size_t>(node)]);
        std::reverse(path.begin(), path.end());

        // alternating cycle: entering cell +, path cells -. +, -, ...
        double theta = 0.0;
        int leave_pos = -1;
        for (size_t p = 0; p < path.size(); p += 2) {
            const double fl = basis[static_cast<size_t>(path[p])].flow;
            if (leave_pos < 0 || fl < theta) {
                theta = fl;
                leave_pos = static_cast<int>(p);
            }
        }
        for (size_t p = 0; p < path.size(); ++p)
            basis[static_cast<size_t>(path[p])].flow += (p % 2 == 0 ? -theta : theta);
        basis[static_cast<size_t>(path[static_cast<size_t>(leave_pos)])] = {ei, ej, theta};
        for (auto& c : basis)
            if (c.flow < 0.0) c.flow = 0.0;
    }

    TransportSolution sol;
    sol.plan = RMat::Zero(m, n);
    for (const auto& c : basis) sol.plan(c.i, c.j) += c.flow;
    sol.cost = (sol.plan.array() * cost.array()).sum();
    sol.min_reduced = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) sol.min_reduced = std::min(sol.min_reduced, cost(i, j) - u[i] - v[j]);
    return sol;
}

}  // namespace detail

enum class TransportMetric { sobolev, flat };

struct TransportReport {
    double distance = 0.0;          // sqrt of the optimal cost
    double cost = 0.0;              // optimal total squared-metric cost
    double min_reduced_cost = 0.0;  // dual certificate, >= -1e-12 at optimality
};

inline TransportReport wasserstein2_report(const MeasureEnsemble& mu1, const MeasureEnsemble& mu2,
                                           const RVec& kappa,
                                           TransportMetric metric = TransportMetric::sobolev) {
    if (mu1.d() != mu2.d() || kappa.size() != mu1.d())
        throw std::invalid_argument("wasserstein2: mode count mismatch");
    if (mu1.size() > 256 || mu2.size() > 256)
        throw std::invalid_argument("wasserstein2: support exceeds 256 points, subsample the ensembles");
    RVec w = metric == TransportMetric::sobolev ? RVec(kappa.array() + 1.0)
                                                : RVec(RVec::Ones(kappa.size()));
    const int m = mu1.size(), n = mu2.size();
    RMat cost(m, n);
    RVec a(m), b(n);
    for (int i = 0; i < m; ++i) a[i] = mu1.points()[static_cast<size_t>(i)].weight;
    for (int j = 0; j < n; ++j) b[j] = mu2.points()[static_cast<size_t>(j)].weight;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec& zi = mu1.points()[static_cast<size_t>(i)].z;
            const Vec& zj = mu2.points()[static_cast<size_t>(j)].z;
            double s = 0.0;
            for (Eigen::Index k = 0; k < zi.size(); ++k) s += w[k] * std::norm(zi[k] - zj[k]);
            cost(i, j) = s;
        }
    detail::TransportSolution sol = detail::solve_transport(cost, a, b);
    if (sol.min_reduced < -1e-9 * (1.0 + cost.cwiseAbs().maxCoeff()))
        throw std::runtime_error("wasserstein2: optimality certificate failed");
    return {std::sqrt(std::max(sol.cost, 0.0)), sol.cost, sol.min_reduced};
}

inline double wasserstein2(const MeasureEnsemble& mu1, const MeasureEnsemble& mu2, const RVec& kappa,
                           TransportMetric metric = TransportMetric::sobolev) {
    return wasserstein2_report(mu1, mu2, kappa, metric).distance;
}

// ---------------------------------------------------------------------------
// weak transport residual

// |d/dt int f dmu_t - int df(z; X(z)) dmu_t| at t = 0 for the ensemble mu, with
// the derivative by centered differences of width fd_dt. f is any observable
// with directional derivative df(z; w) = d/ds f(z + s w) at s = 0.
inline double liouville_residual(const RVec& kappa, const Mat& pair_kernel, const MeasureEnsemble& mu,
                                 const std::function<cxd(const Vec&)>& f,
                                 const std::function<cxd(const Vec&, const Vec&)>& df, double fd_dt,
                                 const FlowConfig& cfg) {
    if (!(fd_dt > 0.0)) throw std::invalid_argument("liouville_residual: fd_dt must be positive");
    cxd plus = 0.0, minus = 0.0, bracket = 0.0;
    for (const auto& p : mu.points()) {
        plus += p.weight * f(galerkin_flow(kappa, pair_kernel, p.z, 0.0, fd_dt, cfg).states.back().data);
        minus += p.weight * f(galerkin_flow(kappa, pair_kernel, p.z, 0.0, -fd_dt, cfg).states.back().data);
        bracket += p.weight * df(p.z, galerkin_velocity(kappa, pair_kernel, p.z));
    }
    return std::abs((plus - minus) / (2.0 * fd_dt) - bracket);
}

// Fourier test function f = exp(i sqrt(2) Re<xi, z>)
inline double liouville_residual(const RVec& kappa, const Mat& pair_kernel, const MeasureEnsemble& mu,
                                 const Vec& xi, double fd_dt, const FlowConfig& cfg) {
    auto f = [xi](const Vec& z) { return std::exp(iu * std::sqrt(2.0) * std::real(xi.dot(z))); };
    auto df = [xi, f](const Vec& z, const Vec& w) {
        return f(z) * iu * std::sqrt(2.0) * std::real(xi.dot(w));
    };
    return liouville_residual(kappa, pair_kernel, mu, f, df, fd_dt, cfg);
}

// ---------------------------------------------------------------------------
// serialization

// rows "weight,re_0,im_0,..." with one line per support point
inline void ensemble_csv(std::ostream& os, const MeasureEnsemble& mu) {
    os << "weight";
    for (int j = 0; j < mu.d(); ++j) os << ",re_" << j << ",im_" << j;
    os << "\n";
    for (const auto& p : mu.points()) {
        os << fmt_full(p.weight);
        for (Eigen::Index j = 0; j < p.z.size(); ++j)
            os << "," << fmt_full(p.z[j].real()) << "," << fmt_full(p.z[j].imag());
        os << "\n";
    }
}

inline MeasureEnsemble read_ensemble_csv(std::istream& is, std::uint64_t seed = 0) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("read_ensemble_csv: empty stream");
    const auto d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') / 2);
    std::vector<WeightedPoint> pts;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        WeightedPoint p;
        p.z = Vec(d);
        if (!(ls >> p.weight)) throw std::invalid_argument("read_ensemble_csv: bad row: " + line);
        for (Eigen::Index j = 0; j < d; ++j) {
            double re, im;
            if (!(ls >> re >> im)) throw std::invalid_argument("read_ensemble_csv: bad row: " + line);
            p.z[j] = cxd(re, im);
        }
        pts.push_back(std::move(p));
    }
    return MeasureEnsemble(std::move(pts), seed);
}

enum class CharSource { quantum, classical };

inline const char* to_string(CharSource s) { return s == CharSource::quantum ? "quantum" : "classical"; }

struct PanelRow {
    double t = 0.0;
    int xi_index = 0;
    cxd value;
    CharSource source = CharSource::classical;
};

// rows "t,xi_index,re,im,source"
inline void panel_csv(std::ostream& os, const std::vector<PanelRow>& rows) {
    os << "t,xi_index,re,im,source\n";
    for (const auto& r : rows)
        os << fmt_full(r.t) << "," << r.xi_index << "," << fmt_full(r.value.real()) << ","
           << fmt_full(r.value.imag()) << "," << to_string(r.source) << "\n";
}

}  // namespace mflab
