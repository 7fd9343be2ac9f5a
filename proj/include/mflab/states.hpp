#pragma once

// State families with known phase-space limits, their reduced density
// matrices, and the mean-field limits of those matrices.
//
//   hermite_state   |psi^{(x)n}><...|       limit: circle average at sqrt(eps n) psi
//   coherent_state  displaced vacuum E(z0)  limit: point mass at z0
//   torus_state     two orthogonal modes    limit: product of circle averages
//                   at occupations n1, n2
//   quasifree_state Gamma(T)/Tr[Gamma(T)]   limit (fixed T): point mass at 0
//
// The quasifree family is Gibbs-like: Gamma(T) acts on sector n as the n-fold
// symmetric power of the mode contraction T (0 <= T < 1). Its exact
// characteristic function and two-point function,
//
//   Tr[rho W(f)]        = exp(-eps <f, (1+T)(1-T)^{-1} f> / 4),
//   Tr[rho a*(f) a(g)]  = eps <g, T(1-T)^{-1} f>,
//
// are provided as closed forms so large mode sets can be swept without dense
// Fock towers; tests tie them to the dense build on small spaces.
//
// The condensate (bec_*) parameterization drives the quasifree family along
// epsilon: T = (1 - eps/nu_c) exp(-eps^{1/dim} A) with A the diagonal of
// lattice shell levels |k|_1 on a fixed retained set k in N^dim. Its
// occupation stays order one in the condensate mode while every thermal mode
// contributes o(1), so the characteristic function approaches a Gaussian in
// the condensate coordinate alone; the retained thermal modes carry a
// positive occupation defect that the phase-space limit does not see.
//
// Reduced matrices: rdm(rho, p) assembles the p-particle matrix from
// normal-ordered ladder moments Tr[rho a*^beta a^alpha] on the occupation
// basis of the p-particle sector, normalized to unit trace; a vanishing
// normalizer returns the zero matrix by convention. limit_rdm(mu, p) is the
// ensemble analogue sum_k w_k |z_k^{(x)p}><z_k^{(x)p}| / sum_k w_k |z_k|^{2p}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mflab/combinatorics.hpp"
#include "mflab/common.hpp"
#include "mflab/fock.hpp"
#include "mflab/measures.hpp"

namespace mflab {

// occupation count realizing eps * n ~= target along an epsilon sweep
inline int occupation_for(double eps, double target = 0.5) {
    if (!(eps > 0.0) || !(target > 0.0))
        throw std::invalid_argument("occupation_for: eps and target must be positive");
    return static_cast<int>(std::llround(target / eps));
}

namespace detail {

inline void check_unit_mode(const FockSpace& F, const Vec& psi, const char* who) {
    if (psi.size() != F.d()) throw std::invalid_argument(std::string(who) + ": mode count mismatch");
    if (std::abs(psi.norm() - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(who) + ": mode vector must be normalized");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fixed-occupation product states

inline FockVector hermite_vector(const Vec& psi, int n, const FockSpace& F) {
    detail::check_unit_mode(F, psi, "hermite_vector");
    if (n < 0 || n > F.n_max())
        throw std::invalid_argument(strf("hermite_vector: occupation %d outside [0, %d]", n, F.n_max()));
    FockVector v(F);
    v.sector(n) = F.sector(n).monomials(psi);
    return v;
}

inline DensityOp hermite_state(const Vec& psi, int n, const FockSpace& F) {
    return DensityOp::pure(hermite_vector(psi, n, F));
}

// ---------------------------------------------------------------------------
// coherent states

// normalized sum over sectors of z0^{(x)n} / sqrt(eps^n n!)
inline FockVector coherent_vector(const Vec& z0, const FockSpace& F) {
    if (z0.size() != F.d()) throw std::invalid_argument("coherent_vector: mode count mismatch");
    if (!(F.epsilon() * F.n_max() >= 4.0 * z0.squaredNorm()))
        throw std::invalid_argument(strf("coherent_vector: tail guard eps n_max >= 4|z0|^2 fails (%g < %g)",
                                         F.epsilon() * F.n_max(), 4.0 * z0.squaredNorm()));
    FockVector v(F);
    double scale = 1.0;  // 1 / sqrt(eps^n n!), updated per sector
    v.sector(0)[0] = 1.0;
    for (int n = 1; n <= F.n_max(); ++n) {
        scale /= std::sqrt(F.epsilon() * n);
        v.sector(n) = scale * F.sector(n).monomials(z0);
    }
    v.normalize();
    return v;
}

inline DensityOp coherent_state(const Vec& z0, const FockSpace& F) {
    return DensityOp::pure(coherent_vector(z0, F));
}

// ---------------------------------------------------------------------------
// two-mode product states

// a*(psi1)^n1 a*(psi2)^n2 vacuum / sqrt(eps^{n1+n2} n1! n2!); unit norm by
// construction when psi1 and psi2 are orthonormal
inline FockVector torus_vector(const Vec& psi1, int n1, const Vec& psi2, int n2, const FockSpace& F) {
    if (n1 < 0 || n2 < 0) throw std::invalid_argument("torus_vector: negative occupation");
    if (n1 + n2 > F.n_max())
        throw std::invalid_argument(strf("torus_vector: occupation %d exceeds cutoff %d", n1 + n2, F.n_max()));
    if (n1 > 0) detail::check_unit_mode(F, psi1, "torus_vector");
    if (n2 > 0) detail::check_unit_mode(F, psi2, "torus_vector");
    if (n1 > 0 && n2 > 0 && std::abs(psi1.dot(psi2)) > 1e-12)
        throw std::invalid_argument("torus_vector: mode vectors must be orthogonal");
    FockVector v = FockVector::vacuum(F);
    for (int r = 0; r < n2; ++r) v = apply_create(F, psi2, v);
    for (int r = 0; r < n1; ++r) v = apply_create(F, psi1, v);
    double norm2 = 1.0;
    for (int r = 1; r <= n1; ++r) norm2 *= F.epsilon() * r;
    for (int r = 1; r <= n2; ++r) norm2 *= F.epsilon() * r;
    v.flat() /= std::sqrt(norm2);
    return v;
}

inline DensityOp torus_state(const Vec& psi1, int n1, const Vec& psi2, int n2, const FockSpace& F) {
    return DensityOp::pure(torus_vector(psi1, n1, psi2, n2, F));
}

// ---------------------------------------------------------------------------
// quasifree states

namespace detail {

inline void check_contraction(const Mat& T, const char* who) {
    if (T.rows() != T.cols()) throw std::invalid_argument(std::string(who) + ": contraction must be square");
    const double scale = std::max(1.0, max_abs(T));
    if (max_abs(Mat(T - T.adjoint())) > 1e-12 * scale)
        throw std::invalid_argument(std::string(who) + ": contraction must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(T, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12)
        throw std::invalid_argument(std::string(who) + ": contraction must be positive semidefinite");
    if (es.eigenvalues().maxCoeff() >= 1.0 - 1e-12)
        throw std::invalid_argument(std::string(who) + ": contraction must have spectrum strictly below one");
}

}  // namespace detail

// Gamma(T) normalized to unit trace over the retained sectors; sector n holds
// the n-fold symmetric power of T, built column by column from
// Gamma(T) a*(e_j) = a*(T e_j) Gamma(T) applied to the vacuum
inline DensityOp quasifree_state(const Mat& T, const FockSpace& F) {
    if (T.rows() != F.d()) throw std::invalid_argument("quasifree_state: mode count mismatch");
    detail::check_contraction(T, "quasifree_state");
    Mat rho = Mat::Zero(F.dim(), F.dim());
    rho(0, 0) = 1.0;
    for (int n = 1; n <= F.n_max(); ++n) {
        const OccBasis& basis = F.sector(n);
        const Eigen::Index off = F.offset(n);
        for (int c = 0; c < basis.dim(); ++c) {
            const Occ& nu = basis.at(c);
            FockVector w = FockVector::vacuum(F);
            double norm2 = 1.0;
            for (int j = 0; j < F.d(); ++j) {
                const Vec column = T.col(j);
                for (int r = 1; r <= nu[static_cast<size_t>(j)]; ++r) {
                    w = apply_create(F, column, w);
                    norm2 *= F.epsilon() * r;
                }
            }
            rho.block(off, off + c, basis.dim(), 1) = Vec(w.sector(n)) / std::sqrt(norm2);
        }
    }
    Mat sym = 0.5 * (rho + rho.adjoint());
    const double tr = sym.real().trace();
    return DensityOp(F, Mat(sym / tr));
}

inline DensityOp quasifree_state(const RVec& t, const FockSpace& F) {
    return quasifree_state(Mat(t.cast<cxd>().asDiagonal()), F);
}

// exact characteristic function Tr[rho W(f)] of the untruncated state
inline double quasifree_char(const Mat& T, double eps, const Vec& f) {
    if (T.rows() != f.size()) throw std::invalid_argument("quasifree_char: mode count mismatch");
    detail::check_contraction(T, "quasifree_char");
    const Mat lhs = Mat::Identity(T.rows(), T.cols()) - T;
    const Vec x = lhs.ldlt().solve(f);
    return std::exp(-eps * std::real(f.dot(Vec(x + T * x))) / 4.0);
}

inline double quasifree_char(const RVec& t, double eps, const Vec& f) {
    if (t.size() != f.size()) throw std::invalid_argument("quasifree_char: mode count mismatch");
    double s = 0.0;
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        if (!(t[k] >= 0.0 && t[k] < 1.0))
            throw std::invalid_argument("quasifree_char: diagonal contraction outside [0, 1)");
        s += std::norm(f[k]) * (1.0 + t[k]) / (1.0 - t[k]);
    }
    return std::exp(-eps * s / 4.0);
}

// exact two-point function Tr[rho a*(f) a(g)] of the untruncated state
inline cxd quasifree_two_point(const Mat& T, double eps, const Vec& f, const Vec& g) {
    if (T.rows() != f.size() || g.size() != f.size())
        throw std::invalid_argument("quasifree_two_point: mode count mismatch");
    detail::check_contraction(T, "quasifree_two_point");
    const Mat lhs = Mat::Identity(T.rows(), T.cols()) - T;
    const Vec x = lhs.ldlt().solve(f);
    return eps * g.dot(Vec(T * x));
}

// ---------------------------------------------------------------------------
// condensate parameterization of the quasifree family

// shell levels |k|_1 for k in N^dim with |k|_1 <= kmax; the condensate level 0
// comes first, level s appears with its lattice multiplicity
inline RVec bec_mode_levels(int kmax, int dim = 2) {
    if (kmax < 0 || dim < 1) throw std::invalid_argument("bec_mode_levels: bad shell bound");
    std::vector<double> levels;
    std::vector<int> k(static_cast<size_t>(dim), 0);
    while (true) {
        int s = 0;
        for (int x : k) s += x;
        if (s <= kmax) levels.push_back(static_cast<double>(s));
        int j = 0;
        while (j < dim) {
            if (++k[static_cast<size_t>(j)] <= kmax) break;
            k[static_cast<size_t>(j)] = 0;
            ++j;
        }
        if (j == dim) break;
    }
    std::sort(levels.begin(), levels.end());
    RVec out(static_cast<Eigen::Index>(levels.size()));
    for (size_t i = 0; i < levels.size(); ++i) out[static_cast<Eigen::Index>(i)] = levels[i];
    return out;
}

// T = (1 - eps/nu_c) exp(-eps^{1/dim} level) on each retained mode
inline RVec bec_contraction(const RVec& levels, double nu_c, int space_dim, double eps) {
    if (!(nu_c > 0.0)) throw std::invalid_argument("bec_contraction: nu_c must be positive");
    if (!(eps > 0.0 && eps < nu_c))
        throw std::invalid_argument("bec_contraction: need 0 < eps < nu_c");
    if (space_dim < 1) throw std::invalid_argument("bec_contraction: bad dimension");
    const double z = 1.0 - eps / nu_c;
    const double beta = std::pow(eps, 1.0 / space_dim);
    RVec t(levels.size());
    for (Eigen::Index k = 0; k < levels.size(); ++k) t[k] = z * std::exp(-beta * levels[k]);
    return t;
}

// scaled total occupation sum_k eps t_k / (1 - t_k)
inline double bec_number(const RVec& levels, double nu_c, int space_dim, double eps) {
    const RVec t = bec_contraction(levels, nu_c, space_dim, eps);
    double s = 0.0;
    for (Eigen::Index k = 0; k < t.size(); ++k) s += eps * t[k] / (1.0 - t[k]);
    return s;
}

namespace detail {

// Golub-Welsch nodes and weights for int_0^inf e^{-x} g(x) dx
inline std::pair<RVec, RVec> gauss_laguerre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_laguerre: order must be positive");
    RMat jac = RMat::Zero(order, order);
    for (int i = 0; i < order; ++i) {
        jac(i, i) = 2.0 * i + 1.0;
        if (i + 1 < order) {
            jac(i, i + 1) = i + 1.0;
            jac(i + 1, i) = i + 1.0;
        }
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(jac);
    RVec nodes = es.eigenvalues();
    RVec weights(order);
    for (int i = 0; i < order; ++i) weights[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    return {nodes, weights};
}

}  // namespace detail

// reference value of the thermal density integral
// int_{R^dim} e^{-|u|} / (1 - e^{-|u|}) du, by radial quadrature
inline double thermal_density_integral(int space_dim, int order = 160) {
    if (space_dim < 2) throw std::invalid_argument("thermal_density_integral: dimension must be >= 2");
    auto [nodes, weights] = detail::gauss_laguerre(order);
    double s = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) {
        const double t = nodes[i];
        s += weights[i] * std::pow(t, space_dim - 1) / (1.0 - std::exp(-t));
    }
    const double sphere = 2.0 * std::pow(pi, space_dim / 2.0) / std::tgamma(space_dim / 2.0);
    return sphere * s;
}

// Gaussian condensate ensemble: weight e^{-|z|^2/nu_c}/(pi nu_c) on the first
// mode, sampled on radial quadrature nodes times a uniform angle grid
inline MeasureEnsemble bec_limit_measure(double nu_c, int n_modes, int radial_order, int n_angles) {
    if (!(nu_c > 0.0) || n_modes < 1 || n_angles < 1)
        throw std::invalid_argument("bec_limit_measure: bad parameters");
    auto [nodes, weights] = detail::gauss_laguerre(radial_order);
    std::vector<WeightedPoint> pts;
    pts.reserve(static_cast<size_t>(radial_order) * static_cast<size_t>(n_angles));
    for (Eigen::Index q = 0; q < nodes.size(); ++q)
        for (int a = 0; a < n_angles; ++a) {
            Vec z = Vec::Zero(n_modes);
            z[0] = std::sqrt(nu_c * nodes[q]) * std::polar(1.0, 2.0 * pi * a / n_angles);
            pts.push_back({weights[q] / n_angles, std::move(z)});
        }
    return MeasureEnsemble(std::move(pts));
}

// ---------------------------------------------------------------------------
// reduced density matrices

// p-particle matrix from normal-ordered ladder moments, unit trace; a
// vanishing normalizer yields the zero matrix
inline Mat rdm(const DensityOp& rho, int p) {
    const FockSpace& F = rho.space();
    if (p < 1 || p > F.n_max())
        throw std::invalid_argument(strf("rdm: order %d outside [1, %d]", p, F.n_max()));
    const OccBasis basis(F.d(), p);
    const int D = basis.dim();

    std::vector<Mat> amode;
    amode.reserve(static_cast<size_t>(F.d()));
    for (int j = 0; j < F.d(); ++j) {
        Vec e = Vec::Zero(F.d());
        e[j] = 1.0;
        amode.push_back(annihilate(F, e).matrix());
    }
    std::vector<Mat> chains(static_cast<size_t>(D));
    for (int c = 0; c < D; ++c) {
        Mat m = Mat::Identity(F.dim(), F.dim());
        const Occ& alpha = basis.at(c);
        for (int j = 0; j < F.d(); ++j)
            for (int r = 0; r < alpha[static_cast<size_t>(j)]; ++r) m = amode[static_cast<size_t>(j)] * m;
        chains[static_cast<size_t>(c)] = std::move(m);
    }

    Mat gamma(D, D);
    for (int a = 0; a < D; ++a) {
        const Mat left = chains[static_cast<size_t>(a)] * rho.matrix();
        for (int b = 0; b < D; ++b) {
            const cxd tr = (left.array() * chains[static_cast<size_t>(b)].array().conjugate()).sum();
            gamma(a, b) = tr * std::sqrt(static_cast<double>(OccBasis::multinomial(basis.at(a))) *
                                         static_cast<double>(OccBasis::multinomial(basis.at(b))));
        }
    }
    const double den = gamma.real().trace();
    if (std::abs(den) <= 1e-13 * (1.0 + D)) return Mat::Zero(D, D);
    gamma /= den;
    return 0.5 * (gamma + gamma.adjoint()).eval();
}

// ensemble limit of the p-particle matrix
inline Mat limit_rdm(const MeasureEnsemble& mu, int p) {
    if (p < 1) throw std::invalid_argument("limit_rdm: order must be positive");
    const OccBasis basis(mu.d(), p);
    Mat acc = Mat::Zero(basis.dim(), basis.dim());
    double den = 0.0;
    for (const auto& pt : mu.points()) {
        const Vec m = basis.monomials(pt.z);
        acc += pt.weight * (m * m.adjoint());
        den += pt.weight * std::pow(pt.z.squaredNorm(), p);
    }
    if (den <= 1e-14) throw std::invalid_argument("limit_rdm: measure carries no p-particle mass");
    return acc / den;
}

// ---------------------------------------------------------------------------
// family descriptors

enum class StateKind { hermite, coherent, torus, quasifree };

inline const char* to_string(StateKind k) {
    switch (k) {
        case StateKind::hermite: return "hermite";
        case StateKind::coherent: return "coherent";
        case StateKind::torus: return "torus";
        default: return "quasifree";
    }
}

inline StateKind state_kind_from(const std::string& s) {
    if (s == "hermite") return StateKind::hermite;
    if (s == "coherent") return StateKind::coherent;
    if (s == "torus") return StateKind::torus;
    if (s == "quasifree") return StateKind::quasifree;
    throw std::invalid_argument("state_kind_from: unknown kind: " + s);
}

// a buildable family member together with its sampled limit measure
struct StateFamily {
    StateKind kind = StateKind::coherent;
    Vec psi1, psi2, z0;
    int n1 = 0, n2 = 0;
    Mat contraction;

    static StateFamily hermite(const Vec& psi, int n) {
        StateFamily f;
        f.kind = StateKind::hermite;
        f.psi1 = psi;
        f.n1 = n;
        return f;
    }
    static StateFamily coherent(const Vec& z0) {
        StateFamily f;
        f.kind = StateKind::coherent;
        f.z0 = z0;
        return f;
    }
    static StateFamily torus(const Vec& psi1, int n1, const Vec& psi2, int n2) {
        StateFamily f;
        f.kind = StateKind::torus;
        f.psi1 = psi1;
        f.n1 = n1;
        f.psi2 = psi2;
        f.n2 = n2;
        return f;
    }
    static StateFamily quasifree(const Mat& T) {
        StateFamily f;
        f.kind = StateKind::quasifree;
        f.contraction = T;
        return f;
    }

    int modes() const {
        switch (kind) {
            case StateKind::hermite: return static_cast<int>(psi1.size());
            case StateKind::coherent: return static_cast<int>(z0.size());
            case StateKind::torus: return static_cast<int>(psi1.size());
            default: return static_cast<int>(contraction.rows());
        }
    }

    DensityOp build(const FockSpace& F) const {
        switch (kind) {
            case StateKind::hermite: return hermite_state(psi1, n1, F);
            case StateKind::coherent: return coherent_state(z0, F);
            case StateKind::torus: return torus_state(psi1, n1, psi2, n2, F);
            default: return quasifree_state(contraction, F);
        }
    }

    // sampled limit measure; resolution counts angles per circle factor
    MeasureEnsemble limit_measure(double eps, int resolution) const {
        switch (kind) {
            case StateKind::hermite:
                return MeasureEnsemble::uniform_circle(Vec(std::sqrt(eps * n1) * psi1), resolution);
            case StateKind::coherent: return MeasureEnsemble::delta(z0);
            case StateKind::torus: {
                std::vector<WeightedPoint> pts;
                pts.reserve(static_cast<size_t>(resolution) * static_cast<size_t>(resolution));
                const double r1 = std::sqrt(eps * n1), r2 = std::sqrt(eps * n2);
                for (int a = 0; a < resolution; ++a)
                    for (int b = 0; b < resolution; ++b) {
                        Vec z = r1 * std::polar(1.0, 2.0 * pi * a / resolution) * psi1 +
                                r2 * std::polar(1.0, 2.0 * pi * b / resolution) * psi2;
                        pts.push_back({1.0 / (static_cast<double>(resolution) * resolution), std::move(z)});
                    }
                return MeasureEnsemble(std::move(pts));
            }
            default: return MeasureEnsemble::delta(Vec(Vec::Zero(contraction.rows())));
        }
    }
};

}  // namespace mflab
