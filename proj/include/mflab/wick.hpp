#pragma once

// Quantization of polynomial and cylindrical phase-space observables.
//
// A homogeneous symbol of bidegree (p, q) is b(z) = <z^{(x)q}, K z^{(x)p}> with a
// kernel K : Sym^p -> Sym^q stored in the occupation bases. Expanding in monomials,
// b(z) = sum_{mu,nu} K_{mu nu} conj(m_mu(z)) m_nu(z), and its Wick quantization is
// the normally ordered operator
//   b^Wick = sum_{mu,nu} K_{mu nu} sqrt(q!/mu!) sqrt(p!/nu!) a*^mu a^nu .
// Every occupation matrix element is eps^{(p+q)/2} times the square root of a single
// integer, which is assembled in 128-bit arithmetic before one long-double sqrt, so
// perfect squares quantize exactly.
//
// contract(b1, b2, k) pairs k of the z-arguments of b1 with k of the conj(z)-
// arguments of b2 and carries the combinatorial weight C(p1,k) C(q2,k) k!; with that
// normalization the operator product expands as
//   b1^Wick b2^Wick = sum_k eps^k (contract(b1, b2, k))^Wick
// with no further factorials, and the kernel norm bound
//   |contract(b1,b2,k)| <= C(p1,k) C(q2,k) k! |b1| |b2|
// is sharp (attained by powers of a single mode).
//
// Cylindrical symbols live over a rank-r orthonormal base (r <= 2): a finite sum of
// Fourier point masses plus a smooth part given by its Fourier transform, with the
// pairing b(z) = int F[b](zeta) e^{2 pi i Re<zeta, w(z)>} dzeta, w_k(z) = <g_k, z>.
// Weyl quantization sends the phase e^{2 pi i Re<zeta, w>} to W(sqrt(2) pi base zeta),
// and anti-Wick quantization additionally damps F[b] by the heat factor
// e^{-eps pi^2 |zeta|^2 / 2}.

#include "mflab/fock.hpp"

#include <functional>

namespace mflab {

struct WickSymbol {
    int d = 0;  // number of modes
    int p = 0;  // degree in z (annihilation side)
    int q = 0;  // degree in conj(z) (creation side)
    Mat kernel;  // dim Sym^q x dim Sym^p

    cxd eval(const Vec& z) const {
        OccBasis bq(d, q), bp(d, p);
        return bq.monomials(z).dot(kernel * bp.monomials(z));  // dot conjugates the first factor
    }

    WickSymbol adjoint() const { return {d, q, p, Mat(kernel.adjoint())}; }
    WickSymbol scaled(cxd c) const { return {d, p, q, Mat(c * kernel)}; }
    double norm() const { return op_norm(kernel); }
};

inline WickSymbol wick_constant(int d, cxd c) {
    Mat k(1, 1);
    k(0, 0) = c;
    return {d, 0, 0, k};
}

// symbol <f, z>, quantizing to a(f)
inline WickSymbol wick_of_annihilation(const Vec& f) {
    return {static_cast<int>(f.size()), 1, 0, Mat(f.adjoint())};
}

// symbol <z, f>, quantizing to a*(f)
inline WickSymbol wick_of_creation(const Vec& f) {
    return {static_cast<int>(f.size()), 0, 1, Mat(f)};
}

// symbol <z, A z>, quantizing to sum_ij A_ij a*_i a_j
inline WickSymbol wick_of_quadratic(const Mat& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("wick_of_quadratic: square matrix required");
    return {static_cast<int>(A.rows()), 1, 1, A};
}

inline void check_symbol(const WickSymbol& b, const char* who) {
    OccBasis bq(b.d, b.q), bp(b.d, b.p);
    if (b.kernel.rows() != bq.dim() || b.kernel.cols() != bp.dim())
        throw std::invalid_argument(std::string(who) + ": kernel shape does not match bidegree");
}

inline FockOperator wick_quantize(const FockSpace& F, const WickSymbol& b) {
    check_symbol(b, "wick_quantize");
    if (b.d != F.d()) throw std::invalid_argument("wick_quantize: mode count mismatch");
    FockOperator op(F);
    OccBasis bq(b.d, b.q), bp(b.d, b.p);
    const double pref = std::pow(F.epsilon(), 0.5 * (b.p + b.q));
    for (int n = b.p; n <= F.n_max(); ++n) {
        int n2 = n - b.p + b.q;
        if (n2 < 0 || n2 > F.n_max()) continue;
        auto blk = op.block(n2, n);
        const OccBasis& src = F.sector(n);
        const OccBasis& dst = F.sector(n2);
        for (int c = 0; c < src.dim(); ++c) {
            const Occ& omega = src.at(c);
            for (int iv = 0; iv < bp.dim(); ++iv) {
                const Occ& nu = bp.at(iv);
                if (!occ_le(nu, omega)) continue;
                Occ rem = occ_sub(omega, nu);
                for (int im = 0; im < bq.dim(); ++im) {
                    cxd kv = b.kernel(im, iv);
                    if (kv == cxd(0.0)) continue;
                    const Occ& mu = bq.at(im);
                    Occ target = occ_add(rem, mu);
                    __int128 radicand = static_cast<__int128>(OccBasis::multinomial(mu)) *
                                        OccBasis::multinomial(nu);
                    for (int j = 0; j < b.d; ++j) radicand *= falling(omega[static_cast<size_t>(j)], nu[static_cast<size_t>(j)]);
                    for (int j = 0; j < b.d; ++j) radicand *= falling(target[static_cast<size_t>(j)], mu[static_cast<size_t>(j)]);
                    double amp = static_cast<double>(sqrtl(static_cast<long double>(radicand)));
                    blk(dst.index(target), c) += kv * (pref * amp);
                }
            }
        }
    }
    return op;
}

// ---------------------------------------------------------------------------
// contraction calculus

inline WickSymbol contract(const WickSymbol& b1, const WickSymbol& b2, int k) {
    if (b1.d != b2.d) throw std::invalid_argument("contract: mode counts differ");
    if (k < 0 || k > std::min(b1.p, b2.q)) throw std::invalid_argument("contract: order out of range");
    check_symbol(b1, "contract");
    check_symbol(b2, "contract");
    const int d = b1.d;
    const int pout = (b1.p - k) + b2.p, qout = b1.q + (b2.q - k);

    auto ipow = [d](int e) {
        Eigen::Index r = 1;
        for (int i = 0; i < e; ++i) r *= d;
        return r;
    };

    Mat full1 = sym_embedding(OccBasis(d, b1.q)).cast<cxd>() * b1.kernel *
                sym_embedding(OccBasis(d, b1.p)).cast<cxd>().transpose();
    Mat full2 = sym_embedding(OccBasis(d, b2.q)).cast<cxd>() * b2.kernel *
                sym_embedding(OccBasis(d, b2.p)).cast<cxd>().transpose();

    const Eigen::Index dq1 = ipow(b1.q), dp1k = ipow(b1.p - k), dk = ipow(k);
    const Eigen::Index dq2k = ipow(b2.q - k), dp2 = ipow(b2.p);

    // pair the trailing k input slots of b1 with the leading k output slots of b2;
    // the kernels are symmetric within each group, so the slot choice is immaterial
    Mat cfull = Mat::Zero(dq1 * dq2k, dp1k * dp2);
    for (Eigen::Index j1 = 0; j1 < dq1; ++j1)
        for (Eigen::Index j2 = 0; j2 < dq2k; ++j2)
            for (Eigen::Index i1 = 0; i1 < dp1k; ++i1)
                for (Eigen::Index i2 = 0; i2 < dp2; ++i2) {
                    cxd acc = 0.0;
                    for (Eigen::Index m = 0; m < dk; ++m)
                        acc += full1(j1, i1 * dk + m) * full2(m * dq2k + j2, i2);
                    cfull(j1 * dq2k + j2, i1 * dp2 + i2) = acc;
                }

    RMat Sq = sym_embedding(OccBasis(d, qout));
    RMat Sp = sym_embedding(OccBasis(d, pout));
    double pref = static_cast<double>(binom(b1.p, k)) * static_cast<double>(binom(b2.q, k));
    for (int i = 1; i <= k; ++i) pref *= i;
    return {d, pout, qout, Mat(pref * (Sq.cast<cxd>().transpose() * cfull * Sp.cast<cxd>()))};
}

struct WickPoly {
    int d = 0;
    std::vector<WickSymbol> terms;

    void add(const WickSymbol& t) {
        if (d == 0) d = t.d;
        if (t.d != d) throw std::invalid_argument("WickPoly: mode counts differ");
        for (auto& u : terms)
            if (u.p == t.p && u.q == t.q) {
                u.kernel += t.kernel;
                return;
            }
        terms.push_back(t);
    }

    cxd eval(const Vec& z) const {
        cxd s = 0.0;
        for (const auto& t : terms) s += t.eval(z);
        return s;
    }
};

inline FockOperator wick_quantize(const FockSpace& F, const WickPoly& poly) {
    FockOperator op(F);
    for (const auto& t : poly.terms) op.matrix() += wick_quantize(F, t).matrix();
    return op;
}

// symbol of the operator product: b1^Wick b2^Wick = (compose(b1,b2,eps))^Wick
inline WickPoly compose(const WickSymbol& b1, const WickSymbol& b2, double eps) {
    WickPoly poly;
    for (int k = 0; k <= std::min(b1.p, b2.q); ++k)
        poly.add(contract(b1, b2, k).scaled(std::pow(eps, k)));
    return poly;
}

// symbol of the commutator [b1^Wick, b2^Wick]; the k = 0 terms cancel identically
inline WickPoly commutator_symbol(const WickSymbol& b1, const WickSymbol& b2, double eps) {
    WickPoly poly;
    poly.d = b1.d;
    for (int k = 1; k <= std::min(b1.p, b2.q); ++k)
        poly.add(contract(b1, b2, k).scaled(std::pow(eps, k)));
    for (int k = 1; k <= std::min(b2.p, b1.q); ++k)
        poly.add(contract(b2, b1, k).scaled(-std::pow(eps, k)));
    return poly;
}

// ---------------------------------------------------------------------------
// graded number estimate: || <N>^{-q/2} b^Wick <N>^{-p/2} || <= |b|_{p,q}
// with <N> = (1 + N^2)^{1/2}

struct NumberEstimate {
    double sandwiched_norm = 0.0;
    double symbol_norm = 0.0;
    bool ok = false;
};

inline NumberEstimate number_estimate_check(const FockSpace& F, const WickSymbol& b) {
    FockOperator op = wick_quantize(F, b);
    RVec wl(F.dim()), wr(F.dim());
    for (int n = 0; n <= F.n_max(); ++n) {
        double bracket = std::sqrt(1.0 + std::pow(F.epsilon() * n, 2));
        wl.segment(F.offset(n), F.sector_dim(n)).setConstant(std::pow(bracket, -0.5 * b.q));
        wr.segment(F.offset(n), F.sector_dim(n)).setConstant(std::pow(bracket, -0.5 * b.p));
    }
    Mat sandwiched = wl.cast<cxd>().asDiagonal() * op.matrix() * wr.cast<cxd>().asDiagonal();
    NumberEstimate r;
    r.sandwiched_norm = op_norm(sandwiched);
    r.symbol_norm = b.norm();
    r.ok = r.sandwiched_norm <= r.symbol_norm + 1e-12;
    return r;
}

// ---------------------------------------------------------------------------
// cylindrical symbols and their Weyl / anti-Wick quantizations

namespace detail {

struct GaussHermite {
    RVec nodes, weights_exp;  // weights_exp[i] = w_i e^{x_i^2}, the weight net of the Gaussian
};

// Golub-Welsch on the Hermite Jacobi matrix; deterministic
inline GaussHermite gauss_hermite(int m) {
    RMat J = RMat::Zero(m, m);
    for (int i = 1; i < m; ++i) {
        double b = std::sqrt(i / 2.0);
        J(i, i - 1) = b;
        J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(J);
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights_exp.resize(m);
    const double sqrt_pi = std::sqrt(pi);
    for (int i = 0; i < m; ++i) {
        double w = sqrt_pi * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
        gh.weights_exp[i] = w * std::exp(gh.nodes[i] * gh.nodes[i]);
    }
    return gh;
}

// integral over R^{2r} of fn(zeta), zeta = x + i y reassembled from the real
// coordinates, assuming a Gaussian envelope e^{-alpha |zeta|^2} at least
template <typename Fn>
void gh_integrate(int r, double alpha, int order, Fn&& fn) {
    GaussHermite gh = gauss_hermite(order);
    const double s = 1.0 / std::sqrt(alpha);
    const int dims = 2 * r;
    std::vector<int> idx(static_cast<size_t>(dims), 0);
    Vec zeta(r);
    for (;;) {
        double w = 1.0;
        for (int t = 0; t < dims; ++t) w *= gh.weights_exp[idx[static_cast<size_t>(t)]] * s;
        for (int j = 0; j < r; ++j)
            zeta[j] = cxd(gh.nodes[idx[static_cast<size_t>(2 * j)]] * s,
                          gh.nodes[idx[static_cast<size_t>(2 * j + 1)]] * s);
        fn(zeta, w);
        int t = dims - 1;
        for (; t >= 0; --t) {
            if (++idx[static_cast<size_t>(t)] < order) break;
            idx[static_cast<size_t>(t)] = 0;
        }
        if (t < 0) break;
    }
}

}  // namespace detail

struct CylindricalSymbol {
    Mat base;  // d x r, orthonormal columns g_1..g_r, r <= 2
    struct Point {
        cxd coeff;
        Vec zeta;  // in C^r
    };
    std::vector<Point> points;                 // sum of coeff * delta(. - zeta) in Fourier space
    std::function<cxd(const Vec&)> fourier;    // smooth Fourier part F[b](zeta), zeta in C^r
    double gauss_alpha = pi;                   // envelope bound: |F[b](zeta)| <~ e^{-alpha |zeta|^2}

    int rank() const { return static_cast<int>(base.cols()); }

    void validate() const {
        int r = rank();
        if (r < 1 || r > 2) throw std::invalid_argument("CylindricalSymbol: rank must be 1 or 2");
        if (max_abs(Mat(base.adjoint() * base - Mat::Identity(r, r))) > 1e-10)
            throw std::invalid_argument("CylindricalSymbol: base columns must be orthonormal");
        if (fourier && !(gauss_alpha > 0.0))
            throw std::invalid_argument("CylindricalSymbol: smooth part needs a positive envelope");
    }

    // pointwise value b(z) = sum_j c_j e^{2 pi i Re<zeta_j, w>} + int F[b] e^{2 pi i Re<zeta, w>}
    cxd eval(const Vec& z, int order = 32) const {
        validate();
        Vec w = base.adjoint() * z;
        cxd s = 0.0;
        for (const auto& pt : points) s += pt.coeff * std::exp(2.0 * pi * iu * pt.zeta.dot(w).real());
        if (fourier) {
            cxd acc = 0.0;
            detail::gh_integrate(rank(), gauss_alpha, order, [&](const Vec& zeta, double wt) {
                acc += wt * fourier(zeta) * std::exp(2.0 * pi * iu * zeta.dot(w).real());
            });
            s += acc;
        }
        return s;
    }
};

struct CylQuantResult {
    FockOperator op;
    double quad_delta = 0.0;  // max-entry change in the final quadrature refinement
    int order = 0;            // quadrature order actually used (0 when only point masses)
};

// Weyl quantization. The characteristic-function pairing identifies the phase
// e^{i sqrt(2) Re<xi, z>} with W(xi); matching exponents in the Fourier pairing
// above gives xi = sqrt(2) pi (base zeta), so a point mass at zeta_0 quantizes to
// W(sqrt(2) pi base zeta_0) and the smooth part integrates the same displacement.
inline CylQuantResult weyl_quantize_cyl(const FockSpace& F, const CylindricalSymbol& cs) {
    cs.validate();
    if (cs.base.rows() != F.d()) throw std::invalid_argument("weyl_quantize_cyl: mode count mismatch");
    CylQuantResult res{FockOperator(F), 0.0, 0};
    for (const auto& pt : cs.points) {
        Vec f = std::sqrt(2.0) * pi * (cs.base * pt.zeta);
        res.op.matrix() += pt.coeff * weyl_matrix(F, f).matrix();
    }
    if (cs.fourier) {
        const int r = cs.rank();
        std::vector<int> orders = (r == 1) ? std::vector<int>{16, 32, 48} : std::vector<int>{8, 12, 16};
        Mat prev;
        for (size_t oi = 0; oi < orders.size(); ++oi) {
            Mat acc = Mat::Zero(F.dim(), F.dim());
            detail::gh_integrate(r, cs.gauss_alpha, orders[oi], [&](const Vec& zeta, double wt) {
                cxd fv = cs.fourier(zeta);
                if (fv == cxd(0.0)) return;
                Vec f = std::sqrt(2.0) * pi * (cs.base * zeta);
                acc += (wt * fv) * weyl_matrix(F, f).matrix();
            });
            res.order = orders[oi];
            if (oi > 0) {
                res.quad_delta = max_abs(Mat(acc - prev));
                if (res.quad_delta <= 1e-10 * (1.0 + max_abs(acc))) {
                    prev = std::move(acc);
                    break;
                }
            }
            prev = std::move(acc);
        }
        res.op.matrix() += prev;
    }
    return res;
}

// anti-Wick quantization of a bounded cylindrical symbol: damp the Fourier data by
// the heat factor e^{-eps pi^2 |zeta|^2 / 2} and Weyl-quantize
inline CylQuantResult anti_wick(const FockSpace& F, const CylindricalSymbol& cs) {
    cs.validate();
    const double c = F.epsilon() * pi * pi / 2.0;
    CylindricalSymbol damped = cs;
    for (auto& pt : damped.points) pt.coeff *= std::exp(-c * pt.zeta.squaredNorm());
    if (cs.fourier) {
        auto inner = cs.fourier;
        damped.fourier = [inner, c](const Vec& zeta) {
            return inner(zeta) * std::exp(-c * zeta.squaredNorm());
        };
        damped.gauss_alpha = cs.gauss_alpha + c;
    }
    return weyl_quantize_cyl(F, damped);
}

// anti-Wick quantization of the quadratic symbol <z, A z>, in closed form:
// dGamma(A) + eps tr(A). A must be Hermitian.
inline FockOperator anti_wick_quadratic(const FockSpace& F, const Mat& A) {
    FockOperator op = dgamma(F, A);
    op.matrix() += (F.epsilon() * A.trace()) * Mat::Identity(F.dim(), F.dim());
    return op;
}

}  // namespace mflab
