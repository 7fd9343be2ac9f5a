#pragma once

// Truncated bosonic Fock space over a finite mode set, with the scaled canonical
// commutation relations [a(f), a*(g)] = eps <f,g>.
//
// Sectors n = 0..n_max carry the occupation bases of OccBasis(d, n); states and
// operators are stored flat over the concatenated sectors with offset metadata, so
// block structure is a zero-copy view. Ladder actions per mode:
//   a_i |nu> = sqrt(eps nu_i) |nu - delta_i>,   a*_i |nu> = sqrt(eps (nu_i+1)) |nu + delta_i>,
// and a(f) = sum_i conj(f_i) a_i is antilinear in its argument.
//
// The Weyl operator W(f) = exp(i (a*(f)+a(f))/sqrt(2)) is realized as the EXACT
// compression of the untruncated operator: in the normal-ordered factorization
//   W(f) = e^{-eps |f|^2 / 4} e^{i a*(f)/sqrt 2} e^{i a(f)/sqrt 2}
// the annihilation series only descends sectors and the creation series only
// ascends, so every retained matrix element is free of cutoff artifacts. The
// compression is not unitary; the leakage diagnostic below quantifies the mass sent
// above the cutoff from the protected sectors.

#include "mflab/phase_space.hpp"

#include <algorithm>
#include <optional>
#include <ostream>
#include <sstream>

namespace mflab {

class FockSpace {
  public:
    FockSpace(const ModeSpace& ms, int n_max, double epsilon) : modes_(ms), n_max_(n_max), eps_(epsilon) {
        if (n_max < 1) throw std::invalid_argument("FockSpace: need n_max >= 1");
        if (!(epsilon > 0.0) || epsilon > 1.0) throw std::invalid_argument("FockSpace: eps must be in (0,1]");
        offsets_.resize(static_cast<size_t>(n_max) + 2, 0);
        for (int n = 0; n <= n_max; ++n) {
            sectors_.emplace_back(ms.dim(), n);
            offsets_[static_cast<size_t>(n) + 1] =
                offsets_[static_cast<size_t>(n)] + sectors_.back().dim();
        }
        // links_up_[n][j*d + i] = index of (nu_j + delta_i) in sector n+1
        links_up_.resize(static_cast<size_t>(n_max));
        const int d = ms.dim();
        for (int n = 0; n + 1 <= n_max; ++n) {
            const OccBasis& lo = sectors_[static_cast<size_t>(n)];
            const OccBasis& hi = sectors_[static_cast<size_t>(n) + 1];
            auto& tab = links_up_[static_cast<size_t>(n)];
            tab.resize(static_cast<size_t>(lo.dim()) * d);
            for (int j = 0; j < lo.dim(); ++j) {
                Occ nu = lo.at(j);
                for (int i = 0; i < d; ++i) {
                    ++nu[static_cast<size_t>(i)];
                    tab[static_cast<size_t>(j) * d + i] = hi.index(nu);
                    --nu[static_cast<size_t>(i)];
                }
            }
        }
    }

    const ModeSpace& modes() const { return modes_; }
    int n_max() const { return n_max_; }
    double epsilon() const { return eps_; }
    int d() const { return modes_.dim(); }

    const OccBasis& sector(int n) const { return sectors_.at(static_cast<size_t>(n)); }
    Eigen::Index offset(int n) const { return offsets_.at(static_cast<size_t>(n)); }
    Eigen::Index sector_dim(int n) const { return sector(n).dim(); }
    Eigen::Index dim() const { return offsets_.back(); }

    int raise_index(int n, int j, int mode) const {  // sector n index j, add one particle in mode
        return links_up_[static_cast<size_t>(n)][static_cast<size_t>(j) * d() + mode];
    }

    bool compatible(const FockSpace& o) const {
        return n_max_ == o.n_max_ && eps_ == o.eps_ && modes_.dim() == o.modes_.dim();
    }

  private:
    ModeSpace modes_;
    int n_max_;
    double eps_;
    std::vector<OccBasis> sectors_;
    std::vector<Eigen::Index> offsets_;
    std::vector<std::vector<int>> links_up_;
};

class FockVector {
  public:
    explicit FockVector(const FockSpace& F) : space_(&F), v_(Vec::Zero(F.dim())) {}
    FockVector(const FockSpace& F, Vec v) : space_(&F), v_(std::move(v)) {
        if (v_.size() != F.dim()) throw std::invalid_argument("FockVector: dimension mismatch");
    }

    const FockSpace& space() const { return *space_; }
    const Vec& flat() const { return v_; }
    Vec& flat() { return v_; }

    auto sector(int n) { return v_.segment(space_->offset(n), space_->sector_dim(n)); }
    auto sector(int n) const { return v_.segment(space_->offset(n), space_->sector_dim(n)); }

    double norm() const { return v_.norm(); }
    cxd dot(const FockVector& o) const { return v_.dot(o.v_); }  // conjugates this
    FockVector& normalize() {
        double n = v_.norm();
        if (n == 0.0) throw std::domain_error("FockVector: cannot normalize zero vector");
        v_ /= n;
        return *this;
    }

    static FockVector vacuum(const FockSpace& F) {
        FockVector v(F);
        v.v_[0] = 1.0;
        return v;
    }

  private:
    const FockSpace* space_;
    Vec v_;
};

class FockOperator {
  public:
    explicit FockOperator(const FockSpace& F) : space_(&F), m_(Mat::Zero(F.dim(), F.dim())) {}
    FockOperator(const FockSpace& F, Mat m) : space_(&F), m_(std::move(m)) {
        if (m_.rows() != F.dim() || m_.cols() != F.dim())
            throw std::invalid_argument("FockOperator: dimension mismatch");
    }

    const FockSpace& space() const { return *space_; }
    const Mat& matrix() const { return m_; }
    Mat& matrix() { return m_; }

    auto block(int m, int n) {  // rows sector m, cols sector n
        return m_.block(space_->offset(m), space_->offset(n), space_->sector_dim(m), space_->sector_dim(n));
    }
    auto block(int m, int n) const {
        return m_.block(space_->offset(m), space_->offset(n), space_->sector_dim(m), space_->sector_dim(n));
    }

    FockOperator adjoint() const { return FockOperator(*space_, m_.adjoint()); }

    // largest |entry| outside the diagonal sector blocks
    double off_block_diagonal() const {
        double dev = 0.0;
        for (int m = 0; m <= space_->n_max(); ++m)
            for (int n = 0; n <= space_->n_max(); ++n) {
                if (m == n) continue;
                double b = max_abs(Mat(block(m, n)));
                dev = std::max(dev, b);
            }
        return dev;
    }

    FockVector apply(const FockVector& v) const { return FockVector(*space_, m_ * v.flat()); }

    static FockOperator identity(const FockSpace& F) { return FockOperator(F, Mat::Identity(F.dim(), F.dim())); }

  private:
    const FockSpace* space_;
    Mat m_;
};

inline FockOperator operator*(const FockOperator& a, const FockOperator& b) {
    return FockOperator(a.space(), a.matrix() * b.matrix());
}
inline FockOperator operator+(const FockOperator& a, const FockOperator& b) {
    return FockOperator(a.space(), a.matrix() + b.matrix());
}
inline FockOperator operator-(const FockOperator& a, const FockOperator& b) {
    return FockOperator(a.space(), a.matrix() - b.matrix());
}
inline FockOperator operator*(cxd c, const FockOperator& a) { return FockOperator(a.space(), c * a.matrix()); }

inline FockOperator commutator(const FockOperator& a, const FockOperator& b) {
    return FockOperator(a.space(), a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

// ---------------------------------------------------------------------------
// matrix-free ladder actions

inline void check_mode_vector(const FockSpace& F, const Vec& f, const char* who) {
    if (f.size() != F.d()) throw std::invalid_argument(std::string(who) + ": mode vector has wrong length");
}

// a(f) v, one sector down
inline FockVector apply_annihilate(const FockSpace& F, const Vec& f, const FockVector& v) {
    check_mode_vector(F, f, "apply_annihilate");
    FockVector out(F);
    const int d = F.d();
    const double eps = F.epsilon();
    for (int n = 1; n <= F.n_max(); ++n) {
        auto src = v.sector(n);
        auto dst = out.sector(n - 1);
        const OccBasis& lo = F.sector(n - 1);
        for (int j = 0; j < lo.dim(); ++j) {
            const Occ& mu = lo.at(j);
            cxd acc = 0.0;
            for (int i = 0; i < d; ++i)
                acc += std::conj(f[i]) * std::sqrt(eps * (mu[static_cast<size_t>(i)] + 1)) *
                       src[F.raise_index(n - 1, j, i)];
            dst[j] = acc;
        }
    }
    return out;
}

// a*(f) v, one sector up; drops the component that would leave the cutoff
inline FockVector apply_create(const FockSpace& F, const Vec& f, const FockVector& v) {
    check_mode_vector(F, f, "apply_create");
    FockVector out(F);
    const int d = F.d();
    const double eps = F.epsilon();
    for (int n = 0; n + 1 <= F.n_max(); ++n) {
        auto src = v.sector(n);
        auto dst = out.sector(n + 1);
        const OccBasis& lo = F.sector(n);
        for (int j = 0; j < lo.dim(); ++j) {
            if (src[j] == cxd(0.0)) continue;
            const Occ& nu = lo.at(j);
            for (int i = 0; i < d; ++i)
                dst[F.raise_index(n, j, i)] +=
                    f[i] * std::sqrt(eps * (nu[static_cast<size_t>(i)] + 1)) * src[j];
        }
    }
    return out;
}

// dense matrices of the ladder operators
inline FockOperator annihilate(const FockSpace& F, const Vec& f) {
    check_mode_vector(F, f, "annihilate");
    FockOperator op(F);
    const int d = F.d();
    const double eps = F.epsilon();
    for (int n = 1; n <= F.n_max(); ++n) {
        auto blk = op.block(n - 1, n);
        const OccBasis& lo = F.sector(n - 1);
        for (int j = 0; j < lo.dim(); ++j) {
            const Occ& mu = lo.at(j);
            for (int i = 0; i < d; ++i)
                blk(j, F.raise_index(n - 1, j, i)) +=
                    std::conj(f[i]) * std::sqrt(eps * (mu[static_cast<size_t>(i)] + 1));
        }
    }
    return op;
}

inline FockOperator create(const FockSpace& F, const Vec& f) {
    return annihilate(F, f).adjoint();  // create(f) = annihilate(f)^dagger, bit-exact
}

// second quantization of a one-body observable; rejects non-Hermitian input
inline FockOperator dgamma(const FockSpace& F, const Mat& A) {
    if (A.rows() != F.d() || A.cols() != F.d()) throw std::invalid_argument("dgamma: matrix has wrong shape");
    double scale = std::max(1.0, max_abs(A));
    if (max_abs(Mat(A - A.adjoint())) > 1e-12 * scale)
        throw std::invalid_argument("dgamma: observable must be Hermitian");
    FockOperator op(F);
    const int d = F.d();
    const double eps = F.epsilon();
    for (int n = 0; n <= F.n_max(); ++n) {
        auto blk = op.block(n, n);
        const OccBasis& b = F.sector(n);
        for (int j = 0; j < b.dim(); ++j) {
            const Occ& nu = b.at(j);
            cxd diag = 0.0;
            for (int i = 0; i < d; ++i) diag += A(i, i) * static_cast<double>(nu[static_cast<size_t>(i)]);
            blk(j, j) += eps * diag;
            for (int i = 0; i < d; ++i) {  // hops k -> i, i != k
                for (int k = 0; k < d; ++k) {
                    if (i == k || nu[static_cast<size_t>(k)] == 0 || A(i, k) == cxd(0.0)) continue;
                    Occ target = nu;
                    --target[static_cast<size_t>(k)];
                    ++target[static_cast<size_t>(i)];
                    double amp = std::sqrt(static_cast<double>(nu[static_cast<size_t>(k)]) *
                                           (nu[static_cast<size_t>(i)] + 1));
                    blk(b.index(target), j) += eps * amp * A(i, k);
                }
            }
        }
    }
    return op;
}

inline FockOperator number_op(const FockSpace& F) { return dgamma(F, Mat::Identity(F.d(), F.d())); }

// matrix-free action of dgamma(A)
inline FockVector apply_dgamma(const FockSpace& F, const Mat& A, const FockVector& v) {
    FockOperator op = dgamma(F, A);  // desk scale: block-diagonal build is cheap
    return op.apply(v);
}

// dGamma(sobolev) + lambda (eps n)^3 per sector; the grading operator used by the
// relative-bound report. lambda must be positive.
inline FockOperator s_epsilon(const FockSpace& F, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("s_epsilon: lambda must be positive");
    FockOperator op = dgamma(F, F.modes().sobolev_matrix());
    for (int n = 0; n <= F.n_max(); ++n) {
        double shift = lambda * std::pow(F.epsilon() * n, 3);
        op.block(n, n) += shift * Mat::Identity(F.sector_dim(n), F.sector_dim(n));
    }
    return op;
}

// ---------------------------------------------------------------------------
// Weyl operators

inline int weyl_protection_margin(const FockSpace& F, const Vec& f) {
    return static_cast<int>(std::ceil(4.0 * f.norm() * std::sqrt(F.epsilon() * F.n_max())));
}

// exp(series) of i a(f)/sqrt2 applied to a vector; terminates by nilpotency
inline FockVector weyl_apply(const FockSpace& F, const Vec& f, const FockVector& v) {
    check_mode_vector(F, f, "weyl_apply");
    const cxd c = iu / std::sqrt(2.0);
    FockVector acc = v, term = v;
    for (int k = 1; k <= F.n_max(); ++k) {
        // (c a(f))^k / k! built incrementally as c a(f/k) applied to the previous term
        term = apply_annihilate(F, Vec(f / static_cast<double>(k)), term);
        term.flat() *= c;
        acc.flat() += term.flat();
        if (term.norm() == 0.0) break;
    }
    FockVector out = acc;
    term = acc;
    for (int k = 1; k <= F.n_max(); ++k) {
        term = apply_create(F, Vec(f / static_cast<double>(k)), term);
        term.flat() *= c;
        out.flat() += term.flat();
        if (term.norm() == 0.0) break;
    }
    out.flat() *= std::exp(-F.epsilon() * f.squaredNorm() / 4.0);
    return out;
}

struct WeylOp {
    FockOperator op;
    double leakage = 0.0;     // sup over protected-sector states of mass lost above the cutoff
    int protected_up_to = 0;  // sectors n <= this are inside the diagnostic window
    bool warn = false;        // leakage above 1e-6
};

// dense Weyl matrix without diagnostics; the workhorse for quadrature loops
inline FockOperator weyl_matrix(const FockSpace& F, const Vec& f) {
    check_mode_vector(F, f, "weyl_matrix");
    const cxd c = iu / std::sqrt(2.0);
    const int N = F.n_max();
    // ascending factor E_up: block (n+k, n) = (c a*)^k / k!; descending E_dn mirrors it
    FockOperator up(F), dn(F);
    for (int n = 0; n <= N; ++n) {
        up.block(n, n).setIdentity();
        dn.block(n, n).setIdentity();
    }
    FockOperator astar = create(F, f), aop = annihilate(F, f);
    for (int n = 0; n <= N; ++n) {
        Mat chain_up = Mat::Identity(F.sector_dim(n), F.sector_dim(n));
        for (int k = 1; n + k <= N; ++k) {
            chain_up = (c / static_cast<double>(k)) * astar.block(n + k, n + k - 1) * chain_up;
            up.block(n + k, n) = chain_up;
        }
        Mat chain_dn = Mat::Identity(F.sector_dim(n), F.sector_dim(n));
        for (int k = 1; k <= n; ++k) {
            chain_dn = (c / static_cast<double>(k)) * aop.block(n - k, n - k + 1) * chain_dn;
            dn.block(n - k, n) = chain_dn;
        }
    }
    return FockOperator(F, std::exp(-F.epsilon() * f.squaredNorm() / 4.0) * (up.matrix() * dn.matrix()));
}

inline WeylOp weyl(const FockSpace& F, const Vec& f) {
    WeylOp w{weyl_matrix(F, f), 0.0, 0, false};
    int margin = weyl_protection_margin(F, f);
    w.protected_up_to = std::max(0, F.n_max() - margin);
    Eigen::Index pdim = F.offset(w.protected_up_to) + F.sector_dim(w.protected_up_to);
    Mat gram = w.op.matrix().leftCols(pdim).adjoint() * w.op.matrix().leftCols(pdim);
    w.leakage = op_norm(Mat(gram - Mat::Identity(pdim, pdim)));
    w.warn = w.leakage > 1e-6;
    return w;
}

// ---------------------------------------------------------------------------
// density operators

class DensityOp {
  public:
    DensityOp(const FockSpace& F, Mat rho) : space_(&F), m_(std::move(rho)) {
        if (m_.rows() != F.dim() || m_.cols() != F.dim())
            throw std::invalid_argument("DensityOp: dimension mismatch");
        validate();
    }

    static DensityOp pure(const FockVector& v) {
        Vec u = v.flat();
        double n = u.norm();
        if (n == 0.0) throw std::domain_error("DensityOp: zero vector");
        u /= n;
        return DensityOp(v.space(), Mat(u * u.adjoint()));
    }

    const FockSpace& space() const { return *space_; }
    const Mat& matrix() const { return m_; }

    auto block(int m, int n) const {
        return m_.block(space_->offset(m), space_->offset(n), space_->sector_dim(m), space_->sector_dim(n));
    }

    double off_block_diagonal() const { return FockOperator(*space_, m_).off_block_diagonal(); }

    // occupation-weight profile tr(rho P_n)
    RVec sector_weights() const {
        RVec w(space_->n_max() + 1);
        for (int n = 0; n <= space_->n_max(); ++n) w[n] = block(n, n).real().trace();
        return w;
    }

  private:
    void validate() const {
        double tr_dev = std::abs(m_.trace() - cxd(1.0));
        if (tr_dev > 1e-10) throw std::domain_error(strf("DensityOp: trace deviates by %.3e", tr_dev));
        if (max_abs(Mat(m_ - m_.adjoint())) > 1e-10)
            throw std::domain_error("DensityOp: not Hermitian");
        Eigen::SelfAdjointEigenSolver<Mat> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::domain_error(strf("DensityOp: negative eigenvalue %.3e", es.eigenvalues().minCoeff()));
    }

    const FockSpace* space_;
    Mat m_;
};

inline cxd expectation(const DensityOp& rho, const FockOperator& op) {
    return (rho.matrix() * op.matrix()).trace();
}

inline cxd expectation(const FockVector& v, const FockOperator& op) {
    return v.flat().dot(op.matrix() * v.flat());
}

// Schatten-1 norm of the difference, via Hermitian eigendecomposition (no 1/2 factor)
inline double trace_norm_diff(const DensityOp& a, const DensityOp& b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(a.matrix() - b.matrix()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

inline double trace_norm(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// serialization: CSV rows "sector_row,sector_col,row,col,re,im" with row/col local
// to their sectors; %.{17}g columns round-trip exactly. FockVector uses the same
// schema with sector_col = col = 0.

inline void write_density_csv(std::ostream& os, const DensityOp& rho, double threshold = 0.0) {
    os << "sector_row,sector_col,row,col,re,im\n";
    const FockSpace& F = rho.space();
    for (int m = 0; m <= F.n_max(); ++m)
        for (int n = 0; n <= F.n_max(); ++n) {
            auto blk = rho.block(m, n);
            for (Eigen::Index r = 0; r < blk.rows(); ++r)
                for (Eigen::Index c = 0; c < blk.cols(); ++c) {
                    cxd v = blk(r, c);
                    if (std::abs(v) <= threshold && v != cxd(0.0)) continue;
                    if (v == cxd(0.0)) continue;
                    os << m << ',' << n << ',' << r << ',' << c << ',' << fmt_full(v.real()) << ','
                       << fmt_full(v.imag()) << '\n';
                }
        }
}

inline DensityOp read_density_csv(std::istream& is, const FockSpace& F) {
    Mat m = Mat::Zero(F.dim(), F.dim());
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        int sr, sc;
        Eigen::Index r, c;
        double re, im;
        if (!(ls >> sr >> sc >> r >> c >> re >> im))
            throw std::invalid_argument("read_density_csv: bad row: " + line);
        m(F.offset(sr) + r, F.offset(sc) + c) = cxd(re, im);
    }
    return DensityOp(F, std::move(m));
}

inline void write_vector_csv(std::ostream& os, const FockVector& v) {
    os << "sector_row,sector_col,row,col,re,im\n";
    const FockSpace& F = v.space();
    for (int n = 0; n <= F.n_max(); ++n) {
        auto s = v.sector(n);
        for (Eigen::Index r = 0; r < s.size(); ++r) {
            if (s[r] == cxd(0.0)) continue;
            os << n << ",0," << r << ",0," << fmt_full(s[r].real()) << ',' << fmt_full(s[r].imag()) << '\n';
        }
    }
}

inline FockVector read_vector_csv(std::istream& is, const FockSpace& F) {
    FockVector v(F);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        int n, sc;
        Eigen::Index r, c;
        double re, im;
        if (!(ls >> n >> sc >> r >> c >> re >> im))
            throw std::invalid_argument("read_vector_csv: bad row: " + line);
        v.sector(n)[r] = cxd(re, im);
    }
    return v;
}

}  // namespace mflab
