#pragma once

// Finite-dimensional phase space: the d lowest Fourier modes of the periodic grid,
// the one-body kinetic/Sobolev weights, and the projected symmetric pair kernel.
//
// Modes are e_k(x) = L^{-dim/2} exp(2 pi i k.x / L), orthonormal under the grid
// quadrature pairing. The pair kernel is the matrix of (1/2) V(x-y) compressed to
// the symmetric two-mode space; momentum conservation makes it band-limited, so one
// FFT of V supplies every entry.

#include "mflab/combinatorics.hpp"
#include "mflab/grid.hpp"

namespace mflab {

class ModeSpace {
  public:
    ModeSpace() = default;

    ModeSpace(const Grid& g, int d) : grid_(g), d_(d) {
        if (d < 1) throw std::invalid_argument("ModeSpace: need d >= 1");
        if (static_cast<Eigen::Index>(d) > g.npoints())
            throw std::invalid_argument("ModeSpace: more modes than grid points");
        // enumerate all integer frequency tuples, sort by |k|^2 then lexicographically
        std::vector<std::vector<int>> ks;
        const int half = g.n / 2;
        if (g.dim == 1) {
            for (int k = -half; k < half; ++k) ks.push_back({k});
        } else {
            for (int k1 = -half; k1 < half; ++k1)
                for (int k2 = -half; k2 < half; ++k2) ks.push_back({k1, k2});
        }
        std::sort(ks.begin(), ks.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
            long na = 0, nb = 0;
            for (int x : a) na += static_cast<long>(x) * x;
            for (int x : b) nb += static_cast<long>(x) * x;
            if (na != nb) return na < nb;
            return a < b;
        });
        ks.resize(static_cast<size_t>(d));
        freqs_ = std::move(ks);
        kinetic_ = RVec(d);
        const double f = 2.0 * pi / g.L;
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int x : freqs_[static_cast<size_t>(j)]) s += static_cast<double>(x) * x;
            kinetic_[j] = f * f * s;
        }
    }

    const Grid& grid() const { return grid_; }
    int dim() const { return d_; }
    const std::vector<int>& freq(int j) const { return freqs_[static_cast<size_t>(j)]; }

    // diagonal of the kinetic form |2 pi k / L|^2 and of the Sobolev weight 1 + kinetic
    const RVec& kinetic() const { return kinetic_; }
    RVec sobolev() const { return kinetic_.array() + 1.0; }

    Mat kinetic_matrix() const { return kinetic_.cast<cxd>().asDiagonal(); }
    Mat sobolev_matrix() const { return sobolev().cast<cxd>().asDiagonal(); }

    // grid samples of mode j
    Vec mode_field(int j) const {
        const auto& k = freq(j);
        Vec v(grid_.npoints());
        const double scale = std::pow(grid_.L, -0.5 * grid_.dim);
        for (Eigen::Index i = 0; i < grid_.npoints(); ++i) {
            auto xy = grid_.point(i);
            double phase = k[0] * xy[0];
            if (grid_.dim == 2) phase += k[1] * xy[1];
            phase *= 2.0 * pi / grid_.L;
            v[i] = scale * std::exp(iu * phase);
        }
        return v;
    }

    // coefficients -> grid field
    Vec synthesize(const Vec& c) const {
        if (c.size() != d_) throw std::invalid_argument("synthesize: coefficient count mismatch");
        Vec f = Vec::Zero(grid_.npoints());
        for (int j = 0; j < d_; ++j) f += c[j] * mode_field(j);
        return f;
    }

    // grid field -> coefficients of the retained band (quadrature projections)
    Vec analyze(const Vec& field) const {
        if (field.size() != grid_.npoints()) throw std::invalid_argument("analyze: field size mismatch");
        Vec spec = dft_forward(grid_, field);
        Vec c(d_);
        const double scale = grid_.cell() * std::pow(grid_.L, -0.5 * grid_.dim);
        for (int j = 0; j < d_; ++j) c[j] = scale * spec[spectral_index(j)];
        return c;
    }

    // Gram matrix of the retained modes under grid quadrature; identity by design.
    Mat gram() const {
        Mat gm(d_, d_);
        for (int a = 0; a < d_; ++a) {
            Vec fa = mode_field(a);
            for (int b = 0; b < d_; ++b) gm(a, b) = quad_inner(grid_, fa, mode_field(b));
        }
        return gm;
    }

    Eigen::Index spectral_index(int j) const {
        const auto& k = freq(j);
        Eigen::Index idx = 0;
        for (int c = 0; c < grid_.dim; ++c) {
            int kk = ((k[static_cast<size_t>(c)] % grid_.n) + grid_.n) % grid_.n;
            idx = idx * grid_.n + kk;
        }
        return idx;
    }

  private:
    Grid grid_;
    int d_ = 0;
    std::vector<std::vector<int>> freqs_;
    RVec kinetic_;
};

inline ModeSpace make_mode_space(const Grid& g, int d) { return ModeSpace(g, d); }

inline double l2_norm(const Vec& c) { return c.norm(); }

inline double h1_norm(const ModeSpace& ms, const Vec& c) {
    if (c.size() != ms.dim()) throw std::invalid_argument("h1_norm: coefficient count mismatch");
    return std::sqrt((ms.sobolev().array() * c.array().abs2()).sum());
}

// squared Sobolev distance |c1 - c2|_{Z1}^2
inline double h1_dist2(const ModeSpace& ms, const Vec& c1, const Vec& c2) {
    Vec d = c1 - c2;
    return (ms.sobolev().array() * d.array().abs2()).sum();
}

// Matrix of (1/2) V(x-y) on the symmetric two-mode space, orthonormal occupation
// basis of OccBasis(d,2). Entries follow from momentum conservation:
//   <e_a (x) e_b, V e_c (x) e_d> = [k_a+k_b = k_c+k_d] Vhat(k_a-k_c) / L^dim.
class PairKernel {
  public:
    PairKernel() = default;

    PairKernel(const ModeSpace& ms, const PairPotential& pot) : basis_(ms.dim(), 2) {
        if (!(pot.grid() == ms.grid())) throw std::invalid_argument("PairKernel: grid mismatch");
        const int d = ms.dim();
        const int D = basis_.dim();
        Mat m(D, D);
        const double invL = std::pow(ms.grid().L, -ms.grid().dim);
        auto tensor_entry = [&](int a, int b, int c, int e) -> double {
            // <e_a (x) e_b , V e_c (x) e_e>
            std::vector<int> ka = ms.freq(a), kb = ms.freq(b), kc = ms.freq(c), ke = ms.freq(e);
            std::vector<int> q(ka.size());
            for (size_t t = 0; t < ka.size(); ++t) {
                if (ka[t] + kb[t] != kc[t] + ke[t]) return 0.0;
                q[t] = ka[t] - kc[t];
            }
            return invL * pot.fourier_at(q);
        };
        auto pair_modes = [&](int row) {
            const Occ& nu = basis_.at(row);
            std::array<int, 2> md{};
            int pos = 0;
            for (int j = 0; j < d; ++j)
                for (int r = 0; r < nu[static_cast<size_t>(j)]; ++r) md[static_cast<size_t>(pos++)] = j;
            return md;
        };
        for (int r = 0; r < D; ++r) {
            auto [a, b] = pair_modes(r);
            // basis vector (e_a (x) e_b + e_b (x) e_a) / sqrt(2 (1 + delta_ab))
            double nr = std::sqrt(2.0 * (a == b ? 2.0 : 1.0));
            for (int c = 0; c < D; ++c) {
                auto [x, y] = pair_modes(c);
                double nc = std::sqrt(2.0 * (x == y ? 2.0 : 1.0));
                double s = tensor_entry(a, b, x, y) + tensor_entry(a, b, y, x) +
                           tensor_entry(b, a, x, y) + tensor_entry(b, a, y, x);
                m(r, c) = 0.5 * s / (nr * nc);  // the 1/2 of (1/2)V
            }
        }
        herm_deviation_ = max_abs(Mat(m - m.adjoint()));
        if (herm_deviation_ > 1e-8)
            throw std::domain_error(strf("PairKernel: hermiticity deviation %.3e", herm_deviation_));
        matrix_ = 0.5 * (m + Mat(m.adjoint()));
    }

    const Mat& matrix() const { return matrix_; }
    const OccBasis& basis() const { return basis_; }
    double hermiticity_deviation() const { return herm_deviation_; }

  private:
    OccBasis basis_;
    Mat matrix_;
    double herm_deviation_ = 0.0;
};

inline PairKernel pair_kernel(const ModeSpace& ms, const PairPotential& pot) { return PairKernel(ms, pot); }

// (V * rho)(x) = h^dim sum_y V(x-y) rho(y), periodic, by FFT.
inline Vec convolve_density(const PairPotential& pot, const Vec& rho) {
    const Grid& g = pot.grid();
    if (rho.size() != g.npoints()) throw std::invalid_argument("convolve_density: size mismatch");
    Vec vs = pot.samples().cast<cxd>();
    Vec prod = dft_forward(g, vs).cwiseProduct(dft_forward(g, rho));
    return g.cell() * dft_inverse(g, prod);
}

// Operator norm of V (1 - Laplacian)^{-1/2} on the full grid: multiplication by the
// potential samples composed with the spectral Sobolev smoothing. Power iteration on
// M^dagger M with FFT applies; deterministic start vector.
inline double grid_vsob_norm(const PairPotential& pot, int max_iter = 500, double tol = 1e-13) {
    const Grid& g = pot.grid();
    const Eigen::Index N = g.npoints();
    RVec smooth(N);
    for (Eigen::Index i = 0; i < N; ++i) smooth[i] = 1.0 / std::sqrt(1.0 + grid_kinetic_eig(g, i));
    auto applyM = [&](const Vec& v) {  // V (1-Lap)^{-1/2} v
        Vec s = dft_forward(g, v);
        s.array() *= smooth.array();
        Vec w = dft_inverse(g, s);
        w.array() *= pot.samples().array();
        return w;
    };
    auto applyMt = [&](const Vec& v) {  // adjoint
        Vec w = v;
        w.array() *= pot.samples().array();
        Vec s = dft_forward(g, w);
        s.array() *= smooth.array();
        return dft_inverse(g, s);
    };
    Vec x(N);
    for (Eigen::Index i = 0; i < N; ++i)
        x[i] = cxd(std::cos(0.7 * static_cast<double>(i) + 0.3), std::sin(1.1 * static_cast<double>(i)));
    x.normalize();
    double lam = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vec y = applyMt(applyM(x));
        double nl = y.norm();
        if (nl == 0.0) return 0.0;
        y /= nl;
        if (std::abs(nl - lam) <= tol * std::max(1.0, nl) && it > 4) {
            lam = nl;
            break;
        }
        lam = nl;
        x = y;
    }
    return std::sqrt(lam);
}

// Operator norm of (1 - Laplacian)^{1/2} V (1 - Laplacian)^{-1/2} on the full grid:
// the multiplication operator conjugated between Sobolev smoothing on the right and
// sharpening on the left. Same FFT power iteration as grid_vsob_norm.
inline double grid_vsob_conjugated_norm(const PairPotential& pot, int max_iter = 500, double tol = 1e-13) {
    const Grid& g = pot.grid();
    const Eigen::Index N = g.npoints();
    RVec smooth(N), sharp(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double w = std::sqrt(1.0 + grid_kinetic_eig(g, i));
        smooth[i] = 1.0 / w;
        sharp[i] = w;
    }
    auto applyM = [&](const Vec& v) {  // (1-Lap)^{1/2} V (1-Lap)^{-1/2} v
        Vec s = dft_forward(g, v);
        s.array() *= smooth.array();
        Vec w = dft_inverse(g, s);
        w.array() *= pot.samples().array();
        Vec s2 = dft_forward(g, w);
        s2.array() *= sharp.array();
        return dft_inverse(g, s2);
    };
    auto applyMt = [&](const Vec& v) {  // adjoint: smoothing and sharpening roles swap
        Vec s = dft_forward(g, v);
        s.array() *= sharp.array();
        Vec w = dft_inverse(g, s);
        w.array() *= pot.samples().array();
        Vec s2 = dft_forward(g, w);
        s2.array() *= smooth.array();
        return dft_inverse(g, s2);
    };
    Vec x(N);
    for (Eigen::Index i = 0; i < N; ++i)
        x[i] = cxd(std::cos(0.7 * static_cast<double>(i) + 0.3), std::sin(1.1 * static_cast<double>(i)));
    x.normalize();
    double lam = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vec y = applyMt(applyM(x));
        double nl = y.norm();
        if (nl == 0.0) return 0.0;
        y /= nl;
        if (std::abs(nl - lam) <= tol * std::max(1.0, nl) && it > 4) {
            lam = nl;
            break;
        }
        lam = nl;
        x = y;
    }
    return std::sqrt(lam);
}

}  // namespace mflab
