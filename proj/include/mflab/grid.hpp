#pragma once

// Periodic sampling grid on [0,L)^dim with dim in {1,2}, power-of-two points per
// axis, plus FFT helpers and pair potentials sampled on displacement space.
//
// Quadrature pairing: <f,g> = h^dim sum conj(f) g with h = L/n. Fields are stored
// flat and row-major, index i*n+j for dim 2.

#include "mflab/common.hpp"

#include <unsupported/Eigen/FFT>

#include <fstream>
#include <functional>
#include <sstream>

namespace mflab {

struct Grid {
    double L = 2.0 * pi;
    int dim = 1;
    int n = 32;  // points per axis

    Grid() = default;
    Grid(double L_, int dim_, int n_) : L(L_), dim(dim_), n(n_) {
        if (!(L > 0.0)) throw std::invalid_argument("Grid: L must be positive");
        if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
        if (!is_pow2(n) || n < 4) throw std::invalid_argument("Grid: n must be a power of two >= 4");
    }

    Eigen::Index npoints() const {
        Eigen::Index p = n;
        if (dim == 2) p *= n;
        return p;
    }
    double h() const { return L / n; }
    double cell() const { return dim == 1 ? h() : h() * h(); }

    // coordinates of flat node index
    std::array<double, 2> point(Eigen::Index idx) const {
        if (dim == 1) return {h() * static_cast<double>(idx), 0.0};
        return {h() * static_cast<double>(idx / n), h() * static_cast<double>(idx % n)};
    }

    // displacement representative wrapped to [-L/2, L/2)
    double wrap(double x) const {
        double y = std::fmod(x, L);
        if (y < 0) y += L;
        if (y >= L / 2) y -= L;
        return y;
    }

    bool operator==(const Grid& o) const { return L == o.L && dim == o.dim && n == o.n; }
};

inline cxd quad_inner(const Grid& g, const Vec& f, const Vec& gvec) {
    return g.cell() * f.dot(gvec);  // Eigen dot conjugates the first argument
}

inline double quad_norm(const Grid& g, const Vec& f) { return std::sqrt(std::real(quad_inner(g, f, f))); }

// Unnormalized DFT along each axis: out_k = sum_j in_j e^{-2 pi i j k / n}.
inline Vec dft_forward(const Grid& g, const Vec& in) {
    if (in.size() != g.npoints()) throw std::invalid_argument("dft_forward: size mismatch");
    Eigen::FFT<double> fft;
    const int n = g.n;
    std::vector<cxd> buf(static_cast<size_t>(n)), out(static_cast<size_t>(n));
    if (g.dim == 1) {
        std::copy(in.data(), in.data() + n, buf.begin());
        fft.fwd(out, buf);
        Vec r(n);
        std::copy(out.begin(), out.end(), r.data());
        return r;
    }
    Mat m = Eigen::Map<const Mat>(in.data(), n, n).transpose();  // row-major view
    Mat t(n, n);
    for (int r = 0; r < n; ++r) {  // rows
        for (int c = 0; c < n; ++c) buf[static_cast<size_t>(c)] = m(r, c);
        fft.fwd(out, buf);
        for (int c = 0; c < n; ++c) t(r, c) = out[static_cast<size_t>(c)];
    }
    for (int c = 0; c < n; ++c) {  // columns
        for (int r = 0; r < n; ++r) buf[static_cast<size_t>(r)] = t(r, c);
        fft.fwd(out, buf);
        for (int r = 0; r < n; ++r) t(r, c) = out[static_cast<size_t>(r)];
    }
    Vec r(g.npoints());
    Eigen::Map<Mat>(r.data(), n, n) = t.transpose();
    return r;
}

inline Vec dft_inverse(const Grid& g, const Vec& in) {
    // conj-trick keeps one code path: IDFT(x) = conj(DFT(conj(x)))/N
    Vec c = in.conjugate();
    Vec f = dft_forward(g, c);
    return f.conjugate() / static_cast<double>(g.npoints());
}

// Integer frequency of flat spectral index along one axis, aliased to [-n/2, n/2).
inline int freq_of_index(int j, int n) { return j < n / 2 ? j : j - n; }

// |2 pi k / L|^2 for the flat spectral node
inline double grid_kinetic_eig(const Grid& g, Eigen::Index idx) {
    const double f = 2.0 * pi / g.L;
    if (g.dim == 1) {
        double k = freq_of_index(static_cast<int>(idx), g.n);
        return f * f * k * k;
    }
    double k1 = freq_of_index(static_cast<int>(idx / g.n), g.n);
    double k2 = freq_of_index(static_cast<int>(idx % g.n), g.n);
    return f * f * (k1 * k1 + k2 * k2);
}

enum class PotentialKind { constant, gaussian, soft_coulomb, tabulated };

inline const char* to_string(PotentialKind k) {
    switch (k) {
        case PotentialKind::constant: return "constant";
        case PotentialKind::gaussian: return "gaussian";
        case PotentialKind::soft_coulomb: return "soft_coulomb";
        case PotentialKind::tabulated: return "tabulated";
    }
    return "?";
}

inline PotentialKind potential_kind_from(const std::string& s) {
    if (s == "constant") return PotentialKind::constant;
    if (s == "gaussian") return PotentialKind::gaussian;
    if (s == "soft_coulomb") return PotentialKind::soft_coulomb;
    if (s == "tabulated") return PotentialKind::tabulated;
    throw std::invalid_argument("unknown potential kind: " + s);
}

// Real even pair potential sampled on the displacement grid. Radial profiles are
// evaluated at the wrapped representative, which keeps V(-x) = V(x) exactly.
class PairPotential {
  public:
    PairPotential() = default;

    static PairPotential constant(const Grid& g, double c) {
        PairPotential p(g, PotentialKind::constant);
        p.params_ = {c};
        p.samples_ = RVec::Constant(g.npoints(), c);
        p.finish();
        return p;
    }

    // lambda * exp(-r^2 / (2 sigma^2))
    static PairPotential gaussian(const Grid& g, double lambda, double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("PairPotential: sigma must be positive");
        PairPotential p(g, PotentialKind::gaussian);
        p.params_ = {lambda, sigma};
        p.fill_radial([&](double r) { return lambda * std::exp(-r * r / (2.0 * sigma * sigma)); });
        p.finish();
        return p;
    }

    // lambda / sqrt(r^2 + a^2)
    static PairPotential soft_coulomb(const Grid& g, double lambda, double a) {
        if (!(a > 0.0)) throw std::invalid_argument("PairPotential: softening a must be positive");
        PairPotential p(g, PotentialKind::soft_coulomb);
        p.params_ = {lambda, a};
        p.fill_radial([&](double r) { return lambda / std::sqrt(r * r + a * a); });
        p.finish();
        return p;
    }

    // Two-column CSV (displacement, value), linear interpolation. For dim 1 the
    // displacement is signed, wrapped to [-L/2, L/2), and the table must cover that
    // range; evenness of the supplied values is enforced by the constructor check.
    // For dim 2 the displacement column is the radius |x| and must cover
    // [0, L sqrt(2)/2].
    static PairPotential tabulated(const Grid& g, const std::string& csv_path) {
        std::ifstream in(csv_path);
        if (!in) throw std::invalid_argument("PairPotential: cannot open " + csv_path);
        std::vector<std::pair<double, double>> tab;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double r, v;
            if (!(ls >> r >> v)) {
                if (tab.empty()) continue;  // tolerate one header row
                throw std::invalid_argument("PairPotential: bad CSV row: " + line);
            }
            tab.emplace_back(r, v);
        }
        if (tab.size() < 2) throw std::invalid_argument("PairPotential: table needs >= 2 rows");
        std::sort(tab.begin(), tab.end());
        const double lo_req = g.dim == 1 ? -g.L / 2.0 : 0.0;
        const double hi_req = g.dim == 1 ? g.L / 2.0 : g.L * std::sqrt(2.0) / 2.0;
        if (tab.front().first > lo_req + 1e-12 || tab.back().first < hi_req - 1e-12)
            throw std::invalid_argument("PairPotential: table does not cover the displacement range");
        auto interp = [tab](double r) {
            auto hi = std::lower_bound(tab.begin(), tab.end(), std::make_pair(r, -1e300));
            if (hi == tab.begin()) return hi->second;
            if (hi == tab.end()) return tab.back().second;
            auto lo = hi - 1;
            double t = (r - lo->first) / (hi->first - lo->first);
            return (1.0 - t) * lo->second + t * hi->second;
        };
        PairPotential p(g, PotentialKind::tabulated);
        if (g.dim == 1) {
            p.samples_ = RVec(g.npoints());
            for (Eigen::Index i = 0; i < g.npoints(); ++i)
                p.samples_[i] = interp(g.wrap(g.point(i)[0]));
        } else {
            p.fill_radial(interp);
        }
        p.finish();
        return p;
    }

    const Grid& grid() const { return grid_; }
    PotentialKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const RVec& samples() const { return samples_; }

    // quadrature Fourier coefficients Vhat(k) = h^dim sum_u V(u) e^{-2 pi i k u / L},
    // indexed by flat spectral node; real for even V.
    const RVec& fourier() const { return fourier_; }

    double fourier_at(const std::vector<int>& k) const {  // integer frequency lookup
        Eigen::Index idx = 0;
        for (int c = 0; c < grid_.dim; ++c) {
            int kk = ((k[static_cast<size_t>(c)] % grid_.n) + grid_.n) % grid_.n;
            idx = idx * grid_.n + kk;
        }
        return fourier_[idx];
    }

  private:
    PairPotential(const Grid& g, PotentialKind k) : grid_(g), kind_(k) {}

    void fill_radial(const std::function<double(double)>& f) {
        samples_ = RVec(grid_.npoints());
        for (Eigen::Index i = 0; i < grid_.npoints(); ++i) {
            auto xy = grid_.point(i);
            double r = grid_.dim == 1 ? std::abs(grid_.wrap(xy[0]))
                                      : std::hypot(grid_.wrap(xy[0]), grid_.wrap(xy[1]));
            samples_[i] = f(r);
        }
    }

    void finish() {
        // evenness under x -> -x on the periodic grid
        const int n = grid_.n;
        double dev = 0.0, scale = std::max(1.0, samples_.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < grid_.npoints(); ++i) {
            Eigen::Index j;
            if (grid_.dim == 1) {
                j = (n - i % n) % n;
            } else {
                Eigen::Index r = i / n, c = i % n;
                j = ((n - r) % n) * n + (n - c) % n;
            }
            dev = std::max(dev, std::abs(samples_[i] - samples_[j]));
        }
        if (dev > 1e-12 * scale)
            throw std::domain_error(strf("PairPotential: evenness violated by %.3e", dev / scale));
        Vec vc = samples_.cast<cxd>();
        fourier_ = (grid_.cell() * dft_forward(grid_, vc)).real();
    }

    Grid grid_;
    PotentialKind kind_ = PotentialKind::constant;
    std::vector<double> params_;
    RVec samples_;
    RVec fourier_;
};

}  // namespace mflab
