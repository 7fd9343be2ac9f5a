#pragma once

// Shared aliases, numeric constants and small formatting/RNG helpers used across the
// library. Everything is header-only; heavy lifting is delegated to Eigen.

#include <Eigen/Dense>

#include <complex>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

using cxd = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double pi = 3.141592653589793238462643383279502884;

inline constexpr cxd iu{0.0, 1.0};

// printf-style helper; all user-facing numeric output goes through here so that
// identical inputs yield byte-identical files.
inline std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    int n = std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    if (n < 0 || n >= static_cast<int>(sizeof(buf))) throw std::runtime_error("strf: format overflow");
    return std::string(buf, static_cast<size_t>(n));
}

// %.17g round-trips doubles exactly; used for machine-readable output.
inline std::string fmt_full(double x) { return strf("%.17g", x); }
// %.12g for human-facing tables and plots.
inline std::string fmt_g(double x) { return strf("%.12g", x); }

inline bool approx_eq(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Deterministic uniform/normal draws. std::normal_distribution is implementation
// defined, so Gaussians are produced by Box-Muller on the standardized mt19937_64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // in [0,1)
        return (gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        have_spare_ = true;
        spare_ = r * std::sin(2.0 * pi * u2);
        return r * std::cos(2.0 * pi * u2);
    }

    cxd cnormal() { return cxd(normal(), normal()) / std::sqrt(2.0); }  // E|z|^2 = 1

    Vec cnormal_vec(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = cnormal();
        return v;
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Largest |entry| of a complex matrix; cheap sanity metric used by invariant checks.
inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }
inline double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Spectral norm via SVD; matrices here are desk-scale so exactness beats speed.
inline double op_norm(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    return m.jacobiSvd().singularValues()(0);
}

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace mflab
