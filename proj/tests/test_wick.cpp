#include "mflab/wick.hpp"

#include "oracle_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mflab;
using Catch::Approx;

namespace {

FockSpace make_space(int d, int n_max, double eps) {
    Grid g(2.0 * pi, 1, 8);
    return FockSpace(make_mode_space(g, d), n_max, eps);
}

WickSymbol random_symbol(Rng& rng, int d, int p, int q) {
    OccBasis bq(d, q), bp(d, p);
    Mat k(bq.dim(), bp.dim());
    for (Eigen::Index r = 0; r < k.rows(); ++r)
        for (Eigen::Index c = 0; c < k.cols(); ++c) k(r, c) = rng.cnormal();
    return {d, p, q, k};
}

// blocks of b1^Wick b2^Wick are free of cutoff loss when the intermediate sector
// n - p2 + q2 is retained
bool product_block_safe(const FockSpace& F, const WickSymbol& b2, int n) {
    int mid = n - b2.p + b2.q;
    return mid >= 0 && mid <= F.n_max();
}

double block_diff_on_safe(const FockSpace& F, const Mat& got, const Mat& want, const WickSymbol& b2) {
    FockOperator G(F, got), W(F, want);
    double dev = 0.0;
    for (int n = 0; n <= F.n_max(); ++n) {
        if (!product_block_safe(F, b2, n)) continue;
        for (int m = 0; m <= F.n_max(); ++m)
            dev = std::max(dev, max_abs(Mat(G.block(m, n) - W.block(m, n))));
    }
    return dev;
}

}  // namespace

TEST_CASE("symbol evaluation") {
    Rng rng(7);
    SECTION("quadratic symbols") {
        Mat A = rng.cnormal_vec(9).reshaped(3, 3);
        WickSymbol b = wick_of_quadratic(A);
        for (int t = 0; t < 5; ++t) {
            Vec z = rng.cnormal_vec(3);
            REQUIRE(std::abs(b.eval(z) - z.dot(A * z)) < 1e-12 * (1.0 + std::abs(z.dot(A * z))));
        }
    }
    SECTION("linear symbols and adjoints") {
        Vec f = rng.cnormal_vec(2);
        Vec z = rng.cnormal_vec(2);
        REQUIRE(std::abs(wick_of_annihilation(f).eval(z) - f.dot(z)) < 1e-13);
        REQUIRE(std::abs(wick_of_creation(f).eval(z) - z.dot(f)) < 1e-13);
        WickSymbol b = random_symbol(rng, 2, 2, 1);
        REQUIRE(std::abs(b.adjoint().eval(z) - std::conj(b.eval(z))) < 1e-12);
    }
    SECTION("constants") {
        REQUIRE(wick_constant(3, cxd(2.5, -1.0)).eval(Vec::Zero(3)) == cxd(2.5, -1.0));
    }
}

TEST_CASE("quantization of elementary symbols") {
    SECTION("linear symbols give the ladder operators") {
        FockSpace F = make_space(2, 5, 0.3);
        Rng rng(17);
        Vec f = rng.cnormal_vec(2);
        Mat a_direct = annihilate(F, f).matrix();
        Mat a_wick = wick_quantize(F, wick_of_annihilation(f)).matrix();
        REQUIRE(max_abs(Mat(a_wick - a_direct)) < 1e-14);
        Mat c_wick = wick_quantize(F, wick_of_creation(f)).matrix();
        REQUIRE(max_abs(Mat(c_wick - create(F, f).matrix())) < 1e-14);
    }
    SECTION("the number symbol quantizes to the number operator bit for bit") {
        FockSpace F = make_space(2, 6, 0.25);  // dyadic eps: both routes are exact
        Mat got = wick_quantize(F, wick_of_quadratic(Mat::Identity(2, 2))).matrix();
        REQUIRE(max_abs(Mat(got - number_op(F).matrix())) == 0.0);
    }
    SECTION("quadratic symbols give second quantization") {
        FockSpace F = make_space(2, 5, 0.37);
        Rng rng(18);
        Mat A = rng.cnormal_vec(4).reshaped(2, 2);
        A = Mat((A + A.adjoint()) / 2.0);
        REQUIRE(max_abs(Mat(wick_quantize(F, wick_of_quadratic(A)).matrix() - dgamma(F, A).matrix())) <
                1e-14);
    }
    SECTION("constant symbols give multiples of the identity") {
        FockSpace F = make_space(2, 3, 0.5);
        Mat got = wick_quantize(F, wick_constant(2, cxd(0.0, 2.0))).matrix();
        REQUIRE(max_abs(Mat(got - cxd(0.0, 2.0) * Mat::Identity(F.dim(), F.dim()))) == 0.0);
    }
}

TEST_CASE("composition reproduces operator products") {
    SECTION("squared number operator") {
        FockSpace F = make_space(1, 8, 0.3);
        WickSymbol nsym = wick_of_quadratic(Mat::Identity(1, 1));
        WickPoly sq = compose(nsym, nsym, F.epsilon());
        Mat got = wick_quantize(F, sq).matrix();
        Mat want = number_op(F).matrix() * number_op(F).matrix();
        REQUIRE(max_abs(Mat(got - want)) < 1e-12);
        // the symbol picks up the scaled lower-order term: |z|^4 + eps |z|^2
        REQUIRE(sq.terms.size() == 2);
    }
    SECTION("quadratic times quadratic, two modes") {
        FockSpace F = make_space(2, 6, 0.45);
        Rng rng(23);
        Mat A = rng.cnormal_vec(4).reshaped(2, 2);
        Mat B = rng.cnormal_vec(4).reshaped(2, 2);
        WickSymbol ba = wick_of_quadratic(A), bb = wick_of_quadratic(B);
        Mat got = wick_quantize(F, compose(ba, bb, F.epsilon())).matrix();
        Mat want = wick_quantize(F, ba).matrix() * wick_quantize(F, bb).matrix();
        REQUIRE(max_abs(Mat(got - want)) < 1e-12 * (1.0 + max_abs(want)));
    }
    SECTION("general bidegrees on the safe blocks") {
        FockSpace F = make_space(2, 6, 0.3);
        Rng rng(29);
        struct Deg {
            int p1, q1, p2, q2;
        };
        for (Deg dg : {Deg{2, 1, 1, 2}, Deg{0, 2, 2, 2}, Deg{2, 2, 2, 2}, Deg{1, 0, 0, 1}}) {
            WickSymbol b1 = random_symbol(rng, 2, dg.p1, dg.q1);
            WickSymbol b2 = random_symbol(rng, 2, dg.p2, dg.q2);
            Mat got = wick_quantize(F, compose(b1, b2, F.epsilon())).matrix();
            Mat want = wick_quantize(F, b1).matrix() * wick_quantize(F, b2).matrix();
            double scale = 1.0 + max_abs(want);
            REQUIRE(block_diff_on_safe(F, got, want, b2) < 1e-10 * scale);
        }
    }
}

TEST_CASE("commutator symbols match operator commutators") {
    FockSpace F = make_space(2, 6, 0.35);
    Rng rng(31);
    struct Deg {
        int p1, q1, p2, q2;
    };
    for (Deg dg : {Deg{1, 1, 1, 1}, Deg{2, 1, 1, 2}, Deg{2, 2, 1, 1}}) {
        WickSymbol b1 = random_symbol(rng, 2, dg.p1, dg.q1);
        WickSymbol b2 = random_symbol(rng, 2, dg.p2, dg.q2);
        Mat got = wick_quantize(F, commutator_symbol(b1, b2, F.epsilon())).matrix();
        Mat want = commutator(wick_quantize(F, b1), wick_quantize(F, b2)).matrix();
        FockOperator G(F, got), W(F, want);
        double dev = 0.0;
        for (int n = 0; n <= F.n_max(); ++n) {
            if (!product_block_safe(F, b2, n) || !product_block_safe(F, b1, n)) continue;
            for (int m = 0; m <= F.n_max(); ++m)
                dev = std::max(dev, max_abs(Mat(G.block(m, n) - W.block(m, n))));
        }
        REQUIRE(dev < 1e-10 * (1.0 + max_abs(want)));
    }
}

TEST_CASE("contraction calculus") {
    Rng rng(37);
    SECTION("order zero is the pointwise product") {
        WickSymbol b1 = random_symbol(rng, 2, 1, 2), b2 = random_symbol(rng, 2, 2, 0);
        WickSymbol prod = contract(b1, b2, 0);
        REQUIRE(prod.p == 3);
        REQUIRE(prod.q == 2);
        for (int t = 0; t < 4; ++t) {
            Vec z = rng.cnormal_vec(2);
            cxd want = b1.eval(z) * b2.eval(z);
            REQUIRE(std::abs(prod.eval(z) - want) < 1e-11 * (1.0 + std::abs(want)));
        }
    }
    SECTION("out-of-range order and mode mismatch are rejected") {
        WickSymbol b1 = random_symbol(rng, 2, 1, 1), b2 = random_symbol(rng, 2, 1, 1);
        REQUIRE_THROWS_AS(contract(b1, b2, 2), std::invalid_argument);
        REQUIRE_THROWS_AS(contract(b1, b2, -1), std::invalid_argument);
        WickSymbol b3 = random_symbol(rng, 3, 1, 1);
        REQUIRE_THROWS_AS(contract(b1, b3, 1), std::invalid_argument);
    }
    SECTION("norm bound with the sharp constant") {
        for (auto [p1, q1, p2, q2] : {std::array<int, 4>{2, 1, 1, 2}, std::array<int, 4>{2, 2, 2, 2},
                                      std::array<int, 4>{1, 1, 2, 1}}) {
            WickSymbol b1 = random_symbol(rng, 2, p1, q1), b2 = random_symbol(rng, 2, p2, q2);
            for (int k = 0; k <= std::min(p1, q2); ++k) {
                double bound = static_cast<double>(binom(p1, k)) * static_cast<double>(binom(q2, k));
                for (int i = 1; i <= k; ++i) bound *= i;
                REQUIRE(contract(b1, b2, k).norm() <= bound * b1.norm() * b2.norm() + 1e-12);
            }
        }
        // sharpness: powers of one mode attain the constant exactly
        WickSymbol zp{1, 2, 0, Mat::Ones(1, 1)};
        WickSymbol zq{1, 0, 2, Mat::Ones(1, 1)};
        REQUIRE(contract(zp, zq, 1).norm() == Approx(4.0).margin(1e-12));
        REQUIRE(contract(zp, zq, 2).norm() == Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("graded number estimate") {
    SECTION("random symbols stay below their kernel norm") {
        Rng rng(41);
        for (double eps : {1.0, 0.25, 0.05}) {
            FockSpace F = make_space(2, 8, eps);
            for (auto [p, q] : {std::array<int, 2>{1, 1}, std::array<int, 2>{2, 0},
                                std::array<int, 2>{2, 2}, std::array<int, 2>{0, 1}}) {
                WickSymbol b = random_symbol(rng, 2, p, q);
                NumberEstimate est = number_estimate_check(F, b);
                INFO("eps " << eps << " degrees " << p << "," << q);
                REQUIRE(est.ok);
                REQUIRE(est.sandwiched_norm <= est.symbol_norm + 1e-12);
            }
        }
    }
    SECTION("the number symbol saturates along the sectors") {
        double eps = 0.5;
        FockSpace F = make_space(1, 10, eps);
        NumberEstimate est = number_estimate_check(F, wick_of_quadratic(Mat::Identity(1, 1)));
        double want = 0.0;
        for (int n = 0; n <= 10; ++n)
            want = std::max(want, eps * n / std::sqrt(1.0 + std::pow(eps * n, 2)));
        REQUIRE(est.sandwiched_norm == Approx(want).margin(1e-12));
        REQUIRE(est.symbol_norm == Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("positivity is preserved in order") {
    FockSpace F = make_space(2, 5, 0.4);
    Rng rng(43);
    OccBasis b2(2, 2);
    Mat R1 = rng.cnormal_vec(b2.dim() * b2.dim()).reshaped(b2.dim(), b2.dim());
    Mat R2 = rng.cnormal_vec(b2.dim() * b2.dim()).reshaped(b2.dim(), b2.dim());
    Mat K1 = R1.adjoint() * R1;               // PSD
    Mat K2 = K1 + R2.adjoint() * R2;          // K2 >= K1 >= 0
    Mat lower = wick_quantize(F, WickSymbol{2, 2, 2, K1}).matrix();
    Mat upper = wick_quantize(F, WickSymbol{2, 2, 2, K2}).matrix();
    Eigen::SelfAdjointEigenSolver<Mat> gap(Mat(upper - lower), Eigen::EigenvaluesOnly);
    REQUIRE(gap.eigenvalues().minCoeff() > -1e-12);
    Eigen::SelfAdjointEigenSolver<Mat> pos(lower, Eigen::EigenvaluesOnly);
    REQUIRE(pos.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("cylindrical Weyl quantization") {
    SECTION("point masses assemble shifted Weyl operators") {
        double eps = 0.2;
        FockSpace F = make_space(2, 8, eps);
        CylindricalSymbol cs;
        cs.base = Mat::Identity(2, 2);
        Vec zeta1(2), zeta2(2);
        zeta1 << cxd(0.1, 0.05), cxd(-0.07, 0.02);
        zeta2 = -zeta1;
        cs.points.push_back({cxd(0.5, 0.25), zeta1});
        cs.points.push_back({cxd(0.5, -0.25), zeta2});  // conjugate pair: real symbol
        CylQuantResult r = weyl_quantize_cyl(F, cs);
        REQUIRE(max_abs(Mat(r.op.matrix() - r.op.matrix().adjoint())) < 1e-12);
        cxd vac = r.op.matrix()(0, 0);
        cxd want = 0.0;
        for (const auto& pt : cs.points) {
            double s2 = 2.0 * pi * pi * pt.zeta.squaredNorm();
            want += pt.coeff * std::exp(-eps * s2 / 4.0);
        }
        REQUIRE(std::abs(vac - want) < 1e-13);
    }
    SECTION("Gaussian symbol, rank one: vacuum expectation in closed form") {
        double eps = 0.2;
        FockSpace F = make_space(1, 10, eps);
        CylindricalSymbol cs;
        cs.base = Mat::Identity(1, 1);
        cs.fourier = [](const Vec& zeta) { return cxd(std::exp(-pi * zeta.squaredNorm())); };
        cs.gauss_alpha = pi;
        CylQuantResult r = weyl_quantize_cyl(F, cs);
        double want = 1.0 / (1.0 + eps * pi / 2.0);
        REQUIRE(std::abs(r.op.matrix()(0, 0) - cxd(want)) < 1e-9);
        REQUIRE(max_abs(Mat(r.op.matrix() - r.op.matrix().adjoint())) < 1e-10);
    }
    SECTION("Gaussian symbol, rank two") {
        double eps = 0.3;
        FockSpace F = make_space(2, 3, eps);
        CylindricalSymbol cs;
        cs.base = Mat::Identity(2, 2);
        cs.fourier = [](const Vec& zeta) { return cxd(std::exp(-pi * zeta.squaredNorm())); };
        cs.gauss_alpha = pi;
        CylQuantResult r = weyl_quantize_cyl(F, cs);
        double want = std::pow(1.0 + eps * pi / 2.0, -2.0);
        REQUIRE(std::abs(r.op.matrix()(0, 0) - cxd(want)) < 1e-8);
    }
    SECTION("pointwise evaluation of the Gaussian symbol is self-dual") {
        CylindricalSymbol cs;
        cs.base = Mat::Identity(1, 1);
        cs.fourier = [](const Vec& zeta) { return cxd(std::exp(-pi * zeta.squaredNorm())); };
        cs.gauss_alpha = pi;
        Rng rng(47);
        for (int t = 0; t < 3; ++t) {
            Vec z = 0.7 * rng.cnormal_vec(1);
            cxd got = cs.eval(z);
            double want = std::exp(-pi * z.squaredNorm());
            REQUIRE(std::abs(got - cxd(want)) < 1e-9);
        }
    }
    SECTION("rank and orthonormality are validated") {
        FockSpace F = make_space(2, 3, 0.5);
        CylindricalSymbol bad;
        bad.base = Mat::Ones(2, 2);
        REQUIRE_THROWS_AS(weyl_quantize_cyl(F, bad), std::invalid_argument);
        CylindricalSymbol wide;
        wide.base = Mat::Zero(2, 3);
        wide.base(0, 0) = 1.0;
        wide.base(1, 1) = 1.0;
        REQUIRE_THROWS_AS(weyl_quantize_cyl(F, wide), std::invalid_argument);
    }
}

TEST_CASE("anti-Wick quantization") {
    SECTION("quadratic closed form against the coherent projector integral") {
        double eps = 0.25;
        int n_max = 12;
        FockSpace F = make_space(1, n_max, eps);
        double a = 1.3;
        Mat A(1, 1);
        A(0, 0) = a;
        Mat got = anti_wick_quadratic(F, A).matrix();

        // oracle: (pi eps)^{-1} int a |z|^2 <m|E_z><E_z|n> dz with Gauss-Laguerre in
        // t = |z|^2/eps and an exact trapezoid in the angle
        oracle::GaussLaguerre gl = oracle::gauss_laguerre(24);
        const int P = 64;
        Mat want = Mat::Zero(F.dim(), F.dim());
        std::vector<double> logfact(static_cast<size_t>(n_max) + 1, 0.0);
        for (int n = 1; n <= n_max; ++n) logfact[static_cast<size_t>(n)] = logfact[static_cast<size_t>(n) - 1] + std::log(n);
        for (int m = 0; m <= n_max; ++m)
            for (int n = 0; n <= n_max; ++n) {
                cxd ang = 0.0;
                for (int pth = 0; pth < P; ++pth) {
                    double th = 2.0 * pi * pth / P;
                    ang += std::exp(iu * th * static_cast<double>(n - m));
                }
                ang /= static_cast<double>(P);
                if (std::abs(ang) < 1e-15) continue;
                double rad = 0.0;
                for (int i = 0; i < gl.nodes.size(); ++i) {
                    double t = gl.nodes[i];
                    // a eps t * t^{(m+n)/2} / sqrt(m! n!)
                    rad += gl.weights[i] * a * eps * t *
                           std::exp(0.5 * (m + n) * std::log(t) -
                                    0.5 * (logfact[static_cast<size_t>(m)] + logfact[static_cast<size_t>(n)]));
                }
                want(m, n) = ang * rad;
            }
        REQUIRE(max_abs(Mat(got - want)) < 1e-10 * (1.0 + max_abs(want)));
    }
    SECTION("the quadratic rule shifts the diagonal by eps per unit trace") {
        FockSpace F = make_space(2, 4, 0.5);
        Mat A = Mat::Identity(2, 2);
        Mat got = anti_wick_quadratic(F, A).matrix();
        Mat want = number_op(F).matrix() + 2.0 * 0.5 * Mat::Identity(F.dim(), F.dim());
        REQUIRE(max_abs(Mat(got - want)) < 1e-14);
    }
    SECTION("bounded nonnegative symbols quantize positively") {
        double eps = 0.2;
        FockSpace F = make_space(1, 10, eps);
        CylindricalSymbol cs;
        cs.base = Mat::Identity(1, 1);
        cs.fourier = [](const Vec& zeta) { return cxd(std::exp(-pi * zeta.squaredNorm())); };
        cs.gauss_alpha = pi;
        CylQuantResult r = anti_wick(F, cs);
        double want = 1.0 / (1.0 + eps * pi);
        REQUIRE(std::abs(r.op.matrix()(0, 0) - cxd(want)) < 1e-9);
        Mat sym = (r.op.matrix() + r.op.matrix().adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
        REQUIRE(es.eigenvalues().minCoeff() > -1e-10);
    }
    SECTION("constants pass through") {
        FockSpace F = make_space(2, 3, 0.4);
        CylindricalSymbol cs;
        cs.base = Mat::Identity(2, 2);
        cs.points.push_back({cxd(1.5), Vec::Zero(2)});
        CylQuantResult r = anti_wick(F, cs);
        REQUIRE(max_abs(Mat(r.op.matrix() - 1.5 * Mat::Identity(F.dim(), F.dim()))) < 1e-14);
    }
}
