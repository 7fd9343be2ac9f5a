#include "mflab/fock.hpp"

#include "oracle_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace mflab;
using Catch::Approx;

namespace {

FockSpace make_space(int d, int n_max, double eps) {
    Grid g(2.0 * pi, 1, 8);
    return FockSpace(make_mode_space(g, d), n_max, eps);
}

Vec basis_vec(int d, int i) {
    Vec f = Vec::Zero(d);
    f[i] = 1.0;
    return f;
}

// dense exp(i H) for Hermitian H via eigendecomposition
Mat unitary_exp(const Mat& H) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    Vec phases = (iu * es.eigenvalues().cast<cxd>().array()).exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST_CASE("ladder operators on explicit low sectors") {
    SECTION("single mode chain") {
        double eps = 0.3;
        FockSpace F = make_space(1, 4, eps);
        Mat a = annihilate(F, basis_vec(1, 0)).matrix();
        REQUIRE(F.dim() == 5);
        for (int n = 0; n <= 4; ++n)
            for (int m = 0; m <= 4; ++m) {
                double want = (m + 1 == n) ? std::sqrt(eps * n) : 0.0;
                REQUIRE(std::abs(a(m, n) - want) == 0.0);
            }
    }
    SECTION("two modes, second sector") {
        double eps = 0.7;
        FockSpace F = make_space(2, 3, eps);
        const OccBasis& b2 = F.sector(2);
        REQUIRE(b2.at(0) == Occ{2, 0});
        REQUIRE(b2.at(1) == Occ{1, 1});
        REQUIRE(b2.at(2) == Occ{0, 2});
        Mat a1 = annihilate(F, basis_vec(2, 0)).matrix();
        FockVector v(F);
        v.sector(2)[0] = 1.0;  // |2,0>
        Vec out = a1 * v.flat();
        FockVector w(F, out);
        REQUIRE(std::abs(w.sector(1)[0] - std::sqrt(2.0 * eps)) < 1e-15);
        v.flat().setZero();
        v.sector(2)[1] = 1.0;  // |1,1>
        w = FockVector(F, Vec(a1 * v.flat()));
        REQUIRE(std::abs(w.sector(1)[1] - std::sqrt(eps)) < 1e-15);
        v.flat().setZero();
        v.sector(2)[2] = 1.0;  // |0,2>
        REQUIRE(Vec(a1 * v.flat()).norm() == 0.0);
    }
    SECTION("creation is the exact adjoint") {
        FockSpace F = make_space(3, 4, 0.2);
        Rng rng(11);
        Vec f = rng.cnormal_vec(3);
        Mat c = create(F, f).matrix();
        Mat a = annihilate(F, f).matrix();
        REQUIRE(max_abs(Mat(c - a.adjoint())) == 0.0);
    }
    SECTION("matrix-free appliers match the dense matrices") {
        FockSpace F = make_space(2, 5, 0.4);
        Rng rng(12);
        Vec f = rng.cnormal_vec(2);
        FockVector v(F, rng.cnormal_vec(static_cast<int>(F.dim())));
        Vec via_mat = annihilate(F, f).matrix() * v.flat();
        REQUIRE((apply_annihilate(F, f, v).flat() - via_mat).norm() < 1e-14);
        via_mat = create(F, f).matrix() * v.flat();
        REQUIRE((apply_create(F, f, v).flat() - via_mat).norm() < 1e-14);
    }
}

TEST_CASE("scaled commutation relations hold below the cutoff") {
    double eps = 0.3;
    FockSpace F = make_space(2, 5, eps);
    Rng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        Vec f = rng.cnormal_vec(2), g = rng.cnormal_vec(2);
        Mat comm = (annihilate(F, f) * create(F, g) - create(F, g) * annihilate(F, f)).matrix();
        cxd want = eps * f.dot(g);  // first slot antilinear
        FockOperator C(F, comm);
        for (int n = 0; n + 1 <= F.n_max(); ++n) {
            Mat blk = C.block(n, n);
            REQUIRE(max_abs(Mat(blk - want * Mat::Identity(blk.rows(), blk.cols()))) < 1e-10);
        }
        Mat comm_aa = (annihilate(F, f) * annihilate(F, g) - annihilate(F, g) * annihilate(F, f)).matrix();
        REQUIRE(max_abs(comm_aa) < 1e-12);
        Mat comm_cc = (create(F, f) * create(F, g) - create(F, g) * create(F, f)).matrix();
        REQUIRE(max_abs(comm_cc) < 1e-12);
    }
}

TEST_CASE("creation from the vacuum matches the square-root scaling") {
    FockSpace F = make_space(2, 3, 0.25);
    FockVector om = FockVector::vacuum(F);
    FockVector w = apply_create(F, basis_vec(2, 0), om);
    REQUIRE(w.sector(1)[0] == cxd(0.5, 0.0));  // sqrt(0.25 * 1), exact
    REQUIRE(std::abs(w.norm() - 0.5) < 1e-16);
    REQUIRE(w.sector(0)[0] == cxd(0.0));
    REQUIRE(w.sector(1)[1] == cxd(0.0));
}

TEST_CASE("second quantization of one-body observables") {
    SECTION("identity gives the scaled particle number, exactly") {
        double eps = 0.125;
        FockSpace F = make_space(2, 6, eps);
        Mat N = number_op(F).matrix();
        for (int n = 0; n <= 6; ++n) {
            FockOperator Nop(F, N);
            Mat blk = Nop.block(n, n);
            Mat want = (eps * n) * Mat::Identity(blk.rows(), blk.cols());
            REQUIRE(max_abs(Mat(blk - want)) == 0.0);
        }
        REQUIRE(FockOperator(F, N).off_block_diagonal() == 0.0);
    }
    SECTION("diagonal observable on a two-mode state") {
        FockSpace F = make_space(2, 3, 0.5);
        Mat A = Mat::Zero(2, 2);
        A(0, 0) = 1.0;
        A(1, 1) = 2.0;
        FockVector v(F);
        v.sector(2)[F.sector(2).index({1, 1})] = 1.0;
        cxd val = expectation(v, dgamma(F, A));
        REQUIRE(std::abs(val - cxd(1.5)) < 1e-15);  // 0.5 * (1*1 + 2*1)
    }
    SECTION("first sector reproduces the one-body matrix") {
        FockSpace F = make_space(3, 3, 0.35);
        Rng rng(31);
        Mat A = rng.cnormal_vec(9).reshaped(3, 3);
        A = Mat((A + A.adjoint()) / 2.0);
        FockOperator op = dgamma(F, A);
        REQUIRE(max_abs(Mat(op.block(1, 1) - 0.35 * A)) < 1e-15);
    }
    SECTION("non-Hermitian input is rejected") {
        FockSpace F = make_space(2, 2, 0.5);
        Mat A = Mat::Zero(2, 2);
        A(0, 1) = 1.0;
        REQUIRE_THROWS_AS(dgamma(F, A), std::invalid_argument);
    }
    SECTION("matches the quadratic polynomial in ladder operators") {
        FockSpace F = make_space(2, 4, 0.6);
        Rng rng(32);
        Mat A = rng.cnormal_vec(4).reshaped(2, 2);
        A = Mat((A + A.adjoint()) / 2.0);
        // dGamma(A) = sum_ij A_ij a*_i a_j
        Mat direct = Mat::Zero(F.dim(), F.dim());
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                direct += A(i, j) * (create(F, basis_vec(2, i)) * annihilate(F, basis_vec(2, j))).matrix();
        // a*_i a_j dips one sector down and returns, so no cutoff loss on any sector
        REQUIRE(max_abs(Mat(dgamma(F, A).matrix() - direct)) < 1e-12);
    }
}

TEST_CASE("Weyl operator fundamentals") {
    SECTION("vacuum overlap is the exact Gaussian factor") {
        for (double eps : {1.0, 0.25, 0.05}) {
            FockSpace F = make_space(1, 16, eps);
            Vec f = basis_vec(1, 0);
            WeylOp W = weyl(F, f);
            cxd overlap = W.op.matrix()(0, 0);
            REQUIRE(std::abs(overlap - std::exp(-eps / 4.0)) < 1e-16);
            if (eps == 1.0) REQUIRE(overlap.real() == Approx(0.7788007830714049).epsilon(1e-14));
        }
    }
    SECTION("norm is preserved well below the cutoff") {
        FockSpace F = make_space(2, 20, 0.1);
        Rng rng(41);
        Vec f = rng.cnormal_vec(2);
        FockVector w = weyl_apply(F, f, FockVector::vacuum(F));
        REQUIRE(std::abs(w.norm() - 1.0) < 1e-12);
    }
    SECTION("the displaced vacuum is a ladder eigenstate") {
        double eps = 0.5;
        FockSpace F = make_space(2, 30, eps);
        Vec f(2);
        f << cxd(0.8, 0.1), cxd(-0.3, 0.4);
        FockVector w = weyl_apply(F, f, FockVector::vacuum(F));
        // W(f) Omega is the coherent state with point z0 = i eps f / sqrt(2)
        Vec z0 = iu * eps / std::sqrt(2.0) * f;
        for (int i = 0; i < 2; ++i) {
            FockVector av = apply_annihilate(F, basis_vec(2, i), w);
            REQUIRE((av.flat() - z0[i] * w.flat()).norm() < 1e-10);
        }
        cxd nbar = expectation(w, number_op(F));
        REQUIRE(std::abs(nbar - cxd(z0.squaredNorm())) < 1e-12);
    }
}

TEST_CASE("Weyl product law") {
    SECTION("frozen example") {
        double eps = 0.1;
        FockSpace F = make_space(1, 20, eps);
        Vec z1 = basis_vec(1, 0);
        Vec z2 = iu * basis_vec(1, 0);
        FockVector om = FockVector::vacuum(F);
        FockVector lhs = weyl_apply(F, z1, weyl_apply(F, z2, om));
        FockVector rhs = weyl_apply(F, Vec(z1 + z2), om);
        // W(z1) W(z2) = exp(-i eps/2 Im<z1,z2>) W(z1+z2); here Im<z1,z2> = 1
        cxd phase = std::exp(-iu * 0.05);
        REQUIRE((lhs.flat() - phase * rhs.flat()).norm() < 1e-12);
        cxd measured = rhs.dot(lhs) / rhs.flat().squaredNorm();
        REQUIRE(std::abs(measured - phase) < 1e-12);
    }
    SECTION("random pairs") {
        double eps = 0.2;
        FockSpace F = make_space(2, 24, eps);
        Rng rng(51);
        for (int trial = 0; trial < 4; ++trial) {
            Vec z1 = rng.cnormal_vec(2), z2 = rng.cnormal_vec(2);
            FockVector om = FockVector::vacuum(F);
            FockVector lhs = weyl_apply(F, z1, weyl_apply(F, z2, om));
            FockVector rhs = weyl_apply(F, Vec(z1 + z2), om);
            cxd phase = std::exp(-iu * (eps / 2.0) * z1.dot(z2).imag());
            REQUIRE((lhs.flat() - phase * rhs.flat()).norm() < 1e-9);
        }
    }
}

TEST_CASE("Weyl matrix agrees with the exponential of the truncated generator on low sectors") {
    double eps = 0.25;
    FockSpace F = make_space(1, 20, eps);
    Vec f(1);
    f << cxd(0.6, 0.2);
    Mat H = ((create(F, f) + annihilate(F, f)).matrix() / std::sqrt(2.0));
    Mat W_gen = unitary_exp(H);
    Mat W_cmp = weyl(F, f).op.matrix();
    Eigen::Index lim = F.offset(5) + F.sector_dim(5);
    REQUIRE(max_abs(Mat(W_gen.topLeftCorner(lim, lim) - W_cmp.topLeftCorner(lim, lim))) < 1e-9);
}

TEST_CASE("weyl_apply matches the dense Weyl matrix") {
    FockSpace F = make_space(2, 8, 0.3);
    Rng rng(61);
    Vec f = rng.cnormal_vec(2);
    FockVector v(F, rng.cnormal_vec(static_cast<int>(F.dim())));
    Vec dense = weyl(F, f).op.matrix() * v.flat();
    REQUIRE((weyl_apply(F, f, v).flat() - dense).norm() < 1e-12 * dense.norm());
}

TEST_CASE("Weyl leakage diagnostic") {
    SECTION("generous headroom stays below the warning threshold") {
        FockSpace F = make_space(1, 24, 0.1);
        Vec f = 0.5 * basis_vec(1, 0);
        WeylOp W = weyl(F, f);
        REQUIRE(W.protected_up_to < 24);
        REQUIRE(W.leakage < 1e-6);
        REQUIRE_FALSE(W.warn);
    }
    SECTION("aggressive displacement trips the warning") {
        FockSpace F = make_space(1, 6, 0.5);
        Vec f = 3.0 * basis_vec(1, 0);
        WeylOp W = weyl(F, f);
        REQUIRE(W.warn);
        REQUIRE(W.leakage > 1e-6);
    }
    SECTION("leakage bounds the per-state mass loss") {
        FockSpace F = make_space(2, 12, 0.25);
        Rng rng(71);
        Vec f = rng.cnormal_vec(2);
        WeylOp W = weyl(F, f);
        FockVector v(F);
        Eigen::Index pdim = F.offset(W.protected_up_to) + F.sector_dim(W.protected_up_to);
        v.flat().head(pdim) = rng.cnormal_vec(static_cast<int>(pdim));
        v.normalize();
        double lost = 1.0 - W.op.apply(v).flat().squaredNorm();
        REQUIRE(lost >= -1e-12);
        REQUIRE(lost <= W.leakage + 1e-12);
    }
}

TEST_CASE("density operator guards and weights") {
    FockSpace F = make_space(2, 4, 0.5);
    Rng rng(81);
    SECTION("pure and mixed construction") {
        FockVector a(F, rng.cnormal_vec(static_cast<int>(F.dim())));
        FockVector b(F, rng.cnormal_vec(static_cast<int>(F.dim())));
        a.normalize();
        b.normalize();
        DensityOp rho(F, Mat(0.3 * DensityOp::pure(a).matrix() + 0.7 * DensityOp::pure(b).matrix()));
        RVec w = rho.sector_weights();
        REQUIRE(std::abs(w.sum() - 1.0) < 1e-12);
        REQUIRE(w.minCoeff() > 0.0);
    }
    SECTION("trace, hermiticity and positivity are enforced") {
        Mat good = Mat::Zero(F.dim(), F.dim());
        good(0, 0) = 1.0;
        REQUIRE_NOTHROW(DensityOp(F, good));
        Mat bad_trace = 2.0 * good;
        REQUIRE_THROWS_AS(DensityOp(F, bad_trace), std::domain_error);
        Mat bad_herm = good;
        bad_herm(0, 1) = 0.5;
        REQUIRE_THROWS_AS(DensityOp(F, bad_herm), std::domain_error);
        Mat bad_pos = Mat::Zero(F.dim(), F.dim());
        bad_pos(0, 0) = 1.5;
        bad_pos(1, 1) = -0.5;
        REQUIRE_THROWS_AS(DensityOp(F, bad_pos), std::domain_error);
    }
}

TEST_CASE("trace norm of pure-state differences") {
    FockSpace F = make_space(2, 4, 0.4);
    Rng rng(91);
    for (int trial = 0; trial < 4; ++trial) {
        FockVector a(F, rng.cnormal_vec(static_cast<int>(F.dim())));
        FockVector b(F, rng.cnormal_vec(static_cast<int>(F.dim())));
        a.normalize();
        b.normalize();
        double got = trace_norm_diff(DensityOp::pure(a), DensityOp::pure(b));
        double ov = std::abs(a.dot(b));
        double want = 2.0 * std::sqrt(std::max(0.0, 1.0 - ov * ov));
        REQUIRE(got == Approx(want).margin(1e-10));
    }
}

TEST_CASE("serialization round-trips exactly") {
    FockSpace F = make_space(2, 3, 0.3);
    Rng rng(101);
    SECTION("state vectors") {
        FockVector v(F, rng.cnormal_vec(static_cast<int>(F.dim())));
        std::stringstream ss;
        write_vector_csv(ss, v);
        FockVector back = read_vector_csv(ss, F);
        REQUIRE(max_abs(Vec(back.flat() - v.flat())) == 0.0);
    }
    SECTION("density operators with cross-sector coherences") {
        FockVector v(F, rng.cnormal_vec(static_cast<int>(F.dim())));
        v.normalize();
        DensityOp rho = DensityOp::pure(v);
        REQUIRE(rho.off_block_diagonal() > 0.0);
        std::stringstream ss;
        write_density_csv(ss, rho);
        DensityOp back = read_density_csv(ss, F);
        REQUIRE(max_abs(Mat(back.matrix() - rho.matrix())) == 0.0);
    }
}

TEST_CASE("graded energy bound operator") {
    FockSpace F = make_space(3, 4, 0.5);
    SECTION("diagonal values") {
        double lambda = 2.0;
        FockOperator S = s_epsilon(F, lambda);
        // modes carry kinetic weights (0, 1, 1); sobolev weights (1, 2, 2)
        const OccBasis& b3 = F.sector(3);
        Occ nu{0, 2, 1};
        double want = 0.5 * (1.0 * 0 + 2.0 * 2 + 2.0 * 1) + lambda * std::pow(0.5 * 3, 3);
        REQUIRE(std::abs(S.block(3, 3)(b3.index(nu), b3.index(nu)) - cxd(want)) < 1e-14);
        REQUIRE(S.off_block_diagonal() == 0.0);
    }
    SECTION("non-positive grading strength is rejected") {
        REQUIRE_THROWS_AS(s_epsilon(F, 0.0), std::invalid_argument);
        REQUIRE_THROWS_AS(s_epsilon(F, -1.0), std::invalid_argument);
    }
}

TEST_CASE("expectation values agree between vector and density forms") {
    FockSpace F = make_space(2, 5, 0.2);
    Rng rng(111);
    FockVector v(F, rng.cnormal_vec(static_cast<int>(F.dim())));
    v.normalize();
    Mat A = rng.cnormal_vec(4).reshaped(2, 2);
    A = Mat((A + A.adjoint()) / 2.0);
    FockOperator op = dgamma(F, A);
    cxd via_vec = expectation(v, op);
    cxd via_rho = expectation(DensityOp::pure(v), op);
    REQUIRE(std::abs(via_vec - via_rho) < 1e-12);
}
