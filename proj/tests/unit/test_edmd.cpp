#include <cmath>

#include "doctest.h"
#include "dpdd/edmd.hpp"
#include "dpdd/parallel.hpp"
#include "dpdd/rng.hpp"

using namespace dpdd;

namespace {

SnapshotPairs ou_pairs(std::size_t M, std::uint64_t seed, double dt = 0.01) {
    SimConfig cfg;
    cfg.dt = dt;
    cfg.seed = seed;
    return sample_stationary_pairs(builtin_model("ou"), cfg, M, SamplingMode::SingleTrajectory);
}

/// Deterministic pairs y = a x with x ~ N(0, 1).
SnapshotPairs linear_pairs(double a, int M) {
    Philox4x32 rng(5, 0);
    SnapshotPairs p;
    p.dt = 0.01;
    p.X.resize(1, M);
    for (int m = 0; m < M; ++m) p.X(0, m) = rng.normal();
    p.Y = a * p.X;
    return p;
}

} // namespace

TEST_SUITE("edmd-core") {

TEST_CASE("Gram assembly examples") {
    Matrix psi(2, 1);
    psi << 1.0, 2.0;
    const GramPair g = assemble_grams(psi, psi);
    Matrix expected(2, 2);
    expected << 1, 2, 2, 4;
    CHECK(g.G == expected);
    CHECK(g.A == g.G);
    CHECK(g.M == 1);
    CHECK_FALSE(g.warnings.empty());  // M < N
    CHECK_THROWS_AS(assemble_grams(Matrix::Zero(2, 3), Matrix::Zero(2, 4)), InputError);
}

TEST_CASE("Gram sums do not depend on the thread count") {
    const SnapshotPairs p = ou_pairs(20000, 3);
    const Dictionary d = monomial_dict(1, 4);
    set_num_threads(1);
    const GramPair a = assemble_grams(d.eval_matrix(p.X), d.eval_matrix(p.Y));
    set_num_threads(3);
    const GramPair b = assemble_grams(d.eval_matrix(p.X), d.eval_matrix(p.Y));
    set_num_threads(0);
    CHECK(a.G == b.G);
    CHECK(a.A == b.A);
}

TEST_CASE("OU Gram entry for (x, x) and PSD property") {
    const std::size_t M = 10000;
    Philox4x32 rng(8, 0);
    Matrix X(1, M);
    for (Eigen::Index m = 0; m < X.cols(); ++m) X(0, m) = rng.normal();
    const Dictionary d = monomial_dict(1, 3);
    const GramPair g = assemble_grams(d.eval_matrix(X), d.eval_matrix(X));
    CHECK(std::abs(g.G(1, 1) - 1.0) <= 3.0 * std::sqrt(2.0 / M));
    CHECK(g.G == g.G.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * g.G.norm());
}

TEST_CASE("Koopman matrix examples") {
    const SnapshotPairs id = linear_pairs(1.0, 500);
    const Dictionary d = monomial_dict(1, 2);
    const KoopmanMatrix k1 = koopman_matrix(assemble_grams(d.eval_matrix(id.X), d.eval_matrix(id.Y)));
    CHECK((k1.K - Matrix::Identity(3, 3)).norm() < 1e-10);
    CHECK(k1.rank == 3);

    const double a = std::exp(-0.01);
    const SnapshotPairs lin = linear_pairs(a, 500);
    const KoopmanMatrix k2 = koopman_matrix(assemble_grams(d.eval_matrix(lin.X), d.eval_matrix(lin.Y)));
    const Vector diag = (Vector(3) << 1.0, a, a * a).finished();
    CHECK((k2.K - Matrix(diag.asDiagonal())).norm() < 1e-10);

    Matrix dup(3, 500);
    dup << d.eval_matrix(id.X).topRows(2), d.eval_matrix(id.X).row(1);
    const KoopmanMatrix k3 = koopman_matrix(assemble_grams(dup, dup));
    CHECK(k3.rank == 2);
    CHECK(k3.K.allFinite());

    CHECK_THROWS_AS(koopman_matrix(assemble_grams(Matrix::Zero(2, 5), Matrix::Zero(2, 5))), DegenerateDataError);
}

TEST_CASE("deterministic contraction recovers lambda = (0, -1, -2)") {
    const SnapshotPairs lin = linear_pairs(std::exp(-0.01), 1000);
    const KoopmanModel km = fit_koopman(lin, monomial_dict(1, 2));
    CHECK(std::abs(km.mu[0] - Complex(1.0)) < 1e-10);
    CHECK(std::abs(km.lambda[1] - Complex(-1.0)) < 1e-7);
    CHECK(std::abs(km.lambda[2] - Complex(-2.0)) < 1e-7);
}

TEST_CASE("constant observable is an exact eigenpair") {
    const SnapshotPairs p = ou_pairs(5000, 2);
    const Dictionary d = monomial_dict(1, 3);
    const GramPair g = assemble_grams(d.eval_matrix(p.X), d.eval_matrix(p.Y));
    CHECK((g.A.row(0) - g.G.row(0)).norm() < 1e-12);
    const KoopmanModel km = fit_koopman(p, d);
    CHECK(std::abs(km.lambda[0]) < 1e-8);
    // xi_0 = e_1 up to the normalization
    CHECK(km.Xi.row(0).tail(3).norm() < 1e-10);
    const CVector phi0 = eval_eigenfunction(km, 0, p.X);
    CHECK((phi0.array() - Complex(1.0)).abs().maxCoeff() < 1e-10);
}

TEST_CASE("eigendecomposition invariants on OU data") {
    const SnapshotPairs p = ou_pairs(10000, 7);
    const KoopmanModel km = fit_koopman(p, monomial_dict(1, 2));
    for (int i = 1; i < km.size(); ++i) CHECK(km.lambda[i].real() <= km.lambda[i - 1].real());
    const CMatrix phi = km.eigenfunctions(p.X);
    for (int i = 0; i < km.size(); ++i) {
        CHECK(phi.row(i).squaredNorm() / double(p.X.cols()) == doctest::Approx(1.0).epsilon(1e-10));
        const CVector lhs = km.Xi.row(i) * km.K.cast<Complex>();
        CHECK((lhs - km.mu[i] * km.Xi.row(i).transpose()).norm() <= 1e-8 * km.K.norm());
        CHECK(std::abs(km.mu[i] - std::exp(km.lambda[i] * p.dt)) < 1e-12);
    }
    CHECK(km.lambda[1].real() == doctest::Approx(-1.0).epsilon(0.15));
    CHECK(km.lambda[2].real() == doctest::Approx(-2.0).epsilon(0.25));
    CHECK(km.diagnostics.max_imag_ratio < 0.05);

    CHECK_THROWS_AS(eval_eigenfunction(km, 3, p.X), InputError);
    CHECK_THROWS_AS(eval_eigenfunction(km, -1, p.X), InputError);
}

TEST_CASE("OU eigenfunctions are the normalized Hermite polynomials") {
    const SnapshotPairs p = ou_pairs(2000000, 7);
    const KoopmanModel km = fit_koopman(p, monomial_dict(1, 2));
    const CMatrix phi = km.eigenfunctions(p.X);
    const Eigen::ArrayXd x = p.X.row(0).transpose().array();
    const Eigen::ArrayXd f1 = phi.row(1).real().transpose().array();
    const double corr = ((f1 - f1.mean()) * (x - x.mean())).mean() /
                        std::sqrt((f1 - f1.mean()).square().mean() * (x - x.mean()).square().mean());
    CHECK(std::abs(corr) > 0.99);
    const Eigen::ArrayXd h2 = (x.square() - 1.0) / std::sqrt(2.0);
    const Eigen::ArrayXd f2 = phi.row(2).real().transpose().array();
    const double d2 = std::min(std::sqrt((f2 - h2).square().mean()), std::sqrt((f2 + h2).square().mean()));
    CHECK(d2 < 0.1);
}

TEST_CASE("reversible data give nearly real spectra") {
    SimConfig cfg;
    cfg.seed = 4;
    const SnapshotPairs p =
        sample_stationary_pairs(builtin_model("double-well"), cfg, 10000, SamplingMode::SingleTrajectory);
    const KoopmanModel km = fit_koopman(p, monomial_dict(1, 5));
    CHECK(km.diagnostics.max_imag_ratio < 0.05);
    CHECK(std::abs(km.lambda[0]) < 1e-8);
}

TEST_CASE("empirical inner products") {
    const CVector ones = CVector::Ones(10);
    CHECK(empirical_inner(ones, ones).value == 1.0);
    CHECK_THROWS_AS(empirical_inner(CVector(), CVector()), InputError);
    CHECK_THROWS_AS(empirical_inner(ones, CVector::Ones(3)), InputError);

    const int M = 10000;
    Philox4x32 rng(12, 0);
    CVector x(M);
    for (int m = 0; m < M; ++m) x[m] = rng.normal();
    CHECK(std::abs(empirical_inner(x, x).value - 1.0) <= 3.0 * std::sqrt(2.0 / M));

    const SnapshotPairs p = ou_pairs(10000, 7);
    const KoopmanModel km = fit_koopman(p, monomial_dict(1, 2));
    CHECK(std::abs(empirical_inner(eval_eigenfunction(km, 1, p.X), eval_eigenfunction(km, 2, p.X)).value) < 0.1);
}

TEST_CASE("Monte-Carlo rate of a Gram entry (majority over seed blocks)") {
    // across-seed std of G(x^2, x^2) should halve per 4x M within a factor of 2
    const Dictionary d = monomial_dict(1, 2);
    int ok = 0;
    for (int block = 0; block < 3; ++block) {
        double sd[2];
        const std::size_t Ms[2] = {1000, 4000};
        for (int a = 0; a < 2; ++a) {
            std::vector<double> g;
            for (int s = 0; s < 10; ++s) {
                const SnapshotPairs p = ou_pairs(Ms[a], 500 + 10 * block + s);
                g.push_back(assemble_grams(d.eval_matrix(p.X), d.eval_matrix(p.Y)).G(2, 2));
            }
            double mean = 0, var = 0;
            for (double v : g) mean += v / 10;
            for (double v : g) var += (v - mean) * (v - mean) / 9;
            sd[a] = std::sqrt(var);
        }
        const double r = sd[0] / sd[1];
        ok += (r >= 1.0 && r <= 4.0) ? 1 : 0;
    }
    CHECK(ok >= 2);
}

TEST_CASE("dt bias: eigenvalue error grows with dt (majority over seeds)") {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double err[3];
        const double dts[3] = {0.01, 0.05, 0.1};
        for (int i = 0; i < 3; ++i) {
            SimConfig cfg;
            cfg.dt = dts[i];
            cfg.seed = seed;
            const SnapshotPairs p =
                sample_stationary_pairs(builtin_model("ou"), cfg, 1000000, SamplingMode::SingleTrajectory);
            err[i] = std::abs(fit_koopman(p, monomial_dict(1, 2)).lambda[1].real() + 1.0);
        }
        ok += (err[0] <= err[1] && err[1] <= err[2]) ? 1 : 0;
    }
    CHECK(ok >= 3);
}

TEST_CASE("semigroup diagnostic: fits at dt and 2 dt agree") {
    const SnapshotPairs p = ou_pairs(20000, 13);
    SnapshotPairs q;
    q.dt = 2 * p.dt;
    q.X = p.X.leftCols(19999);
    q.Y = p.Y.rightCols(19999);
    const KoopmanModel a = fit_koopman(p, monomial_dict(1, 2));
    const KoopmanModel b = fit_koopman(q, monomial_dict(1, 2));
    for (int i = 1; i < 3; ++i) CHECK(std::abs(a.lambda[i].real() / b.lambda[i].real() - 1.0) < 0.1);
}

} // TEST_SUITE
