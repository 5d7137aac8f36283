#include <cmath>
#include <numbers>

#include "doctest.h"
#include "dpdd/parallel.hpp"
#include "dpdd/rng.hpp"
#include "dpdd/sde.hpp"

using namespace dpdd;

namespace {

SdeModel zero_model() {
    SdeModel m;
    m.name = "zero";
    m.dim_state = 2;
    m.dim_noise = 2;
    m.drift = [](const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out.setZero(); };
    m.diffusion = [](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out.setZero(); };
    return m;
}

} // namespace

TEST_SUITE("sde-lab") {

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using B = Philox4x32::Block;
    CHECK(Philox4x32::bijection(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
}

TEST_CASE("normal draws have unit variance and distinct streams differ") {
    Philox4x32 a(1, 0), b(1, 1);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = a.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.01);
    Philox4x32 c(1, 0);
    CHECK(c.next_u32() != b.next_u32());
}

TEST_CASE("em_step examples") {
    const SdeModel z = zero_model();
    Vector x(2);
    x << 0.3, -2.0;
    CHECK(em_step(z, x, 0.1, Vector::Ones(2)) == x);

    const SdeModel ou = builtin_model("ou");
    CHECK(em_step(ou, Vector::Constant(1, 1.0), 0.01, Vector::Zero(1))[0] == doctest::Approx(0.99).epsilon(1e-15));
    const SdeModel dw = builtin_model("double-well");
    CHECK(em_step(dw, Vector::Constant(1, 1.0), 0.01, Vector::Zero(1))[0] == 1.0);
    CHECK_THROWS_AS(em_step(ou, Vector::Zero(2), 0.01, Vector::Zero(1)), InputError);
    CHECK_THROWS_AS(em_step(ou, Vector::Zero(1), 0.01, Vector::Zero(2)), InputError);
}

TEST_CASE("builtin model drifts") {
    const SdeModel lor = builtin_model("lorenz63");
    const Vector b = lor.drift_at(Vector::Ones(3));
    CHECK(b[0] == doctest::Approx(0.0));
    CHECK(b[1] == doctest::Approx(26.0));
    CHECK(b[2] == doctest::Approx(1.0 - 8.0 / 3.0));
    CHECK(builtin_model("turbulence2d").drift_at(Vector::Zero(2)).norm() == 0.0);
    CHECK(builtin_model("double-well").drift_at(Vector::Constant(1, -1.25))[0] == doctest::Approx(0.0));
    CHECK(builtin_model("doublewell").name == "double-well");
    try {
        builtin_model("nosuch");
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("lorenz63") != std::string::npos);
    }
    CHECK_THROWS_AS(builtin_model("ou", {{"gamma", 1.0}}), InputError);
}

TEST_CASE("turbulence diffusion is the symmetric square root of Lambda") {
    const Matrix S = builtin_model("turbulence2d").diffusion_at(Vector::Zero(2));
    Matrix L(2, 2);
    L << 1.0, 0.25, 0.25, 1.0;
    CHECK((S * S - L).norm() < 1e-14);
    CHECK(std::abs(S(0, 1) - S(1, 0)) < 1e-15);
}

TEST_CASE("turbulence nonlinearity conserves energy") {
    const SdeModel t = builtin_model("turbulence2d", {{"d", 0.0}, {"Lambda12", 0.0}});
    Philox4x32 rng(3, 0);
    for (int i = 0; i < 100; ++i) {
        Vector x(2);
        x << 5 * rng.normal(), 5 * rng.normal();
        // with d = 0 the remaining linear part (v, -u) is a rotation and carries no energy either
        const Vector b = t.drift_at(x);
        CHECK(std::abs(x.dot(b)) <= 1e-12 * (1.0 + x.squaredNorm() * x.norm()));
    }
}

TEST_CASE("additive-noise models have constant diffusion") {
    for (const char* name : {"ou", "double-well"}) {
        const SdeModel m = builtin_model(name);
        CHECK(m.additive_noise);
        CHECK(m.diffusion_at(Vector::Constant(1, -3.0)) == m.diffusion_at(Vector::Constant(1, 2.5)));
    }
}

TEST_CASE("simulate_trajectory basics") {
    const SdeModel ou = builtin_model("ou");
    SimConfig cfg;
    cfg.n_steps = 0;
    cfg.seed = 4;
    const Matrix s0 = simulate_trajectory(ou, Vector::Constant(1, 2.0), cfg);
    CHECK(s0.cols() == 1);
    CHECK(s0(0, 0) == 2.0);

    cfg.n_steps = 1000;
    const Matrix a = simulate_trajectory(ou, Vector::Constant(1, 2.0), cfg);
    const Matrix b = simulate_trajectory(ou, Vector::Constant(1, 2.0), cfg);
    CHECK(a == b);
    CHECK(a(0, 0) == 2.0);
    cfg.seed = 5;
    CHECK(simulate_trajectory(ou, Vector::Constant(1, 2.0), cfg) != a);
}

TEST_CASE("OU long run has stationary variance one") {
    const SdeModel ou = builtin_model("ou");
    SimConfig cfg;
    cfg.n_steps = 1000000;
    cfg.seed = 11;
    const Matrix s = simulate_trajectory(ou, Vector::Constant(1, 5.0), cfg);
    const Eigen::ArrayXd x = s.row(0).segment(10000, 990001).transpose().array();
    const double mean = x.mean();
    const double var = (x - mean).square().mean();
    // Euler-Maruyama at dt = 0.01 has invariant variance 1 / (1 - dt / 2)
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("divergence names the step") {
    const SdeModel blow = builtin_model("ou", {{"lambda", -1000.0}});
    SimConfig cfg;
    cfg.n_steps = 5000;
    try {
        simulate_trajectory(blow, Vector::Constant(1, 1.0), cfg);
        FAIL("expected divergence");
    } catch (const SimulationDivergedError& e) {
        CHECK(e.step() > 0);
        CHECK(e.step() <= 5000);
        CHECK(std::string(e.what()).find(std::to_string(e.step())) != std::string::npos);
    }
}

TEST_CASE("single-trajectory pairs are consecutive states") {
    const SdeModel ou = builtin_model("ou");
    SimConfig cfg;
    cfg.seed = 9;
    cfg.burn_in_steps = 50;
    const SnapshotPairs p = sample_stationary_pairs(ou, cfg, 1, SamplingMode::SingleTrajectory);
    REQUIRE(p.X.cols() == 1);
    REQUIRE(p.Y.cols() == 1);
    cfg.n_steps = 51;
    const Matrix path = simulate_trajectory(ou, Vector::Zero(1), cfg);
    CHECK(p.X(0, 0) == path(0, 50));
    CHECK(p.Y(0, 0) == path(0, 51));

    const SnapshotPairs q = sample_stationary_pairs(ou, cfg, 100, SamplingMode::SingleTrajectory);
    CHECK(q.X.rightCols(99) == q.Y.leftCols(99));
}

TEST_CASE("ensemble pairs match the OU stationary law and ignore thread count") {
    const SdeModel ou = builtin_model("ou");
    SimConfig cfg;
    cfg.seed = 21;
    cfg.burn_in_steps = 10000;
    set_num_threads(1);
    const SnapshotPairs a = sample_stationary_pairs(ou, cfg, 10000, SamplingMode::Ensemble);
    set_num_threads(4);
    const SnapshotPairs b = sample_stationary_pairs(ou, cfg, 10000, SamplingMode::Ensemble);
    set_num_threads(0);
    CHECK(a.X == b.X);
    CHECK(a.Y == b.Y);
    const Eigen::ArrayXd x = a.X.row(0).transpose().array();
    CHECK(std::abs(x.mean()) <= 0.05);
    CHECK(std::abs((x - x.mean()).square().mean() - 1.0) <= 0.05);
}

TEST_CASE("double-well samples are bimodal near 1 and -5/4") {
    const SdeModel dw = builtin_model("double-well");
    SimConfig cfg;
    cfg.seed = 2;
    const SnapshotPairs p = sample_stationary_pairs(dw, cfg, 400000, SamplingMode::SingleTrajectory);
    // histogram with bins of width 0.1 on [-2.5, 2.5]
    std::vector<int> h(50, 0);
    for (Eigen::Index m = 0; m < p.X.cols(); ++m) {
        const int b = static_cast<int>(std::floor((p.X(0, m) + 2.5) / 0.1));
        if (b >= 0 && b < 50) ++h[static_cast<std::size_t>(b)];
    }
    auto argmax_in = [&](double lo, double hi) {
        int best = -1;
        for (int b = 0; b < 50; ++b) {
            const double c = -2.5 + 0.1 * (b + 0.5);
            if (c > lo && c < hi && (best < 0 || h[b] > h[best])) best = b;
        }
        return -2.5 + 0.1 * (best + 0.5);
    };
    CHECK(std::abs(argmax_in(0.0, 2.5) - 1.0) <= 0.15);
    CHECK(std::abs(argmax_in(-2.5, 0.0) + 1.25) <= 0.15);
    const int centre = h[25];
    CHECK(centre < h[static_cast<std::size_t>((1.0 + 2.5) / 0.1)]);
}

TEST_CASE("Milstein matches Euler-Maruyama for additive noise and adds the Ito correction otherwise") {
    const SdeModel ou = builtin_model("ou");
    const Vector x = Vector::Constant(1, 0.7);
    const Vector dw = Vector::Constant(1, 0.05);
    CHECK(milstein_step(ou, x, 0.01, dw) == em_step(ou, x, 0.01, dw));

    SdeModel gbm;
    gbm.name = "gbm";
    gbm.dim_state = 1;
    gbm.dim_noise = 1;
    gbm.drift = [](const Eigen::Ref<const Vector>& y, Eigen::Ref<Vector> out) { out[0] = 0.1 * y[0]; };
    gbm.diffusion = [](const Eigen::Ref<const Vector>& y, Eigen::Ref<Matrix> out) { out(0, 0) = 0.4 * y[0]; };
    const double expected = 0.7 + 0.07 * 0.01 + 0.28 * 0.05 + 0.5 * 0.28 * 0.4 * (0.05 * 0.05 - 0.01);
    CHECK(milstein_step(gbm, x, 0.01, dw)[0] == doctest::Approx(expected).epsilon(1e-9));
    CHECK_THROWS_AS(milstein_step(builtin_model("turbulence2d"), Vector::Zero(2), 0.01, Vector::Zero(2)),
                    UnsupportedError);
}

TEST_CASE("default burn-in") {
    CHECK(default_burn_in(100) == 10000);
    CHECK(default_burn_in(1000000) == 250000);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg.dt = 0.01;
    cfg.n_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
}

} // TEST_SUITE
