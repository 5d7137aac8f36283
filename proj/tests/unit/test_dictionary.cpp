#include <cmath>

#include "doctest.h"
#include "dpdd/dictionary.hpp"
#include "dpdd/rng.hpp"

using namespace dpdd;

TEST_SUITE("dictionary") {

TEST_CASE("monomial dictionary sizes and order") {
    const Dictionary d12 = monomial_dict(1, 2);
    CHECK(d12.size() == 3);
    CHECK(d12.has_constant());
    CHECK(monomial_dict(1, 5).size() == 6);
    const Dictionary d22 = monomial_dict(2, 2);
    REQUIRE(d22.size() == 6);
    const std::vector<std::vector<int>> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (int i = 0; i < 6; ++i) CHECK(std::get<MonomialTerm>(d22.terms()[i]).exponents == expected[i]);
    CHECK_THROWS_AS(monomial_dict(1, 0), InputError);
}

TEST_CASE("Hermite values") {
    const Dictionary h = hermite_dict(3);
    const Vector v1 = h.eval(Vector::Constant(1, 1.0));
    CHECK(v1[0] == 1.0);
    CHECK(v1[1] == 1.0);
    CHECK(v1[2] == doctest::Approx(0.0).epsilon(1e-15));
    const Vector v2 = h.eval(Vector::Constant(1, 2.0));
    CHECK(v2[2] == doctest::Approx(3.0 / std::sqrt(2.0)));
    CHECK(v2[3] == doctest::Approx(2.0 / std::sqrt(6.0)));
    CHECK_THROWS_AS(hermite_dict(2, 2), UnsupportedError);
}

TEST_CASE("Hermite terms are orthonormal under N(0,1)") {
    const int M = 100000;
    Philox4x32 rng(17, 0);
    Matrix X(1, M);
    for (int m = 0; m < M; ++m) X(0, m) = rng.normal();
    const Matrix P = hermite_dict(3).eval_matrix(X);
    const Matrix G = P * P.transpose() / M;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) CHECK(std::abs(G(i, j)) < 3.0 / std::sqrt(double(M)) * 3.0);
    for (int i = 0; i < 4; ++i) CHECK(G(i, i) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("eval_matrix examples") {
    const Matrix c = monomial_dict(1, 2).eval_matrix(Matrix::Constant(1, 1, 2.0));
    CHECK(c(0, 0) == 1.0);
    CHECK(c(1, 0) == 2.0);
    CHECK(c(2, 0) == 4.0);

    const Dictionary lp = linear_power_dict({{{1.0, 1.0}, 0}, {{1.0, 1.0}, 2}});
    Vector x(2);
    x << 1.0, 2.0;
    CHECK(lp.eval(x)[1] == 9.0);
    CHECK(lp.has_constant());

    Philox4x32 rng(1, 0);
    Matrix X(2, 50);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    const Dictionary d = monomial_dict(2, 3);
    const Matrix all = d.eval_matrix(X);
    CHECK((all.row(0).array() == 1.0).all());
    for (Eigen::Index m = 0; m < X.cols(); ++m) CHECK(all.col(m) == d.eval(X.col(m)));
    CHECK_THROWS_AS(d.eval_matrix(Matrix::Zero(3, 4)), InputError);
}

TEST_CASE("dictionary validation") {
    CHECK_THROWS_AS(Dictionary({MonomialTerm{{1}}, MonomialTerm{{1}}}, 1), InputError);
    CHECK_THROWS_AS(Dictionary({MonomialTerm{{1}}}, 1), InputError);
    CHECK_THROWS_AS(Dictionary({MonomialTerm{{0}}, MonomialTerm{{1, 0}}}, 1), InputError);
    CHECK_THROWS_AS(Dictionary({MonomialTerm{{0, 0}}, HermiteTerm{1}}, 2), UnsupportedError);
}

TEST_CASE("dictionary json round trip") {
    const Dictionary d = linear_power_dict({{{1.0, 1.0}, 0}, {{1.0, 0.0}, 1}, {{0.0, 1.0}, 1}, {{1.0, 1.0}, 2}});
    const Dictionary back = dictionary_from_json(dictionary_to_json(d));
    CHECK(back.terms() == d.terms());
    CHECK(back.dim_state() == 2);
    const nlohmann::json j = term_to_json(MonomialTerm{{0, 2}});
    CHECK(j.at("kind") == "monomial");
    CHECK(j.at("exponents") == nlohmann::json::array({0, 2}));
}

} // TEST_SUITE
