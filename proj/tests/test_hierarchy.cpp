#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cmcindex/hierarchy.hpp"

using namespace cmcindex;

namespace {
GaussianRational rat(long num, long den = 1) {
    return GaussianRational(Rational(num, den));
}
}  // namespace

TEST_CASE("rho_2, rho_4, rho_6 match their closed forms exactly") {
    Hierarchy h(6);

    DiffPoly rho2 = DiffPoly::monomial(rat(-1), {1});
    CHECK(h.rho(2) == rho2);

    DiffPoly rho4 = DiffPoly::monomial(rat(-1, 2), {1, 1, 1}) +
                    DiffPoly::monomial(rat(1), {3});
    CHECK(h.rho(4) == rho4);

    DiffPoly rho6 = DiffPoly::monomial(rat(-3, 8), {1, 1, 1, 1, 1}) +
                    DiffPoly::monomial(rat(5, 2), {1, 2, 2}) +
                    DiffPoly::monomial(rat(5, 2), {1, 1, 3}) +
                    DiffPoly::monomial(rat(-1), {5});
    CHECK(h.rho(6) == rho6);
}

TEST_CASE("weight grading: every monomial of rho_j has weight j-1") {
    Hierarchy h(12);
    for (int j = 2; j <= 12; j += 2) {
        const auto& p = h.rho(j);
        REQUIRE(!p.is_zero());
        for (const auto& term : p.terms()) CHECK(term.weight() == j - 1);
    }
}

TEST_CASE("even K_j diagonals cancel exactly (checked inside recursion)") {
    // recursion() throws RecursionInconsistency if any even K_j fails to be
    // a sigma1 multiple; reaching here means the exact cancellation held.
    CHECK_NOTHROW(recursion(12));
}

TEST_CASE("R right-hand sides are structurally off-diagonal") {
    auto t = recursion(8);
    for (int j = 1; j <= 8; ++j) CHECK(t.R[j].off_diagonal());
}

TEST_CASE("canonical text of the first rho polynomials") {
    Hierarchy h(6);
    CHECK(to_text(h.rho(2)) == "-(Dz^1 u)");
    CHECK(to_text(h.rho(4)) == "-1/2*(Dz^1 u)^3 + (Dz^3 u)");
    CHECK(to_text(h.rho(6)) ==
          "-3/8*(Dz^1 u)^5 + 5/2*(Dz^1 u)*(Dz^2 u)^2 + "
          "5/2*(Dz^1 u)^2*(Dz^3 u) - (Dz^5 u)");
}

TEST_CASE("gaussian rational arithmetic is exact") {
    GaussianRational i = GaussianRational::imaginary_unit();
    CHECK((i * i) == rat(-1));
    GaussianRational z(Rational(3, 4), Rational(-2, 5));
    CHECK((z / z) == rat(1));
    CHECK((z - z).is_zero());
    // 1/(-2i) = i/2
    GaussianRational inv = GaussianRational(Rational(1)) / (rat(-2) * i);
    CHECK(inv == GaussianRational(Rational(0), Rational(1, 2)));
}

TEST_CASE("diffpoly algebra: like terms merge, zeros drop") {
    DiffPoly a = DiffPoly::monomial(rat(1, 2), {1, 2});
    DiffPoly b = DiffPoly::monomial(rat(-1, 2), {2, 1});
    CHECK((a + b).is_zero());
    DiffPoly c = DiffPoly::monomial(rat(2), {1}) * DiffPoly::monomial(rat(3), {1});
    CHECK(c == DiffPoly::monomial(rat(6), {1, 1}));
    // Leibniz rule on (Dz^1 u)^2: 2 (Dz^1 u)(Dz^2 u)
    DiffPoly sq = DiffPoly::monomial(rat(1), {1, 1});
    CHECK(sq.dz() == DiffPoly::monomial(rat(2), {1, 2}));
}

TEST_CASE("evaluate rho_2 on the zero field gives zero") {
    Grid g(TorusLattice(complexd(2 * M_PI, 0), complexd(0, 2 * M_PI)), 16, 16);
    ScalarField u(g, 0.0);
    Hierarchy h(4);
    auto v = evaluate(h.rho(2), u);
    CHECK(v.max_abs() < 1e-14);
}

TEST_CASE("evaluate rho_2 on a y-independent field is -u_x/2, real") {
    Grid g(TorusLattice(complexd(2 * M_PI, 0), complexd(0, 2 * M_PI)), 32, 8);
    auto u = make_field(g, [](double x, double) { return 0.3 * std::sin(x); });
    Hierarchy h(4);
    auto v = evaluate(h.rho(2), u);
    for (int k = 0; k < g.ny; ++k)
        for (int j = 0; j < g.nx; ++j) {
            const complexd z = g.node(j, k);
            const complexd got = v.values[g.index(j, k)];
            CHECK(std::abs(got.imag()) < 1e-13);
            CHECK(std::abs(got.real() + 0.5 * 0.3 * std::cos(z.real())) < 1e-12);
        }
}

TEST_CASE("evaluate rho_4 on sin(x) matches symbolic substitution") {
    // u = sin x: Dz u = cos(x)/2, Dz^3 u = -cos(x)/8, so
    // rho_4 = -(1/2)(cos x / 2)^3 - cos(x)/8.
    Grid g(TorusLattice(complexd(2 * M_PI, 0), complexd(0, 2 * M_PI)), 32, 8);
    auto u = make_field(g, [](double x, double) { return std::sin(x); });
    Hierarchy h(4);
    auto v = evaluate(h.rho(4), u);
    for (int j = 0; j < g.nx; ++j) {
        const double x = 2 * M_PI * j / g.nx;
        const double c = 0.5 * std::cos(x);
        const double want = -0.5 * c * c * c - std::cos(x) / 8.0;
        CHECK(std::abs(v.values[g.index(j, 0)] - complexd(want, 0)) < 1e-12);
    }
}

TEST_CASE("jacobi fields v_1 and v_2 from rho_2") {
    Grid g(TorusLattice(complexd(2 * M_PI, 0), complexd(0, 2 * M_PI)), 32, 32);
    auto u = make_field(g, [](double x, double y) {
        return 0.2 * std::sin(x) + 0.1 * std::cos(y);
    });
    Hierarchy h(4);
    auto v1 = h.jacobi_field(1, u);
    auto v2 = h.jacobi_field(2, u);
    // v_1 = Re(-Dz u) = -u_x/2, v_2 = Im(-Dz u) = u_y/2
    for (int k = 0; k < g.ny; k += 5)
        for (int j = 0; j < g.nx; j += 5) {
            const complexd z = g.node(j, k);
            CHECK(std::abs(v1.at(j, k) + 0.5 * 0.2 * std::cos(z.real())) < 1e-12);
            CHECK(std::abs(v2.at(j, k) - 0.5 * (-0.1) * std::sin(z.imag())) < 1e-12);
        }
}

TEST_CASE("v_2 vanishes identically for y-independent u") {
    Grid g(TorusLattice(complexd(2 * M_PI, 0), complexd(0, 2 * M_PI)), 32, 8);
    auto u = make_field(g, [](double x, double) { return 0.4 * std::cos(x); });
    Hierarchy h(4);
    CHECK(h.jacobi_field(2, u).max_abs() < 1e-13);
}
