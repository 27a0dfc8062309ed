#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "cmcindex/sinh_gordon.hpp"

using namespace cmcindex;

TEST_CASE("trivial seed converges to the trivial solution") {
    Grid g(TorusLattice(complexd(2 * M_PI, 0), complexd(0, 2 * M_PI)), 16, 16);
    SolveConfig cfg;
    auto sol = solve(ScalarField(g, 0.0), cfg);
    CHECK(sol.residual_norm == 0.0);
    CHECK(sol.u.max_abs() == 0.0);
    CHECK(sol.branch_tag == "trivial");
}

TEST_CASE("1-D oracle: small-amplitude period limit is pi") {
    CHECK(std::abs(period_by_quadrature(4.0 + 1e-10) - M_PI) < 1e-5);
    CHECK(std::abs(period_by_quadrature(4.0 + 1e-6) - M_PI) < 1e-4);
    CHECK_THROWS_AS(solve_1d(4.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(solve_1d(3.0, 64), std::invalid_argument);
}

TEST_CASE("1-D oracle: quadrature period matches ODE return time at E=6") {
    auto oned = solve_1d(6.0, 128);
    CHECK(std::abs(oned.period - oned.return_time) < 1e-8);
    CHECK(oned.energy_drift <= 1e-10);
    // orbit symmetric: max u = -min u, attained at the endpoints
    double mx = -1e9, mn = 1e9;
    for (double v : oned.profile) {
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    CHECK(std::abs(mx + mn) < 1e-9);
    CHECK(std::abs(mx - std::acosh(6.0 / 4.0)) < 1e-10);
}

TEST_CASE("2-D solve polishes the 1-D profile below tolerance") {
    auto oned = solve_1d(6.0, 128);
    auto seed = field_from_profile(oned, 1.0, 8);
    SolveConfig cfg;
    cfg.symmetry = SolveConfig::Symmetry::even;
    auto sol = solve(seed, cfg, "oned-shooting");
    CHECK(sol.residual_norm <= cfg.newton_tol);
    CHECK(sol.branch_tag == "oned-shooting");
    // stays close to the oracle profile
    double err = 0.0;
    for (int j = 0; j < 128; ++j)
        err = std::max(err, std::abs(sol.u.at(j, 0) - oned.profile[j]));
    CHECK(err < 1e-8);
    // y-independence is preserved by the Newton flow
    double ydep = 0.0;
    for (int k = 1; k < 8; ++k)
        for (int j = 0; j < 128; ++j)
            ydep = std::max(ydep, std::abs(sol.u.at(j, k) - sol.u.at(j, 0)));
    CHECK(ydep < 1e-10);
}

TEST_CASE("Newton converges quadratically once below 1e-3") {
    auto oned = solve_1d(6.0, 128);
    auto seed = field_from_profile(oned, 1.0, 8);
    for (auto& v : seed.values) v *= 1.05;  // push the seed off the solution
    SolveConfig cfg;
    cfg.symmetry = SolveConfig::Symmetry::even;
    auto sol = solve(seed, cfg);
    REQUIRE(sol.residual_history.size() >= 3);
    bool window_seen = false;
    for (size_t i = 0; i + 1 < sol.residual_history.size(); ++i) {
        const double r = sol.residual_history[i];
        const double rn = sol.residual_history[i + 1];
        if (r < 1e-3 && rn > 5e-13) {
            window_seen = true;
            CHECK(rn <= 10.0 * r * r);
        }
    }
    CHECK(window_seen);
}

TEST_CASE("even projection does not degrade the converged residual") {
    auto oned = solve_1d(5.0, 64);
    auto seed = field_from_profile(oned, 1.0, 8);
    SolveConfig plain;
    SolveConfig even = plain;
    even.symmetry = SolveConfig::Symmetry::even;
    auto a = solve(seed, plain);
    auto b = solve(seed, even);
    CHECK(a.residual_norm <= plain.newton_tol);
    CHECK(b.residual_norm <= 10.0 * plain.newton_tol);
    // the even invariant holds exactly for the projected solve
    double asym = 0.0;
    const Grid& g = b.u.grid;
    for (int k = 0; k < g.ny; ++k)
        for (int j = 0; j < g.nx; ++j)
            asym = std::max(asym, std::abs(b.u.at(j, k) - b.u.at(-j, -k)));
    CHECK(asym <= 10.0 * even.newton_tol);
}

TEST_CASE("small seeds on a noncritical lattice collapse to trivial") {
    // square of side 1.5*pi: |xi|^2 = (16/9)(p^2+q^2) never equals 4
    Grid g(TorusLattice(complexd(1.5 * M_PI, 0), complexd(0, 1.5 * M_PI)), 16, 16);
    auto seed = make_field(g, [](double x, double y) {
        return 0.05 * std::cos(x * 4.0 / 3.0) + 0.03 * std::cos(y * 4.0 / 3.0);
    });
    SolveConfig cfg;
    CHECK_THROWS_AS(solve(seed, cfg), DivergedToTrivial);
}

TEST_CASE("spec example: even solve on the 2pi square honors its contract") {
    Grid g(TorusLattice(complexd(2 * M_PI, 0), complexd(0, 2 * M_PI)), 32, 32);
    auto seed = make_field(g, [](double x, double y) {
        return 0.5 * (std::cos(x) + std::cos(y));
    });
    SolveConfig cfg;
    cfg.symmetry = SolveConfig::Symmetry::even;
    cfg.max_iters = 60;
    try {
        auto sol = solve(seed, cfg);
        CHECK(sol.residual_norm <= cfg.newton_tol);
        CHECK(sol.u.max_abs() >= cfg.collapse_threshold);
    } catch (const DivergedToTrivial&) {
        SUCCEED("collapsed to trivial, reported honestly");
    } catch (const NonConvergence& e) {
        FAIL("solver returned NonConvergence with residual "
             << e.last_residual);
    }
}

TEST_CASE("save/load field recomputes the residual") {
    auto oned = solve_1d(6.0, 64);
    auto seed = field_from_profile(oned, 1.0, 8);
    SolveConfig cfg;
    auto sol = solve(seed, cfg);
    const std::string path = "sg_roundtrip.cmcf";
    save_field(sol, path);
    auto back = load_field(path);
    CHECK(back.branch_tag == "file");
    CHECK(back.residual_norm <= cfg.newton_tol * 1.01);
    for (size_t i = 0; i < sol.u.values.size(); ++i)
        CHECK(back.u.values[i] == sol.u.values[i]);
    std::filesystem::remove(path);
}

TEST_CASE("Fourier upsampling keeps the residual within 10x") {
    auto oned = solve_1d(6.0, 64);
    SolveConfig cfg;
    auto sol = solve(field_from_profile(oned, 1.0, 8), cfg);
    auto up = resample(sol.u, 128, 16);
    const double r_up = sinh_gordon_residual(up).max_abs();
    CHECK(r_up <= 10.0 * std::max(sol.residual_norm, cfg.newton_tol));
}

TEST_CASE("bifurcation detection by dual-lattice enumeration") {
    // x-period pi: mode (1,0) has physical wavevector (2,0), |xi|^2 = 4,
    // for every y-period
    for (double L : {1.0, 2.0, 5.7}) {
        auto fam = [L](double) {
            return TorusLattice(complexd(M_PI, 0), complexd(0, L));
        };
        auto bif = find_bifurcation(fam);
        REQUIRE(bif.has_value());
        double xix, xiy;
        fam(0.0).wavevector(bif->p, bif->q, xix, xiy);
        CHECK(std::abs(xix * xix + xiy * xiy - 4.0) < 1e-9);
    }
    // side-1.5pi square: (16/9)(p^2+q^2) = 4 has no integer solutions
    auto none = find_bifurcation([](double) {
        return TorusLattice(complexd(1.5 * M_PI, 0), complexd(0, 1.5 * M_PI));
    });
    CHECK(!none.has_value());

    // moving family crossing Lx = pi at t = 0.5
    auto moving = [](double t) {
        return TorusLattice(complexd(M_PI * (0.8 + 0.4 * t), 0), complexd(0, 3.0));
    };
    auto bif = find_bifurcation(moving);
    REQUIRE(bif.has_value());
    CHECK(std::abs(bif->t - 0.5) < 1e-6);
}

TEST_CASE("continuation produces a growing nontrivial branch") {
    auto family = [](double t) {
        return TorusLattice(complexd(M_PI * (0.8 + 0.4 * t), 0), complexd(0, 3.0));
    };
    SolveConfig cfg;
    cfg.continuation_steps = 6;
    auto branch = continue_branch(family, 32, 8, cfg);
    REQUIRE(branch.size() >= 5);
    for (const auto& pt : branch) {
        CHECK(pt.solution.residual_norm <= cfg.newton_tol);
        CHECK(pt.solution.branch_tag == "continuation");
        CHECK(pt.solution.u.max_abs() >= cfg.collapse_threshold);
    }
    for (size_t i = 1; i < 5; ++i)
        CHECK(branch[i].solution.u.max_abs() >
              branch[i - 1].solution.u.max_abs());
}

TEST_CASE("continuation reports NoBifurcationDetected on a quiet family") {
    auto family = [](double) {
        return TorusLattice(complexd(1.5 * M_PI, 0), complexd(0, 1.5 * M_PI));
    };
    SolveConfig cfg;
    CHECK_THROWS_AS(continue_branch(family, 16, 16, cfg), NoBifurcationDetected);
}
