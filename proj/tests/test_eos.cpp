#include "selfsim/eos.hpp"
#include "selfsim/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace selfsim;

namespace {

EosModel witness() // f = gamma + rho
{
    return EosModel::density_scaled([](double r) { return 1.4 + r; }, {}, [](double) { return 1.0; });
}

std::vector<double> logspace(double a, double b, int n)
{
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
        v.push_back(a * std::pow(b / a, n == 1 ? 0.0 : double(i) / (n - 1)));
    return v;
}

} // namespace

TEST_CASE("eval_f: ideal gas is gamma")
{
    const auto m = EosModel::ideal_gamma(1.4);
    for (double p : {0.1, 1.0, 7.0})
        for (double rho : {0.2, 1.0, 30.0})
            CHECK(eval_f(m, p, rho) == doctest::Approx(1.4).epsilon(1e-15));
    CHECK_THROWS(EosModel::ideal_gamma(1.0));
}

TEST_CASE("eval_f: pseudo Mie-Gruneisen reference values")
{
    const auto m = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0);
    const auto& pm = *m.pseudo_mg();
    // Coefficients recomputed by hand from s and q.
    const double s = 1.489, q = 0.25;
    const double c1 = (1 - 4 * s) / (4 * q * (q - 2) * (s - 1));
    CHECK(pm.c1 == doctest::Approx(c1).epsilon(1e-14));
    CHECK(pm.c1 == doctest::Approx(5.7914).epsilon(1e-4));
    CHECK(pm.c2 == doctest::Approx(0.365375).epsilon(1e-5));
    CHECK(pm.c3 == doctest::Approx(1.511247).epsilon(1e-6));
    CHECK(pm.eta_max == doctest::Approx(s / (s - 1)).epsilon(1e-15));
    const double f1 = pm.c1 * (pm.c2 + std::pow(1 - pm.c3, 2) / (pm.eta_max - 1));
    CHECK(eval_f(m, 1.0, 1.0) == doctest::Approx(f1).epsilon(1e-14));
    CHECK(eval_f(m, 1.0, 1.0) == doctest::Approx(2.856).epsilon(1e-3));
    CHECK_THROWS_AS(eval_f(m, 1.0, pm.eta_max), DomainError);
    CHECK_THROWS_AS(eval_f(m, 1.0, 3.5), DomainError);
    CHECK_THROWS_AS(eval_f(m, 1.0, -0.1), DomainError);
}

TEST_CASE("pseudo Mie-Gruneisen f diverges monotonically at the compression limit")
{
    const auto m = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0);
    const double em = m.pseudo_mg()->eta_max;
    double prev = 0;
    for (int j = 2; j <= 14; ++j) {
        const double f = eval_f(m, 1.0, em * (1 - std::pow(10.0, -j)));
        CHECK(f > prev);
        prev = f;
    }
    CHECK(prev > 1e12);
}

TEST_CASE("sound speed")
{
    CHECK(sound_speed_sq(EosModel::ideal_gamma(1.4), 1, 1) == doctest::Approx(1.4));
    const auto pm = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0);
    CHECK(sound_speed_sq(pm, 2, 1) == doctest::Approx(2 * eval_f(pm, 1, 1)));
    CHECK(sound_speed_sq(pm, 2, 1) == doctest::Approx(5.713).epsilon(1e-3));
    CHECK(sound_speed_sq(pm, 0, 1) == 0.0);
    CHECK(sound_speed_sq(EosModel::ideal_gamma(1.4, 0.5), 0.5, 2) == 0.0);
}

TEST_CASE("invariance residual examples")
{
    CHECK(std::abs(invariance_residual(EosModel::ideal_gamma(1.4), -0.3, 0.7, 1, 1)) < 1e-8);
    CHECK(invariance_residual(witness(), 0.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(invariance_residual(witness(), -0.4, 0.0, 1.0, 1.0)) < 1e-8);
}

TEST_CASE("constraint classification for every family and problem")
{
    const auto g = EosModel::general([](double, double) { return 1.4; });
    const auto pl = EosModel::power_law_scaled(2.0, [](double) { return 1.4; });
    const auto ds = witness();
    const auto ig = EosModel::ideal_gamma(1.4);
    struct Cell {
        const EosModel* m;
        ProblemKind kind;
        int free_dims;
        int relations;
    };
    const Cell cells[] = {
        {&g, ProblemKind::Cavity, 0, 2},  {&g, ProblemKind::Shock, 0, 2},  {&pl, ProblemKind::Cavity, 1, 1},
        {&pl, ProblemKind::Shock, 0, 2},  {&ds, ProblemKind::Cavity, 1, 1}, {&ds, ProblemKind::Shock, 1, 1},
        {&ig, ProblemKind::Cavity, 2, 0}, {&ig, ProblemKind::Shock, 1, 1},
    };
    for (const auto& c : cells) {
        const auto cs = classify_constraints(*c.m, c.kind);
        CAPTURE(to_string(c.m->family()));
        CAPTURE(to_string(c.kind));
        CHECK(cs.free_dims == c.free_dims);
        CHECK(cs.relations.size() == std::size_t(c.relations));
    }
    // beta + 2 alpha = lambda beta, lambda = 2: alpha free, beta = 2 alpha.
    const auto cs = classify_constraints(pl, ProblemKind::Cavity);
    CHECK(cs.admits({0.3, 0.6}));
    CHECK_FALSE(cs.admits({0.3, 0.0}));
    CHECK(classify_constraints(ds, ProblemKind::Shock).admits({-0.7, 0.0}));
    CHECK_FALSE(classify_constraints(ds, ProblemKind::Shock).admits({-0.7, 0.1}));
}

TEST_CASE("admissible exponents leave the bulk modulus invariant on a 5x5 grid")
{
    const auto pm = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0);
    const auto pl = EosModel::power_law_scaled(
        1.5, [](double z) { return 1.3 + 0.2 * std::tanh(z); }, {}, [](double z) { return 0.2 / std::pow(std::cosh(z), 2); });
    const auto ig = EosModel::ideal_gamma(5.0 / 3.0);
    struct Case {
        const EosModel* m;
        ProblemKind kind;
        double rho_hi;
    };
    for (const auto& c : {Case{&pm, ProblemKind::Cavity, 2.9}, Case{&pl, ProblemKind::Cavity, 10},
                          Case{&ig, ProblemKind::Cavity, 10}, Case{&ig, ProblemKind::Shock, 10}}) {
        const auto cs = classify_constraints(*c.m, c.kind);
        // A few admissible pairs from the null space of the relations.
        std::vector<Exponents> pairs;
        for (double a : {-0.8, -0.3, 0.4})
            for (double b : {-0.5, 0.0, 0.9}) {
                Exponents e{a, b};
                if (cs.free_dims == 1) {
                    const auto& r = cs.relations.front();
                    if (r.cb != 0)
                        e.beta = -r.ca * a / r.cb;
                    else
                        e.alpha = 0;
                }
                if (cs.admits(e, 1e-12))
                    pairs.push_back(e);
            }
        REQUIRE(!pairs.empty());
        for (const auto& e : pairs)
            for (double p : logspace(0.1, 10, 5))
                for (double rho : logspace(0.1, c.rho_hi, 5)) {
                    const auto est = invariance_residual_estimate(*c.m, e.alpha, e.beta, p, rho);
                    CAPTURE(p);
                    CAPTURE(rho);
                    CHECK(std::abs(est.residual) <= 10 * est.fd_error + 1e-14 * std::abs(bulk_modulus(*c.m, p, rho)));
                }
    }
}

TEST_CASE("density witness with beta != 0 has the hand-computed residual")
{
    const auto m = witness();
    for (double beta : {0.5, 1.0, -0.7})
        for (double p : logspace(0.1, 10, 5))
            for (double rho : logspace(0.1, 10, 5)) {
                const double expect = beta * rho * p * 1.0;
                const auto est = invariance_residual_estimate(m, -0.2, beta, p, rho);
                CHECK(est.residual == doctest::Approx(expect).epsilon(1e-6));
                CHECK(std::abs(est.residual) > 100 * est.fd_error);
            }
}

TEST_CASE("energy_phi: ideal gas closed form")
{
    for (double g : {1.2, 1.4, 5.0 / 3.0})
        for (double rho : logspace(0.1, 10, 9)) {
            const double exact = 1.0 / ((g - 1.0) * rho);
            CHECK(std::abs(energy_phi(EosModel::ideal_gamma(g), rho) / exact - 1) < 1e-10);
        }
    CHECK(energy_phi(EosModel::ideal_gamma(1.4), 1) == doctest::Approx(2.5));
    CHECK(energy_phi(EosModel::ideal_gamma(1.4), 2) == doctest::Approx(1.25));
}

TEST_CASE("energy_phi: solves the closure ODE for pseudo Mie-Gruneisen")
{
    const auto m = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0);
    const double em = m.pseudo_mg()->eta_max;
    // phi' + (f/rho) phi = 1/rho^2, checked with a central difference.
    for (double rho : {0.3, 1.0, 2.0, 2.9}) {
        const double h = 1e-5 * rho;
        const double d = (energy_phi(m, rho + h) - energy_phi(m, rho - h)) / (2 * h);
        const double lhs = d + eval_f(m, 1, rho) / rho * energy_phi(m, rho);
        CHECK(lhs * rho * rho == doctest::Approx(1.0).epsilon(1e-6));
    }
    const double near = em * (1 - 1e-6);
    const double a = energy_phi(m, near, 1e-10), b = energy_phi(m, near, 1e-12);
    CHECK(std::isfinite(a));
    CHECK(std::abs(a / b - 1) < 1e-8);
    CHECK_THROWS_AS(energy_phi(EosModel::general([](double, double) { return 2.0; }), 1.0), UnsupportedFamily);
}

TEST_CASE("tabulated density family interpolates the table")
{
    const auto m = EosModel::tabulated({0.5, 1.0, 2.0}, {1.5, 2.0, 3.0});
    CHECK(eval_f(m, 1, 1.0) == doctest::Approx(2.0));
    CHECK(m.family() == EosFamily::DensityScaled);
    CHECK_THROWS_AS(eval_f(m, 1, 2.5), DomainError);
}

TEST_CASE("random states: f positive inside the domain")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> eta(1e-3, 3.04);
    const auto m = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0);
    for (int i = 0; i < 200; ++i)
        CHECK(eval_f(m, 1.0, eta(rng)) > 0.0);
}
