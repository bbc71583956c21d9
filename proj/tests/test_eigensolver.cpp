#include "selfsim/eigensolver.hpp"
#include "selfsim/errors.hpp"

#include "fixtures.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace selfsim;

TEST_CASE("Guderley eigenvalue agrees with the independent oracle")
{
    const auto& r = fixtures::guderley();
    const double ref = oracle::Guderley{}.alpha(-0.3, -0.25);
    CHECK(std::abs(ref + 1 - 0.717174) < 1e-6); // classical value
    CHECK(std::abs(r.exponents.alpha - ref) < 1e-4);
    CHECK(std::abs(r.exponents.alpha - ref) < 1e-8);
    CHECK(r.exponents.beta == 0.0);
}

TEST_CASE("oracle reproduces the cylindrical Guderley exponent")
{
    // k = 1, gamma = 1.4: alpha + 1 = 0.835323 in the classical tables.
    oracle::Guderley g;
    g.k = 1;
    CHECK(g.alpha(-0.2, -0.15) + 1 == doctest::Approx(0.835323).epsilon(2e-6));
    const auto r = find_eigenvalue(fixtures::guderley_spec(1.4, 1), -0.3, -0.1);
    CHECK(r.exponents.alpha + 1 == doctest::Approx(0.835323).epsilon(2e-6));
}

TEST_CASE("sonic point: numerator vanishes with the discriminant")
{
    for (const auto* r : {&fixtures::guderley(), &fixtures::cavity_k1()}) {
        CHECK(r->sonic_xi > r->profile.xi_s);
        CHECK(r->residual < 1e-6 * r->residual_scale);
        const auto st = r->profile.state_at(r->sonic_xi);
        const double d = sonic_discriminant(r->profile.spec, st);
        CHECK(std::abs(d) < 1e-5 * scaled_sound_speed_sq(r->profile.spec, st));
    }
}

TEST_CASE("bisection halves the bracket")
{
    const auto& r = fixtures::guderley();
    const double w0 = 0.05;
    const int expect = static_cast<int>(std::ceil(std::log2(w0 / SolverOptions{}.tol_alpha)));
    CHECK(r.iterations <= expect + 1);
    CHECK(r.hi - r.lo < SolverOptions{}.tol_alpha);
    SolverOptions o;
    o.secant = true;
    const auto s = find_eigenvalue(fixtures::guderley_spec(), -0.3, -0.25, o);
    CHECK(s.iterations <= r.iterations);
    CHECK(std::abs(s.exponents.alpha - r.exponents.alpha) < 1e-9);
}

TEST_CASE("eigenvalue is stable when the integrator tolerance is tightened")
{
    SolverOptions o;
    o.rtol *= 0.1;
    o.atol *= 0.1;
    const auto r = find_eigenvalue(fixtures::guderley_spec(), -0.3, -0.25, o);
    CHECK(std::abs(r.exponents.alpha - fixtures::guderley().exponents.alpha) < 10 * o.tol_alpha);
}

TEST_CASE("desingularized mode converges to the same eigenvalue")
{
    SolverOptions o;
    o.mode = IntegrationMode::Desingularized;
    const auto r = find_eigenvalue(fixtures::guderley_spec(), -0.3, -0.25, o);
    CHECK(std::abs(r.exponents.alpha - fixtures::guderley().exponents.alpha) < 1e-6);
}

TEST_CASE("perturbed exponent fails to cross the sonic point")
{
    const auto spec = fixtures::guderley_spec();
    const double a = fixtures::guderley().exponents.alpha;
    for (double d : {-1e-2, 1e-2}) {
        const auto rep = shoot(spec, a + d);
        CHECK_THROWS_AS(cross_sonic(with_exponents(spec, rep.exponents), rep, SolverOptions{}), CrossingFailure);
    }
    const auto rep = shoot(spec, a);
    CHECK_NOTHROW(cross_sonic(with_exponents(spec, rep.exponents), rep, SolverOptions{}));
}

TEST_CASE("shoot: sign baseline for the pseudo Mie-Gruneisen cavity")
{
    const auto spec = fixtures::cavity_spec(2);
    const auto a = shoot(spec, -0.80), b = shoot(spec, -0.90);
    CHECK(a.numerator_sign != 0);
    CHECK(b.numerator_sign == -a.numerator_sign);
    CHECK_THROWS_AS(find_eigenvalue(spec, -0.3, -0.2), NoSignChange);
}

TEST_CASE("shoot refuses over-determined problems")
{
    ProblemSpec sp = fixtures::guderley_spec();
    sp.eos = EosModel::general([](double, double) { return 1.4; });
    CHECK_THROWS_AS(shoot(sp, -0.3), ConstraintError);
}

TEST_CASE("quiescent start runs to xi_max with no sign")
{
    auto sp = with_exponents(fixtures::guderley_spec(), {-0.3, 0.0});
    const auto rep = shoot_from(sp, {1.0, 1.0, 0.0, 0.0}, 1e4);
    CHECK(rep.stop_reason == StopReason::ReachedXiMax);
    CHECK(rep.numerator_sign == 0);
}

TEST_CASE("IVT along converged trajectories")
{
    for (const auto* r : {&fixtures::guderley(), &fixtures::cavity_k1()}) {
        const auto& p = r->profile;
        const double near = p.xi_s * (1 + 1e-3);
        CHECK(sonic_discriminant(p.spec, p.state_at(near)) < 0.0);
        CHECK(sonic_discriminant(p.spec, p.state_at(100 * p.xi_s)) > 0.0);
    }
}

TEST_CASE("converged profiles satisfy the conservation form at samples")
{
    for (const auto* r : {&fixtures::guderley(), &fixtures::cavity_k1()}) {
        const auto& p = r->profile;
        const double hj = SolverOptions{}.h_jump;
        double worst = 0;
        for (std::size_t i = 1; i < p.xi.size(); ++i) {
            if (std::abs(p.xi[i] / r->sonic_xi - 1) <= 10 * hj)
                continue;
            const SimilarityState s{p.xi[i], p.R[i], p.V[i], p.Pi[i]};
            worst = std::max(worst, conservation_residuals(p.spec, s, p.derivs_at(p.xi[i])).max_relative());
        }
        CHECK(worst < 1e-7);
    }
}

TEST_CASE("fluid side is subsonic between the jump and the sonic point")
{
    const auto& r = fixtures::guderley();
    const auto& p = r.profile;
    for (std::size_t i = 0; i < p.xi.size() && p.xi[i] < r.sonic_xi * (1 - 1e-4); ++i) {
        const SimilarityState s{p.xi[i], p.R[i], p.V[i], p.Pi[i]};
        CHECK(std::abs(group_velocity(p.spec, s)) < std::sqrt(scaled_sound_speed_sq(p.spec, s)));
    }
}

TEST_CASE("restart offset: profile converges as h_jump halves")
{
    const auto& base = fixtures::guderley();
    const double x = 3 * base.sonic_xi;
    SolverOptions o;
    double prev = 0;
    for (double hj : {4e-5, 2e-5, 1e-5}) {
        o.h_jump = hj;
        const auto rep = shoot(fixtures::guderley_spec(), base.exponents.alpha);
        const auto prof = cross_sonic(with_exponents(fixtures::guderley_spec(), rep.exponents), rep, o);
        const double v = prof.state_at(x).V;
        if (prev != 0)
            CHECK(std::abs(v / prev - 1) < 1e-5);
        prev = v;
    }
}

TEST_CASE("scan covers the bracket and solve refines each sign change")
{
    const auto sp = fixtures::guderley_spec();
    const auto s = scan(sp, -0.5, -0.1, 9);
    REQUIRE(s.size() == 9);
    CHECK(s.front().value == -0.5);
    CHECK(s.back().value == doctest::Approx(-0.1));
    const auto out = solve(sp, -0.5, -0.1, SolverOptions{});
    REQUIRE(out.solutions.size() == 1);
    CHECK(std::abs(out.solutions[0].exponents.alpha - fixtures::guderley().exponents.alpha) < 1e-9);
}

TEST_CASE("stop reasons round-trip through text")
{
    for (auto r : {StopReason::SonicApproach, StopReason::StepUnderflow, StopReason::DomainError,
                   StopReason::ReachedXiMax})
        CHECK(stop_reason_from_string(to_string(r)) == r);
    CHECK_THROWS(stop_reason_from_string("nope"));
}
