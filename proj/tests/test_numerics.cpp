#include "selfsim/interp.hpp"
#include "selfsim/ode.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace selfsim;

TEST_CASE("monotone cubic reproduces nodes and cubics")
{
    std::vector<double> x{0, 0.5, 1.3, 2, 3.1}, y;
    for (double v : x)
        y.push_back(v * v * v + v);
    std::vector<double> d;
    for (double v : x)
        d.push_back(3 * v * v + 1);
    const MonotoneCubic c(x, y, d);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(c(x[i]) == doctest::Approx(y[i]).epsilon(1e-15));
    for (double t : {0.1, 0.77, 1.9, 2.5, 3.0})
        CHECK(c(t) == doctest::Approx(t * t * t + t).epsilon(1e-13));
    CHECK(c.derivative(1.7) == doctest::Approx(3 * 1.7 * 1.7 + 1).epsilon(1e-12));
}

TEST_CASE("monotone data gives a monotone interpolant")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x{0}, y{0};
        for (int i = 0; i < 12; ++i) {
            x.push_back(x.back() + 0.1 + U(rng));
            y.push_back(y.back() + (U(rng) < 0.3 ? 0.0 : std::pow(U(rng), 3)));
        }
        const MonotoneCubic c(x, y);
        double prev = c(x.front());
        for (int i = 1; i <= 2000; ++i) {
            const double v = c(x.front() + (x.back() - x.front()) * i / 2000.0);
            CHECK(v >= prev - 1e-14);
            prev = v;
        }
    }
}

TEST_CASE("limiting is local to a segment")
{
    // A flat first segment must not flatten the slope used by the next one.
    const std::vector<double> x{1.0, 1.1, 2.0, 3.0}, y{1.0, 1.0, 2.0, 3.5}, d{0.0, 1.2, 1.1, 1.5};
    const MonotoneCubic c(x, y, d);
    CHECK(c.derivative(1.1 + 1e-12) == doctest::Approx(1.2).epsilon(1e-6));
    CHECK(c(1.05) == doctest::Approx(1.0));
}

TEST_CASE("bad nodes are rejected")
{
    CHECK_THROWS(MonotoneCubic({0, 0, 1}, {1, 2, 3}));
    CHECK_THROWS(MonotoneCubic({0}, {1}));
}

TEST_CASE("DOPRI reaches the exponential to tolerance")
{
    auto f = [](double, const ode::State<1>& y) { return ode::State<1>{-y[0]}; };
    ode::Options o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    const auto r = ode::integrate<1>(f, 0.0, {1.0}, 5.0, o);
    CHECK(r.status == ode::Status::Completed);
    CHECK(r.y[0] == doctest::Approx(std::exp(-5.0)).epsilon(1e-10));
}

TEST_CASE("DOPRI dense output and step caps")
{
    auto f = [](double x, const ode::State<2>& y) { return ode::State<2>{y[1], -y[0] + 0 * x}; };
    ode::Options o;
    o.rtol = 1e-11;
    o.h_max_rel = 0.05;
    double worst = 0, max_h = 0;
    const auto r = ode::integrate<2>(f, 1.0, {std::sin(1.0), std::cos(1.0)}, 10.0, o, [&](const ode::Step<2>& s) {
        const double xm = 0.5 * (s.x0 + s.x1);
        worst = std::max(worst, std::abs(s.at(xm)[0] - std::sin(xm)));
        max_h = std::max(max_h, (s.x1 - s.x0) / s.x0);
        return true;
    });
    CHECK(r.status == ode::Status::Completed);
    CHECK(worst < 1e-9);
    CHECK(max_h <= 0.05 * (1 + 1e-12));
}

TEST_CASE("observer can stop the integration and errors reject steps")
{
    auto f = [](double x, const ode::State<1>&) {
        if (x > 2.0)
            throw DomainError("beyond 2");
        return ode::State<1>{1.0};
    };
    const auto r = ode::integrate<1>(f, 0.0, {0.0}, 5.0, ode::Options{});
    CHECK(r.status != ode::Status::Completed);
    CHECK(r.x <= 2.0);
    CHECK(r.x > 1.99);
    const auto s = ode::integrate<1>(
        [](double, const ode::State<1>&) { return ode::State<1>{1.0}; }, 0.0, {0.0}, 5.0, ode::Options{},
        [](const ode::Step<1>& st) { return st.x1 < 1.0; });
    CHECK(s.status == ode::Status::Stopped);
}
