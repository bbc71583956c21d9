#pragma once

// Independent Guderley eigenvalue for an ideal gas. Written directly from the
// primitive flow equations in similarity form and integrated with Boost odeint,
// sharing no code with the library solver.

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>

namespace oracle {

using State = std::array<double, 3>; // R, V, Pi

struct Guderley {
    double gamma = 1.4;
    int k = 2;
    double rtol = 1e-13;
    double atol = 1e-15;
    double delta_stop = 1e-9;

    // Primitive system A y' = b:
    //   X R' + R V'          = -k R V / xi
    //   X V' + Pi' / R       = alpha V
    //   g Pi V' + X Pi'      = 2 alpha Pi - g Pi k V / xi
    struct Local {
        double X, C2, b1, b2, b3;
    };
    Local local(double alpha, double xi, const State& y) const
    {
        const double R = y[0], V = y[1], P = y[2];
        return {(1.0 + alpha) * xi + V, gamma * P / R, -k * R * V / xi, alpha * V,
                2.0 * alpha * P - gamma * P * k * V / xi};
    }
    // Cramer numerator of V' (up to the factor X).
    double numerator(double alpha, double xi, const State& y) const
    {
        const auto l = local(alpha, xi, y);
        return l.X * (l.b2 * l.X - l.b3 / y[0]);
    }
    State deriv(double alpha, double xi, const State& y) const
    {
        const auto l = local(alpha, xi, y);
        const double dV = (l.b2 * l.X - l.b3 / y[0]) / (l.X * l.X - l.C2);
        return {(l.b1 - y[0] * dV) / l.X, dV, (l.b3 - gamma * y[2] * dV) / l.X};
    }
    // Strong-shock state behind a jump at xi = 1 into unit density at rest.
    State jump(double alpha) const
    {
        const double us = -(1.0 + alpha);
        return {(gamma + 1.0) / (gamma - 1.0), 2.0 * us / (gamma + 1.0), 2.0 * us * us / (gamma + 1.0)};
    }

    // Sign of the numerator where the trajectory closes in on the sonic line.
    int sign(double alpha) const
    {
        namespace odeint = boost::numeric::odeint;
        auto stepper = odeint::make_controlled(atol, rtol, odeint::runge_kutta_dopri5<State>());
        auto sys = [&](const State& y, State& dy, double x) { dy = deriv(alpha, x, y); };
        double x = 1.0, dt = 1e-6;
        State y = jump(alpha);
        for (int n = 0; n < 2000000 && x < 1e4; ++n) {
            const auto l = local(alpha, x, y);
            if ((l.X * l.X - l.C2) / l.C2 > -delta_stop)
                break;
            dt = std::min(dt, 0.01 * x);
            const double x_prev = x;
            if (stepper.try_step(sys, y, x, dt) == odeint::fail && dt < 1e-15 * x_prev)
                break;
        }
        return numerator(alpha, x, y) > 0.0 ? 1 : -1;
    }

    double alpha(double lo, double hi, double tol = 1e-12) const
    {
        const int s_lo = sign(lo);
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if (sign(mid) == s_lo)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }
};

} // namespace oracle
