#pragma once

// Dormand-Prince 5(4) integrator with dense output. The right-hand side may
// throw selfsim::Error (domain or singular-point failure); such a trial step is
// rejected and retried with a smaller step until the step underflows.

#include "selfsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace selfsim::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Options {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h0 = 0.0;          // 0: automatic initial step
    double h_max = std::numeric_limits<double>::infinity();
    double h_max_rel = std::numeric_limits<double>::infinity(); // |h| <= h_max_rel * |x|
    double h_min_rel = 1e-13; // underflow threshold relative to |x|
    std::size_t max_steps = 2000000;
};

enum class Status { Completed, Stopped, StepUnderflow, DomainFailure, MaxSteps };

template <std::size_t N>
struct Step {
    double x0 = 0, x1 = 0;
    State<N> y0{}, y1{};
    State<N> f1{}; // derivative at x1
    std::array<State<N>, 5> rc{};

    State<N> at(double x) const
    {
        const double th = (x - x0) / (x1 - x0), th1 = 1.0 - th;
        State<N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
        return y;
    }
};

template <std::size_t N>
struct Result {
    Status status = Status::Completed;
    double x = 0;
    State<N> y{};
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::string failure; // message of the last rhs exception, if any
};

namespace detail {

inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

template <std::size_t N>
bool finite(const State<N>& y)
{
    for (double v : y)
        if (!std::isfinite(v))
            return false;
    return true;
}

} // namespace detail

// Integrates y' = f(x, y) from x0 towards x_end. After every accepted step the
// observer is called with the step record; returning false stops integration
// with Status::Stopped (the observer may have localized an event on the step).
template <std::size_t N, class F, class Observer>
Result<N> integrate(F&& f, double x0, const State<N>& y0, double x_end, const Options& opt, Observer&& observer)
{
    using namespace detail;
    Result<N> res;
    res.x = x0;
    res.y = y0;
    const double dir = x_end >= x0 ? 1.0 : -1.0;

    State<N> k1;
    try {
        k1 = f(x0, y0);
    } catch (const Error& e) {
        res.status = Status::DomainFailure;
        res.failure = e.what();
        return res;
    }
    if (!finite(k1)) {
        res.status = Status::DomainFailure;
        res.failure = "non-finite derivative at start";
        return res;
    }

    auto scale = [&](const State<N>& a, const State<N>& b, std::size_t i) {
        return opt.atol + opt.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    };

    double h = opt.h0;
    if (h <= 0.0) {
        double dn = 0, fn = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk = opt.atol + opt.rtol * std::abs(y0[i]);
            dn += (y0[i] / sk) * (y0[i] / sk);
            fn += (k1[i] / sk) * (k1[i] / sk);
        }
        dn = std::sqrt(dn / N);
        fn = std::sqrt(fn / N);
        h = (dn < 1e-5 || fn < 1e-5) ? 1e-6 : 0.01 * dn / fn;
        h = std::min(h, std::abs(x_end - x0));
    }
    h = std::min({h, opt.h_max, opt.h_max_rel * std::abs(x0)});

    double x = x0;
    State<N> y = y0;
    bool last_rejected = false;
    bool failure_was_domain = false;
    State<N> k2, k3, k4, k5, k6, k7, yt, y1;

    while (dir * (x_end - x) > 0.0) {
        if (res.accepted + res.rejected >= opt.max_steps) {
            res.status = Status::MaxSteps;
            break;
        }
        const double h_min = opt.h_min_rel * std::max(std::abs(x), 1e-300);
        if (h < h_min) {
            res.status = failure_was_domain ? Status::DomainFailure : Status::StepUnderflow;
            break;
        }
        bool tail = false;
        if (h >= std::abs(x_end - x)) {
            h = std::abs(x_end - x);
            tail = true;
        }
        const double hs = dir * h;

        bool ok = true;
        try {
            for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
            k2 = f(x + c2 * hs, yt);
            for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
            k3 = f(x + c3 * hs, yt);
            for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            k4 = f(x + c4 * hs, yt);
            for (std::size_t i = 0; i < N; ++i)
                yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            k5 = f(x + c5 * hs, yt);
            for (std::size_t i = 0; i < N; ++i)
                yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            k6 = f(x + hs, yt);
            for (std::size_t i = 0; i < N; ++i)
                y1[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            k7 = f(x + hs, y1);
            ok = finite(k7) && finite(y1) && finite(k2) && finite(k3) && finite(k4) && finite(k5) && finite(k6);
            if (!ok) {
                res.failure = "non-finite stage";
                failure_was_domain = true;
            }
        } catch (const Error& e) {
            ok = false;
            res.failure = e.what();
            failure_was_domain = true;
        }
        if (!ok) {
            ++res.rejected;
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double r = ei / scale(y, y1, i);
            err += r * r;
        }
        err = std::sqrt(err / N);

        if (!(err <= 1.0)) {
            ++res.rejected;
            const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
            h *= fac;
            last_rejected = true;
            failure_was_domain = false;
            continue;
        }

        Step<N> st;
        st.x0 = x;
        st.x1 = tail ? x_end : x + hs;
        st.y0 = y;
        st.y1 = y1;
        st.f1 = k7;
        for (std::size_t i = 0; i < N; ++i) {
            const double dy = y1[i] - y[i];
            const double bspl = hs * k1[i] - dy;
            st.rc[0][i] = y[i];
            st.rc[1][i] = dy;
            st.rc[2][i] = bspl;
            st.rc[3][i] = dy - hs * k7[i] - bspl;
            st.rc[4][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        ++res.accepted;
        x = st.x1;
        y = y1;
        k1 = k7;
        res.x = x;
        res.y = y;
        failure_was_domain = false;

        if (!observer(st)) {
            res.status = Status::Stopped;
            return res;
        }

        double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 10.0;
        fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
        h = std::min({h * fac, opt.h_max, opt.h_max_rel * std::abs(x)});
        last_rejected = false;
    }
    return res;
}

template <std::size_t N, class F>
Result<N> integrate(F&& f, double x0, const State<N>& y0, double x_end, const Options& opt)
{
    return integrate<N>(std::forward<F>(f), x0, y0, x_end, opt, [](const Step<N>&) { return true; });
}

} // namespace selfsim::ode
