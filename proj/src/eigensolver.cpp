#include "selfsim/eigensolver.hpp"

#include "selfsim/errors.hpp"
#include "selfsim/ode.hpp"

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <future>
#include <thread>

namespace selfsim {

std::string to_string(StopReason r)
{
    switch (r) {
    case StopReason::SonicApproach: return "sonic_approach";
    case StopReason::StepUnderflow: return "step_underflow";
    case StopReason::DomainError: return "domain_error";
    case StopReason::ReachedXiMax: return "reached_xi_max";
    }
    return "?";
}

StopReason stop_reason_from_string(const std::string& s)
{
    for (auto r : {StopReason::SonicApproach, StopReason::StepUnderflow, StopReason::DomainError,
                   StopReason::ReachedXiMax})
        if (to_string(r) == s)
            return r;
    throw std::invalid_argument("unknown stop reason '" + s + "'");
}

std::string to_string(IntegrationMode m)
{
    return m == IntegrationMode::Direct ? "direct" : "desingularized";
}

IntegrationMode integration_mode_from_string(const std::string& s)
{
    if (s == "direct")
        return IntegrationMode::Direct;
    if (s == "desingularized")
        return IntegrationMode::Desingularized;
    throw std::invalid_argument("unknown integration mode '" + s + "'");
}

FreeParameter default_free_parameter(const ConstraintSet& cs)
{
    for (const auto& r : cs.relations)
        if (r.cb == 0.0 && r.ca != 0.0)
            return FreeParameter::Beta; // alpha pinned to zero
    return FreeParameter::Alpha;
}

Exponents resolve_exponents(const ConstraintSet& cs, FreeParameter free, double value, const Exponents& base)
{
    if (cs.free_dims == 0)
        throw ConstraintError("no free scaling exponent: the problem is not solvable by scaling");
    Exponents e = base;
    if (free == FreeParameter::Alpha)
        e.alpha = value;
    else
        e.beta = value;
    if (cs.free_dims == 2)
        return e;
    const LinearRelation* rel = nullptr;
    for (const auto& r : cs.relations)
        if (r.ca != 0.0 || r.cb != 0.0) {
            rel = &r;
            break;
        }
    if (free == FreeParameter::Alpha) {
        if (rel->cb == 0.0)
            throw ConstraintError("alpha is fixed by the constraints; bisect on beta");
        e.beta = -rel->ca * value / rel->cb;
    } else {
        if (rel->ca == 0.0)
            throw ConstraintError("beta is fixed by the constraints; bisect on alpha");
        e.alpha = -rel->cb * value / rel->ca;
    }
    return e;
}

ProblemSpec with_exponents(const ProblemSpec& spec, const Exponents& e)
{
    ProblemSpec s = spec;
    s.exponents = e;
    return s;
}

SimilarityState initial_state(const ProblemSpec& spec, const SolverOptions& opt)
{
    if (spec.kind == ProblemKind::Shock) {
        const auto js = jump_init_shock(spec);
        return {js.xi_s, js.post[0], js.post[1], js.post[2]};
    }
    // First-order expansion about the free surface, where X = C = 0:
    // V' = (alpha + beta - 1 + k f (1 + alpha)) / (1 + f), Pi' = alpha R V, R held.
    const auto js = jump_init_cavity(spec);
    const double a = spec.exponents.alpha, b = spec.exponents.beta;
    const double Rs = js.post[0], Vs = js.post[1];
    const double f = scaled_f(spec, {js.xi_s, Rs, Vs, 0.0});
    const double dV = (a + b - 1.0 + spec.k * f * (1.0 + a)) / (1.0 + f);
    const double dPi = a * Rs * Vs;
    const double h = js.xi_s * opt.eps;
    return {js.xi_s + h, Rs, Vs + dV * h, dPi * h};
}

namespace {

struct Local {
    double X, C2, delta, N, nscale;
};

Local evaluate(const ProblemSpec& spec, const SimilarityState& s)
{
    Local l;
    l.X = group_velocity(spec, s);
    l.C2 = scaled_sound_speed_sq(spec, s);
    l.delta = l.X * l.X - l.C2;
    l.N = numerator(spec, s);
    const double a = spec.exponents.alpha, b = spec.exponents.beta;
    l.nscale = std::abs((b + 2.0 * a) * s.Pi) + std::abs(s.R * s.V * a * l.X) +
               std::abs(s.R * s.V * spec.k * l.C2 / s.xi);
    return l;
}

double rel_delta(const Local& l)
{
    const double sc = l.X * l.X + std::abs(l.C2);
    return sc > 0.0 ? std::abs(l.delta) / sc : 1.0;
}

double rel_num(const Local& l)
{
    return l.nscale > 0.0 ? std::abs(l.N) / l.nscale : (l.N == 0.0 ? 0.0 : 1.0);
}

int sign_of(double v)
{
    return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

ode::Options ode_options(const SolverOptions& opt)
{
    ode::Options o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    o.max_steps = opt.max_steps;
    o.h_max_rel = opt.h_max_rel;
    return o;
}

ode::Options tau_options(const SolverOptions& opt)
{
    auto o = ode_options(opt);
    o.h_max_rel = std::numeric_limits<double>::infinity();
    return o;
}

// Locates the first point in [a, b] where g changes sign, given g(a), g(b) of
// opposite sign. Falls back to b if the dense state cannot be evaluated.
template <class G>
double localize(G&& g, double a, double b, double ga, double gb)
{
    try {
        boost::uintmax_t it = 100;
        auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, boost::math::tools::eps_tolerance<double>(50), it);
        return 0.5 * (r.first + r.second);
    } catch (const std::exception&) {
        return b;
    }
}

void finish(const ProblemSpec& spec, ShootReport& rep)
{
    const auto& s = rep.trajectory.back();
    rep.stop_xi = s.xi;
    try {
        const auto l = evaluate(spec, s);
        rep.numerator = l.N;
        rep.discriminant = l.delta;
        rep.numerator_sign = sign_of(l.N);
    } catch (const Error& e) {
        rep.numerator_sign = 0;
        rep.detail += std::string(rep.detail.empty() ? "" : "; ") + e.what();
    }
}

ShootReport shoot_direct(const ProblemSpec& spec, const SimilarityState& start, double xi_max,
                         const SolverOptions& opt)
{
    ShootReport rep;
    rep.exponents = spec.exponents;
    rep.trajectory.push_back(start);
    int last_error = 0; // 1 domain, 2 singular
    auto f = [&](double x, const ode::State<3>& y) {
        try {
            const auto d = rhs(spec, {x, y[0], y[1], y[2]});
            return ode::State<3>{d.dR, d.dV, d.dPi};
        } catch (const DomainError&) {
            last_error = 1;
            throw;
        } catch (const SingularPoint&) {
            last_error = 2;
            throw;
        }
    };
    auto gfun = [&](const SimilarityState& s) {
        const auto l = evaluate(spec, s);
        return std::abs(l.delta) - opt.delta_stop * (l.X * l.X + std::abs(l.C2));
    };
    if (gfun(start) <= 0.0) {
        rep.stop_reason = StopReason::SonicApproach;
        finish(spec, rep);
        return rep;
    }
    bool event = false;
    double g_prev = gfun(start);
    auto observer = [&](const ode::Step<3>& st) {
        SimilarityState s1{st.x1, st.y1[0], st.y1[1], st.y1[2]};
        double g1;
        try {
            g1 = gfun(s1);
        } catch (const Error&) {
            g1 = g_prev;
        }
        // A sign flip of Delta inside the step also counts as an approach.
        double d0 = 0, d1 = 0;
        try {
            d0 = evaluate(spec, rep.trajectory.back()).delta;
            d1 = evaluate(spec, s1).delta;
        } catch (const Error&) {
        }
        if (g1 <= 0.0 || d0 * d1 < 0.0) {
            auto g = [&](double x) {
                const auto y = st.at(x);
                const SimilarityState s{x, y[0], y[1], y[2]};
                const auto l = evaluate(spec, s);
                return d0 * d1 < 0.0 ? l.delta : gfun(s);
            };
            double ga = d0 * d1 < 0.0 ? d0 : g_prev;
            double gb = d0 * d1 < 0.0 ? d1 : g1;
            double xe = st.x1;
            if (ga * gb < 0.0)
                xe = localize(g, st.x0, st.x1, ga, gb);
            const auto y = st.at(xe);
            rep.trajectory.push_back({xe, y[0], y[1], y[2]});
            event = true;
            return false;
        }
        for (int j = 1; j < opt.dense_samples; ++j) {
            const double x = st.x0 + (st.x1 - st.x0) * j / opt.dense_samples;
            const auto y = st.at(x);
            rep.trajectory.push_back({x, y[0], y[1], y[2]});
        }
        rep.trajectory.push_back(s1);
        g_prev = g1;
        return true;
    };
    const auto res = ode::integrate<3>(f, start.xi, ode::State<3>{start.R, start.V, start.Pi}, xi_max,
                                       ode_options(opt), observer);
    if (event) {
        rep.stop_reason = StopReason::SonicApproach;
    } else {
        switch (res.status) {
        case ode::Status::Completed:
            rep.stop_reason = StopReason::ReachedXiMax;
            break;
        case ode::Status::DomainFailure:
            rep.stop_reason = last_error == 1 ? StopReason::DomainError : StopReason::StepUnderflow;
            rep.detail = res.failure;
            break;
        case ode::Status::StepUnderflow:
        case ode::Status::MaxSteps:
        case ode::Status::Stopped:
            rep.stop_reason = StopReason::StepUnderflow;
            rep.detail = res.status == ode::Status::MaxSteps ? "step budget exhausted" : res.failure;
            break;
        }
    }
    finish(spec, rep);
    return rep;
}

ShootReport shoot_tau(const ProblemSpec& spec, const SimilarityState& start, double xi_max,
                      const SolverOptions& opt)
{
    ShootReport rep;
    rep.exponents = spec.exponents;
    rep.trajectory.push_back(start);
    const auto l0 = evaluate(spec, start);
    const double D0 = start.R * l0.X * l0.delta;
    if (!(std::abs(D0) > 0.0)) {
        rep.stop_reason = rel_delta(l0) <= opt.delta_stop ? StopReason::SonicApproach : StopReason::StepUnderflow;
        finish(spec, rep);
        return rep;
    }
    if (rel_delta(l0) <= opt.delta_stop) {
        rep.stop_reason = StopReason::SonicApproach;
        finish(spec, rep);
        return rep;
    }
    const double sigma = D0 > 0.0 ? 1.0 : -1.0;
    const double x_sign = l0.X > 0.0 ? 1.0 : -1.0;
    const double d_sign = l0.delta > 0.0 ? 1.0 : -1.0;
    int last_error = 0;
    auto f = [&](double, const ode::State<4>& y) {
        try {
            const auto d = rhs_desingularized(spec, {y[0], y[1], y[2], y[3]});
            return ode::State<4>{sigma * d[0], sigma * d[1], sigma * d[2], sigma * d[3]};
        } catch (const DomainError&) {
            last_error = 1;
            throw;
        }
    };
    std::optional<StopReason> reason;
    auto observer = [&](const ode::Step<4>& st) {
        const SimilarityState s1{st.y1[0], st.y1[1], st.y1[2], st.y1[3]};
        Local l1;
        try {
            l1 = evaluate(spec, s1);
        } catch (const Error&) {
            rep.trajectory.push_back(s1);
            return true;
        }
        auto at = [&](double tau) {
            const auto y = st.at(tau);
            return SimilarityState{y[0], y[1], y[2], y[3]};
        };
        const auto l0s = evaluate(spec, rep.trajectory.back());
        auto stop_at = [&](auto&& g, double g0, double g1, StopReason r) {
            double te = st.x1;
            if (g0 * g1 < 0.0)
                te = localize(g, st.x0, st.x1, g0, g1);
            rep.trajectory.push_back(at(te));
            reason = r;
            return false;
        };
        if (s1.xi >= xi_max) {
            auto g = [&](double tau) { return at(tau).xi - xi_max; };
            return stop_at(g, rep.trajectory.back().xi - xi_max, s1.xi - xi_max, StopReason::ReachedXiMax);
        }
        if (l1.delta * d_sign <= 0.0 || rel_delta(l1) <= opt.delta_stop) {
            auto g = [&](double tau) {
                const auto l = evaluate(spec, at(tau));
                return std::abs(l.delta) - opt.delta_stop * (l.X * l.X + std::abs(l.C2));
            };
            if (l1.delta * d_sign <= 0.0) {
                auto gd = [&](double tau) { return evaluate(spec, at(tau)).delta; };
                return stop_at(gd, l0s.delta, l1.delta, StopReason::SonicApproach);
            }
            const double g0 = std::abs(l0s.delta) - opt.delta_stop * (l0s.X * l0s.X + std::abs(l0s.C2));
            const double g1 = std::abs(l1.delta) - opt.delta_stop * (l1.X * l1.X + std::abs(l1.C2));
            return stop_at(g, g0, g1, StopReason::SonicApproach);
        }
        if (l1.X * x_sign <= 0.0) {
            rep.trajectory.push_back(s1);
            rep.detail = "trajectory folds where X = 0";
            reason = StopReason::StepUnderflow;
            return false;
        }
        for (int j = 1; j < opt.dense_samples; ++j) {
            const auto y = st.at(st.x0 + (st.x1 - st.x0) * j / opt.dense_samples);
            rep.trajectory.push_back({y[0], y[1], y[2], y[3]});
        }
        rep.trajectory.push_back(s1);
        return true;
    };
    const auto res = ode::integrate<4>(f, 0.0, ode::State<4>{start.xi, start.R, start.V, start.Pi}, 1e300,
                                       tau_options(opt), observer);
    if (reason) {
        rep.stop_reason = *reason;
    } else if (res.status == ode::Status::DomainFailure) {
        rep.stop_reason = last_error == 1 ? StopReason::DomainError : StopReason::StepUnderflow;
        rep.detail = res.failure;
    } else {
        rep.stop_reason = StopReason::StepUnderflow;
        rep.detail = res.status == ode::Status::MaxSteps ? "step budget exhausted" : res.failure;
    }
    finish(spec, rep);
    return rep;
}

} // namespace

ShootReport shoot_from(const ProblemSpec& spec, const SimilarityState& start, double xi_max, const SolverOptions& opt)
{
    if (opt.mode == IntegrationMode::Desingularized)
        return shoot_tau(spec, start, xi_max, opt);
    return shoot_direct(spec, start, xi_max, opt);
}

ShootReport shoot(const ProblemSpec& spec, double free_param_value, const SolverOptions& opt)
{
    const auto cs = classify_constraints(spec.eos, spec.kind);
    if (cs.free_dims == 0)
        throw ConstraintError("constraints leave no free exponent (" + cs.render() + ")");
    const FreeParameter free = opt.free.value_or(default_free_parameter(cs));
    const ProblemSpec sp = with_exponents(spec, resolve_exponents(cs, free, free_param_value, spec.exponents));
    sp.validate();

    ShootReport rep;
    rep.exponents = sp.exponents;
    SimilarityState start;
    double xi_s;
    try {
        xi_s = sp.jump_xi();
        start = initial_state(sp, opt);
    } catch (const Error& e) {
        rep.stop_reason = StopReason::DomainError;
        rep.detail = e.what();
        rep.numerator_sign = 0;
        return rep;
    }
    rep = shoot_from(sp, start, opt.xi_max_factor * xi_s, opt);
    rep.xi_s = xi_s;
    if (sp.kind == ProblemKind::Cavity) {
        const auto js = jump_init_cavity(sp);
        rep.trajectory.insert(rep.trajectory.begin(), SimilarityState{js.xi_s, js.post[0], js.post[1], js.post[2]});
    }
    return rep;
}

namespace {

struct Poly2 {
    bool real = false;
    double w1 = 0, w2 = 0;
};

Poly2 solve_quadratic(double A, double B, double C)
{
    // A w^2 + B w + C = 0
    Poly2 p;
    const double scale = std::max({std::abs(A), std::abs(B), std::abs(C)});
    if (scale == 0.0)
        return p;
    if (std::abs(A) <= 1e-14 * scale) {
        if (B == 0.0)
            return p;
        p.real = true;
        p.w1 = p.w2 = -C / B;
        return p;
    }
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0)
        return p;
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    p.real = true;
    p.w1 = q / A;
    p.w2 = q != 0.0 ? C / q : p.w1;
    return p;
}

std::array<double, 3> to_arr(const Derivs& d)
{
    return {d.dR, d.dV, d.dPi};
}

} // namespace

SolutionProfile cross_sonic(const ProblemSpec& spec, const ShootReport& approach, const SolverOptions& opt,
                            EigenResult* info)
{
    const auto& tr = approach.trajectory;
    if (tr.size() < 3)
        throw CrossingFailure("approach trajectory too short");
    const double a = spec.exponents.alpha, b = spec.exponents.beta, k = spec.k;

    // Closest approach to the set N = Delta = 0.
    std::size_t best = 0;
    double best_g = std::numeric_limits<double>::infinity();
    std::vector<Local> loc(tr.size());
    for (std::size_t i = 1; i < tr.size(); ++i) {
        try {
            loc[i] = evaluate(spec, tr[i]);
        } catch (const Error&) {
            break;
        }
        const double g = rel_num(loc[i]) + rel_delta(loc[i]);
        if (g < best_g) {
            best_g = g;
            best = i;
        }
    }
    if (best == 0)
        throw CrossingFailure("approach trajectory has no evaluable states");
    if (rel_num(loc[best]) > opt.approach_tol || rel_delta(loc[best]) > opt.approach_tol)
        throw CrossingFailure(fmt::format(
            "trajectory does not reach a sonic point: closest approach at xi = {:.17g} has relative N = {:.3g}, "
            "relative X^2 - C^2 = {:.3g}",
            tr[best].xi, rel_num(loc[best]), rel_delta(loc[best])));
    double n_scale = 0.0;
    for (std::size_t i = 1; i <= best; ++i)
        n_scale = std::max(n_scale, std::abs(loc[i].N));

    // Polish onto N = Delta = 0 with minimum-norm Newton steps in scaled variables.
    SimilarityState z = tr[best];
    for (int it = 0; it < 60; ++it) {
        const auto l = evaluate(spec, z);
        if (rel_num(l) < 1e-15 && rel_delta(l) < 1e-15)
            break;
        const auto gN = numerator_gradient(spec, z);
        const auto gD = discriminant_gradient(spec, z);
        const double D[4] = {z.xi, z.R, std::abs(z.V) + std::abs(l.X), std::max(std::abs(z.Pi), 1e-300)};
        const double J[2][4] = {{gN.d_xi * D[0], gN.d_R * D[1], gN.d_V * D[2], gN.d_Pi * D[3]},
                                {gD.d_xi * D[0], gD.d_R * D[1], gD.d_V * D[2], gD.d_Pi * D[3]}};
        double M[2][2] = {{0, 0}, {0, 0}};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                for (int j = 0; j < 4; ++j)
                    M[r][c] += J[r][j] * J[c][j];
        const double det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
        if (!(std::abs(det) > 0.0))
            throw CrossingFailure("degenerate sonic polish");
        const double F[2] = {l.N, l.delta};
        const double y0 = (M[1][1] * F[0] - M[0][1] * F[1]) / det;
        const double y1 = (-M[1][0] * F[0] + M[0][0] * F[1]) / det;
        double dz[4], norm = 0.0;
        for (int j = 0; j < 4; ++j) {
            dz[j] = -(J[0][j] * y0 + J[1][j] * y1);
            norm = std::max(norm, std::abs(dz[j]));
        }
        if (norm > 0.05)
            throw CrossingFailure("sonic point polish diverged");
        z.xi += dz[0] * D[0];
        z.R += dz[1] * D[1];
        z.V += dz[2] * D[2];
        z.Pi += dz[3] * D[3];
        if (norm < 1e-16)
            break;
    }
    const double xs = z.xi;

    // Crossing slopes: y' = w u + b with w the limit of N/Delta.
    const double X = group_velocity(spec, z);
    const std::array<double, 3> u{1.0 / X, -1.0 / z.R, X};
    const std::array<double, 3> bb{(b - k * z.V / z.xi) * z.R / X, 0.0, a * z.R * z.V};
    const auto gN = numerator_gradient(spec, z);
    const auto gD = discriminant_gradient(spec, z);
    auto dot = [](const Gradient& g, const std::array<double, 3>& v) {
        return g.d_R * v[0] + g.d_V * v[1] + g.d_Pi * v[2];
    };
    const double A = dot(gD, u);
    const double B = dot(gD, bb) + gD.d_xi - dot(gN, u);
    const double C = dot(gN, bb) + gN.d_xi;
    const auto roots = solve_quadratic(A, B, -C);
    if (!roots.real)
        throw CrossingFailure("no real crossing slope at the sonic point");
    // The continuation keeps the incoming slope. Along that branch X^2 - C^2
    // must pass through zero away from the incoming side; ties are broken by
    // the trajectory chord over the last 1e-3 relative in xi.
    const double d_in = loc[std::max<std::size_t>(1, best / 2)].delta;
    const double D0 = dot(gD, bb) + gD.d_xi;
    auto slope_for = [&](double w) {
        return std::array<double, 3>{w * u[0] + bb[0], w * u[1] + bb[1], w * u[2] + bb[2]};
    };
    std::size_t j0 = best - 1;
    while (j0 > 1 && tr[j0].xi > xs * (1.0 - 1e-3))
        --j0;
    const double dx = tr[best].xi - tr[j0].xi;
    const std::array<double, 3> chord{(tr[best].R - tr[j0].R) / dx, (tr[best].V - tr[j0].V) / dx,
                                      (tr[best].Pi - tr[j0].Pi) / dx};
    auto mismatch = [&](double w) {
        const auto sl = slope_for(w);
        double m = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double sc = std::abs(sl[c]) + std::abs(chord[c]);
            if (sc > 0.0)
                m += std::abs(sl[c] - chord[c]) / sc;
        }
        return m;
    };
    auto crosses = [&](double w) { return (w * A + D0) * d_in < 0.0; };
    const bool ok1 = crosses(roots.w1), ok2 = crosses(roots.w2);
    if (!ok1 && !ok2)
        throw CrossingFailure("neither crossing slope carries the solution through the sonic point");
    double w = ok1 ? roots.w1 : roots.w2;
    if (ok1 && ok2)
        w = mismatch(roots.w1) <= mismatch(roots.w2) ? roots.w1 : roots.w2;
    const auto slope = slope_for(w);

    const double h = opt.h_jump * xs;
    const SimilarityState restart{xs + h, z.R + slope[0] * h, z.V + slope[1] * h, z.Pi + slope[2] * h};
    const auto lr = evaluate(spec, restart);
    if (!(lr.delta * d_in < 0.0))
        throw CrossingFailure("restart state does not lie beyond the sonic point");

    const double xi_max = opt.xi_max_factor * approach.xi_s;
    SolverOptions post = opt;
    post.mode = IntegrationMode::Direct;
    ShootReport tail;
    if (restart.xi < xi_max) {
        tail = shoot_direct(spec, restart, xi_max, post);
        if (tail.stop_reason == StopReason::SonicApproach)
            throw CrossingFailure(fmt::format("post-sonic integration re-encountered X^2 = C^2 at xi = {:.17g}",
                                              tail.stop_xi));
        if (tail.stop_reason != StopReason::ReachedXiMax)
            throw CrossingFailure("post-sonic integration stopped early (" + to_string(tail.stop_reason) + ": " +
                                  tail.detail + ")");
    } else {
        tail.trajectory.push_back(restart);
    }

    SolutionProfile prof;
    prof.spec = spec;
    prof.xi_s = approach.xi_s;
    prof.sonic_xi = xs;
    const double near = 10.0 * opt.h_jump * xs;
    auto push = [&](const SimilarityState& s, const std::array<double, 3>& d) {
        if (!prof.xi.empty() && !(s.xi > prof.xi.back()))
            return;
        prof.xi.push_back(s.xi);
        prof.R.push_back(s.R);
        prof.V.push_back(s.V);
        prof.Pi.push_back(s.Pi);
        prof.dR.push_back(d[0]);
        prof.dV.push_back(d[1]);
        prof.dPi.push_back(d[2]);
    };
    // Within `near` of xi* the rhs is ill-conditioned; slopes there follow the
    // crossing slope plus a one-sided curvature from the first regular sample.
    std::array<double, 3> curv_lo{}, curv_hi{};
    auto slope_at = [&](const SimilarityState& s) {
        if (std::abs(s.xi - xs) <= near) {
            const auto& c = s.xi < xs ? curv_lo : curv_hi;
            return std::array<double, 3>{slope[0] + c[0] * (s.xi - xs), slope[1] + c[1] * (s.xi - xs),
                                         slope[2] + c[2] * (s.xi - xs)};
        }
        try {
            return to_arr(rhs(spec, s));
        } catch (const Error&) {
            return slope;
        }
    };
    auto curvature_from = [&](const SimilarityState& s) {
        std::array<double, 3> c{};
        try {
            const auto d = to_arr(rhs(spec, s));
            for (int j = 0; j < 3; ++j)
                c[j] = (d[j] - slope[j]) / (s.xi - xs);
        } catch (const Error&) {
        }
        return c;
    };
    // Near the saddle the forward trajectory carries the residual eigenvalue
    // error. The incoming branch is rebuilt by integrating backwards from
    // xi*(1 - h_jump), which converges onto it; below xi_m the two solutions
    // are blended smoothly in log xi so the profile still starts at the jump.
    const std::size_t first = spec.kind == ProblemKind::Cavity ? 1 : 0;
    std::size_t m = best;
    while (m > first + 1 && rel_num(loc[m]) + rel_delta(loc[m]) < 1e-2)
        --m;
    std::vector<ode::Step<3>> bsteps;
    double match_error = 0.0;
    if (m > first + 1) {
        const SimilarityState b0{xs * (1.0 - opt.h_jump), z.R - slope[0] * h, z.V - slope[1] * h,
                                 z.Pi - slope[2] * h};
        auto fb = [&](double x, const ode::State<3>& y) {
            const auto d = rhs(spec, {x, y[0], y[1], y[2]});
            return ode::State<3>{d.dR, d.dV, d.dPi};
        };
        auto obs = [&](const ode::Step<3>& st) {
            bsteps.push_back(st);
            return true;
        };
        const auto res = ode::integrate<3>(fb, b0.xi, ode::State<3>{b0.R, b0.V, b0.Pi}, tr[first].xi,
                                           ode_options(opt), obs);
        if (res.status != ode::Status::Completed)
            bsteps.clear();
    }
    // Backward solution at x; steps run towards decreasing xi.
    auto back_at = [&](double x) {
        auto it = std::partition_point(bsteps.begin(), bsteps.end(), [x](const ode::Step<3>& st) { return st.x1 > x; });
        if (it == bsteps.end())
            --it;
        const auto y = it->at(x);
        return SimilarityState{x, y[0], y[1], y[2]};
    };
    std::vector<SimilarityState> back;
    if (!bsteps.empty()) {
        const auto e = back_at(tr[m].xi);
        match_error = std::max({std::abs(e.R - tr[m].R) / std::abs(tr[m].R),
                                std::abs(e.V - tr[m].V) / (std::abs(tr[m].V) + 1e-300),
                                std::abs(e.Pi - tr[m].Pi) / (std::abs(tr[m].Pi) + 1e-300)});
        back.push_back({bsteps.front().x0, bsteps.front().y0[0], bsteps.front().y0[1], bsteps.front().y0[2]});
        for (const auto& st : bsteps) {
            if (!(st.x0 > tr[m].xi))
                break;
            for (int j = 1; j < opt.dense_samples; ++j) {
                const double x = st.x0 + (st.x1 - st.x0) * j / opt.dense_samples;
                if (x > tr[m].xi)
                    back.push_back(back_at(x));
            }
            if (st.x1 > tr[m].xi)
                back.push_back({st.x1, st.y1[0], st.y1[1], st.y1[2]});
        }
        std::reverse(back.begin(), back.end());
    }
    {
        const SimilarityState* lo = nullptr;
        for (const auto& s : back)
            if (s.xi < xs - near)
                lo = &s;
        if (!lo)
            for (const auto& s : tr)
                if (s.xi < xs - near)
                    lo = &s;
        if (lo)
            curv_lo = curvature_from(*lo);
        for (const auto& s : tail.trajectory)
            if (s.xi > xs + near) {
                curv_hi = curvature_from(s);
                break;
            }
    }
    // Second-order correction of the two states placed on the crossing line.
    auto bend = [&](SimilarityState& s, const std::array<double, 3>& c) {
        const double d2 = 0.5 * (s.xi - xs) * (s.xi - xs);
        s.R += c[0] * d2;
        s.V += c[1] * d2;
        s.Pi += c[2] * d2;
    };
    if (!back.empty())
        bend(back.back(), curv_lo);
    if (!tail.trajectory.empty())
        bend(tail.trajectory.front(), curv_hi);
    const double xi_match = back.empty() ? xs * (1.0 - opt.h_jump) : tr[m].xi;
    const double l0 = std::log(tr[first].xi), lm = std::log(tr[m].xi);
    for (std::size_t i = 0; i < tr.size() && tr[i].xi <= xi_match; ++i) {
        if (i == 0 && spec.kind == ProblemKind::Cavity) {
            push(tr[0], to_arr(rhs(spec, tr[1])));
        } else if (!back.empty() && i > first) {
            const double u = (std::log(tr[i].xi) - l0) / (lm - l0);
            const double wgt = u * u * (3.0 - 2.0 * u), dw = 6.0 * u * (1.0 - u) / ((lm - l0) * tr[i].xi);
            const auto b = back_at(tr[i].xi);
            const SimilarityState s{tr[i].xi, tr[i].R + wgt * (b.R - tr[i].R), tr[i].V + wgt * (b.V - tr[i].V),
                                    tr[i].Pi + wgt * (b.Pi - tr[i].Pi)};
            const auto df = slope_at(tr[i]), db = slope_at(b);
            const double diff[3] = {b.R - tr[i].R, b.V - tr[i].V, b.Pi - tr[i].Pi};
            std::array<double, 3> d{};
            for (int j = 0; j < 3; ++j)
                d[j] = df[j] + wgt * (db[j] - df[j]) + dw * diff[j];
            push(s, d);
        } else {
            push(tr[i], slope_at(tr[i]));
        }
    }
    for (const auto& s : back)
        push(s, slope_at(s));
    push(z, slope);
    for (const auto& s : tail.trajectory)
        push(s, slope_at(s));

    // Boundedness over the last decade.
    const double xe = prof.xi.back();
    std::array<double, 3> ref{}, peak{};
    for (std::size_t i = 0; i < prof.xi.size(); ++i) {
        if (prof.xi[i] < xe / 10.0)
            continue;
        const double v[3] = {prof.R[i], prof.V[i], prof.Pi[i]};
        for (int c = 0; c < 3; ++c) {
            if (!std::isfinite(v[c]))
                throw CrossingFailure("profile is not finite on the last decade");
            if (ref[c] == 0.0)
                ref[c] = std::abs(v[c]);
            peak[c] = std::max(peak[c], std::abs(v[c]));
        }
    }
    for (int c = 0; c < 3; ++c)
        if (peak[c] > 10.0 * ref[c] + 1e-300 && peak[c] > 1e-12)
            throw CrossingFailure("profile grows without bound on the last decade");

    prof.build();
    if (info) {
        info->sonic_xi = xs;
        info->residual = std::abs(loc[best].N);
        info->residual_scale = n_scale;
        info->crossing_slopes = {roots.w1, roots.w2};
        info->match_error = match_error;
    }
    return prof;
}

EigenResult find_eigenvalue(const ProblemSpec& spec, double lo, double hi, const SolverOptions& opt)
{
    if (!(hi > lo))
        throw std::invalid_argument("bracket must satisfy lo < hi");
    if (!(opt.tol_alpha >= 1e-12))
        throw std::invalid_argument("tol_alpha must be at least 1e-12");
    const auto cs = classify_constraints(spec.eos, spec.kind);
    EigenResult res;
    res.free = opt.free.value_or(default_free_parameter(cs));
    SolverOptions so = opt;
    so.free = res.free;

    const auto rl = shoot(spec, lo, so);
    const auto rh = shoot(spec, hi, so);
    int s_lo = rl.numerator_sign, s_hi = rh.numerator_sign;
    double n_lo = rl.numerator, n_hi = rh.numerator;
    if (s_lo * s_hi >= 0)
        throw NoSignChange(fmt::format("numerator signs agree on [{:.17g}, {:.17g}] ({} / {})", lo, hi, s_lo, s_hi));

    int it = 0;
    while (hi - lo > opt.tol_alpha) {
        if (it >= opt.max_iterations)
            throw MaxIterations(fmt::format("bisection did not converge in {} iterations", it));
        ++it;
        const double w0 = hi - lo;
        auto step = [&](double c) {
            const auto r = shoot(spec, c, so);
            if (r.numerator_sign == 0) {
                lo = hi = c;
                return;
            }
            if (r.numerator_sign == s_lo) {
                lo = c;
                n_lo = r.numerator;
            } else {
                hi = c;
                n_hi = r.numerator;
            }
        };
        if (so.secant && n_lo != n_hi) {
            double c = lo - n_lo * (hi - lo) / (n_hi - n_lo);
            c = std::clamp(c, lo + 0.05 * w0, hi - 0.05 * w0);
            step(c);
            if (hi - lo > 0.5 * w0)
                step(0.5 * (lo + hi));
        } else {
            step(0.5 * (lo + hi));
        }
        if (hi == lo)
            break;
    }
    res.lo = lo;
    res.hi = hi;
    res.iterations = it;
    res.value = 0.5 * (lo + hi);
    res.exponents = resolve_exponents(cs, res.free, res.value, spec.exponents);
    const auto approach = shoot(spec, res.value, so);
    res.profile = cross_sonic(with_exponents(spec, res.exponents), approach, so, &res);
    return res;
}

std::vector<ScanEntry> scan(const ProblemSpec& spec, double lo, double hi, int points, const SolverOptions& opt)
{
    if (points < 2)
        throw std::invalid_argument("scan needs at least two points");
    std::vector<ScanEntry> out(points);
    auto run = [&](int i) {
        ScanEntry e;
        e.value = lo + (hi - lo) * i / (points - 1);
        try {
            auto r = shoot(spec, e.value, opt);
            e.stop_reason = r.stop_reason;
            e.numerator_sign = r.numerator_sign;
            e.numerator = r.numerator;
            e.stop_xi = r.stop_xi;
            e.detail = r.detail;
        } catch (const ConstraintError&) {
            throw;
        } catch (const std::exception& ex) {
            e.stop_reason = StopReason::DomainError;
            e.detail = ex.what();
        }
        out[i] = e;
    };
    unsigned nt = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min<unsigned>(nt, static_cast<unsigned>(points));
    if (nt <= 1) {
        for (int i = 0; i < points; ++i)
            run(i);
        return out;
    }
    std::vector<std::future<void>> jobs;
    for (unsigned t = 0; t < nt; ++t)
        jobs.push_back(std::async(std::launch::async, [&, t] {
            for (int i = static_cast<int>(t); i < points; i += static_cast<int>(nt))
                run(i);
        }));
    for (auto& j : jobs)
        j.get();
    return out;
}

SolveOutcome solve(const ProblemSpec& spec, double lo, double hi, const SolverOptions& opt)
{
    SolveOutcome out;
    out.scan = scan(spec, lo, hi, opt.scan_points, opt);
    for (std::size_t i = 0; i + 1 < out.scan.size(); ++i) {
        const auto& a = out.scan[i];
        const auto& b = out.scan[i + 1];
        if (a.numerator_sign * b.numerator_sign >= 0)
            continue;
        try {
            out.solutions.push_back(find_eigenvalue(spec, a.value, b.value, opt));
        } catch (const Error& e) {
            out.failures.push_back(fmt::format("[{:.17g}, {:.17g}]: {}", a.value, b.value, e.what()));
        }
    }
    return out;
}

} // namespace selfsim
