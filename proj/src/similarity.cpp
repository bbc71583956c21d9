#include "selfsim/similarity.hpp"

#include "selfsim/errors.hpp"

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <cmath>
#include <vector>

namespace selfsim {

double ProblemSpec::density_unit() const
{
    return kind == ProblemKind::Cavity ? eos.rho_ref() : rho0;
}

double ProblemSpec::jump_xi() const
{
    if (kind == ProblemKind::Cavity && unit_jump_speed) {
        if (!(exponents.alpha > -1.0))
            throw InvalidExponent("alpha <= -1 leaves the jump coordinate undefined");
        return 1.0 / (1.0 + exponents.alpha);
    }
    return xi_s;
}

void ProblemSpec::validate() const
{
    if (k != 1 && k != 2)
        throw std::invalid_argument("geometry index k must be 1 or 2");
    if (!(xi_s > 0.0))
        throw std::invalid_argument("xi_s must be positive");
    if (kind == ProblemKind::Shock) {
        if (!(rho0 > 0.0))
            throw std::invalid_argument("shock problems need rho0 > 0");
        if (exponents.beta != 0.0)
            throw ConstraintError("shock problems require beta = 0");
    }
}

double group_velocity(const ProblemSpec& spec, const SimilarityState& s)
{
    return (1.0 + spec.exponents.alpha) * s.xi + s.V;
}

double scaled_f(const ProblemSpec& spec, const SimilarityState& s)
{
    const double u = spec.density_unit();
    return spec.eos.f_excess(s.Pi * u, s.R * u);
}

double scaled_sound_speed_sq(const ProblemSpec& spec, const SimilarityState& s)
{
    return s.Pi * scaled_f(spec, s) / s.R;
}

namespace {

struct Local {
    double X, f, C2;
};

Local local(const ProblemSpec& spec, const SimilarityState& s)
{
    Local l;
    l.X = group_velocity(spec, s);
    l.f = scaled_f(spec, s);
    l.C2 = s.Pi * l.f / s.R;
    return l;
}

double numerator_impl(const ProblemSpec& spec, const SimilarityState& s, const Local& l)
{
    const double a = spec.exponents.alpha, b = spec.exponents.beta;
    return (b + 2.0 * a) * s.Pi - s.R * s.V * (a * l.X + spec.k * l.C2 / s.xi);
}

} // namespace

double numerator(const ProblemSpec& spec, const SimilarityState& s)
{
    return numerator_impl(spec, s, local(spec, s));
}

double sonic_discriminant(const ProblemSpec& spec, const SimilarityState& s)
{
    const auto l = local(spec, s);
    return l.X * l.X - l.C2;
}

Gradient numerator_gradient(const ProblemSpec& spec, const SimilarityState& s)
{
    const double a = spec.exponents.alpha, b = spec.exponents.beta, k = spec.k;
    const double u = spec.density_unit();
    const auto fg = spec.eos.f_grad(s.Pi * u, s.R * u);
    const double f = fg.f, fR = fg.d_rho * u, fP = fg.d_dp * u;
    const double X = group_velocity(spec, s);
    Gradient g;
    g.d_R = -a * s.V * X - k * s.V * s.Pi * fR / s.xi;
    g.d_V = -a * s.R * X - a * s.R * s.V - k * s.Pi * f / s.xi;
    g.d_Pi = (b + 2.0 * a) - k * s.V * (f + s.Pi * fP) / s.xi;
    g.d_xi = -a * s.R * s.V * (1.0 + a) + k * s.V * s.Pi * f / (s.xi * s.xi);
    return g;
}

Gradient discriminant_gradient(const ProblemSpec& spec, const SimilarityState& s)
{
    const double a = spec.exponents.alpha;
    const double u = spec.density_unit();
    const auto fg = spec.eos.f_grad(s.Pi * u, s.R * u);
    const double f = fg.f, fR = fg.d_rho * u, fP = fg.d_dp * u;
    const double X = group_velocity(spec, s);
    Gradient g;
    g.d_R = -(s.Pi * fR / s.R - s.Pi * f / (s.R * s.R));
    g.d_V = 2.0 * X;
    g.d_Pi = -(f + s.Pi * fP) / s.R;
    g.d_xi = 2.0 * X * (1.0 + a);
    return g;
}

Derivs rhs(const ProblemSpec& spec, const SimilarityState& s)
{
    const auto l = local(spec, s);
    const double delta = l.X * l.X - l.C2;
    const double den = s.R * l.X * delta;
    if (!(std::abs(l.X * delta) > spec.singular_floor))
        throw SingularPoint(fmt::format("singular point at xi = {:.17g} (X = {:.3g}, X^2 - C^2 = {:.3g})", s.xi,
                                        l.X, delta));
    const double a = spec.exponents.alpha, b = spec.exponents.beta;
    const double w = numerator_impl(spec, s, l) / den;
    Derivs d;
    d.dR = w * s.R + (b - spec.k * s.V / s.xi) * s.R / l.X;
    d.dV = -w * l.X;
    d.dPi = w * s.R * l.X * l.X + a * s.R * s.V;
    return d;
}

std::array<double, 4> rhs_desingularized(const ProblemSpec& spec, const SimilarityState& s)
{
    const auto l = local(spec, s);
    const double a = spec.exponents.alpha, b = spec.exponents.beta;
    const double delta = l.X * l.X - l.C2;
    const double N = numerator_impl(spec, s, l);
    const double D = s.R * l.X * delta;
    return {D, N * s.R + (b - spec.k * s.V / s.xi) * s.R * s.R * delta, -N * l.X,
            N * s.R * l.X * l.X + a * s.R * s.V * D};
}

JumpState jump_init_cavity(const ProblemSpec& spec)
{
    if (!(spec.exponents.alpha > -1.0))
        throw InvalidExponent("alpha <= -1 leaves the jump coordinate undefined");
    JumpState js;
    js.xi_s = spec.jump_xi();
    js.Vs = -(1.0 + spec.exponents.alpha) * js.xi_s;
    js.pre = {0.0, 0.0, 0.0};
    js.post = {spec.surface_density, js.Vs, 0.0};
    return js;
}

namespace {

// Scaled energy closure: E = Pi * phi_s(R).
double phi_scaled(const ProblemSpec& spec, double R)
{
    const double u = spec.density_unit();
    return u * energy_phi(spec.eos, R * u);
}

} // namespace

JumpState jump_init_shock(const ProblemSpec& spec)
{
    const double a = spec.exponents.alpha;
    if (!(a > -1.0))
        throw InvalidExponent("alpha <= -1 gives a non-converging jump");
    JumpState js;
    js.xi_s = spec.jump_xi();
    js.Vs = -(1.0 + a) * js.xi_s;
    const double R0 = spec.rho0 / spec.density_unit();
    js.pre = {R0, 0.0, 0.0};

    // With eta = R1/R0: V1 = Vs(1 - 1/eta), Pi1 = R0 Vs^2 (1 - 1/eta), and the
    // energy relation reduces to R0 phi_s(eta R0) = (1 - 1/eta)/2.
    const double cap = spec.eos.max_density() / (spec.rho0);
    auto h = [&](double eta) { return R0 * phi_scaled(spec, eta * R0) - 0.5 * (1.0 - 1.0 / eta); };

    std::vector<double> trial;
    if (std::isfinite(cap)) {
        if (!(cap > 1.0))
            throw NoRoot("EOS compression limit does not exceed the upstream density");
        for (int i = 1; i < 64; ++i)
            trial.push_back(1.0 + (cap - 1.0) * i / 64.0);
        for (int j = 7; j <= 44; ++j)
            trial.push_back(1.0 + (cap - 1.0) * (1.0 - std::ldexp(1.0, -j)));
    } else {
        for (int j = 0; j <= 40; ++j)
            trial.push_back(1.0 + 0.01 * std::ldexp(1.0, j));
    }
    double lo = 1.0 + 1e-12, h_lo = h(lo);
    if (!(h_lo > 0.0))
        throw NoRoot("energy relation has no physical compression root");
    double eta = 0.0;
    bool found = false;
    for (double x : trial) {
        if (!(x > lo))
            continue;
        double hx;
        try {
            hx = h(x);
        } catch (const DomainError&) {
            break;
        }
        if (hx == 0.0) {
            eta = x;
            found = true;
            break;
        }
        if (hx < 0.0) {
            boost::uintmax_t it = 200;
            auto r = boost::math::tools::toms748_solve(h, lo, x, h_lo, hx,
                                                       boost::math::tools::eps_tolerance<double>(52), it);
            eta = 0.5 * (r.first + r.second);
            found = true;
            break;
        }
        lo = x;
        h_lo = hx;
    }
    if (!found)
        throw NoRoot("no compression ratio satisfies the strong-shock relations");

    const double Vs = js.Vs;
    const double V1 = Vs * (1.0 - 1.0 / eta);
    const double Pi1 = R0 * Vs * V1;
    const double R1 = eta * R0;
    js.post = {R1, V1, Pi1};

    SimilarityState s{js.xi_s, R1, V1, Pi1};
    const double X1 = group_velocity(spec, s);
    const double C1 = std::sqrt(scaled_sound_speed_sq(spec, s));
    if (!(std::abs(X1) < C1))
        throw EntropyViolation(fmt::format("post-jump flow not subsonic: |X1| = {:.6g}, C1 = {:.6g}", X1, C1));
    return js;
}

std::array<double, 3> shock_jump_residuals(const ProblemSpec& spec, const JumpState& js)
{
    const double R0 = js.pre[0], Vs = js.Vs;
    const double R1 = js.post[0], V1 = js.post[1], Pi1 = js.post[2];
    const double E1 = Pi1 * phi_scaled(spec, R1);
    auto rel = [](double lhs, double rhs) {
        const double sc = std::abs(lhs) + std::abs(rhs);
        return sc > 0.0 ? std::abs(lhs - rhs) / sc : 0.0;
    };
    return {rel(R1 * (Vs - V1), R0 * Vs), rel(R0 * Vs * V1, Pi1), rel(R0 * Vs * (E1 + 0.5 * V1 * V1), Pi1 * V1)};
}

double ConservationResiduals::max_relative() const
{
    double m = 0.0;
    for (int i = 0; i < 3; ++i)
        if (scale[i] > 0.0)
            m = std::max(m, std::abs(value[i]) / scale[i]);
    return m;
}

ConservationResiduals conservation_residuals(const ProblemSpec& spec, const SimilarityState& s, const Derivs& d)
{
    const double a = spec.exponents.alpha, b = spec.exponents.beta, k = spec.k;
    const auto l = local(spec, s);
    const double X = l.X, C2 = l.C2;
    const double dX = 1.0 + a + d.dV;
    ConservationResiduals out;

    // (R X)' = ((1+a)(1+k) + b - kX/xi) R
    {
        const double t1 = d.dR * X, t2 = s.R * dX;
        const double c = ((1.0 + a) * (1.0 + k) + b - k * X / s.xi) * s.R;
        out.value[0] = t1 + t2 - c;
        out.scale[0] = std::abs(t1) + std::abs(t2) + std::abs(c);
    }
    // (R X^2 + Pi)' = (2 + k + (3+k)a + b - kX/xi - a(1+a) xi/X) R X
    {
        const double t1 = d.dR * X * X, t2 = 2.0 * s.R * X * dX, t3 = d.dPi;
        const double g = 2.0 + k + (3.0 + k) * a + b;
        const double c1 = g * s.R * X, c2 = k * X / s.xi * s.R * X, c3 = a * (1.0 + a) * s.xi * s.R;
        out.value[1] = t1 + t2 + t3 - (c1 - c2 - c3);
        out.scale[1] = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(c1) + std::abs(c2) + std::abs(c3);
    }
    // R' C^2 - Pi' = b R C^2 / X - (b + 2a) Pi / X
    {
        const double t1 = d.dR * C2, t2 = d.dPi;
        const double c1 = b * s.R * C2 / X, c2 = (b + 2.0 * a) * s.Pi / X;
        out.value[2] = t1 - t2 - (c1 - c2);
        out.scale[2] = std::abs(t1) + std::abs(t2) + std::abs(c1) + std::abs(c2);
    }
    return out;
}

double entropy_indicator(const ProblemSpec& spec, const SimilarityState& s, const Derivs& d)
{
    return d.dR * scaled_sound_speed_sq(spec, s) - d.dPi;
}

} // namespace selfsim
