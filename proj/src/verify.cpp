#include "selfsim/verify.hpp"

#include "selfsim/errors.hpp"
#include "selfsim/reconstruct.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace selfsim {

std::array<double, 3> pde_residual(const SolutionProfile& profile, double t_probe, const std::vector<double>& r_grid,
                                   const PdeOptions& opt)
{
    std::array<double, 3> norms{0.0, 0.0, 0.0};
    const auto& sp = profile.spec;
    const double k = sp.k;
    const double ht = opt.h_t_rel * std::abs(t_probe);
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        const double r = r_grid[i];
        double spacing;
        if (r_grid.size() > 1) {
            const double left = i > 0 ? r - r_grid[i - 1] : std::numeric_limits<double>::infinity();
            const double right = i + 1 < r_grid.size() ? r_grid[i + 1] - r : std::numeric_limits<double>::infinity();
            spacing = std::min(std::abs(left), std::abs(right));
        } else {
            spacing = 1e-2 * r;
        }
        const double hr = opt.h_r_frac * spacing;
        const auto c = to_physical(profile, r, t_probe);
        const auto rp = to_physical(profile, r + hr, t_probe);
        const auto rm = to_physical(profile, r - hr, t_probe);
        const auto tp = to_physical(profile, r, t_probe + ht);
        const auto tm = to_physical(profile, r, t_probe - ht);
        for (const auto* s : {&rp, &rm, &tp, &tm})
            if (s->region != c.region)
                throw GridError(fmt::format("finite-difference stencil at r = {:.17g} crosses the jump", r));
        const double rho_t = (tp.rho - tm.rho) / (2 * ht), rho_r = (rp.rho - rm.rho) / (2 * hr);
        const double u_t = (tp.u - tm.u) / (2 * ht), u_r = (rp.u - rm.u) / (2 * hr);
        const double p_t = (tp.p - tm.p) / (2 * ht), p_r = (rp.p - rm.p) / (2 * hr);
        if (c.region != Region::Disturbed)
            continue;
        const double div = u_r + k * c.u / r;
        const double K = bulk_modulus(sp.eos, c.p, c.rho);
        auto rel = [](double v, double scale) { return scale > 0.0 ? std::abs(v) / scale : 0.0; };
        const double m = rho_t + c.u * rho_r + c.rho * div;
        const double ms = std::abs(rho_t) + std::abs(c.u * rho_r) + std::abs(c.rho * u_r) + std::abs(c.rho * k * c.u / r);
        const double mo = u_t + c.u * u_r + p_r / c.rho;
        const double mos = std::abs(u_t) + std::abs(c.u * u_r) + std::abs(p_r / c.rho);
        const double en = p_t + c.u * p_r + K * div;
        const double ens = std::abs(p_t) + std::abs(c.u * p_r) + std::abs(K * u_r) + std::abs(K * k * c.u / r);
        norms[0] = std::max(norms[0], rel(m, ms));
        norms[1] = std::max(norms[1], rel(mo, mos));
        norms[2] = std::max(norms[2], rel(en, ens));
    }
    return norms;
}

namespace {

bool near_sonic(const SolutionProfile& p, double x)
{
    return p.sonic_xi > 0.0 && std::abs(x - p.sonic_xi) <= 1e-4 * p.sonic_xi;
}

} // namespace

EntropyReport entropy_condition(const SolutionProfile& profile)
{
    EntropyReport rep;
    const auto& sp = profile.spec;
    auto margin_at = [&](const SimilarityState& s) {
        return std::sqrt(std::max(0.0, scaled_sound_speed_sq(sp, s))) - std::abs(group_velocity(sp, s));
    };
    if (sp.kind == ProblemKind::Shock) {
        const SimilarityState s{profile.xi[0], profile.R[0], profile.V[0], profile.Pi[0]};
        rep.margin = margin_at(s);
        rep.where = s.xi;
        rep.ok = rep.margin > 0.0;
        rep.note = "checked at the jump; upstream sound speed is zero so the approach side is supersonic";
        return rep;
    }
    rep.enforced = false;
    rep.margin = std::numeric_limits<double>::infinity();
    const double upper = profile.sonic_xi > 0.0 ? profile.sonic_xi : profile.xi.back();
    for (std::size_t i = 1; i < profile.xi.size() && profile.xi[i] < upper; ++i) {
        const SimilarityState s{profile.xi[i], profile.R[i], profile.V[i], profile.Pi[i]};
        const double m = margin_at(s);
        if (m < rep.margin) {
            rep.margin = m;
            rep.where = s.xi;
        }
    }
    rep.ok = std::isfinite(rep.margin) && rep.margin > 0.0;
    rep.note = "checked on samples strictly between the cavity surface and the sonic point; reported only";
    return rep;
}

IvtReport ivt_check(const SolutionProfile& profile)
{
    IvtReport rep;
    const auto& sp = profile.spec;
    rep.sonic_xi = profile.sonic_xi;
    const std::size_t first = sp.kind == ProblemKind::Cavity ? 1 : 0;
    if (profile.xi.size() <= first)
        return rep;
    auto delta = [&](const SimilarityState& s) { return sonic_discriminant(sp, s); };
    rep.delta_near = delta({profile.xi[first], profile.R[first], profile.V[first], profile.Pi[first]});
    rep.delta_far = delta(profile.state_at(100.0 * profile.xi_s));
    bool found = false;
    for (std::size_t i = first; i + 1 < profile.xi.size(); ++i) {
        const double d0 = delta({profile.xi[i], profile.R[i], profile.V[i], profile.Pi[i]});
        const double d1 = delta({profile.xi[i + 1], profile.R[i + 1], profile.V[i + 1], profile.Pi[i + 1]});
        if (d0 < 0.0 && d1 >= 0.0) {
            rep.last_negative_xi = profile.xi[i];
            rep.first_positive_xi = profile.xi[i + 1];
            found = true;
            break;
        }
    }
    rep.ok = rep.delta_near < 0.0 && rep.delta_far > 0.0 && found && rep.sonic_xi >= rep.last_negative_xi &&
             rep.sonic_xi <= rep.first_positive_xi;
    return rep;
}

IndicatorReport entropy_indicator(const SolutionProfile& profile)
{
    IndicatorReport rep;
    const auto& sp = profile.spec;
    const bool have = profile.dR.size() == profile.xi.size();
    for (std::size_t i = 1; i < profile.xi.size(); ++i) {
        const double x = profile.xi[i];
        if (near_sonic(profile, x))
            continue;
        const SimilarityState s{x, profile.R[i], profile.V[i], profile.Pi[i]};
        const Derivs d = have ? Derivs{profile.dR[i], profile.dV[i], profile.dPi[i]} : profile.derivs_at(x);
        const double v = selfsim::entropy_indicator(sp, s, d);
        rep.xi.push_back(x);
        rep.value.push_back(v);
        // Values at round-off level relative to the terms count as zero.
        const double scale = std::abs(d.dR * scaled_sound_speed_sq(sp, s)) + std::abs(d.dPi);
        if (std::abs(v) <= 1e-12 * scale || v == 0.0)
            ++rep.zero;
        else if (v > 0.0)
            ++rep.positive;
        else
            ++rep.negative;
    }
    return rep;
}

std::array<double, 3> conservation_norms(const SolutionProfile& profile)
{
    std::array<double, 3> out{0.0, 0.0, 0.0};
    const auto& sp = profile.spec;
    for (std::size_t i = 1; i + 1 < profile.xi.size(); ++i) {
        const double x = std::sqrt(profile.xi[i] * profile.xi[i + 1]);
        if (near_sonic(profile, x))
            continue;
        const auto s = profile.state_at(x);
        const auto d = profile.derivs_at(x);
        ConservationResiduals c;
        try {
            c = conservation_residuals(sp, s, d);
        } catch (const Error&) {
            continue;
        }
        for (int j = 0; j < 3; ++j)
            if (c.scale[j] > 0.0)
                out[j] = std::max(out[j], std::abs(c.value[j]) / c.scale[j]);
    }
    return out;
}

std::vector<double> interior_grid(const SolutionProfile& profile, double t_probe, int points)
{
    std::vector<double> g;
    if (points <= 0)
        return g;
    const double a = profile.spec.exponents.alpha;
    const double lo = profile.xi_s * 1.01;
    const double hi = std::min(profile.xi.back(), 100.0 * profile.xi_s) * 0.99;
    const double scale = std::pow(std::abs(t_probe), a + 1.0);
    for (int i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.5 : static_cast<double>(i) / (points - 1);
        g.push_back(scale * lo * std::pow(hi / lo, f));
    }
    return g;
}

VerificationReport verify_profile(const SolutionProfile& profile, const VerifyOptions& opt)
{
    VerificationReport rep;
    bool pde_ok = false;
    try {
        rep.pde_residual_norms = pde_residual(profile, opt.t_probe, interior_grid(profile, opt.t_probe, opt.grid_points),
                                              opt.pde);
        pde_ok = *std::max_element(rep.pde_residual_norms.begin(), rep.pde_residual_norms.end()) < opt.pde_tol;
    } catch (const std::exception& e) {
        rep.notes.push_back(std::string("pde residual: ") + e.what());
    }
    rep.entropy = entropy_condition(profile);
    rep.ivt = ivt_check(profile);
    rep.conservation = conservation_norms(profile);
    const auto ind = entropy_indicator(profile);
    rep.indicator_positive = ind.positive;
    rep.indicator_negative = ind.negative;
    if (!ind.single_signed())
        rep.notes.push_back("entropy indicator changes sign");
    if (!rep.entropy.enforced && !rep.entropy.ok)
        rep.notes.push_back("cavity entropy condition not satisfied (reported only)");
    const bool cons_ok =
        *std::max_element(rep.conservation.begin(), rep.conservation.end()) < opt.conservation_tol;
    if (!pde_ok)
        rep.notes.push_back(fmt::format("pde residual above {:.3g}", opt.pde_tol));
    if (!cons_ok)
        rep.notes.push_back(fmt::format("conservation residual above {:.3g}", opt.conservation_tol));
    rep.passed = pde_ok && cons_ok && rep.ivt.ok && (rep.entropy.ok || !rep.entropy.enforced);
    return rep;
}

} // namespace selfsim
