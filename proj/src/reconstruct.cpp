#include "selfsim/reconstruct.hpp"

#include "selfsim/errors.hpp"

#include <cmath>

namespace selfsim {

std::string to_string(Region r)
{
    switch (r) {
    case Region::Vacuum: return "vacuum";
    case Region::Upstream: return "upstream";
    case Region::Disturbed: return "disturbed";
    case Region::Invalid: return "invalid";
    }
    return "?";
}

PhysicalSample to_physical(const SolutionProfile& profile, double r, double t)
{
    if (!(t < 0.0))
        throw DomainError("only pre-focus times t < 0 are supported");
    if (!(r >= 0.0) || !std::isfinite(r))
        throw DomainError("radius must be finite and non-negative");
    const auto& sp = profile.spec;
    const double a = sp.exponents.alpha, b = sp.exponents.beta;
    const double at = std::abs(t);
    PhysicalSample s;
    s.r = r;
    s.t = t;
    s.xi = r * std::pow(at, -(a + 1.0));
    if (s.xi < profile.xi_s) {
        if (sp.kind == ProblemKind::Cavity) {
            s.region = Region::Vacuum;
        } else {
            s.region = Region::Upstream;
            s.rho = sp.rho0;
            s.p = sp.eos.p0();
        }
        return s;
    }
    const auto st = profile.state_at(s.xi);
    const double unit = sp.density_unit();
    s.region = Region::Disturbed;
    s.extended = profile.extended(s.xi);
    s.rho = std::pow(at, b) * st.R * unit;
    s.u = std::pow(at, a) * st.V;
    s.p = sp.eos.p0() + std::pow(at, 2.0 * a + b) * st.Pi * unit;
    return s;
}

double jump_trajectory(const SolutionProfile& profile, double t)
{
    if (t == 0.0)
        throw DomainError("jump trajectory requested at the focusing time");
    return profile.xi_s * std::pow(std::abs(t), profile.spec.exponents.alpha + 1.0);
}

double jump_speed(const SolutionProfile& profile, double t)
{
    if (!(t < 0.0))
        throw DomainError("jump speed is defined for t < 0");
    const double a = profile.spec.exponents.alpha;
    return -(a + 1.0) * profile.xi_s * std::pow(std::abs(t), a);
}

std::vector<PhysicalSample> sample_grid(const SolutionProfile& profile, const std::vector<double>& r_grid,
                                        const std::vector<double>& t_list)
{
    std::vector<PhysicalSample> out;
    out.reserve(r_grid.size() * t_list.size());
    for (double t : t_list)
        for (double r : r_grid) {
            try {
                out.push_back(to_physical(profile, r, t));
            } catch (const std::exception&) {
                PhysicalSample s;
                s.r = r;
                s.t = t;
                s.region = Region::Invalid;
                s.rho = s.u = s.p = std::nan("");
                out.push_back(s);
            }
        }
    return out;
}

} // namespace selfsim
