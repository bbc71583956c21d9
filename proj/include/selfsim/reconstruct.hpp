#pragma once

#include "selfsim/profile.hpp"

#include <string>
#include <vector>

namespace selfsim {

enum class Region { Vacuum, Upstream, Disturbed, Invalid };

std::string to_string(Region r);

struct PhysicalSample {
    double r = 0, t = 0;
    double rho = 0, u = 0, p = 0;
    double xi = 0;
    Region region = Region::Invalid;
    bool extended = false; // beyond the last computed sample (far-field law)
};

// rho = |t|^beta R, u = |t|^alpha V, p - p0 = |t|^(2 alpha + beta) Pi at
// xi = r |t|^-(alpha+1). Only t < 0 is supported.
PhysicalSample to_physical(const SolutionProfile& profile, double r, double t);
double jump_trajectory(const SolutionProfile& profile, double t);
double jump_speed(const SolutionProfile& profile, double t);
// Row-major over (t, r). Failures become Region::Invalid rows.
std::vector<PhysicalSample> sample_grid(const SolutionProfile& profile, const std::vector<double>& r_grid,
                                        const std::vector<double>& t_list);

} // namespace selfsim
