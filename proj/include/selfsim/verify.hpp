#pragma once

#include "selfsim/profile.hpp"

#include <array>
#include <string>
#include <vector>

namespace selfsim {

struct PdeOptions {
    double h_t_rel = 1e-5;  // time step relative to |t_probe|
    double h_r_frac = 1e-3; // space step as a fraction of the local grid spacing
};

// Max over the grid of |residual| / (sum of term magnitudes) for the mass,
// momentum and energy equations. Throws GridError if a stencil straddles the jump.
std::array<double, 3> pde_residual(const SolutionProfile& profile, double t_probe, const std::vector<double>& r_grid,
                                   const PdeOptions& opt = {});

struct EntropyReport {
    bool ok = false;
    double margin = 0;   // min of C - |X| over the checked range
    double where = 0;    // xi of the minimum
    bool enforced = true; // false for cavities (reported only)
    std::string note;
};
EntropyReport entropy_condition(const SolutionProfile& profile);

struct IvtReport {
    bool ok = false;
    double delta_near = 0;
    double delta_far = 0;
    double last_negative_xi = 0;
    double first_positive_xi = 0;
    double sonic_xi = 0;
};
IvtReport ivt_check(const SolutionProfile& profile);

struct IndicatorReport {
    std::vector<double> xi, value; // R' C^2 - Pi'
    int positive = 0, negative = 0, zero = 0;
    bool single_signed() const { return positive == 0 || negative == 0; }
};
IndicatorReport entropy_indicator(const SolutionProfile& profile);

// Conservation-form residuals evaluated with interpolant derivatives
// at sample midpoints, max relative over the profile away from the sonic point.
std::array<double, 3> conservation_norms(const SolutionProfile& profile);

struct VerifyOptions {
    double t_probe = -1.0;
    int grid_points = 50;
    double pde_tol = 1e-5;
    double conservation_tol = 1e-6;
    PdeOptions pde;
};

struct VerificationReport {
    std::array<double, 3> pde_residual_norms{};
    EntropyReport entropy;
    IvtReport ivt;
    std::array<double, 3> conservation{};
    int indicator_positive = 0, indicator_negative = 0;
    std::vector<std::string> notes;
    bool passed = false;
};

// Log-spaced radii strictly inside the disturbed region at t_probe.
std::vector<double> interior_grid(const SolutionProfile& profile, double t_probe, int points);

VerificationReport verify_profile(const SolutionProfile& profile, const VerifyOptions& opt = {});

} // namespace selfsim
