#pragma once

#include "selfsim/interp.hpp"
#include "selfsim/similarity.hpp"

#include <vector>

namespace selfsim {

// Sampled solution curve on [xi_s, xi_end]. Interpolation is monotone cubic
// Hermite in log(xi); beyond the last sample the fields follow the far-field
// power laws R ~ xi^(beta/(1+alpha)), V ~ xi^(alpha/(1+alpha)),
// Pi ~ xi^((2 alpha+beta)/(1+alpha)) with coefficients fitted on the last decade.
struct SolutionProfile {
    ProblemSpec spec; // exponents hold the converged values
    double xi_s = 0;
    double sonic_xi = 0; // 0 when the profile has no sonic point
    std::vector<double> xi, R, V, Pi;
    std::vector<double> dR, dV, dPi; // d/dxi at samples; empty means estimate

    void build();
    bool built() const { return !iR_.empty(); }

    double xi_end() const { return xi.back(); }
    // State at xi >= xi_s; beyond xi_end the far-field extension is used.
    SimilarityState state_at(double x) const;
    Derivs derivs_at(double x) const;
    bool extended(double x) const { return x > xi.back(); }
    std::array<double, 3> far_field_coefficients() const { return far_; }

private:
    std::array<double, 3> far_exponents() const;
    MonotoneCubic iR_, iV_, iPi_;
    std::array<double, 3> far_{}; // coefficients of the power laws
};

} // namespace selfsim
