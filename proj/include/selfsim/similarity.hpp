#pragma once

#include "selfsim/eos.hpp"
#include "selfsim/types.hpp"

#include <array>

namespace selfsim {

struct SimilarityState {
    double xi = 0, R = 0, V = 0, Pi = 0;
};

struct ProblemSpec {
    ProblemKind kind = ProblemKind::Cavity;
    int k = 2; // 1 cylindrical, 2 spherical
    EosModel eos = EosModel::ideal_gamma(1.4);
    Exponents exponents;
    double rho0 = 1.0;            // upstream density (shock)
    double xi_s = 1.0;            // jump coordinate when unit_jump_speed is false
    bool unit_jump_speed = false; // cavity: xi_s = 1/(1+alpha) so that V1 = -1
    double surface_density = 1.0; // cavity R1, in density units
    double singular_floor = 1e-300;

    // R is measured in units of rho_ref (cavity) or rho0 (shock).
    double density_unit() const;
    double jump_xi() const;
    void validate() const;
};

struct Derivs {
    double dR = 0, dV = 0, dPi = 0;
};

struct Gradient {
    double d_xi = 0, d_R = 0, d_V = 0, d_Pi = 0;
};

double group_velocity(const ProblemSpec& spec, const SimilarityState& s);
double scaled_f(const ProblemSpec& spec, const SimilarityState& s);
double scaled_sound_speed_sq(const ProblemSpec& spec, const SimilarityState& s);

double numerator(const ProblemSpec& spec, const SimilarityState& s);
double sonic_discriminant(const ProblemSpec& spec, const SimilarityState& s);
Gradient numerator_gradient(const ProblemSpec& spec, const SimilarityState& s);
Gradient discriminant_gradient(const ProblemSpec& spec, const SimilarityState& s);

Derivs rhs(const ProblemSpec& spec, const SimilarityState& s);

// Numerator-cleared system in the parameter tau with dxi/dtau = R X (X^2 - C^2).
// Order: (xi, R, V, Pi).
std::array<double, 4> rhs_desingularized(const ProblemSpec& spec, const SimilarityState& s);

struct JumpState {
    std::array<double, 3> pre{};  // (R0, V0, Pi0)
    std::array<double, 3> post{}; // (R1, V1, Pi1)
    double Vs = 0;
    double xi_s = 0;
};

JumpState jump_init_cavity(const ProblemSpec& spec);
JumpState jump_init_shock(const ProblemSpec& spec);

// Residuals of the three reduced strong-shock relations, each relative to the
// magnitude of its terms.
std::array<double, 3> shock_jump_residuals(const ProblemSpec& spec, const JumpState& js);

struct ConservationResiduals {
    std::array<double, 3> value{}; // mass flux, momentum flux, entropy
    std::array<double, 3> scale{}; // sum of term magnitudes

    double max_relative() const;
};

ConservationResiduals conservation_residuals(const ProblemSpec& spec, const SimilarityState& s, const Derivs& d);

// R' C^2 - Pi'
double entropy_indicator(const ProblemSpec& spec, const SimilarityState& s, const Derivs& d);

} // namespace selfsim
