#pragma once

#include "selfsim/eos.hpp"
#include "selfsim/profile.hpp"
#include "selfsim/similarity.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace selfsim {

enum class StopReason { SonicApproach, StepUnderflow, DomainError, ReachedXiMax };
enum class IntegrationMode { Direct, Desingularized };

std::string to_string(StopReason r);
StopReason stop_reason_from_string(const std::string& s);
std::string to_string(IntegrationMode m);
IntegrationMode integration_mode_from_string(const std::string& s);

struct SolverOptions {
    double rtol = 1e-12;
    double atol = 1e-15;
    double delta_stop = 1e-8;   // |X^2 - C^2| threshold relative to the local C^2 scale
    double eps = 1e-6;          // cavity start offset xi_s (1 + eps)
    double h_jump = 1e-5;       // sonic restart offset xi* (1 + h_jump)
    double xi_max_factor = 1e4; // xi_max = factor * xi_s
    double tol_alpha = 1e-10;
    double tol_N = 1e-6;        // accepted |N| at the sonic point relative to max |N|
    double approach_tol = 1e-3; // closest-approach threshold for attempting a crossing
    IntegrationMode mode = IntegrationMode::Direct;
    std::optional<FreeParameter> free;
    int max_iterations = 200;
    int scan_points = 20;
    bool secant = false;
    std::size_t max_steps = 400000;
    int dense_samples = 1;      // trajectory samples per accepted step
    double h_max_rel = 0.01;    // step cap relative to xi in direct mode
    unsigned threads = 0; // 0: hardware concurrency
};

struct ShootReport {
    Exponents exponents;
    double xi_s = 0;
    double stop_xi = 0;
    StopReason stop_reason = StopReason::ReachedXiMax;
    int numerator_sign = 0;
    double numerator = 0;
    double discriminant = 0;
    std::vector<SimilarityState> trajectory;
    std::string detail;
};

struct EigenResult {
    double value = 0; // converged free parameter
    FreeParameter free = FreeParameter::Alpha;
    Exponents exponents;
    double lo = 0, hi = 0;
    int iterations = 0;
    double sonic_xi = 0;
    double residual = 0;       // |N| at the detected sonic point
    double residual_scale = 0; // max |N| along the approach trajectory
    std::array<double, 2> crossing_slopes{}; // roots w of the L'Hopital quadratic
    double match_error = 0; // forward/backward mismatch where the near-sonic stretch is rebuilt
    SolutionProfile profile;
};

struct ScanEntry {
    double value = 0;
    StopReason stop_reason = StopReason::DomainError;
    int numerator_sign = 0;
    double numerator = 0;
    double stop_xi = 0;
    std::string detail;
};

struct SolveOutcome {
    std::vector<ScanEntry> scan;
    std::vector<EigenResult> solutions;
    std::vector<std::string> failures; // one line per sign change that did not converge
};

FreeParameter default_free_parameter(const ConstraintSet& cs);
// Substitutes the free parameter into the constraint relations. The other
// exponent is taken from base when the constraints leave it free.
Exponents resolve_exponents(const ConstraintSet& cs, FreeParameter free, double value, const Exponents& base);

ProblemSpec with_exponents(const ProblemSpec& spec, const Exponents& e);

ShootReport shoot(const ProblemSpec& spec, double free_param_value, const SolverOptions& opt = {});
// Integrates from an explicit start state with spec.exponents as given.
ShootReport shoot_from(const ProblemSpec& spec, const SimilarityState& start, double xi_max,
                       const SolverOptions& opt = {});
// Start state used by shoot for the given exponents.
SimilarityState initial_state(const ProblemSpec& spec, const SolverOptions& opt = {});

EigenResult find_eigenvalue(const ProblemSpec& spec, double lo, double hi, const SolverOptions& opt = {});

SolutionProfile cross_sonic(const ProblemSpec& spec, const ShootReport& approach, const SolverOptions& opt,
                            EigenResult* info = nullptr);

std::vector<ScanEntry> scan(const ProblemSpec& spec, double lo, double hi, int points,
                            const SolverOptions& opt = {});

// Scans the bracket and refines every sign change.
SolveOutcome solve(const ProblemSpec& spec, double lo, double hi, const SolverOptions& opt = {});

} // namespace selfsim
