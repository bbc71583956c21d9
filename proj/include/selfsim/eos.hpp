#pragma once

#include "selfsim/interp.hpp"
#include "selfsim/types.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace selfsim {

enum class EosFamily { GeneralF, PowerLawScaled, DensityScaled, IdealGamma };

std::string to_string(EosFamily family);
EosFamily eos_family_from_string(const std::string& s);

// Admissible densities. Open at both ends unless closed_hi/closed_lo is set.
struct DensityDomain {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool closed_lo = false;
    bool closed_hi = false;

    bool contains(double rho) const;
};

struct PseudoMieGruneisen {
    double s = 0, q = 0, rho_ref = 1;
    double c1 = 0, c2 = 0, c3 = 0, eta_max = 0;

    static PseudoMieGruneisen make(double s, double q, double rho_ref);
    double f(double eta) const;
    double df(double eta) const;
};

struct FGrad {
    double f = 0;
    double d_dp = 0;  // partial with respect to p - p0 at fixed rho
    double d_rho = 0; // partial with respect to rho at fixed p
};

// Bulk-modulus model K_S = (p - p0) f. Immutable; copies share state.
class EosModel {
public:
    using Fn1 = std::function<double(double)>;
    using Fn2 = std::function<double(double, double)>; // (p - p0, rho)

    static EosModel ideal_gamma(double gamma, double p0 = 0.0);
    static EosModel pseudo_mie_gruneisen(double s, double q, double rho_ref = 1.0);
    static EosModel density_scaled(Fn1 f, DensityDomain domain, Fn1 df = {}, double p0 = 0.0);
    static EosModel tabulated(std::vector<double> rho, std::vector<double> f, double p0 = 0.0);
    // f = g(z) with z = (p - p0) rho^-lambda.
    static EosModel power_law_scaled(double lambda, Fn1 g, DensityDomain domain = {}, Fn1 dg = {}, double p0 = 0.0);
    static EosModel general(Fn2 f, DensityDomain domain = {}, double p0 = 0.0);

    EosFamily family() const;
    double p0() const;
    double gamma() const;
    double lambda() const;
    // Reference density: rho_ref for pseudo-MG, 1 otherwise.
    double rho_ref() const;
    const std::optional<PseudoMieGruneisen>& pseudo_mg() const;
    const std::optional<MonotoneCubic>& table() const;
    const DensityDomain& domain() const;
    bool in_domain(double rho) const;
    // Largest admissible density (compression limit) or +inf.
    double max_density() const;
    bool depends_on_pressure() const;

    // f at excess pressure dp = p - p0. Throws DomainError outside the domain.
    double f_excess(double dp, double rho) const;
    FGrad f_grad(double dp, double rho) const;

    std::string describe() const;

private:
    struct Impl;
    explicit EosModel(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

double eval_f(const EosModel& model, double p, double rho);
double sound_speed_sq(const EosModel& model, double p, double rho);
double bulk_modulus(const EosModel& model, double p, double rho);

// beta rho dK/drho + (2 alpha + beta)(p - p0) dK/dp - (2 alpha + beta) K
double invariance_residual(const EosModel& model, double alpha, double beta, double p, double rho,
                           double h_fd = 1e-6);

struct InvarianceEstimate {
    double residual = 0;
    double fd_error = 0; // truncation (step-doubling) plus round-off estimate
};
InvarianceEstimate invariance_residual_estimate(const EosModel& model, double alpha, double beta, double p,
                                                double rho, double h_fd = 1e-6);

// ca * alpha + cb * beta = 0
struct LinearRelation {
    double ca = 0, cb = 0;
    std::string text;

    double eval(const Exponents& e) const { return ca * e.alpha + cb * e.beta; }
};

struct ConstraintSet {
    ProblemKind kind = ProblemKind::Cavity;
    std::vector<LinearRelation> relations;
    int free_dims = 2;

    bool admits(const Exponents& e, double tol = 1e-12) const;
    std::string render() const;
};

ConstraintSet classify_constraints(const EosModel& model, ProblemKind kind);

// Particular solution of phi' + (f/rho) phi = 1/rho^2 that stays O(1/rho) as
// rho -> 0; e = p phi(rho). Density-only families with p0 = 0.
double energy_phi(const EosModel& model, double rho, double rtol = 1e-12);

} // namespace selfsim
