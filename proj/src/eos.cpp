#include "selfsim/eos.hpp"

#include "selfsim/errors.hpp"
#include "selfsim/ode.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfsim {

std::string to_string(ProblemKind kind)
{
    return kind == ProblemKind::Cavity ? "cavity" : "shock";
}

ProblemKind problem_kind_from_string(const std::string& s)
{
    if (s == "cavity")
        return ProblemKind::Cavity;
    if (s == "shock")
        return ProblemKind::Shock;
    throw std::invalid_argument("unknown problem kind '" + s + "'");
}

std::string to_string(EosFamily family)
{
    switch (family) {
    case EosFamily::GeneralF: return "general";
    case EosFamily::PowerLawScaled: return "power_law";
    case EosFamily::DensityScaled: return "density";
    case EosFamily::IdealGamma: return "ideal";
    }
    return "?";
}

EosFamily eos_family_from_string(const std::string& s)
{
    if (s == "general")
        return EosFamily::GeneralF;
    if (s == "power_law")
        return EosFamily::PowerLawScaled;
    if (s == "density" || s == "pseudo_mg" || s == "tabulated")
        return EosFamily::DensityScaled;
    if (s == "ideal")
        return EosFamily::IdealGamma;
    throw std::invalid_argument("unknown EOS family '" + s + "'");
}

bool DensityDomain::contains(double rho) const
{
    if (!std::isfinite(rho))
        return false;
    const bool lo_ok = closed_lo ? rho >= lo : rho > lo;
    const bool hi_ok = closed_hi ? rho <= hi : rho < hi;
    return lo_ok && hi_ok;
}

PseudoMieGruneisen PseudoMieGruneisen::make(double s, double q, double rho_ref)
{
    if (!(s > 1.0))
        throw std::invalid_argument("pseudo-MG: s must exceed 1");
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("pseudo-MG: q must lie in (0, 1]");
    if (!(rho_ref > 0.0))
        throw std::invalid_argument("pseudo-MG: rho_ref must be positive");
    PseudoMieGruneisen m;
    m.s = s;
    m.q = q;
    m.rho_ref = rho_ref;
    m.c1 = (1.0 - 4.0 * s) / (4.0 * q * (q - 2.0) * (s - 1.0));
    m.c2 = q * (4.0 * (s - 1.0) - q * (2.0 * s - 1.0));
    m.c3 = (q + s - 1.0) / (s - 1.0);
    m.eta_max = s / (s - 1.0);
    return m;
}

double PseudoMieGruneisen::f(double eta) const
{
    const double d = eta - c3;
    return c1 * (c2 + d * d / (eta_max - eta));
}

double PseudoMieGruneisen::df(double eta) const
{
    const double d = eta - c3, g = eta_max - eta;
    return c1 * (2.0 * d / g + d * d / (g * g));
}

struct EosModel::Impl {
    EosFamily family = EosFamily::IdealGamma;
    double p0 = 0.0;
    double gamma = 0.0;
    double lambda = 0.0;
    DensityDomain domain;
    std::optional<PseudoMieGruneisen> pmg;
    std::optional<MonotoneCubic> table;
    Fn1 f1, df1; // density families: f(rho); power law: g(z)
    Fn2 f2;      // general
};

EosModel::EosModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

EosModel EosModel::ideal_gamma(double gamma, double p0)
{
    if (!(gamma > 1.0))
        throw std::invalid_argument("ideal gas: gamma must exceed 1");
    auto m = std::make_shared<Impl>();
    m->family = EosFamily::IdealGamma;
    m->gamma = gamma;
    m->p0 = p0;
    return EosModel(m);
}

EosModel EosModel::pseudo_mie_gruneisen(double s, double q, double rho_ref)
{
    auto m = std::make_shared<Impl>();
    m->family = EosFamily::DensityScaled;
    m->pmg = PseudoMieGruneisen::make(s, q, rho_ref);
    m->domain = DensityDomain{0.0, m->pmg->eta_max * rho_ref, false, false};
    return EosModel(m);
}

EosModel EosModel::density_scaled(Fn1 f, DensityDomain domain, Fn1 df, double p0)
{
    if (!f)
        throw std::invalid_argument("density-scaled EOS needs f(rho)");
    auto m = std::make_shared<Impl>();
    m->family = EosFamily::DensityScaled;
    m->f1 = std::move(f);
    m->df1 = std::move(df);
    m->domain = domain;
    m->p0 = p0;
    return EosModel(m);
}

EosModel EosModel::tabulated(std::vector<double> rho, std::vector<double> f, double p0)
{
    for (double v : f)
        if (!(v > 0.0))
            throw std::invalid_argument("tabulated EOS: f values must be positive");
    auto m = std::make_shared<Impl>();
    m->family = EosFamily::DensityScaled;
    m->table = MonotoneCubic(std::move(rho), std::move(f));
    if (!(m->table->x_min() > 0.0))
        throw std::invalid_argument("tabulated EOS: densities must be positive");
    m->domain = DensityDomain{m->table->x_min(), m->table->x_max(), true, true};
    m->p0 = p0;
    return EosModel(m);
}

EosModel EosModel::power_law_scaled(double lambda, Fn1 g, DensityDomain domain, Fn1 dg, double p0)
{
    if (!g)
        throw std::invalid_argument("power-law EOS needs g(z)");
    auto m = std::make_shared<Impl>();
    m->family = EosFamily::PowerLawScaled;
    m->lambda = lambda;
    m->f1 = std::move(g);
    m->df1 = std::move(dg);
    m->domain = domain;
    m->p0 = p0;
    return EosModel(m);
}

EosModel EosModel::general(Fn2 f, DensityDomain domain, double p0)
{
    if (!f)
        throw std::invalid_argument("general EOS needs f(p, rho)");
    auto m = std::make_shared<Impl>();
    m->family = EosFamily::GeneralF;
    m->f2 = std::move(f);
    m->domain = domain;
    m->p0 = p0;
    return EosModel(m);
}

EosFamily EosModel::family() const { return impl_->family; }
double EosModel::p0() const { return impl_->p0; }
double EosModel::lambda() const { return impl_->lambda; }
const std::optional<PseudoMieGruneisen>& EosModel::pseudo_mg() const { return impl_->pmg; }
const std::optional<MonotoneCubic>& EosModel::table() const { return impl_->table; }
const DensityDomain& EosModel::domain() const { return impl_->domain; }
bool EosModel::in_domain(double rho) const { return impl_->domain.contains(rho); }
double EosModel::max_density() const { return impl_->domain.hi; }

double EosModel::gamma() const
{
    if (impl_->family != EosFamily::IdealGamma)
        throw UnsupportedFamily("gamma requested from a non-ideal EOS");
    return impl_->gamma;
}

double EosModel::rho_ref() const
{
    return impl_->pmg ? impl_->pmg->rho_ref : 1.0;
}

bool EosModel::depends_on_pressure() const
{
    return impl_->family == EosFamily::GeneralF || impl_->family == EosFamily::PowerLawScaled;
}

namespace {

[[noreturn]] void throw_domain(double rho)
{
    throw DomainError(fmt::format("density {:.17g} outside the EOS validity domain", rho));
}

double checked(double v, double rho)
{
    if (!std::isfinite(v) || !(v > 0.0))
        throw DomainError(fmt::format("f not finite and positive at density {:.17g}", rho));
    return v;
}

} // namespace

double EosModel::f_excess(double dp, double rho) const
{
    const Impl& m = *impl_;
    if (!m.domain.contains(rho))
        throw_domain(rho);
    switch (m.family) {
    case EosFamily::IdealGamma:
        return m.gamma;
    case EosFamily::DensityScaled:
        if (m.pmg)
            return checked(m.pmg->f(rho / m.pmg->rho_ref), rho);
        if (m.table)
            return checked((*m.table)(rho), rho);
        return checked(m.f1(rho), rho);
    case EosFamily::PowerLawScaled:
        if (dp < 0.0)
            throw DomainError("power-law EOS evaluated below the reference pressure");
        return checked(m.f1(dp * std::pow(rho, -m.lambda)), rho);
    case EosFamily::GeneralF:
        if (dp < 0.0)
            throw DomainError("general EOS evaluated below the reference pressure");
        return checked(m.f2(dp, rho), rho);
    }
    return 0.0;
}

FGrad EosModel::f_grad(double dp, double rho) const
{
    const Impl& m = *impl_;
    FGrad g;
    g.f = f_excess(dp, rho);
    auto fd_rho = [&](auto&& fn) {
        double h = 1e-6 * rho;
        if (m.domain.contains(rho - h) && m.domain.contains(rho + h))
            return (fn(rho + h) - fn(rho - h)) / (2.0 * h);
        if (m.domain.contains(rho + h))
            return (fn(rho + h) - fn(rho)) / h;
        return (fn(rho) - fn(rho - h)) / h;
    };
    switch (m.family) {
    case EosFamily::IdealGamma:
        break;
    case EosFamily::DensityScaled:
        if (m.pmg)
            g.d_rho = m.pmg->df(rho / m.pmg->rho_ref) / m.pmg->rho_ref;
        else if (m.table)
            g.d_rho = m.table->derivative(rho);
        else if (m.df1)
            g.d_rho = m.df1(rho);
        else
            g.d_rho = fd_rho([&](double r) { return m.f1(r); });
        break;
    case EosFamily::PowerLawScaled: {
        const double z = dp * std::pow(rho, -m.lambda);
        double dg;
        if (m.df1) {
            dg = m.df1(z);
        } else {
            const double h = 1e-6 * std::max(std::abs(z), 1e-300);
            dg = z > h ? (m.f1(z + h) - m.f1(z - h)) / (2.0 * h) : (m.f1(z + h) - m.f1(z)) / h;
        }
        g.d_dp = dg * std::pow(rho, -m.lambda);
        g.d_rho = -m.lambda * z / rho * dg;
        break;
    }
    case EosFamily::GeneralF: {
        const double hp = 1e-6 * std::max(std::abs(dp), 1e-300);
        g.d_dp = dp > hp ? (m.f2(dp + hp, rho) - m.f2(dp - hp, rho)) / (2.0 * hp)
                         : (m.f2(dp + hp, rho) - m.f2(dp, rho)) / hp;
        g.d_rho = fd_rho([&](double r) { return m.f2(dp, r); });
        break;
    }
    }
    return g;
}

std::string EosModel::describe() const
{
    const Impl& m = *impl_;
    switch (m.family) {
    case EosFamily::IdealGamma:
        return fmt::format("ideal(gamma={:.17g}, p0={:.17g})", m.gamma, m.p0);
    case EosFamily::DensityScaled:
        if (m.pmg)
            return fmt::format("pseudo_mg(s={:.17g}, q={:.17g}, rho_ref={:.17g})", m.pmg->s, m.pmg->q,
                               m.pmg->rho_ref);
        if (m.table)
            return fmt::format("tabulated({} nodes, rho in [{:.17g}, {:.17g}])", m.table->size(),
                               m.table->x_min(), m.table->x_max());
        return "density(user f)";
    case EosFamily::PowerLawScaled:
        return fmt::format("power_law(lambda={:.17g}, p0={:.17g})", m.lambda, m.p0);
    case EosFamily::GeneralF:
        return fmt::format("general(p0={:.17g})", m.p0);
    }
    return "?";
}

double eval_f(const EosModel& model, double p, double rho)
{
    if (!(p >= model.p0()))
        throw DomainError("pressure below the reference pressure p0");
    return model.f_excess(p - model.p0(), rho);
}

double sound_speed_sq(const EosModel& model, double p, double rho)
{
    return (p - model.p0()) * eval_f(model, p, rho) / rho;
}

double bulk_modulus(const EosModel& model, double p, double rho)
{
    return (p - model.p0()) * eval_f(model, p, rho);
}

namespace {

struct FdParts {
    double dk_drho, dk_dp, k, kmax;
};

FdParts fd_parts(const EosModel& model, double p, double rho, double h)
{
    const double dp = p - model.p0();
    const double hr = h * rho;
    const double hp = h * std::max({std::abs(p), std::abs(dp), 1e-300});
    if (!model.in_domain(rho - hr) || !model.in_domain(rho + hr))
        throw DomainError("finite-difference stencil leaves the density domain");
    if (model.depends_on_pressure() && dp - hp < 0.0)
        throw DomainError("finite-difference stencil leaves the pressure domain");
    auto K = [&](double pe, double r) { return pe * model.f_excess(pe, r); };
    FdParts o;
    const double kp = K(dp + hp, rho), km = K(dp - hp, rho);
    const double kr = K(dp, rho + hr), kl = K(dp, rho - hr);
    o.k = K(dp, rho);
    o.dk_drho = (kr - kl) / (2.0 * hr);
    o.dk_dp = (kp - km) / (2.0 * hp);
    o.kmax = std::max({std::abs(kp), std::abs(km), std::abs(kr), std::abs(kl), std::abs(o.k)});
    return o;
}

double combine(const FdParts& d, double alpha, double beta, double p, double rho, double p0)
{
    const double g = 2.0 * alpha + beta;
    return beta * rho * d.dk_drho + g * (p - p0) * d.dk_dp - g * d.k;
}

} // namespace

double invariance_residual(const EosModel& model, double alpha, double beta, double p, double rho, double h_fd)
{
    return combine(fd_parts(model, p, rho, h_fd), alpha, beta, p, rho, model.p0());
}

InvarianceEstimate invariance_residual_estimate(const EosModel& model, double alpha, double beta, double p,
                                                double rho, double h_fd)
{
    const auto d1 = fd_parts(model, p, rho, h_fd);
    const auto d2 = fd_parts(model, p, rho, 2.0 * h_fd);
    const double p0 = model.p0();
    const double g = 2.0 * alpha + beta;
    const double eps = std::numeric_limits<double>::epsilon();
    const double dp = std::abs(p - p0);
    const double hr = h_fd * rho, hp = h_fd * std::max({std::abs(p), dp, 1e-300});
    const double trunc_r = std::abs(d2.dk_drho - d1.dk_drho) / 3.0;
    const double trunc_p = std::abs(d2.dk_dp - d1.dk_dp) / 3.0;
    const double round_r = 2.0 * eps * d1.kmax / hr;
    const double round_p = 2.0 * eps * d1.kmax / hp;
    InvarianceEstimate out;
    out.residual = combine(d1, alpha, beta, p, rho, p0);
    out.fd_error = std::abs(beta) * rho * (trunc_r + round_r) + std::abs(g) * dp * (trunc_p + round_p) +
                   std::abs(g) * eps * std::abs(d1.k);
    return out;
}

bool ConstraintSet::admits(const Exponents& e, double tol) const
{
    for (const auto& r : relations)
        if (std::abs(r.eval(e)) > tol)
            return false;
    return true;
}

std::string ConstraintSet::render() const
{
    std::string s = "{";
    for (std::size_t i = 0; i < relations.size(); ++i) {
        if (i)
            s += ", ";
        s += relations[i].text;
    }
    return s + "}";
}

ConstraintSet classify_constraints(const EosModel& model, ProblemKind kind)
{
    ConstraintSet cs;
    cs.kind = kind;
    const LinearRelation alpha0{1.0, 0.0, "alpha = 0"};
    const LinearRelation beta0{0.0, 1.0, "beta = 0"};
    switch (model.family()) {
    case EosFamily::GeneralF:
        cs.relations = {alpha0, beta0};
        break;
    case EosFamily::PowerLawScaled:
        if (kind == ProblemKind::Shock)
            cs.relations = {alpha0, beta0};
        else
            cs.relations = {LinearRelation{2.0, 1.0 - model.lambda(),
                                           fmt::format("beta + 2*alpha = {:.17g}*beta", model.lambda())}};
        break;
    case EosFamily::DensityScaled:
        cs.relations = {beta0};
        break;
    case EosFamily::IdealGamma:
        if (kind == ProblemKind::Shock)
            cs.relations = {beta0};
        break;
    }
    // Rank of the relation matrix.
    int rank = 0;
    if (!cs.relations.empty()) {
        rank = 1;
        bool any = false;
        for (const auto& r : cs.relations)
            any = any || r.ca != 0.0 || r.cb != 0.0;
        if (!any)
            rank = 0;
        for (std::size_t i = 0; i < cs.relations.size() && rank < 2; ++i)
            for (std::size_t j = i + 1; j < cs.relations.size(); ++j) {
                const auto& a = cs.relations[i];
                const auto& b = cs.relations[j];
                if (a.ca * b.cb - a.cb * b.ca != 0.0)
                    rank = 2;
            }
    }
    cs.free_dims = 2 - rank;
    return cs;
}

double energy_phi(const EosModel& model, double rho, double rtol)
{
    if (model.family() != EosFamily::DensityScaled && model.family() != EosFamily::IdealGamma)
        throw UnsupportedFamily("energy closure is defined only for density-only bulk moduli");
    if (model.p0() != 0.0)
        throw UnsupportedFamily("energy closure requires p0 = 0");
    if (!model.in_domain(rho))
        throw_domain(rho);
    if (model.family() == EosFamily::IdealGamma)
        rtol = std::min(rtol, 1e-12);

    // phi(rho) = (1/rho) int_0^inf exp(u - Y(u)) du, Y(u) = int_0^u f(rho e^-v) dv.
    // Below the lower edge of the domain f is continued as a constant, which
    // gives the tail exp(u - Y)/(f - 1) in closed form.
    const double lo = model.domain().lo;
    const double u_end = lo > 0.0 ? std::log(rho / lo) : 740.0;
    auto f_at = [&](double u) {
        double r = rho * std::exp(-u);
        if (lo > 0.0)
            r = std::max(r, lo);
        return model.f_excess(0.0, r);
    };
    auto rhs = [&](double u, const ode::State<2>& y) {
        return ode::State<2>{f_at(u), std::exp(u - y[0])};
    };
    ode::Options opt;
    opt.rtol = rtol;
    opt.atol = 1e-300;
    opt.h0 = 1e-3;
    double u_last = 0.0;
    ode::State<2> y_last{0.0, 0.0};
    auto tail_small = [&](double u, const ode::State<2>& y) {
        const double fe = f_at(u);
        if (!(fe > 1.0))
            return false;
        return std::exp(u - y[0]) / (fe - 1.0) < 1e-3 * rtol * y[1];
    };
    auto res = ode::integrate<2>(
        rhs, 0.0, y_last, u_end, opt, [&](const ode::Step<2>& st) {
            u_last = st.x1;
            y_last = st.y1;
            return !tail_small(st.x1, st.y1);
        });
    if (res.status == ode::Status::DomainFailure || res.status == ode::Status::StepUnderflow ||
        res.status == ode::Status::MaxSteps)
        throw DomainError("energy closure quadrature failed: " + res.failure);
    if (u_end <= 0.0) {
        u_last = 0.0;
        y_last = {0.0, 0.0};
    }
    const double fe = f_at(u_last);
    if (!(fe > 1.0))
        throw DomainError("energy closure integral diverges (f <= 1 at low density)");
    const double integral = y_last[1] + std::exp(u_last - y_last[0]) / (fe - 1.0);
    return integral / rho;
}

} // namespace selfsim
