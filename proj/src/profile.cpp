#include "selfsim/profile.hpp"

#include <cmath>
#include <stdexcept>

namespace selfsim {

std::array<double, 3> SolutionProfile::far_exponents() const
{
    const double a = spec.exponents.alpha, b = spec.exponents.beta;
    return {b / (1.0 + a), a / (1.0 + a), (2.0 * a + b) / (1.0 + a)};
}

void SolutionProfile::build()
{
    const std::size_t n = xi.size();
    if (n < 2 || R.size() != n || V.size() != n || Pi.size() != n)
        throw std::invalid_argument("profile needs at least two samples of equal length");
    const bool have_slopes = dR.size() == n && dV.size() == n && dPi.size() == n;
    std::vector<double> lx(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xi[i] > 0.0))
            throw std::invalid_argument("profile abscissae must be positive");
        lx[i] = std::log(xi[i]);
    }
    if (have_slopes) {
        std::vector<double> sR(n), sV(n), sP(n);
        for (std::size_t i = 0; i < n; ++i) {
            sR[i] = xi[i] * dR[i];
            sV[i] = xi[i] * dV[i];
            sP[i] = xi[i] * dPi[i];
        }
        iR_ = MonotoneCubic(lx, R, sR);
        iV_ = MonotoneCubic(lx, V, sV);
        iPi_ = MonotoneCubic(lx, Pi, sP);
    } else {
        iR_ = MonotoneCubic(lx, R);
        iV_ = MonotoneCubic(lx, V);
        iPi_ = MonotoneCubic(lx, Pi);
    }
    if (xi.front() != xi_s)
        xi_s = xi.front();
    // Far-field power laws matched at the last sample.
    const auto e = far_exponents();
    const double xe = xi.back();
    far_ = {R.back() * std::pow(xe, -e[0]), V.back() * std::pow(xe, -e[1]), Pi.back() * std::pow(xe, -e[2])};
}

SimilarityState SolutionProfile::state_at(double x) const
{
    if (!built())
        throw std::logic_error("profile interpolant not built");
    if (!(x >= xi.front()))
        throw std::out_of_range("similarity coordinate below the jump");
    if (x > xi.back()) {
        const auto e = far_exponents();
        return {x, far_[0] * std::pow(x, e[0]), far_[1] * std::pow(x, e[1]), far_[2] * std::pow(x, e[2])};
    }
    const double lx = std::log(x);
    return {x, iR_(lx), iV_(lx), iPi_(lx)};
}

Derivs SolutionProfile::derivs_at(double x) const
{
    if (!built())
        throw std::logic_error("profile interpolant not built");
    if (!(x >= xi.front()))
        throw std::out_of_range("similarity coordinate below the jump");
    if (x > xi.back()) {
        const auto e = far_exponents();
        return {far_[0] * e[0] * std::pow(x, e[0] - 1.0), far_[1] * e[1] * std::pow(x, e[1] - 1.0),
                far_[2] * e[2] * std::pow(x, e[2] - 1.0)};
    }
    const double lx = std::log(x);
    return {iR_.derivative(lx) / x, iV_.derivative(lx) / x, iPi_.derivative(lx) / x};
}

} // namespace selfsim
