#include "selfsim/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfsim {

namespace {

std::vector<double> secants(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> s(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    return s;
}

// Exact monotonicity region of a cubic Hermite segment in scaled slopes.
bool hermite_monotone(double a, double b)
{
    if (a + b - 2.0 <= 0.0 || 2.0 * a + b - 3.0 <= 0.0 || a + 2.0 * b - 3.0 <= 0.0)
        return true;
    const double q = 2.0 * a + b - 3.0;
    return a - q * q / (3.0 * (a + b - 2.0)) >= 0.0;
}

} // namespace

void MonotoneCubic::check_nodes() const
{
    if (x_.size() != y_.size() || x_.size() < 2)
        throw std::invalid_argument("MonotoneCubic: need at least two nodes with matching values");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
        if (!(x_[i + 1] > x_[i]))
            throw std::invalid_argument("MonotoneCubic: nodes must be strictly increasing");
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y))
{
    check_nodes();
    const auto s = secants(x_, y_);
    const std::size_t n = x_.size();
    d_.assign(n, 0.0);
    if (n == 2) {
        d_[0] = d_[1] = s[0];
        limit(s);
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i - 1] * s[i] <= 0.0) {
            d_[i] = 0.0;
            continue;
        }
        // Weighted harmonic mean of the neighbouring secants.
        const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        const double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
        d_[i] = (w0 + w1) / (w0 / s[i - 1] + w1 / s[i]);
    }
    // One-sided three-point end slopes.
    auto end_slope = [](double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0)
            d = 0.0;
        else if (s0 * s1 <= 0.0 && std::abs(d) > std::abs(3.0 * s0))
            d = 3.0 * s0;
        return d;
    };
    d_[0] = end_slope(x_[1] - x_[0], x_[2] - x_[1], s[0], s[1]);
    d_[n - 1] = end_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3], s[n - 2], s[n - 3]);
    limit(s);
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(slopes))
{
    check_nodes();
    if (d_.size() != x_.size())
        throw std::invalid_argument("MonotoneCubic: slope count mismatch");
    limit(secants(x_, y_));
}

void MonotoneCubic::limit(const std::vector<double>& s)
{
    dl_.assign(d_.begin(), d_.end() - 1);
    dr_.assign(d_.begin() + 1, d_.end());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double& a0 = dl_[i];
        double& b0 = dr_[i];
        if (s[i] == 0.0) {
            // Flat data: same-signed end slopes would leave the level.
            if (a0 * b0 >= 0.0)
                a0 = b0 = 0.0;
            continue;
        }
        const double a = a0 / s[i], b = b0 / s[i];
        if (a < 0.0 || b < 0.0)
            continue;
        if (a * a + b * b > 9.0 && !hermite_monotone(a, b)) {
            const double tau = 3.0 / std::sqrt(a * a + b * b);
            a0 = tau * a * s[i];
            b0 = tau * b * s[i];
        }
    }
}

std::size_t MonotoneCubic::segment(double x) const
{
    if (!(x >= x_.front() && x <= x_.back()))
        throw std::out_of_range("MonotoneCubic: abscissa outside node range");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0)
        return 0;
    return std::min(i - 1, x_.size() - 2);
}

double MonotoneCubic::operator()(double x) const
{
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * dl_[i] + h01 * y_[i + 1] + h11 * h * dr_[i];
}

double MonotoneCubic::derivative(double x) const
{
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1;
    const double d01 = (-6 * t2 + 6 * t) / h, d11 = 3 * t2 - 2 * t;
    return d00 * y_[i] + d10 * dl_[i] + d01 * y_[i + 1] + d11 * dr_[i];
}

} // namespace selfsim
