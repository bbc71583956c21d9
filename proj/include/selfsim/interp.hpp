#pragma once

#include <cstddef>
#include <vector>

namespace selfsim {

// Piecewise cubic Hermite interpolant with Fritsch-Carlson slope limiting.
// Reproduces the nodes exactly; monotone data yields a monotone interpolant.
// Each segment keeps its own end slopes, so limiting one segment does not
// alter its neighbours (the derivative may jump at such a node).
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    // Node slopes supplied by the caller (e.g. exact ODE derivatives). They are
    // limited only on segments where the data is monotone.
    MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes);

    double operator()(double x) const;
    double derivative(double x) const;

    bool empty() const { return x_.empty(); }
    std::size_t size() const { return x_.size(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    // Node slopes before limiting.
    const std::vector<double>& slopes() const { return d_; }

private:
    std::size_t segment(double x) const;
    void check_nodes() const;
    void limit(const std::vector<double>& secant);

    std::vector<double> x_, y_, d_;
    std::vector<double> dl_, dr_; // per-segment slopes at the left and right ends
};

} // namespace selfsim
