#include "qspde/coefficient.hpp"

#include "qspde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qspde {

CoefficientFunction::CoefficientFunction(ScalarFunction phi, ScalarFunction dphi, ScalarFunction d2phi,
                                         double c_minus, double c_plus, std::string description)
    : phi_(std::move(phi)),
      dphi_(std::move(dphi)),
      d2phi_(std::move(d2phi)),
      c_minus_(c_minus),
      c_plus_(c_plus),
      description_(std::move(description)) {
    if (!phi_ || !dphi_ || !d2phi_) throw std::invalid_argument("coefficient: all three functions are required");
    if (!(c_minus_ > 0.0 && c_minus_ <= c_plus_ && std::isfinite(c_plus_))) {
        throw std::invalid_argument("coefficient: need 0 < c_minus <= c_plus < inf");
    }
}

CoefficientFunction CoefficientFunction::linear(double slope, double offset) {
    if (!(slope > 0.0)) throw std::invalid_argument("coefficient: linear slope must be positive");
    std::ostringstream desc;
    desc << "linear(slope=" << format_double(slope) << ", offset=" << format_double(offset) << ")";
    return CoefficientFunction([slope, offset](double v) { return slope * v + offset; },
                               [slope](double) { return slope; },
                               [](double) { return 0.0; },
                               slope, slope, desc.str());
}

CoefficientFunction CoefficientFunction::sine(double amplitude, double offset) {
    if (!(std::abs(amplitude) < 1.0)) throw std::invalid_argument("coefficient: sine amplitude must satisfy |a| < 1");
    std::ostringstream desc;
    desc << "sine(amplitude=" << format_double(amplitude) << ", offset=" << format_double(offset) << ")";
    return CoefficientFunction([amplitude, offset](double v) { return v + amplitude * std::sin(v) + offset; },
                               [amplitude](double v) { return 1.0 + amplitude * std::cos(v); },
                               [amplitude](double v) { return -amplitude * std::sin(v); },
                               1.0 - std::abs(amplitude), 1.0 + std::abs(amplitude), desc.str());
}

double CoefficientFunction::inverse(double y, std::optional<double> guess) const {
    if (!std::isfinite(y)) throw NumericalError("coefficient inverse: non-finite argument");
    const double d = y - phi_(0.0);
    if (d == 0.0) return 0.0;

    // phi(v) - phi(0) lies between c_minus v and c_plus v.
    double lo = std::min(d / c_plus_, d / c_minus_);
    double hi = std::max(d / c_plus_, d / c_minus_);
    const double pad = 1e-12 * (std::abs(lo) + std::abs(hi)) + 1e-300;
    lo -= pad;
    hi += pad;
    if (!(phi_(lo) <= y && phi_(hi) >= y)) {
        std::ostringstream msg;
        msg << "coefficient inverse: ellipticity bracket [" << format_double(lo) << ", " << format_double(hi)
            << "] does not contain phi^{-1}(" << format_double(y) << ") for " << description_;
        throw NumericalError(msg.str());
    }

    double v = guess.value_or(d / dphi_(0.0));
    if (!(v > lo && v < hi)) v = 0.5 * (lo + hi);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < 200; ++it) {
        const double g = phi_(v) - y;
        if (g == 0.0) return v;
        if (g < 0.0) {
            lo = v;
        } else {
            hi = v;
        }
        double next = v - g / dphi_(v);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - v) <= 2.0 * eps * std::abs(v) || hi - lo <= 2.0 * eps * std::max(std::abs(lo), std::abs(hi))) {
            return next;
        }
        v = next;
    }
    throw NumericalError("coefficient inverse: no convergence for y = " + format_double(y));
}

GridFunction CoefficientFunction::apply(const GridFunction& v) const {
    return v.map([this](double x) { return phi_(x); });
}

GridFunction CoefficientFunction::apply_derivative(const GridFunction& v) const {
    return v.map([this](double x) { return dphi_(x); });
}

GridFunction CoefficientFunction::apply_inverse(const GridFunction& y) const {
    return y.map([this](double x) { return inverse(x); });
}

GridFunction CoefficientFunction::apply_inverse(const GridFunction& y, const GridFunction& guess) const {
    require_same_grid(y, guess, "apply_inverse");
    std::vector<double> out(y.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = inverse(y[j], guess[j]);
    return GridFunction(std::move(out));
}

bool CoefficientFunction::check_ellipticity(double radius, std::size_t samples) const {
    if (samples < 2) samples = 2;
    for (std::size_t i = 0; i < samples; ++i) {
        const double v = -radius + 2.0 * radius * static_cast<double>(i) / static_cast<double>(samples - 1);
        const double dv = dphi_(v);
        if (dv < c_minus_ * (1.0 - 1e-12) || dv > c_plus_ * (1.0 + 1e-12)) return false;
    }
    return true;
}

}  // namespace qspde
