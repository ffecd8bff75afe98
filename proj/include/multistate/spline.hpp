#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "multistate/errors.hpp"

namespace multistate {

// Interpolating natural cubic spline (zero second derivative at the boundary
// knots). With two knots it degenerates to the straight line through them.
class NaturalCubicSpline {
  public:
    NaturalCubicSpline() = default;

    NaturalCubicSpline(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        if (n < 2 || ys_.size() != n)
            throw InsufficientKnots("spline needs at least 2 knots");
        for (std::size_t i = 1; i < n; ++i)
            if (!(xs_[i] > xs_[i - 1]))
                throw InvalidParams("spline knots must be strictly increasing");
        m_.assign(n, 0.0);
        if (n > 2) solve_second_derivatives();
    }

    double x_front() const { return xs_.front(); }
    double x_back() const { return xs_.back(); }

    // Evaluation inside [x_front, x_back]; callers clamp for constant
    // extrapolation.
    double value(double x) const {
        const std::size_t i = segment(x);
        const double dx = xs_[i + 1] - xs_[i];
        const double a = (xs_[i + 1] - x) / dx;
        const double b = 1.0 - a;
        return a * ys_[i] + b * ys_[i + 1] +
               ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * dx * dx / 6.0;
    }

    double derivative(double x) const {
        const std::size_t i = segment(x);
        const double dx = xs_[i + 1] - xs_[i];
        const double a = (xs_[i + 1] - x) / dx;
        const double b = 1.0 - a;
        return (ys_[i + 1] - ys_[i]) / dx +
               dx / 6.0 * ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]);
    }

    double second_derivative(double x) const {
        const std::size_t i = segment(x);
        const double dx = xs_[i + 1] - xs_[i];
        const double a = (xs_[i + 1] - x) / dx;
        return a * m_[i] + (1.0 - a) * m_[i + 1];
    }

  private:
    std::size_t segment(double x) const {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs_.begin());
        if (i == 0) return 0;
        if (i >= xs_.size()) return xs_.size() - 2;
        return i - 1;
    }

    // Tridiagonal system for the knot second derivatives, natural boundary
    // conditions m[0] = m[n-1] = 0 (Thomas algorithm).
    void solve_second_derivatives() {
        const std::size_t n = xs_.size();
        std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = xs_[i] - xs_[i - 1];
            const double hr = xs_[i + 1] - xs_[i];
            diag[i] = (hl + hr) / 3.0;
            upper[i] = hr / 6.0;
            rhs[i] = (ys_[i + 1] - ys_[i]) / hr - (ys_[i] - ys_[i - 1]) / hl;
        }
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double lower = (xs_[i] - xs_[i - 1]) / 6.0;
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
            if (i == 1) break;
        }
    }

    std::vector<double> xs_;
    std::vector<double> ys_;
    std::vector<double> m_;
};

} // namespace multistate
