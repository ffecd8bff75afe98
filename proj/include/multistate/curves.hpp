#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "multistate/errors.hpp"
#include "multistate/spline.hpp"

namespace multistate {

// Age-continuous transition intensity. Table-derived curves are natural cubic
// splines through (band midpoint, log rate) knots, evaluated as exp of the
// spline; outside the knot range the boundary log rate extends as a constant,
// so the curve stays continuous and strictly positive. A flat curve variant
// exists for constant (including zero) toy intensities.
class IntensityCurve {
  public:
    IntensityCurve() : flat_(true), flat_rate_(0.0) {}

    static IntensityCurve constant(double rate) {
        if (rate < 0) throw InvalidParams("intensity must be non-negative");
        IntensityCurve c;
        c.flat_ = true;
        c.flat_rate_ = rate;
        return c;
    }

    static IntensityCurve from_log_knots(std::vector<double> ages, std::vector<double> log_rates) {
        IntensityCurve c;
        c.flat_ = false;
        c.spline_ = NaturalCubicSpline(std::move(ages), std::move(log_rates));
        return c;
    }

    double operator()(double age) const {
        if (flat_) return flat_rate_;
        return std::exp(spline_.value(clamp_age(age)));
    }

    double log_rate(double age) const {
        if (flat_) return std::log(flat_rate_);
        return spline_.value(clamp_age(age));
    }

    // Second derivative of the log curve; zero in the extrapolation regions.
    double log_second_derivative(double age) const {
        if (flat_) return 0.0;
        if (age < spline_.x_front() || age > spline_.x_back()) return 0.0;
        return spline_.second_derivative(age);
    }

    bool is_flat() const { return flat_; }

  private:
    double clamp_age(double age) const {
        return std::clamp(age, spline_.x_front(), spline_.x_back());
    }

    bool flat_;
    double flat_rate_ = 0.0;
    NaturalCubicSpline spline_;
};

// Duration-dependent hazard: piecewise linear through tabulated
// (duration, rate) points starting at duration 0, constant tail_rate beyond
// the last point.
struct DurationHazard {
    std::vector<std::pair<double, double>> points;
    double tail_rate = 0.0;

    static DurationHazard constant(double rate) {
        if (rate < 0) throw InvalidParams("duration hazard must be non-negative");
        return DurationHazard{{{0.0, rate}}, rate};
    }

    void validate() const {
        if (points.empty()) throw InvalidParams("duration hazard has no points");
        if (points.front().first != 0.0)
            throw InvalidParams("duration hazard must start at duration 0");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].second < 0) throw InvalidParams("duration hazard rate < 0");
            if (i > 0 && !(points[i].first > points[i - 1].first))
                throw InvalidParams("duration hazard durations must be increasing");
        }
        if (tail_rate < 0) throw InvalidParams("duration hazard tail rate < 0");
    }

    double at(double z) const {
        if (z < 0) throw NegativeDuration("duration must be non-negative");
        if (z >= points.back().first) return tail_rate;
        auto it = std::upper_bound(points.begin(), points.end(), z,
                                   [](double v, const auto& p) { return v < p.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (z - lo.first) / (hi.first - lo.first);
        return lo.second + w * (hi.second - lo.second);
    }

    bool is_constant() const {
        for (const auto& [z, r] : points)
            if (r != tail_rate) return false;
        return true;
    }
};

} // namespace multistate
