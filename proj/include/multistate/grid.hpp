#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "multistate/errors.hpp"
#include "multistate/intensity.hpp"

namespace multistate {

struct SolverConfig {
    double step = 1.0 / 52.0;  // years
    double max_age = 90.0;     // contracts run off at this age

    // Number of steps from entry_age to max_age; the span must sit on the
    // grid (rounding guard 1e-6).
    int steps_from(double entry_age) const {
        if (!(step > 0)) throw InvalidParams("solver step must be positive");
        if (!(max_age > entry_age)) throw InvalidParams("max_age must exceed entry age");
        const double span = max_age - entry_age;
        const long long n = std::llround(span / step);
        if (n < 1 || std::abs(static_cast<double>(n) * step - span) > 1e-6)
            throw InvalidParams("(max_age - entry_age) is not a multiple of the step");
        return static_cast<int>(n);
    }
};

// Occupancy probabilities on the fixed step grid, one column per reachable
// state. probs[c][k] is the probability of being in states[c] at time k*step
// after entry.
struct OccupancyGrid {
    Model model = Model::m0;
    double entry_age = 0.0;
    int start_state = 0;
    double step = 0.0;
    std::vector<int> states;
    std::vector<std::vector<double>> probs;

    int n_steps() const { return probs.empty() ? 0 : static_cast<int>(probs[0].size()) - 1; }
    double time_at(int k) const { return k * step; }

    int column_of(int state) const {
        for (std::size_t c = 0; c < states.size(); ++c)
            if (states[c] == state) return static_cast<int>(c);
        throw InvalidState("state " + std::to_string(state) + " not in grid");
    }

    const std::vector<double>& column(int state) const { return probs[column_of(state)]; }
    double prob(int state, int k) const { return probs[column_of(state)][k]; }

    double row_sum(int k) const {
        double sum = 0.0;
        for (const auto& col : probs) sum += col[k];
        return sum;
    }
};

// Occupancy probabilities conditional on entering `entry_state` at exact age
// entry_age (select notation [x]); duration-dependent hazards run on the
// duration clock starting at initial_duration.
struct SelectGrid {
    Model model = Model::m1;
    int entry_state = 1;
    double entry_age = 0.0;
    double initial_duration = 0.0;
    double step = 0.0;
    std::vector<int> states;
    std::vector<std::vector<double>> probs;

    int n_steps() const { return probs.empty() ? 0 : static_cast<int>(probs[0].size()) - 1; }
    double time_at(int k) const { return k * step; }

    int column_of(int state) const {
        for (std::size_t c = 0; c < states.size(); ++c)
            if (states[c] == state) return static_cast<int>(c);
        throw InvalidState("state " + std::to_string(state) + " not in select grid");
    }

    const std::vector<double>& column(int state) const { return probs[column_of(state)]; }
    double prob(int state, int k) const { return probs[column_of(state)][k]; }

    double row_sum(int k) const {
        double sum = 0.0;
        for (const auto& col : probs) sum += col[k];
        return sum;
    }
};

} // namespace multistate
