#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "multistate/errors.hpp"
#include "multistate/grid.hpp"
#include "multistate/intensity.hpp"

namespace multistate {
namespace detail {

// Intensities sampled on the quarter-step grid age0 + m*h/4 (and duration
// z0 + m*h/4 for the metastasis hazards), m = 0..4n. RK4 stages on the main
// grid land on even quarters; the half-step select tracks inside the M1
// solver also touch odd quarters. Curves are evaluated at the exact stage
// ages, never frozen across a step.
struct QuarterSamples {
    double step = 0.0;
    std::vector<double> onset_obs;   // mu01
    std::vector<double> onset_unobs; // mu02 in M1/M2
    std::vector<double> other;       // other-cause death from every live state
    std::vector<double> bc_death;    // mu13 in M0, mu35 in M1/M2
    std::vector<double> mu13;        // duration hazard, observed
    std::vector<double> mu23;        // duration hazard, unobserved

    static QuarterSamples make(const IntensitySet& set, double age0, double z0, int n_steps,
                               double h) {
        QuarterSamples qs;
        qs.step = h;
        const int m_count = 4 * n_steps + 1;
        qs.onset_obs.resize(m_count);
        qs.onset_unobs.resize(m_count);
        qs.other.resize(m_count);
        qs.bc_death.resize(m_count);
        qs.mu13.resize(m_count);
        qs.mu23.resize(m_count);
        const double q = 0.25 * h;
        for (int m = 0; m < m_count; ++m) {
            const double age = age0 + m * q;
            const double z = z0 + m * q;
            qs.onset_obs[m] = set.mu01(age);
            qs.onset_unobs[m] = set.mu02(age);
            qs.other[m] = set.other(age);
            qs.bc_death[m] = set.bc_death(age);
            qs.mu13[m] = set.mu13(z);
            qs.mu23[m] = set.mu23(z);
        }
        return qs;
    }
};

// Post-integration guards: probabilities must stay inside [-1e-10, 1+1e-10]
// and rows must sum to 1 within 1e-6, otherwise the step was too large for
// the intensities. Negative drift is clamped to zero only after the checks.
inline void check_and_clamp(std::vector<std::vector<double>>& probs, const std::string& what) {
    const double kBound = 1e-10;
    const double kRowTol = 1e-6;
    if (probs.empty()) return;
    const std::size_t n = probs[0].size();
    for (std::size_t k = 0; k < n; ++k) {
        double sum = 0.0;
        for (const auto& col : probs) {
            const double p = col[k];
            if (p < -kBound || p > 1.0 + kBound)
                throw StepTooLarge(what + ": probability out of [0,1] at step " +
                                   std::to_string(k) + " (value " + std::to_string(p) + ")");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTol)
            throw StepTooLarge(what + ": row-sum drift " + std::to_string(sum - 1.0) +
                               " at step " + std::to_string(k));
    }
    for (auto& col : probs)
        for (auto& p : col)
            if (p < 0.0) p = 0.0;
}

// Illness-death block shared by the M0 start-0 system and the M1/M2
// pre-metastatic select sub-systems:
//   live'       = -live (ill + oth)
//   sick'       =  live ill - sick (oth + bc)
//   dead_other' =  live oth + sick oth
//   dead_bc'    =  sick bc
// `ill` is indexed from ill_base (an age offset for M0, a duration offset for
// selects); oth/bc from age_base. The visitor sees every grid node.
template <typename Visit>
void run_illness_death4(const std::vector<double>& ill, int ill_base,
                        const std::vector<double>& oth, const std::vector<double>& bc,
                        int age_base, int n_steps, double h, Visit&& visit) {
    std::array<double, 4> y{1.0, 0.0, 0.0, 0.0};
    visit(0, y);
    auto rhs = [&](int off, const std::array<double, 4>& s, std::array<double, 4>& d) {
        const double f_ill = s[0] * ill[ill_base + off];
        const double f_oth = s[0] * oth[age_base + off];
        const double g_oth = s[1] * oth[age_base + off];
        const double g_bc = s[1] * bc[age_base + off];
        d[0] = -(f_ill + f_oth);
        d[1] = f_ill - g_oth - g_bc;
        d[2] = f_oth + g_oth;
        d[3] = g_bc;
    };
    std::array<double, 4> k1, k2, k3, k4, tmp;
    for (int k = 0; k < n_steps; ++k) {
        const int base = 4 * k;
        rhs(base, y, k1);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(base + 2, tmp, k2);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(base + 2, tmp, k3);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(base + 4, tmp, k4);
        for (int i = 0; i < 4; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        visit(k + 1, y);
    }
}

// Single-exit-pair block for states with no onward live transitions: the M0
// start-1 system and the metastatic select sub-system.
//   live' = -live (oth + bc);  dead_other' = live oth;  dead_bc' = live bc
template <typename Visit>
void run_two_decrement3(const std::vector<double>& oth, const std::vector<double>& bc,
                        int age_base, int n_steps, double h, Visit&& visit) {
    std::array<double, 3> y{1.0, 0.0, 0.0};
    visit(0, y);
    auto rhs = [&](int off, const std::array<double, 3>& s, std::array<double, 3>& d) {
        const double f_oth = s[0] * oth[age_base + off];
        const double f_bc = s[0] * bc[age_base + off];
        d[0] = -(f_oth + f_bc);
        d[1] = f_oth;
        d[2] = f_bc;
    };
    std::array<double, 3> k1, k2, k3, k4, tmp;
    for (int k = 0; k < n_steps; ++k) {
        const int base = 4 * k;
        rhs(base, y, k1);
        for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(base + 2, tmp, k2);
        for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(base + 2, tmp, k3);
        for (int i = 0; i < 3; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(base + 4, tmp, k4);
        for (int i = 0; i < 3; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        visit(k + 1, y);
    }
}

// Scalar select survival live' = -live (ill + oth); enough for inner premium
// integrals that only weight the occupancy of the entered state.
template <typename Visit>
void run_select_survival(const std::vector<double>& ill, int ill_base,
                         const std::vector<double>& oth, int age_base, int n_steps, double h,
                         Visit&& visit) {
    double y = 1.0;
    visit(0, y);
    for (int k = 0; k < n_steps; ++k) {
        const int base = 4 * k;
        const double l0 = ill[ill_base + base] + oth[age_base + base];
        const double lm = ill[ill_base + base + 2] + oth[age_base + base + 2];
        const double l1 = ill[ill_base + base + 4] + oth[age_base + base + 4];
        const double k1 = -l0 * y;
        const double k2 = -lm * (y + 0.5 * h * k1);
        const double k3 = -lm * (y + 0.5 * h * k2);
        const double k4 = -l1 * (y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        visit(k + 1, y);
    }
}

} // namespace detail

// Four-state industry Markov model. start_state 0 returns p00..p03, start
// state 1 the decoupled p11, p12, p13 block.
inline OccupancyGrid solve_m0(const IntensitySet& set, double entry_age, const SolverConfig& cfg,
                              int start_state = 0) {
    if (set.model != Model::m0) throw InvalidVariant("solve_m0 needs an M0 intensity set");
    if (start_state != 0 && start_state != 1)
        throw InvalidState("M0 start state must be 0 or 1");
    const int n = cfg.steps_from(entry_age);
    auto qs = detail::QuarterSamples::make(set, entry_age, 0.0, n, cfg.step);

    OccupancyGrid grid;
    grid.model = Model::m0;
    grid.entry_age = entry_age;
    grid.start_state = start_state;
    grid.step = cfg.step;
    if (start_state == 0) {
        grid.states = {0, 1, 2, 3};
        grid.probs.assign(4, std::vector<double>(n + 1));
        detail::run_illness_death4(qs.onset_obs, 0, qs.other, qs.bc_death, 0, n, cfg.step,
                                   [&](int k, const std::array<double, 4>& y) {
                                       for (int i = 0; i < 4; ++i) grid.probs[i][k] = y[i];
                                   });
    } else {
        grid.states = {1, 2, 3};
        grid.probs.assign(3, std::vector<double>(n + 1));
        detail::run_two_decrement3(qs.other, qs.bc_death, 0, n, cfg.step,
                                   [&](int k, const std::array<double, 3>& y) {
                                       for (int i = 0; i < 3; ++i) grid.probs[i][k] = y[i];
                                   });
    }
    detail::check_and_clamp(grid.probs, "solve_m0");
    return grid;
}

// Select occupancy for M1/M2: probabilities conditional on entering state 1,
// 2 or 3 at exact age entry_age. Duration-dependent hazards run on the clock
// starting at initial_duration (0 for a fresh entry; e.g. 5 for a policy
// underwritten five years after diagnosis).
inline SelectGrid solve_select(const IntensitySet& set, int entry_state, double entry_age,
                               const SolverConfig& cfg, double initial_duration = 0.0) {
    if (set.model == Model::m0) throw InvalidVariant("solve_select needs an M1 or M2 set");
    if (entry_state != 1 && entry_state != 2 && entry_state != 3)
        throw InvalidState("select entry state must be 1, 2 or 3");
    if (initial_duration < 0) throw NegativeDuration("initial duration must be >= 0");
    const int n = cfg.steps_from(entry_age);
    auto qs = detail::QuarterSamples::make(set, entry_age, initial_duration, n, cfg.step);

    SelectGrid grid;
    grid.model = set.model;
    grid.entry_state = entry_state;
    grid.entry_age = entry_age;
    grid.initial_duration = initial_duration;
    grid.step = cfg.step;
    if (entry_state == 3) {
        grid.states = {3, 4, 5};
        grid.probs.assign(3, std::vector<double>(n + 1));
        detail::run_two_decrement3(qs.other, qs.bc_death, 0, n, cfg.step,
                                   [&](int k, const std::array<double, 3>& y) {
                                       for (int i = 0; i < 3; ++i) grid.probs[i][k] = y[i];
                                   });
    } else {
        const bool unobserved = entry_state == 2;
        grid.states = {entry_state, 3, 4, 5};
        grid.probs.assign(4, std::vector<double>(n + 1));
        detail::run_illness_death4(unobserved ? qs.mu23 : qs.mu13, 0, qs.other, qs.bc_death, 0,
                                   n, cfg.step, [&](int k, const std::array<double, 4>& y) {
                                       for (int i = 0; i < 4; ++i) grid.probs[i][k] = y[i];
                                   });
    }
    detail::check_and_clamp(grid.probs, "solve_select");
    return grid;
}

// Markov special case on the six-state space: constant metastasis hazards, so
// the Kolmogorov system closes without convolution terms.
inline OccupancyGrid solve_m2(const IntensitySet& set, double entry_age, const SolverConfig& cfg) {
    if (set.model != Model::m2) throw InvalidVariant("solve_m2 needs an M2 intensity set");
    const int n = cfg.steps_from(entry_age);
    auto qs = detail::QuarterSamples::make(set, entry_age, 0.0, n, cfg.step);
    const double m13 = set.mu13(0.0);
    const double m23 = set.mu23(0.0);

    OccupancyGrid grid;
    grid.model = Model::m2;
    grid.entry_age = entry_age;
    grid.start_state = 0;
    grid.step = cfg.step;
    grid.states = {0, 1, 2, 3, 4, 5};
    grid.probs.assign(6, std::vector<double>(n + 1));

    std::array<double, 6> y{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    auto record = [&](int k) {
        for (int i = 0; i < 6; ++i) grid.probs[i][k] = y[i];
    };
    record(0);
    auto rhs = [&](int off, const std::array<double, 6>& s, std::array<double, 6>& d) {
        const double oth = qs.other[off];
        const double bc = qs.bc_death[off];
        const double f01 = s[0] * qs.onset_obs[off];
        const double f02 = s[0] * qs.onset_unobs[off];
        const double f04 = s[0] * oth;
        const double f13 = s[1] * m13;
        const double f14 = s[1] * oth;
        const double f23 = s[2] * m23;
        const double f24 = s[2] * oth;
        const double f34 = s[3] * oth;
        const double f35 = s[3] * bc;
        d[0] = -(f01 + f02 + f04);
        d[1] = f01 - f13 - f14;
        d[2] = f02 - f23 - f24;
        d[3] = f13 + f23 - f34 - f35;
        d[4] = f04 + f14 + f24 + f34;
        d[5] = f35;
    };
    std::array<double, 6> k1, k2, k3, k4, tmp;
    const double h = cfg.step;
    for (int k = 0; k < n; ++k) {
        const int base = 4 * k;
        rhs(base, y, k1);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(base + 2, tmp, k2);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(base + 2, tmp, k3);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(base + 4, tmp, k4);
        for (int i = 0; i < 6; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        record(k + 1);
    }
    detail::check_and_clamp(grid.probs, "solve_m2");
    return grid;
}

// Semi-Markov model: the p00 equation is an ordinary ODE, while p01 and p02
// lose mass to state 3 through convolutions over past entry times (duration-
// dependent metastasis). The system is integrated directly with RK4; the
// convolution terms are evaluated with the trapezoidal rule on the shared
// grid, from per-entry select survivals advanced in lockstep at half steps.
// Because each convolution enters once as a sink (p01/p02) and once as a
// source (p03), row sums are conserved to rounding regardless of quadrature
// error in the terms themselves.
inline OccupancyGrid solve_m1(const IntensitySet& set, double entry_age, const SolverConfig& cfg) {
    if (set.model != Model::m1) throw InvalidVariant("solve_m1 needs an M1 intensity set");
    const int n = cfg.steps_from(entry_age);
    const double h = cfg.step;
    auto qs = detail::QuarterSamples::make(set, entry_age, 0.0, n, h);

    OccupancyGrid grid;
    grid.model = Model::m1;
    grid.entry_age = entry_age;
    grid.start_state = 0;
    grid.step = h;
    grid.states = {0, 1, 2, 3, 4, 5};
    grid.probs.assign(6, std::vector<double>(n + 1));

    // Select survival tracks, one per grid entry point: s1[j] is the
    // probability of still being in state 1 at the current grid time for an
    // entry at t_j (p11_{[x+t_j]}), s2 likewise for state 2. half/full hold
    // the mid-step and end-step values needed by the RK4 stages.
    std::vector<double> s1(n + 1), s2(n + 1), s1_half(n + 1), s2_half(n + 1), s1_full(n + 1),
        s2_full(n + 1);
    // Entry flow weights p00(t_j) mu0{1,2}(x+t_j) on the committed grid.
    std::vector<double> g1(n + 1), g2(n + 1);

    std::array<double, 6> y{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    auto record = [&](int k) {
        for (int i = 0; i < 6; ++i) grid.probs[i][k] = y[i];
    };
    record(0);
    s1[0] = s2[0] = 1.0;
    g1[0] = qs.onset_obs[0];
    g2[0] = qs.onset_unobs[0];

    const double mu13_at0 = qs.mu13[0];
    const double mu23_at0 = qs.mu23[0];

    // Trapezoid over entries 0..k of g[j] * track(j) * mu(duration), with the
    // duration measured to the stage time t_k + phi*h/2 (phi = 0, 1, 2).
    auto convolve = [&](int k, int phi, const std::vector<double>& g,
                        const std::vector<double>& track, const std::vector<double>& mu_dur) {
        double acc = 0.0;
        if (k >= 1) {
            for (int j = 0; j <= k; ++j) {
                const double w = (j == 0 || j == k) ? 0.5 : 1.0;
                acc += w * g[j] * track[j] * mu_dur[4 * (k - j) + 2 * phi];
            }
            if (phi == 1) acc += 0.25 * g[k] * track[k] * mu_dur[2];
            if (phi == 2) acc += 0.5 * g[k] * track[k] * mu_dur[4];
        } else {
            if (phi == 1) acc += 0.25 * g[0] * track[0] * mu_dur[2];
            if (phi == 2) acc += 0.5 * g[0] * track[0] * mu_dur[4];
        }
        return acc * h;
    };

    auto rhs = [&](int off, const std::array<double, 6>& s, double c1, double c2,
                   std::array<double, 6>& d) {
        const double oth = qs.other[off];
        const double bc = qs.bc_death[off];
        const double f01 = s[0] * qs.onset_obs[off];
        const double f02 = s[0] * qs.onset_unobs[off];
        const double f04 = s[0] * oth;
        const double f14 = s[1] * oth;
        const double f24 = s[2] * oth;
        const double f34 = s[3] * oth;
        const double f35 = s[3] * bc;
        d[0] = -(f01 + f02 + f04);
        d[1] = f01 - f14 - c1;
        d[2] = f02 - f24 - c2;
        d[3] = c1 + c2 - f34 - f35;
        d[4] = f04 + f14 + f24 + f34;
        d[5] = f35;
    };

    std::array<double, 6> k1, k2, k3, k4, tmp;
    for (int k = 0; k < n; ++k) {
        const int base = 4 * k;

        // Stage 1 convolutions use the tracks as committed at t_k.
        const double c1_0 = convolve(k, 0, g1, s1, qs.mu13);
        const double c2_0 = convolve(k, 0, g2, s2, qs.mu23);

        // Advance every track by two half steps, keeping the midpoint.
        {
            const double oth0 = qs.other[base], othq = qs.other[base + 1],
                         othm = qs.other[base + 2], oth3q = qs.other[base + 3],
                         oth1 = qs.other[base + 4];
            auto advance = [&](std::vector<double>& cur, std::vector<double>& half,
                               std::vector<double>& full, const std::vector<double>& mu_dur) {
                for (int j = 0; j <= k; ++j) {
                    const int dur = 4 * (k - j);
                    // Quarter-grid duration samples cover all five offsets.
                    const double m0 = mu_dur[dur], mq = mu_dur[dur + 1], mm = mu_dur[dur + 2],
                                 m3q = mu_dur[dur + 3], m1 = mu_dur[dur + 4];
                    double s = cur[j];
                    {
                        const double l0 = m0 + oth0, lm = mq + othq, l1 = mm + othm;
                        const double a1 = -l0 * s;
                        const double a2 = -lm * (s + 0.5 * (0.5 * h) * a1);
                        const double a3 = -lm * (s + 0.5 * (0.5 * h) * a2);
                        const double a4 = -l1 * (s + (0.5 * h) * a3);
                        s += (0.5 * h) / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                    }
                    half[j] = s;
                    {
                        const double l0 = mm + othm, lm = m3q + oth3q, l1 = m1 + oth1;
                        const double a1 = -l0 * s;
                        const double a2 = -lm * (s + 0.5 * (0.5 * h) * a1);
                        const double a3 = -lm * (s + 0.5 * (0.5 * h) * a2);
                        const double a4 = -l1 * (s + (0.5 * h) * a3);
                        s += (0.5 * h) / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                    }
                    full[j] = s;
                }
            };
            advance(s1, s1_half, s1_full, qs.mu13);
            advance(s2, s2_half, s2_full, qs.mu23);
        }

        // Stage-independent parts of the mid- and end-step convolutions; the
        // stage-dependent last panel (an entry born at the stage time itself,
        // survival exactly 1) is added per stage from the stage's p00.
        const double c1_h = convolve(k, 1, g1, s1_half, qs.mu13);
        const double c2_h = convolve(k, 1, g2, s2_half, qs.mu23);
        const double c1_f = convolve(k, 2, g1, s1_full, qs.mu13);
        const double c2_f = convolve(k, 2, g2, s2_full, qs.mu23);
        const double on1_h = qs.onset_obs[base + 2], on2_h = qs.onset_unobs[base + 2];
        const double on1_f = qs.onset_obs[base + 4], on2_f = qs.onset_unobs[base + 4];

        rhs(base, y, c1_0, c2_0, k1);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(base + 2, tmp, c1_h + 0.25 * h * tmp[0] * on1_h * mu13_at0,
            c2_h + 0.25 * h * tmp[0] * on2_h * mu23_at0, k2);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(base + 2, tmp, c1_h + 0.25 * h * tmp[0] * on1_h * mu13_at0,
            c2_h + 0.25 * h * tmp[0] * on2_h * mu23_at0, k3);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(base + 4, tmp, c1_f + 0.5 * h * tmp[0] * on1_f * mu13_at0,
            c2_f + 0.5 * h * tmp[0] * on2_f * mu23_at0, k4);
        for (int i = 0; i < 6; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        record(k + 1);

        for (int j = 0; j <= k; ++j) {
            s1[j] = s1_full[j];
            s2[j] = s2_full[j];
        }
        s1[k + 1] = s2[k + 1] = 1.0;
        g1[k + 1] = y[0] * qs.onset_obs[base + 4];
        g2[k + 1] = y[0] * qs.onset_unobs[base + 4];
    }

    detail::check_and_clamp(grid.probs, "solve_m1");
    return grid;
}

// Start-state-0 occupancy for any variant.
inline OccupancyGrid solve(const IntensitySet& set, double entry_age, const SolverConfig& cfg) {
    switch (set.model) {
        case Model::m0: return solve_m0(set, entry_age, cfg, 0);
        case Model::m1: return solve_m1(set, entry_age, cfg);
        case Model::m2: return solve_m2(set, entry_age, cfg);
    }
    throw InvalidVariant("unknown model");
}

} // namespace multistate
