#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "multistate/errors.hpp"
#include "multistate/grid.hpp"
#include "multistate/intensity.hpp"
#include "multistate/solver.hpp"

namespace multistate {

enum class Product { cii_accelerated, life };

inline std::string to_string(Product product) {
    return product == Product::cii_accelerated ? "cii" : "life";
}

enum class HealthState { healthy, premetastatic_now, premetastatic_5yr_ago };

inline std::string to_string(HealthState health) {
    switch (health) {
        case HealthState::healthy: return "healthy";
        case HealthState::premetastatic_now: return "premetastatic_now";
        case HealthState::premetastatic_5yr_ago: return "premetastatic_5yr_ago";
    }
    return "?";
}

struct ContractSpec {
    Product product = Product::cii_accelerated;
    double entry_age = 30.0;
    std::optional<double> term;  // nullopt = whole-life (runs to max_age)
    double interest = 0.02;      // effective annual rate
    double benefit = 1000.0;
    HealthState health = HealthState::healthy;
    Model model = Model::m0;
};

struct PremiumQuote {
    ContractSpec spec;
    double epv = 0.0;
    double step = 0.0;
    std::string quadrature;
};

namespace detail {

struct TermForce {
    double delta = 0.0;  // force of interest ln(1+i)
    int k_term = 0;      // term in grid steps
};

// epv accumulators for one nested pass: one running trapezoid per (term,
// force) pair, cut off at that pair's horizon.
struct PairAccs {
    std::vector<TermForce> pairs;
    double h;
    std::vector<double> disc, prev, acc, result;
    explicit PairAccs(const std::vector<TermForce>& tf, double step) : pairs(tf), h(step) {
        disc.assign(tf.size(), 1.0);
        prev.assign(tf.size(), 0.0);
        acc.assign(tf.size(), 0.0);
        result.assign(tf.size(), 0.0);
    }
    void start(double flow0) {
        for (std::size_t t = 0; t < pairs.size(); ++t) {
            disc[t] = 1.0;
            prev[t] = flow0;
            acc[t] = 0.0;
            result[t] = 0.0;
        }
    }
    void step_to(int k, double flow) {
        for (std::size_t t = 0; t < pairs.size(); ++t) {
            if (k > pairs[t].k_term) continue;
            disc[t] *= std::exp(-pairs[t].delta * h);
            const double val = disc[t] * flow;
            acc[t] += 0.5 * h * (prev[t] + val);
            prev[t] = val;
            if (k == pairs[t].k_term) result[t] = acc[t];
        }
    }
};

inline int resolve_term_steps(double term_years, double entry_age, const SolverConfig& cfg) {
    if (!(term_years > 0)) throw InvalidParams("term must be positive");
    if (entry_age + term_years > cfg.max_age + 1e-9)
        throw TermExceedsMaxAge("term runs past the maximum age");
    const long long k = std::llround(term_years / cfg.step);
    if (k < 1 || std::abs(static_cast<double>(k) * cfg.step - term_years) > 1e-6)
        throw InvalidParams("term is not a multiple of the solver step");
    return static_cast<int>(k);
}

// Composite trapezoid of e^{-delta t} f(t) over grid nodes 0..K.
inline double discounted_trapezoid(const std::vector<double>& f, double h, double delta, int K) {
    if (K <= 0) return 0.0;
    const double decay = std::exp(-delta * h);
    double disc = 1.0;
    double acc = 0.5 * f[0];
    for (int k = 1; k < K; ++k) {
        disc *= decay;
        acc += disc * f[k];
    }
    disc *= decay;
    acc += 0.5 * disc * f[K];
    return acc * h;
}

// p00 of the six-state models is a plain survival ODE.
template <typename Visit>
void run_state0_survival(const QuarterSamples& qs, int n_steps, double h, Visit&& visit) {
    double y = 1.0;
    visit(0, y);
    for (int k = 0; k < n_steps; ++k) {
        const int base = 4 * k;
        const double l0 = qs.onset_obs[base] + qs.onset_unobs[base] + qs.other[base];
        const double lm = qs.onset_obs[base + 2] + qs.onset_unobs[base + 2] + qs.other[base + 2];
        const double l1 = qs.onset_obs[base + 4] + qs.onset_unobs[base + 4] + qs.other[base + 4];
        const double k1 = -l0 * y;
        const double k2 = -lm * (y + 0.5 * h * k1);
        const double k3 = -lm * (y + 0.5 * h * k2);
        const double k4 = -l1 * (y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        visit(k + 1, y);
    }
}

// Accelerated CII for a healthy entrant. M0 pays on any exit from state 0;
// the six-state models pay on diagnosis or on death from other causes while
// undiagnosed, which adds the nested premium over unobserved entries: the
// inner integral is the premium payable at metastatic diagnosis or prior
// other-cause death for a policyholder entering the unobserved state at a
// selected age.
inline std::vector<double> cii_epvs(const IntensitySet& set, double x, const SolverConfig& cfg,
                                    const std::vector<TermForce>& tf) {
    const int n = cfg.steps_from(x);
    const double h = cfg.step;
    const int k_max = [&] {
        int m = 0;
        for (const auto& t : tf) m = std::max(m, t.k_term);
        return m;
    }();

    std::vector<double> out(tf.size(), 0.0);
    if (set.model == Model::m0) {
        auto grid = solve_m0(set, x, cfg, 0);
        auto qs = QuarterSamples::make(set, x, 0.0, n, h);
        std::vector<double> f(n + 1);
        for (int k = 0; k <= n; ++k)
            f[k] = grid.probs[0][k] * (qs.onset_obs[4 * k] + qs.other[4 * k]);
        for (std::size_t t = 0; t < tf.size(); ++t)
            out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);
        return out;
    }
    if (set.model == Model::m2) {
        auto grid = solve_m2(set, x, cfg);
        auto qs = QuarterSamples::make(set, x, 0.0, n, h);
        const double m23 = set.mu23(0.0);
        std::vector<double> f(n + 1);
        for (int k = 0; k <= n; ++k)
            f[k] = grid.probs[0][k] * (qs.onset_obs[4 * k] + qs.other[4 * k]) +
                   grid.probs[2][k] * (m23 + qs.other[4 * k]);
        for (std::size_t t = 0; t < tf.size(); ++t)
            out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);
        return out;
    }

    // M1: outer integral over p00 plus nested select premiums for the
    // unobserved route, trapezoid on the shared grid throughout.
    auto qs = QuarterSamples::make(set, x, 0.0, n, h);
    std::vector<double> p00(k_max + 1);
    run_state0_survival(qs, k_max, h, [&](int k, double y) { p00[k] = y; });

    std::vector<double> f(k_max + 1);
    for (int k = 0; k <= k_max; ++k)
        f[k] = p00[k] * (qs.onset_obs[4 * k] + qs.other[4 * k]);
    for (std::size_t t = 0; t < tf.size(); ++t)
        out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);

    std::vector<double> outer_disc(tf.size(), 1.0);
    PairAccs inner(tf, h);
    std::vector<TermForce> inner_tf = tf;
    for (int j = 0; j <= k_max; ++j) {
        int remaining = 0;
        for (std::size_t t = 0; t < tf.size(); ++t) {
            inner_tf[t].k_term = std::max(0, tf[t].k_term - j);
            remaining = std::max(remaining, inner_tf[t].k_term);
        }
        inner.pairs = inner_tf;
        if (remaining > 0) {
            run_select_survival(qs.mu23, 0, qs.other, 4 * j, remaining, h,
                                [&](int k, double live) {
                                    const int q = 4 * j + 4 * k;
                                    const double flow = live * (qs.mu23[4 * k] + qs.other[q]);
                                    if (k == 0)
                                        inner.start(flow);
                                    else
                                        inner.step_to(k, flow);
                                });
        } else {
            inner.start(0.0);
        }
        const double entry_flow = p00[j] * qs.onset_unobs[4 * j];
        for (std::size_t t = 0; t < tf.size(); ++t) {
            if (j > tf[t].k_term) continue;
            const double w = (j == 0 || j == tf[t].k_term) ? 0.5 : 1.0;
            out[t] += w * h * outer_disc[t] * entry_flow * inner.result[t];
            outer_disc[t] *= std::exp(-tf[t].delta * h);
        }
    }
    return out;
}

// Life insurance for a healthy entrant: EPV of the death benefit from any
// cause. Under M1 the post-diagnosis part nests select annuities (including
// the metastatic sub-path) over entries into the observed and unobserved
// pre-metastatic states.
inline std::vector<double> life_healthy_epvs(const IntensitySet& set, double x,
                                             const SolverConfig& cfg,
                                             const std::vector<TermForce>& tf) {
    const int n = cfg.steps_from(x);
    const double h = cfg.step;
    std::vector<double> out(tf.size(), 0.0);

    if (set.model == Model::m0) {
        auto grid = solve_m0(set, x, cfg, 0);
        auto qs = QuarterSamples::make(set, x, 0.0, n, h);
        std::vector<double> f(n + 1);
        for (int k = 0; k <= n; ++k)
            f[k] = grid.probs[0][k] * qs.other[4 * k] +
                   grid.probs[1][k] * (qs.other[4 * k] + qs.bc_death[4 * k]);
        for (std::size_t t = 0; t < tf.size(); ++t)
            out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);
        return out;
    }
    if (set.model == Model::m2) {
        auto grid = solve_m2(set, x, cfg);
        auto qs = QuarterSamples::make(set, x, 0.0, n, h);
        std::vector<double> f(n + 1);
        for (int k = 0; k <= n; ++k) {
            const double oth = qs.other[4 * k];
            f[k] = (grid.probs[0][k] + grid.probs[1][k] + grid.probs[2][k]) * oth +
                   grid.probs[3][k] * (oth + qs.bc_death[4 * k]);
        }
        for (std::size_t t = 0; t < tf.size(); ++t)
            out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);
        return out;
    }

    const int k_max = [&] {
        int m = 0;
        for (const auto& t : tf) m = std::max(m, t.k_term);
        return m;
    }();
    auto qs = QuarterSamples::make(set, x, 0.0, n, h);
    std::vector<double> p00(k_max + 1);
    run_state0_survival(qs, k_max, h, [&](int k, double y) { p00[k] = y; });

    std::vector<double> f(k_max + 1);
    for (int k = 0; k <= k_max; ++k) f[k] = p00[k] * qs.other[4 * k];
    for (std::size_t t = 0; t < tf.size(); ++t)
        out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);

    std::vector<double> outer_disc(tf.size(), 1.0);
    PairAccs inner1(tf, h), inner2(tf, h);
    std::vector<TermForce> inner_tf = tf;
    for (int j = 0; j <= k_max; ++j) {
        int remaining = 0;
        for (std::size_t t = 0; t < tf.size(); ++t) {
            inner_tf[t].k_term = std::max(0, tf[t].k_term - j);
            remaining = std::max(remaining, inner_tf[t].k_term);
        }
        inner1.pairs = inner_tf;
        inner2.pairs = inner_tf;
        auto run_route = [&](const std::vector<double>& mz, PairAccs& acc) {
            if (remaining == 0) {
                acc.start(0.0);
                return;
            }
            run_illness_death4(mz, 0, qs.other, qs.bc_death, 4 * j, remaining, h,
                               [&](int k, const std::array<double, 4>& y) {
                                   const int q = 4 * j + 4 * k;
                                   const double flow =
                                       y[0] * qs.other[q] +
                                       y[1] * (qs.other[q] + qs.bc_death[q]);
                                   if (k == 0)
                                       acc.start(flow);
                                   else
                                       acc.step_to(k, flow);
                               });
        };
        run_route(qs.mu13, inner1);
        run_route(qs.mu23, inner2);
        const double flow1 = p00[j] * qs.onset_obs[4 * j];
        const double flow2 = p00[j] * qs.onset_unobs[4 * j];
        for (std::size_t t = 0; t < tf.size(); ++t) {
            if (j > tf[t].k_term) continue;
            const double w = (j == 0 || j == tf[t].k_term) ? 0.5 : 1.0;
            out[t] += w * h * outer_disc[t] * (flow1 * inner1.result[t] + flow2 * inner2.result[t]);
            outer_disc[t] *= std::exp(-tf[t].delta * h);
        }
    }
    return out;
}

// Life insurance for a policyholder in the observed pre-metastatic state at
// purchase, with the duration clock at z0 (0 = just diagnosed, 5 = diagnosed
// five years ago; the select survival conditions on having stayed in state 1
// to that duration). The metastatic death annuity is nested over entries into
// state 3.
inline std::vector<double> life_diagnosed_epvs(const IntensitySet& set, double x, double z0,
                                               const SolverConfig& cfg,
                                               const std::vector<TermForce>& tf) {
    const int n = cfg.steps_from(x);
    const double h = cfg.step;
    std::vector<double> out(tf.size(), 0.0);

    if (set.model == Model::m0) {
        auto grid = solve_m0(set, x, cfg, 1);
        auto qs = QuarterSamples::make(set, x, 0.0, n, h);
        std::vector<double> f(n + 1);
        for (int k = 0; k <= n; ++k)
            f[k] = grid.probs[0][k] * (qs.other[4 * k] + qs.bc_death[4 * k]);
        for (std::size_t t = 0; t < tf.size(); ++t)
            out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);
        return out;
    }
    if (set.model == Model::m2) {
        auto grid = solve_select(set, 1, x, cfg, z0);
        auto qs = QuarterSamples::make(set, x, 0.0, n, h);
        std::vector<double> f(n + 1);
        for (int k = 0; k <= n; ++k)
            f[k] = grid.probs[0][k] * qs.other[4 * k] +
                   grid.probs[1][k] * (qs.other[4 * k] + qs.bc_death[4 * k]);
        for (std::size_t t = 0; t < tf.size(); ++t)
            out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);
        return out;
    }

    const int k_max = [&] {
        int m = 0;
        for (const auto& t : tf) m = std::max(m, t.k_term);
        return m;
    }();
    auto qs = QuarterSamples::make(set, x, z0, n, h);
    std::vector<double> p11(k_max + 1);
    run_select_survival(qs.mu13, 0, qs.other, 0, k_max, h, [&](int k, double y) { p11[k] = y; });

    std::vector<double> f(k_max + 1);
    for (int k = 0; k <= k_max; ++k) f[k] = p11[k] * qs.other[4 * k];
    for (std::size_t t = 0; t < tf.size(); ++t)
        out[t] = discounted_trapezoid(f, h, tf[t].delta, tf[t].k_term);

    std::vector<double> outer_disc(tf.size(), 1.0);
    PairAccs inner(tf, h);
    std::vector<TermForce> inner_tf = tf;
    for (int j = 0; j <= k_max; ++j) {
        int remaining = 0;
        for (std::size_t t = 0; t < tf.size(); ++t) {
            inner_tf[t].k_term = std::max(0, tf[t].k_term - j);
            remaining = std::max(remaining, inner_tf[t].k_term);
        }
        inner.pairs = inner_tf;
        if (remaining > 0) {
            // Post-metastasis death annuity g3 at entry age x + t_j.
            run_select_survival(qs.bc_death, qs.other, 4 * j, remaining, h,
                                [&](int k, double live) {
                                    const int q = 4 * j + 4 * k;
                                    const double flow =
                                        live * (qs.other[q] + qs.bc_death[q]);
                                    if (k == 0)
                                        inner.start(flow);
                                    else
                                        inner.step_to(k, flow);
                                });
        } else {
            inner.start(0.0);
        }
        const double metastasis_flow = p11[j] * qs.mu13[4 * j];
        for (std::size_t t = 0; t < tf.size(); ++t) {
            if (j > tf[t].k_term) continue;
            const double w = (j == 0 || j == tf[t].k_term) ? 0.5 : 1.0;
            out[t] += w * h * outer_disc[t] * metastasis_flow * inner.result[t];
            outer_disc[t] *= std::exp(-tf[t].delta * h);
        }
    }
    return out;
}

} // namespace detail

// Validates a contract spec against the intensity set and returns the
// canonical form (M2 reduces a 5-years-ago purchase to a fresh diagnosis).
inline ContractSpec validate_contract(const ContractSpec& spec, const IntensitySet& set,
                                      const SolverConfig& cfg) {
    ContractSpec out = spec;
    if (spec.model != set.model)
        throw InvalidVariant("contract model does not match the intensity set");
    if (!(spec.entry_age >= 30.0 && spec.entry_age <= 60.0))
        throw OutOfRange("entry age must be in [30, 60]");
    if (!(spec.interest >= 0.0)) throw InvalidParams("effective interest rate must be >= 0");
    if (!(spec.benefit >= 0.0)) throw InvalidParams("benefit must be >= 0");
    if (spec.product == Product::cii_accelerated && spec.health != HealthState::healthy)
        throw UnsupportedHealthState("the CII contract is sold to healthy lives only");
    if (spec.health == HealthState::premetastatic_5yr_ago) {
        if (set.model == Model::m0)
            throw UnsupportedHealthState(
                "M0 has no duration dependence; cannot price a past diagnosis");
        if (set.model == Model::m2) out.health = HealthState::premetastatic_now;
        if (set.model == Model::m1 && spec.entry_age < 35.0)
            throw OutOfRange("diagnosis five years ago puts the diagnosis age below 30");
    }
    if (spec.health != HealthState::healthy && spec.product == Product::life &&
        set.model == Model::m0 && spec.health == HealthState::premetastatic_5yr_ago)
        throw UnsupportedHealthState("M0 cannot price a past diagnosis");
    if (spec.term) detail::resolve_term_steps(*spec.term, spec.entry_age, cfg);
    return out;
}

inline PremiumQuote price(const ContractSpec& spec, const IntensitySet& set,
                          const SolverConfig& cfg) {
    const ContractSpec canon = validate_contract(spec, set, cfg);
    const double term_years =
        canon.term ? *canon.term : cfg.max_age - canon.entry_age;
    detail::TermForce tf;
    tf.delta = std::log1p(canon.interest);
    tf.k_term = detail::resolve_term_steps(term_years, canon.entry_age, cfg);
    std::vector<detail::TermForce> tfs{tf};

    std::vector<double> unit;
    if (canon.product == Product::cii_accelerated) {
        unit = detail::cii_epvs(set, canon.entry_age, cfg, tfs);
    } else if (canon.health == HealthState::healthy) {
        unit = detail::life_healthy_epvs(set, canon.entry_age, cfg, tfs);
    } else {
        const double z0 = canon.health == HealthState::premetastatic_5yr_ago ? 5.0 : 0.0;
        unit = detail::life_diagnosed_epvs(set, canon.entry_age, z0, cfg, tfs);
    }

    PremiumQuote quote;
    quote.spec = spec;
    quote.epv = canon.benefit * unit[0];
    quote.step = cfg.step;
    quote.quadrature = "trapezoid on the RK4 grid";
    return quote;
}

// Batch pricing that shares the expensive nested passes across quotes which
// differ only in term, interest or benefit.
inline std::vector<PremiumQuote> price_many(const std::vector<ContractSpec>& specs,
                                            const IntensitySet& set, const SolverConfig& cfg) {
    struct Group {
        std::vector<std::size_t> spec_index;
        std::vector<detail::TermForce> tf;
    };
    std::map<std::tuple<int, int, double>, Group> groups;
    std::vector<ContractSpec> canon(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        canon[i] = validate_contract(specs[i], set, cfg);
        const auto& c = canon[i];
        const double term_years = c.term ? *c.term : cfg.max_age - c.entry_age;
        detail::TermForce tf;
        tf.delta = std::log1p(c.interest);
        tf.k_term = detail::resolve_term_steps(term_years, c.entry_age, cfg);
        int kind = c.product == Product::cii_accelerated ? 0
                   : c.health == HealthState::healthy    ? 1
                   : c.health == HealthState::premetastatic_now ? 2
                                                                : 3;
        auto& group = groups[{kind, 0, c.entry_age}];
        group.spec_index.push_back(i);
        group.tf.push_back(tf);
    }
    std::vector<PremiumQuote> out(specs.size());
    for (auto& [key, group] : groups) {
        const auto [kind, unused, entry_age] = key;
        std::vector<double> unit;
        if (kind == 0)
            unit = detail::cii_epvs(set, entry_age, cfg, group.tf);
        else if (kind == 1)
            unit = detail::life_healthy_epvs(set, entry_age, cfg, group.tf);
        else
            unit = detail::life_diagnosed_epvs(set, entry_age, kind == 3 ? 5.0 : 0.0, cfg,
                                               group.tf);
        for (std::size_t g = 0; g < group.spec_index.size(); ++g) {
            const std::size_t i = group.spec_index[g];
            PremiumQuote quote;
            quote.spec = specs[i];
            quote.epv = canon[i].benefit * unit[g];
            quote.step = cfg.step;
            quote.quadrature = "trapezoid on the RK4 grid";
            out[i] = quote;
        }
    }
    return out;
}

inline PremiumQuote price_cii(const ContractSpec& spec, const IntensitySet& set,
                              const SolverConfig& cfg) {
    if (spec.product != Product::cii_accelerated)
        throw InvalidParams("price_cii expects a CII contract");
    return price(spec, set, cfg);
}

inline PremiumQuote price_life_healthy(const ContractSpec& spec, const IntensitySet& set,
                                       const SolverConfig& cfg) {
    if (spec.product != Product::life || spec.health != HealthState::healthy)
        throw InvalidParams("price_life_healthy expects a life contract for a healthy entrant");
    return price(spec, set, cfg);
}

inline PremiumQuote price_life_diagnosed(const ContractSpec& spec, const IntensitySet& set,
                                         const SolverConfig& cfg) {
    if (spec.product != Product::life || spec.health == HealthState::healthy)
        throw InvalidParams("price_life_diagnosed expects a life contract with a diagnosis");
    return price(spec, set, cfg);
}

} // namespace multistate
