#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "multistate/age_band.hpp"
#include "multistate/curves.hpp"
#include "multistate/errors.hpp"
#include "multistate/tables.hpp"

namespace multistate {

// M0: four-state Markov model (healthy / observed BC / dead other / dead BC).
// M1: six-state semi-Markov model with observed and unobserved pre-metastatic
//     states and duration-dependent metastasis hazards.
// M2: the M1 state space with a constant metastasis hazard (pure Markov).
enum class Model { m0, m1, m2 };

inline std::string to_string(Model model) {
    switch (model) {
        case Model::m0: return "M0";
        case Model::m1: return "M1";
        case Model::m2: return "M2";
    }
    return "?";
}

inline Model model_from_string(const std::string& text) {
    if (text == "M0" || text == "m0") return Model::m0;
    if (text == "M1" || text == "m1") return Model::m1;
    if (text == "M2" || text == "m2") return Model::m2;
    throw InvalidVariant("unknown model '" + text + "'");
}

// Source of the four-state model's post-diagnosis BC death rates: the
// metastatic (stage 4) table, or the low-severity DCIS table.
enum class Mu13Source { metastatic, dcis };

inline std::string to_string(Mu13Source source) {
    return source == Mu13Source::metastatic ? "metastatic" : "dcis";
}

struct ModelParams {
    // Diagnosed share of breast-cancer onset; observed onset stays anchored
    // while the unobserved split varies with alpha.
    double alpha = 0.6;
    // Treatment effect: metastasis hazard ratio observed/unobserved (< 1).
    double beta = 1.0 / 7.0;
    Mu13Source mu13_m0_source = Mu13Source::metastatic;
    // Constant metastasis hazard of M2.
    double mu13_m2_const = 0.0194;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParams("alpha must be in (0,1)");
        if (!(beta > 0.0 && beta < 1.0)) throw InvalidParams("beta must be in (0,1)");
        if (!(mu13_m2_const >= 0.0)) throw InvalidParams("mu13_m2_const must be >= 0");
    }
};

// Literature tables behind the BC-death and metastasis hazards; injectable
// for tests, embedded England values by default.
struct CalibrationTables {
    AgeBandRateTable bc_mortality_stage4 = stage4_bc_mortality_table();
    AgeBandRateTable bc_mortality_dcis = dcis_bc_mortality_table();
    DurationHazard metastasis = metastasis_duration_hazard();
};

// The full intensity set of one model variant and parametrisation. Immutable
// after construction; evaluation is pure and thread-safe.
//
// Curve roles by variant:
//   onset_observed    mu01 (M0: all registrations; M1/M2: pre-metastatic share)
//   onset_unobserved  mu02 in M1/M2, = mu01 (1-alpha)/alpha; zero in M0
//   other_mortality   mu02 = mu12 in M0; mu04 = mu14 = mu24 = mu34 in M1/M2
//   bc_mortality      mu13 in M0; mu35 in M1/M2
//   metastasis        mu13(z) in M1 (Colzani table); constant in M2
struct IntensitySet {
    Model model = Model::m0;
    ModelParams params;
    IntensityCurve onset_observed;
    IntensityCurve onset_unobserved;
    IntensityCurve other_mortality;
    IntensityCurve bc_mortality;
    DurationHazard metastasis = DurationHazard::constant(0.0);

    double mu01(double age) const { return onset_observed(age); }
    double mu02(double age) const { return onset_unobserved(age); }
    double other(double age) const { return other_mortality(age); }
    double bc_death(double age) const { return bc_mortality(age); }
    double mu13(double z) const { return metastasis.at(z); }
    // Unobserved cases progress faster for lack of treatment.
    double mu23(double z) const { return metastasis.at(z) / params.beta; }
};

// Natural cubic spline through (band midpoint, log rate); constant
// extrapolation of the boundary log rates outside the midpoint range. Zero
// rates are floored at 1e-12 before the log transform.
inline IntensityCurve smooth_log_curve(const AgeBandRateTable& table) {
    if (table.entries.size() < 2)
        throw InsufficientKnots(table.kind + ": need at least 2 bands to smooth");
    std::vector<double> ages, log_rates;
    ages.reserve(table.entries.size());
    log_rates.reserve(table.entries.size());
    for (const auto& [band, rate] : table.entries) {
        if (rate < 0) throw NonpositiveRate(table.kind + ": negative rate in band " + band.label());
        double r = rate;
        if (r == 0.0) {
            warn(table.kind + ": zero rate in band " + band.label() + " floored at 1e-12");
            r = 1e-12;
        }
        ages.push_back(band.midpoint());
        log_rates.push_back(std::log(r));
    }
    return IntensityCurve::from_log_knots(std::move(ages), std::move(log_rates));
}

// Piecewise-linear duration hazard lookup (the tabulated metastasis rates).
inline double duration_mu13(const DurationHazard& hazard, double z) {
    return hazard.at(z);
}

// Death rate after a metastatic diagnosis from early-death counts: survivors
// of the first year contribute a full year of exposure, each early death half
// a year on average.
inline double mu35_from_early_death(double no_early, double early) {
    if (!(no_early + early > 0)) throw ZeroExposure("no exposure: both counts are zero");
    return early / (no_early + 0.5 * early);
}

inline IntensitySet build_intensity_set(const AgeBandRateTable& incidence,
                                        const AgeBandRateTable& other_mortality,
                                        Model model,
                                        const ModelParams& params = {},
                                        const CalibrationTables& literature = {}) {
    params.validate();
    if (!incidence.covers_ladder())
        throw MissingBand("incidence table does not cover the band ladder");
    if (!other_mortality.covers_ladder())
        throw MissingBand("other-mortality table does not cover the band ladder");

    IntensitySet set;
    set.model = model;
    set.params = params;
    set.other_mortality = smooth_log_curve(other_mortality);

    if (model == Model::m0) {
        set.onset_observed = smooth_log_curve(incidence);
        set.onset_unobserved = IntensityCurve::constant(0.0);
        set.bc_mortality = smooth_log_curve(params.mu13_m0_source == Mu13Source::dcis
                                                ? literature.bc_mortality_dcis
                                                : literature.bc_mortality_stage4);
        set.metastasis = DurationHazard::constant(0.0);
        return set;
    }

    // Six-state models: observed onset is the pre-metastatic share of
    // registrations, and total onset mu01/alpha splits into observed and
    // unobserved parts.
    set.onset_observed =
        smooth_log_curve(incidence.scaled(kPremetastaticShare, "premetastatic_onset"));
    set.onset_unobserved = smooth_log_curve(incidence.scaled(
        kPremetastaticShare * (1.0 - params.alpha) / params.alpha, "unobserved_onset"));
    set.bc_mortality = smooth_log_curve(literature.bc_mortality_stage4);
    if (model == Model::m1) {
        literature.metastasis.validate();
        set.metastasis = literature.metastasis;
    } else {
        set.metastasis = DurationHazard::constant(params.mu13_m2_const);
    }
    return set;
}

} // namespace multistate
