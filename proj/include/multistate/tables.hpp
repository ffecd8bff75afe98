#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>

#include "multistate/age_band.hpp"
#include "multistate/csv.hpp"
#include "multistate/curves.hpp"
#include "multistate/errors.hpp"

namespace multistate {

// Calibration constants for the England breast-cancer models. Band rates are
// averages of annual rates over 2001-2019; the same values ship as CSV
// resources under data/ (see load_rate_table / load_duration_table), and the
// round-trip is covered by tests.

// Share of new registrations diagnosed before metastasis (stages 1-3), used
// to split observed onset from total onset in the six-state models.
inline constexpr double kPremetastaticShare = 0.81;

inline constexpr std::pair<int, int> kCalibrationYears{2001, 2019};

namespace detail {
inline constexpr std::array<double, 9> kIncidenceRates = {
    0.00106, 0.00277, 0.00287, 0.00349, 0.00393, 0.00345, 0.00384, 0.00417, 0.00447,
};
inline constexpr std::array<double, 9> kOtherMortalityRates = {
    0.00084, 0.00228, 0.00363, 0.00588, 0.00952, 0.01643, 0.02987, 0.05496, 0.10112,
};
// Death rates after a metastatic (stage 4) diagnosis, derived from early-death
// counts with half-year exposure credited to each early death.
inline constexpr std::array<double, 9> kStage4BcMortalityRates = {
    0.16739, 0.24005, 0.24005, 0.28060, 0.28060, 0.36002, 0.40000, 0.49711, 0.50000,
};
// Breast-cancer death rates for an in-situ (DCIS) diagnosis: 3x the population
// breast-cancer mortality. Low-severity alternative for the four-state model.
inline constexpr std::array<double, 9> kDcisBcMortalityRates = {
    0.00041, 0.00115, 0.00150, 0.00182, 0.00214, 0.00274, 0.00369, 0.00497, 0.00687,
};
// Published observed-onset rates of the six-state models (rounded
// kPremetastaticShare x incidence); retained for calibration cross-checks.
inline constexpr std::array<double, 9> kPublishedPremetastaticOnset = {
    0.00086, 0.00224, 0.00233, 0.00282, 0.00318, 0.00280, 0.00311, 0.00338, 0.00362,
};

inline AgeBandRateTable make_table(const std::array<double, 9>& rates, std::string kind) {
    AgeBandRateTable table;
    table.kind = std::move(kind);
    table.year_range = kCalibrationYears;
    for (std::size_t i = 0; i < rates.size(); ++i)
        table.entries.emplace_back(band_ladder()[i], rates[i]);
    return table;
}
} // namespace detail

inline AgeBandRateTable england_incidence_table() {
    return detail::make_table(detail::kIncidenceRates, "registrations");
}

inline AgeBandRateTable england_other_mortality_table() {
    return detail::make_table(detail::kOtherMortalityRates, "other_deaths");
}

inline AgeBandRateTable stage4_bc_mortality_table() {
    return detail::make_table(detail::kStage4BcMortalityRates, "bc_mortality_stage4");
}

inline AgeBandRateTable dcis_bc_mortality_table() {
    return detail::make_table(detail::kDcisBcMortalityRates, "bc_mortality_dcis");
}

inline std::array<double, 9> published_premetastatic_onset() {
    return detail::kPublishedPremetastaticOnset;
}

// First-metastasis hazard by years since a pre-metastatic diagnosis: zero at
// diagnosis, peaking near two years, settling to 0.0194 from duration 8 on.
inline DurationHazard metastasis_duration_hazard() {
    DurationHazard hazard;
    hazard.points = {
        {0.0, 0.0},   {1.0, 0.03}, {2.0, 0.04},   {3.0, 0.03},    {4.0, 0.024},
        {5.0, 0.021}, {6.0, 0.02}, {8.0, 0.0194}, {10.0, 0.0194},
    };
    hazard.tail_rate = 0.0194;
    hazard.validate();
    return hazard;
}

// CSV resource loaders. Band-rate tables use `age_band,rate`; duration tables
// use `z,rate`.
inline AgeBandRateTable load_rate_table(const std::filesystem::path& path, std::string kind,
                                        std::pair<int, int> year_range = kCalibrationYears) {
    auto raw = csv::read_file(path);
    csv::expect_header(raw, {"age_band", "rate"}, path.string());
    AgeBandRateTable table;
    table.kind = std::move(kind);
    table.year_range = year_range;
    int line_no = 1;
    for (const auto& row : raw.rows) {
        ++line_no;
        std::string context = path.string() + ":" + std::to_string(line_no);
        if (row.size() != 2) throw MalformedRow(context + ": expected 2 fields");
        AgeBand band = parse_age_band(row[0], context);
        double rate = csv::parse_double(row[1], context);
        if (rate < 0) throw MalformedRow(context + ": negative rate");
        table.entries.emplace_back(band, rate);
    }
    if (!table.covers_ladder())
        throw MissingBand(path.string() + ": table does not cover the band ladder");
    return table;
}

inline DurationHazard load_duration_table(const std::filesystem::path& path) {
    auto raw = csv::read_file(path);
    csv::expect_header(raw, {"z", "rate"}, path.string());
    DurationHazard hazard;
    int line_no = 1;
    for (const auto& row : raw.rows) {
        ++line_no;
        std::string context = path.string() + ":" + std::to_string(line_no);
        if (row.size() != 2) throw MalformedRow(context + ": expected 2 fields");
        hazard.points.emplace_back(csv::parse_double(row[0], context),
                                   csv::parse_double(row[1], context));
    }
    if (hazard.points.empty()) throw MalformedRow(path.string() + ": no duration points");
    hazard.tail_rate = hazard.points.back().second;
    hazard.validate();
    return hazard;
}

} // namespace multistate
