#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "multistate/errors.hpp"

namespace multistate {

// Inclusive age band, e.g. {50, 54} printed as "50-54".
struct AgeBand {
    int lo = 0;
    int hi = 0;

    // Arithmetic midpoint of the covered ages treated as [lo, hi+1):
    // 30-49 -> 40, 50-54 -> 52.5, ..., 85-89 -> 87.5.
    double midpoint() const { return 0.5 * (lo + hi + 1); }

    std::string label() const { return std::to_string(lo) + "-" + std::to_string(hi); }

    friend bool operator==(const AgeBand&, const AgeBand&) = default;
    friend auto operator<=>(const AgeBand&, const AgeBand&) = default;
};

// The fixed band ladder used by all panels and rate tables: one wide band
// 30-49, then five-year bands up to 85-89.
inline const std::array<AgeBand, 9>& band_ladder() {
    static const std::array<AgeBand, 9> ladder = {{
        {30, 49},
        {50, 54},
        {55, 59},
        {60, 64},
        {65, 69},
        {70, 74},
        {75, 79},
        {80, 84},
        {85, 89},
    }};
    return ladder;
}

inline AgeBand parse_age_band(const std::string& text, const std::string& context) {
    auto dash = text.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 >= text.size())
        throw UnknownAgeBand(context + ": bad age band '" + text + "'");
    AgeBand band;
    try {
        std::size_t lo_end = 0, hi_end = 0;
        band.lo = std::stoi(text.substr(0, dash), &lo_end);
        band.hi = std::stoi(text.substr(dash + 1), &hi_end);
        if (lo_end != dash || hi_end != text.size() - dash - 1)
            throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw UnknownAgeBand(context + ": bad age band '" + text + "'");
    }
    for (const auto& known : band_ladder())
        if (known == band) return band;
    throw UnknownAgeBand(context + ": age band '" + text + "' is not in the ladder");
}

// Per-band rates (per person-year), ordered along the ladder.
struct AgeBandRateTable {
    std::vector<std::pair<AgeBand, double>> entries;
    std::string kind;
    std::pair<int, int> year_range{0, 0};

    bool covers_ladder() const {
        if (entries.size() != band_ladder().size()) return false;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].first != band_ladder()[i]) return false;
        return true;
    }

    double rate_at(const AgeBand& band) const {
        for (const auto& [b, r] : entries)
            if (b == band) return r;
        throw MissingBand(kind + ": no rate for band " + band.label());
    }

    // Uniformly scaled copy (used e.g. for the pre-metastatic share of
    // registrations).
    AgeBandRateTable scaled(double factor, const std::string& new_kind) const {
        AgeBandRateTable out = *this;
        out.kind = new_kind;
        for (auto& [band, rate] : out.entries) rate *= factor;
        return out;
    }
};

} // namespace multistate
