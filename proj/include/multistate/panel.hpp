#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "multistate/age_band.hpp"
#include "multistate/csv.hpp"
#include "multistate/errors.hpp"

namespace multistate {

enum class PanelKind { registrations, bc_deaths, other_deaths };

inline std::string to_string(PanelKind kind) {
    switch (kind) {
        case PanelKind::registrations: return "registrations";
        case PanelKind::bc_deaths: return "bc_deaths";
        case PanelKind::other_deaths: return "other_deaths";
    }
    return "?";
}

struct PanelRecord {
    int year = 0;
    AgeBand band;
    long long count = 0;       // event count, non-negative
    double population = 0.0;   // mid-year person-years, strictly positive
};

// One incidence/mortality panel: at most one record per (year, band).
struct RawPanel {
    PanelKind kind = PanelKind::registrations;
    std::vector<PanelRecord> records;
};

// CSV schema: header `year,age_band,count,population`, bands formatted LO-HI.
inline RawPanel load_panel(const std::filesystem::path& path, PanelKind kind) {
    auto table = csv::read_file(path);
    csv::expect_header(table, {"year", "age_band", "count", "population"}, path.string());
    RawPanel panel;
    panel.kind = kind;
    std::set<std::pair<int, AgeBand>> seen;
    int line_no = 1;
    for (const auto& row : table.rows) {
        ++line_no;
        std::string context = path.string() + ":" + std::to_string(line_no);
        if (row.size() != 4) throw MalformedRow(context + ": expected 4 fields");
        PanelRecord rec;
        rec.year = static_cast<int>(csv::parse_int(row[0], context));
        rec.band = parse_age_band(row[1], context);
        rec.count = csv::parse_int(row[2], context);
        if (rec.count < 0) throw MalformedRow(context + ": negative count");
        rec.population = csv::parse_double(row[3], context);
        if (!(rec.population > 0)) throw MalformedRow(context + ": population must be positive");
        if (!seen.insert({rec.year, rec.band}).second)
            throw DuplicateKey(context + ": duplicate (year, band) = (" +
                               std::to_string(rec.year) + ", " + rec.band.label() + ")");
        panel.records.push_back(rec);
    }
    return panel;
}

// Per-band average of yearly rates count/population over [first, last]
// inclusive. The average is the unweighted mean of annual rates, not pooled
// counts over pooled exposure. Bands missing some years inside the range are
// averaged over the available years with a warning; a band with no records in
// range is an error.
inline AgeBandRateTable average_rates(const RawPanel& panel, std::pair<int, int> years) {
    if (years.first > years.second)
        throw InvalidParams("average_rates: year range is reversed");
    std::map<AgeBand, std::vector<double>> by_band;
    for (const auto& rec : panel.records) {
        if (rec.year < years.first || rec.year > years.second) continue;
        by_band[rec.band].push_back(static_cast<double>(rec.count) / rec.population);
    }
    AgeBandRateTable out;
    out.kind = to_string(panel.kind);
    out.year_range = years;
    const std::size_t expected = static_cast<std::size_t>(years.second - years.first + 1);
    for (const auto& band : band_ladder()) {
        auto it = by_band.find(band);
        if (it == by_band.end() || it->second.empty())
            throw EmptyBand(to_string(panel.kind) + ": band " + band.label() +
                            " has no records in " + std::to_string(years.first) + "-" +
                            std::to_string(years.second));
        if (it->second.size() < expected)
            warn(to_string(panel.kind) + ": band " + band.label() + " has only " +
                 std::to_string(it->second.size()) + " of " + std::to_string(expected) +
                 " years in range");
        double sum = 0.0;
        for (double r : it->second) sum += r;
        out.entries.emplace_back(band, sum / static_cast<double>(it->second.size()));
    }
    return out;
}

} // namespace multistate
