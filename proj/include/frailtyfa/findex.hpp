#pragma once

// Cumulative-deficit frailty index and the per-deficit inspection report
// (prevalence, saturation by age band, correlation of prevalence with age).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "frailtyfa/errors.hpp"
#include "frailtyfa/ingest.hpp"

namespace frailtyfa {

struct FrailtyResult {
    std::size_t present = 0;
    std::size_t assessed = 0;
    double fi = 0.0;
};

// Proportion of assessed (non-missing) deficits that are present.
inline FrailtyResult frailty_index(const ParticipantRecord& record) {
    FrailtyResult r;
    for (auto d : record.deficits) {
        if (is_missing(d)) continue;
        ++r.assessed;
        r.present += d == Deficit::present;
    }
    if (r.assessed == 0)
        throw DegenerateRecord("findex", "participant '" + record.id + "' has no assessed deficits");
    r.fi = static_cast<double>(r.present) / static_cast<double>(r.assessed);
    return r;
}

inline std::vector<FrailtyResult> frailty_indices(const Cohort& cohort) {
    std::vector<FrailtyResult> out;
    out.reserve(cohort.records.size());
    for (const auto& r : cohort.records) out.push_back(frailty_index(r));
    return out;
}

struct AgeBand {
    int lo;
    int hi; // inclusive
    const char* label;
};

inline constexpr std::array<AgeBand, 4> kAgeBands{{
    {65, 69, "65-69"},
    {70, 79, "70-79"},
    {80, 89, "80-89"},
    {90, std::numeric_limits<int>::max(), "90+"},
}};

struct DeficitCriteria {
    std::string id;
    std::string description;
    std::size_t observed = 0;
    double prevalence = std::numeric_limits<double>::quiet_NaN();
    double prevalence_male = std::numeric_limits<double>::quiet_NaN();
    double prevalence_female = std::numeric_limits<double>::quiet_NaN();
    std::array<double, kAgeBands.size()> band_prevalence{};
    bool saturated = false;
    double age_corr = std::numeric_limits<double>::quiet_NaN();
    std::size_t age_cells = 0;
};

struct CriteriaOptions {
    std::size_t min_cell = 10;
};

namespace detail {

struct Tally {
    std::size_t n = 0;
    std::size_t present = 0;
    double age_sum = 0.0;

    double prevalence() const {
        return n == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : static_cast<double>(present) / static_cast<double>(n);
    }
};

// Groups single-year age tallies so every cell holds at least min_cell
// participants. Undersized runs are pooled with the following ages; an
// undersized tail is pooled into the last complete cell.
inline std::vector<Tally> merge_age_cells(const std::map<int, Tally>& by_age, std::size_t min_cell) {
    std::vector<Tally> cells;
    Tally pending;
    for (const auto& [age, t] : by_age) {
        pending.n += t.n;
        pending.present += t.present;
        pending.age_sum += t.age_sum;
        if (pending.n >= min_cell) {
            cells.push_back(pending);
            pending = {};
        }
    }
    if (pending.n > 0) {
        if (cells.empty()) {
            cells.push_back(pending);
        } else {
            cells.back().n += pending.n;
            cells.back().present += pending.present;
            cells.back().age_sum += pending.age_sum;
        }
    }
    return cells;
}

inline double pearson_or_nan(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace detail

// One row per deficit. Statistics that cannot be computed (no observed
// responses, fewer than three age cells, constant prevalence) are NaN.
inline std::vector<DeficitCriteria> criteria_report(const Cohort& cohort, const CriteriaOptions& opts = {}) {
    if (cohort.records.empty()) throw InsufficientData("findex", "criteria report needs a non-empty cohort");
    const std::size_t p = cohort.catalog.size();
    std::vector<DeficitCriteria> report(p);
    for (std::size_t j = 0; j < p; ++j) {
        auto& row = report[j];
        row.id = cohort.catalog[j].id;
        row.description = cohort.catalog[j].description;

        detail::Tally all, male, female;
        std::array<detail::Tally, kAgeBands.size()> bands{};
        std::map<int, detail::Tally> by_age;
        for (const auto& rec : cohort.records) {
            const Deficit d = rec.deficits[j];
            if (is_missing(d)) continue;
            const std::size_t hit = d == Deficit::present;
            auto add = [&](detail::Tally& t) {
                ++t.n;
                t.present += hit;
                t.age_sum += rec.age;
            };
            add(all);
            add(rec.sex == 1 ? female : male);
            for (std::size_t b = 0; b < kAgeBands.size(); ++b)
                if (rec.age >= kAgeBands[b].lo && rec.age <= kAgeBands[b].hi) add(bands[b]);
            add(by_age[rec.age]);
        }
        row.observed = all.n;
        row.prevalence = all.prevalence();
        row.prevalence_male = male.prevalence();
        row.prevalence_female = female.prevalence();
        for (std::size_t b = 0; b < kAgeBands.size(); ++b) {
            row.band_prevalence[b] = bands[b].prevalence();
            if (bands[b].n > 0 && bands[b].present == bands[b].n) row.saturated = true;
        }

        const auto cells = detail::merge_age_cells(by_age, opts.min_cell);
        std::vector<double> ages, prevs;
        for (const auto& c : cells) {
            ages.push_back(c.age_sum / static_cast<double>(c.n));
            prevs.push_back(c.prevalence());
        }
        row.age_cells = cells.size();
        row.age_corr = detail::pearson_or_nan(ages, prevs);
    }
    return report;
}

} // namespace frailtyfa
