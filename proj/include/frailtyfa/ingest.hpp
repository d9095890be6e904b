#pragma once

// Deficit catalog and cohort CSV ingestion.
//
// A catalog declares which survey columns are deficits and how each is
// dichotomized. A cohort file is a CSV with one row per participant and
// columns `age`, `sex`, every catalog id, and optionally `id` and an
// outcome column. Ingestion dichotomizes every deficit cell, keeps missing
// cells as missing, and moves participants that fail the inclusion rules
// into an exclusion log.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "frailtyfa/detail/text.hpp"
#include "frailtyfa/errors.hpp"

namespace frailtyfa {

enum class DeficitKind { binary, likert5, cutoff };
enum class CutoffDirection { below, above };

enum class Deficit : std::int8_t { absent = 0, present = 1, missing = -1 };

inline bool is_missing(Deficit d) noexcept { return d == Deficit::missing; }

struct LikertRule {
    std::vector<std::string> levels; // ordered best to worst
    std::vector<std::string> deficit_levels;
};

struct CutoffRule {
    double threshold = 0.0;
    CutoffDirection direction = CutoffDirection::below;
    bool inclusive = false;
};

struct DeficitEntry {
    std::string id;
    std::string description;
    DeficitKind kind = DeficitKind::binary;
    LikertRule likert;
    CutoffRule cutoff;
};

inline const std::vector<std::string>& standard_likert5_levels() {
    static const std::vector<std::string> levels{"Excellent", "Very good", "Good", "Fair", "Poor"};
    return levels;
}

inline std::string_view to_string(DeficitKind k) {
    switch (k) {
    case DeficitKind::binary: return "binary";
    case DeficitKind::likert5: return "likert5";
    case DeficitKind::cutoff: return "cutoff";
    }
    return "binary";
}

class DeficitCatalog {
public:
    DeficitCatalog() = default;

    // Validates ids (unique, non-empty), rule completeness and p >= 2.
    explicit DeficitCatalog(std::vector<DeficitEntry> entries) : entries_(std::move(entries)) {
        if (entries_.size() < 2)
            throw SchemaError("ingest", "catalog must declare at least 2 deficits, found " +
                                            std::to_string(entries_.size()));
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (e.id.empty()) throw SchemaError("ingest", "deficit #" + std::to_string(i) + " has an empty id");
            if (!index_.emplace(e.id, i).second)
                throw SchemaError("ingest", "duplicate deficit id '" + e.id + "'");
            if (e.kind == DeficitKind::likert5) {
                if (e.likert.levels.size() != 5)
                    throw SchemaError("ingest", "likert5 deficit '" + e.id + "' must declare 5 levels");
                if (e.likert.deficit_levels.empty())
                    throw SchemaError("ingest", "likert5 deficit '" + e.id + "' has no deficit_levels");
                for (const auto& d : e.likert.deficit_levels) {
                    bool known = false;
                    for (const auto& l : e.likert.levels) known = known || detail::lower(l) == detail::lower(d);
                    if (!known)
                        throw SchemaError("ingest", "likert5 deficit '" + e.id + "' names unknown level '" + d + "'");
                }
            }
        }
    }

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<DeficitEntry>& entries() const noexcept { return entries_; }
    const DeficitEntry& operator[](std::size_t i) const { return entries_.at(i); }

    std::optional<std::size_t> index_of(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<DeficitEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline DeficitEntry entry_from_json(const nlohmann::json& j, std::size_t pos) {
    const std::string where = "deficit #" + std::to_string(pos);
    if (!j.is_object()) throw SchemaError("ingest", where + " is not an object");
    DeficitEntry e;
    if (!j.contains("id") || !j["id"].is_string()) throw SchemaError("ingest", where + " lacks a string 'id'");
    e.id = j["id"].get<std::string>();
    e.description = j.value("description", std::string{});
    const std::string kind = j.value("kind", std::string{"binary"});
    const nlohmann::json rule = j.value("rule", nlohmann::json::object());
    if (kind == "binary") {
        e.kind = DeficitKind::binary;
    } else if (kind == "likert5") {
        e.kind = DeficitKind::likert5;
        if (!rule.contains("deficit_levels") || !rule["deficit_levels"].is_array())
            throw SchemaError("ingest", "likert5 deficit '" + e.id + "' needs rule.deficit_levels");
        e.likert.levels = rule.contains("levels") ? rule["levels"].get<std::vector<std::string>>()
                                                  : standard_likert5_levels();
        e.likert.deficit_levels = rule["deficit_levels"].get<std::vector<std::string>>();
    } else if (kind == "cutoff") {
        e.kind = DeficitKind::cutoff;
        if (!rule.contains("threshold") || !rule["threshold"].is_number())
            throw SchemaError("ingest", "cutoff deficit '" + e.id + "' needs numeric rule.threshold");
        if (!rule.contains("direction") || !rule["direction"].is_string())
            throw SchemaError("ingest", "cutoff deficit '" + e.id + "' needs rule.direction");
        e.cutoff.threshold = rule["threshold"].get<double>();
        const auto dir = rule["direction"].get<std::string>();
        if (dir == "below") e.cutoff.direction = CutoffDirection::below;
        else if (dir == "above") e.cutoff.direction = CutoffDirection::above;
        else throw SchemaError("ingest", "cutoff deficit '" + e.id + "' has direction '" + dir +
                                             "' (expected below|above)");
        e.cutoff.inclusive = rule.value("inclusive", false);
    } else {
        throw SchemaError("ingest", "deficit '" + e.id + "' has unknown kind '" + kind + "'");
    }
    return e;
}

} // namespace detail

inline DeficitCatalog parse_catalog(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("ingest", std::string("catalog is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("deficits") || !j["deficits"].is_array())
        throw SchemaError("ingest", "catalog must be an object with a 'deficits' array");
    std::vector<DeficitEntry> entries;
    try {
        for (std::size_t i = 0; i < j["deficits"].size(); ++i)
            entries.push_back(detail::entry_from_json(j["deficits"][i], i));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("ingest", std::string("catalog field has the wrong type: ") + e.what());
    }
    return DeficitCatalog(std::move(entries));
}

inline DeficitCatalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("ingest", "cannot open catalog '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_catalog(ss.str());
}

inline nlohmann::json catalog_to_json(const DeficitCatalog& catalog) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : catalog.entries()) {
        nlohmann::json j{{"id", e.id}, {"description", e.description}, {"kind", to_string(e.kind)}};
        if (e.kind == DeficitKind::likert5)
            j["rule"] = {{"levels", e.likert.levels}, {"deficit_levels", e.likert.deficit_levels}};
        else if (e.kind == DeficitKind::cutoff)
            j["rule"] = {{"threshold", e.cutoff.threshold},
                         {"direction", e.cutoff.direction == CutoffDirection::below ? "below" : "above"},
                         {"inclusive", e.cutoff.inclusive}};
        arr.push_back(std::move(j));
    }
    return nlohmann::json{{"deficits", std::move(arr)}};
}

inline bool is_missing_token(std::string_view raw) {
    raw = detail::trim(raw);
    return raw.empty() || raw == "NA" || raw == "na" || raw == "-1";
}

// Applies a catalog rule to one raw cell. Missing encodings map to
// Deficit::missing; nullopt means the value is not valid for the rule.
inline std::optional<Deficit> dichotomize(const DeficitEntry& entry, std::string_view raw) {
    if (is_missing_token(raw)) return Deficit::missing;
    raw = detail::trim(raw);
    switch (entry.kind) {
    case DeficitKind::binary: {
        auto v = detail::parse_double(raw);
        if (v && *v == 0.0) return Deficit::absent;
        if (v && *v == 1.0) return Deficit::present;
        return std::nullopt;
    }
    case DeficitKind::likert5: {
        const auto& levels = entry.likert.levels;
        std::optional<std::size_t> level;
        if (auto code = detail::parse_double(raw)) {
            if (*code >= 1 && *code <= 5 && *code == static_cast<int>(*code))
                level = static_cast<std::size_t>(*code) - 1;
        } else {
            const auto key = detail::lower(raw);
            for (std::size_t i = 0; i < levels.size(); ++i)
                if (detail::lower(levels[i]) == key) level = i;
        }
        if (!level) return std::nullopt;
        const auto name = detail::lower(levels[*level]);
        for (const auto& d : entry.likert.deficit_levels)
            if (detail::lower(d) == name) return Deficit::present;
        return Deficit::absent;
    }
    case DeficitKind::cutoff: {
        auto v = detail::parse_double(raw);
        if (!v) return std::nullopt;
        const auto& r = entry.cutoff;
        bool beyond = r.direction == CutoffDirection::below
                          ? (r.inclusive ? *v <= r.threshold : *v < r.threshold)
                          : (r.inclusive ? *v >= r.threshold : *v > r.threshold);
        return beyond ? Deficit::present : Deficit::absent;
    }
    }
    return std::nullopt;
}

inline constexpr double kOutcomeMin = 0.0;
inline constexpr double kOutcomeMax = 57.0;

struct ParticipantRecord {
    std::string id;
    int age = 0;
    int sex = 0; // 0 = male, 1 = female
    std::vector<Deficit> deficits;
    std::optional<double> outcome;

    std::size_t missing_count() const {
        std::size_t n = 0;
        for (auto d : deficits) n += is_missing(d);
        return n;
    }
};

struct ExclusionLog {
    std::size_t under_age = 0;
    std::size_t excess_missing = 0;
    std::size_t malformed = 0;

    std::size_t total() const noexcept { return under_age + excess_missing + malformed; }
};

struct Cohort {
    std::vector<ParticipantRecord> records;
    DeficitCatalog catalog;
    ExclusionLog exclusions;
    std::size_t input_rows = 0;
    std::string outcome_name = "outcome";
};

struct IngestOptions {
    int min_age = 65;
    std::size_t max_missing = 20;
    std::string outcome_col = "outcome";
};

namespace detail {

inline std::unordered_map<std::string, std::size_t> header_index(const std::vector<std::string>& header) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.size(); ++i) idx.emplace(std::string(trim(header[i])), i);
    return idx;
}

} // namespace detail

// Parses a cohort CSV from a stream. Rows keep input order.
inline Cohort parse_cohort(std::istream& in, const DeficitCatalog& catalog, const IngestOptions& opts = {}) {
    Cohort cohort;
    cohort.catalog = catalog;
    cohort.outcome_name = opts.outcome_col;

    std::string line;
    if (!std::getline(in, line)) throw ParseError("ingest", "cohort file is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto header = detail::split_csv(line);
    if (!header) throw ParseError("ingest", "cohort header has an unterminated quote");
    const auto idx = detail::header_index(*header);

    auto require = [&](const std::string& name) {
        auto it = idx.find(name);
        if (it == idx.end()) throw MissingColumn("ingest", "cohort is missing column '" + name + "'");
        return it->second;
    };
    const std::size_t age_col = require("age");
    const std::size_t sex_col = require("sex");
    std::vector<std::size_t> deficit_cols;
    deficit_cols.reserve(catalog.size());
    for (const auto& e : catalog.entries()) deficit_cols.push_back(require(e.id));
    std::optional<std::size_t> id_col, outcome_col;
    if (auto it = idx.find("id"); it != idx.end()) id_col = it->second;
    if (auto it = idx.find(opts.outcome_col); it != idx.end()) outcome_col = it->second;

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const std::string where = "row " + std::to_string(row);
        auto fields = detail::split_csv(line);
        if (!fields || fields->size() != header->size()) {
            ++cohort.exclusions.malformed;
            continue;
        }
        const auto& f = *fields;

        // Missing age or sex cannot be placed in the analysis; such rows are
        // logged as malformed. Present-but-invalid values are hard errors.
        if (is_missing_token(f[age_col]) || is_missing_token(f[sex_col])) {
            ++cohort.exclusions.malformed;
            continue;
        }
        auto age = detail::parse_double(f[age_col]);
        if (!age || *age < 0 || *age != static_cast<double>(static_cast<long>(*age)))
            throw ValueError("ingest", where + ": age '" + f[age_col] + "' is not a non-negative integer");
        auto sex = detail::parse_double(f[sex_col]);
        if (!sex || (*sex != 0.0 && *sex != 1.0))
            throw ValueError("ingest", where + ": sex '" + f[sex_col] + "' is not 0 or 1");

        ParticipantRecord rec;
        rec.id = id_col ? std::string(detail::trim(f[*id_col])) : std::to_string(row);
        rec.age = static_cast<int>(*age);
        rec.sex = static_cast<int>(*sex);
        rec.deficits.reserve(catalog.size());
        bool bad_cell = false;
        for (std::size_t j = 0; j < catalog.size() && !bad_cell; ++j) {
            auto d = dichotomize(catalog[j], f[deficit_cols[j]]);
            if (!d) bad_cell = true;
            else rec.deficits.push_back(*d);
        }
        if (bad_cell) {
            ++cohort.exclusions.malformed;
            continue;
        }
        if (outcome_col && !is_missing_token(f[*outcome_col])) {
            auto y = detail::parse_double(f[*outcome_col]);
            if (!y || *y < kOutcomeMin || *y > kOutcomeMax)
                throw ValueError("ingest", where + ": outcome '" + f[*outcome_col] + "' is outside [0, 57]");
            rec.outcome = *y;
        }

        if (rec.age < opts.min_age) {
            ++cohort.exclusions.under_age;
            continue;
        }
        if (rec.missing_count() > opts.max_missing) {
            ++cohort.exclusions.excess_missing;
            continue;
        }
        cohort.records.push_back(std::move(rec));
    }
    cohort.input_rows = row;
    return cohort;
}

inline Cohort parse_cohort(const std::string& path, const DeficitCatalog& catalog, const IngestOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("ingest", "cannot open cohort '" + path + "'");
    return parse_cohort(in, catalog, opts);
}

// Raw cell value that dichotomize() maps back to `d` under this entry's rule.
inline std::string encode_deficit(const DeficitEntry& entry, Deficit d) {
    if (is_missing(d)) return "NA";
    const bool present = d == Deficit::present;
    switch (entry.kind) {
    case DeficitKind::binary: return present ? "1" : "0";
    case DeficitKind::likert5: {
        for (const auto& level : entry.likert.levels) {
            bool is_deficit = false;
            for (const auto& dl : entry.likert.deficit_levels) is_deficit = is_deficit || detail::lower(dl) == detail::lower(level);
            if (is_deficit == present) return level;
        }
        break;
    }
    case DeficitKind::cutoff: {
        const auto& r = entry.cutoff;
        const double t = r.threshold;
        double v = 0.0;
        if (r.direction == CutoffDirection::below) v = present ? (r.inclusive ? t : t - 1) : (r.inclusive ? t + 1 : t);
        else v = present ? (r.inclusive ? t : t + 1) : (r.inclusive ? t - 1 : t);
        return detail::fmt6(v);
    }
    }
    throw SchemaError("ingest", "deficit '" + entry.id + "' cannot encode value");
}

// Writes records in the format parse_cohort reads, each deficit encoded in
// its catalog's raw form.
inline void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
    const auto& entries = cohort.catalog.entries();
    out << "id,age,sex";
    for (const auto& e : entries) out << ',' << detail::csv_escape(e.id);
    out << ',' << detail::csv_escape(cohort.outcome_name) << '\n';
    for (const auto& r : cohort.records) {
        out << detail::csv_escape(r.id) << ',' << r.age << ',' << r.sex;
        for (std::size_t j = 0; j < entries.size(); ++j) out << ',' << detail::csv_escape(encode_deficit(entries[j], r.deficits[j]));
        out << ',' << (r.outcome ? detail::fmt6(*r.outcome) : std::string("NA")) << '\n';
    }
}

// Row-major N x p view of the dichotomized deficits.
class DeficitMatrix {
public:
    DeficitMatrix() = default;
    DeficitMatrix(std::size_t rows, std::size_t cols, Deficit fill = Deficit::absent)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    explicit DeficitMatrix(const Cohort& cohort)
        : DeficitMatrix(cohort.records.size(), cohort.catalog.size()) {
        for (std::size_t i = 0; i < rows_; ++i) {
            const auto& d = cohort.records[i].deficits;
            if (d.size() != cols_)
                throw SchemaError("ingest", "record '" + cohort.records[i].id + "' has " +
                                                std::to_string(d.size()) + " deficits, catalog has " +
                                                std::to_string(cols_));
            std::copy(d.begin(), d.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    Deficit operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    Deficit& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Deficit> data_;
};

} // namespace frailtyfa
