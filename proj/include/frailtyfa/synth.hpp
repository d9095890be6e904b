#pragma once

// Seeded synthetic cohorts with a planted factor structure.
//
// Generative model (liability threshold): latent factors f ~ N(0, Phi);
// each deficit has liability lambda_i . f + u_i e_i + drift_i (age - center)/10
// with u_i^2 = 1 - lambda_i^T Phi lambda_i, and is present when the
// liability exceeds threshold_i. Every participant row is drawn from its own
// RNG stream so output is bit-identical for a given seed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "frailtyfa/detail/parallel.hpp"
#include "frailtyfa/errors.hpp"
#include "frailtyfa/ingest.hpp"

namespace frailtyfa {

struct OutcomeModel {
    Eigen::VectorXd latent_weights; // per factor; empty means no outcome column
    double sex_weight = 0.0;
    double age_weight = 0.0; // per nominal age SD (7 years)
    double noise_sd = 1.0;
    double mean = 42.64; // location and scale of the 0-57 total
    double sd = 8.11;
};

struct SynthSpec {
    std::size_t n = 2000;
    Eigen::MatrixXd loadings; // p x k
    Eigen::MatrixXd phi;      // k x k
    std::vector<double> thresholds;
    std::vector<double> age_drift; // liability shift per decade; empty = none
    double age_center = 75.0;
    OutcomeModel outcome;
    double missing_rate = 0.0;
    std::uint64_t seed = 1;
    double female_share = 0.566;
    std::array<double, 4> age_band_shares{0.260, 0.472, 0.232, 0.036}; // 65-69, 70-79, 80-89, 90-99
    std::vector<DeficitEntry> entries; // empty = binary V1..Vp
};

struct SynthCohort {
    Cohort cohort;
    Eigen::MatrixXd latents; // N x k
};

inline double threshold_for_prevalence(double prevalence) {
    if (prevalence <= 0.0) return std::numeric_limits<double>::infinity();
    if (prevalence >= 1.0) return -std::numeric_limits<double>::infinity();
    return boost::math::quantile(boost::math::complement(boost::math::normal(), prevalence));
}

inline std::vector<double> thresholds_from_prevalence(const std::vector<double>& prevalence) {
    std::vector<double> t;
    t.reserve(prevalence.size());
    for (double p : prevalence) t.push_back(threshold_for_prevalence(p));
    return t;
}

inline Eigen::VectorXd planted_communalities(const SynthSpec& s) {
    return (s.loadings * s.phi).cwiseProduct(s.loadings).rowwise().sum();
}

inline void validate(const SynthSpec& s) {
    const Eigen::Index p = s.loadings.rows(), k = s.loadings.cols();
    if (p < 2 || k < 1) throw SpecError("synth", "loadings must be p x k with p >= 2, k >= 1");
    if (s.phi.rows() != k || s.phi.cols() != k) throw SpecError("synth", "phi must be k x k");
    if (!s.phi.isApprox(s.phi.transpose(), 1e-12)) throw SpecError("synth", "phi must be symmetric");
    if ((s.phi.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) throw SpecError("synth", "phi must have a unit diagonal");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.phi, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) throw SpecError("synth", "phi must be positive semidefinite");
    if (static_cast<Eigen::Index>(s.thresholds.size()) != p) throw SpecError("synth", "need one threshold per deficit");
    if (!s.age_drift.empty() && static_cast<Eigen::Index>(s.age_drift.size()) != p)
        throw SpecError("synth", "age_drift must be empty or have one entry per deficit");
    if (planted_communalities(s).maxCoeff() > 1.0 + 1e-12) throw SpecError("synth", "planted communality exceeds 1");
    if (!(s.missing_rate >= 0.0 && s.missing_rate <= 0.2)) throw SpecError("synth", "missing_rate must lie in [0, 0.2]");
    if (!(s.female_share >= 0.0 && s.female_share <= 1.0)) throw SpecError("synth", "female_share must lie in [0, 1]");
    if (s.outcome.latent_weights.size() != 0 && s.outcome.latent_weights.size() != k)
        throw SpecError("synth", "outcome weights need one entry per factor");
    if (!s.entries.empty() && static_cast<Eigen::Index>(s.entries.size()) != p)
        throw SpecError("synth", "entries must match the number of deficits");
    if (s.n == 0) throw SpecError("synth", "n must be positive");
}

inline DeficitCatalog synth_catalog(const SynthSpec& s) {
    if (!s.entries.empty()) return DeficitCatalog(s.entries);
    std::vector<DeficitEntry> e;
    for (Eigen::Index i = 0; i < s.loadings.rows(); ++i) e.push_back({"V" + std::to_string(i + 1), "", DeficitKind::binary, {}, {}});
    return DeficitCatalog(std::move(e));
}

inline SynthCohort generate(const SynthSpec& s) {
    validate(s);
    const Eigen::Index p = s.loadings.rows(), k = s.loadings.cols();
    const Eigen::MatrixXd chol = [&] {
        // LDLT tolerates a singular (PSD) phi
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.phi);
        return Eigen::MatrixXd(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
    }();
    const Eigen::VectorXd unique_sd = (Eigen::VectorXd::Ones(p) - planted_communalities(s)).cwiseMax(0.0).cwiseSqrt();
    const bool has_outcome = s.outcome.latent_weights.size() == k;
    double outcome_scale = 1.0;
    if (has_outcome) {
        const auto& w = s.outcome.latent_weights;
        const double var = w.dot(s.phi * w) + s.outcome.sex_weight * s.outcome.sex_weight +
                           s.outcome.age_weight * s.outcome.age_weight + s.outcome.noise_sd * s.outcome.noise_sd;
        outcome_scale = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
    }
    const double sex_sd = std::sqrt(std::max(1e-12, s.female_share * (1.0 - s.female_share)));
    static constexpr std::array<int, 4> band_lo{65, 70, 80, 90};
    static constexpr std::array<int, 4> band_hi{69, 79, 89, 99};

    SynthCohort out;
    out.cohort.catalog = synth_catalog(s);
    out.cohort.records.resize(s.n);
    out.cohort.input_rows = s.n;
    out.latents.resize(static_cast<Eigen::Index>(s.n), k);

    detail::parallel_for(s.n, [&](std::size_t i) {
        std::mt19937_64 rng(detail::mix_seed(s.seed, i));
        std::normal_distribution<double> z;
        std::uniform_real_distribution<double> u;
        ParticipantRecord rec;
        rec.id = "S" + std::to_string(i + 1);
        rec.sex = u(rng) < s.female_share ? 1 : 0;
        std::discrete_distribution<int> band(s.age_band_shares.begin(), s.age_band_shares.end());
        const int b = band(rng);
        rec.age = std::uniform_int_distribution<int>(band_lo[static_cast<std::size_t>(b)], band_hi[static_cast<std::size_t>(b)])(rng);

        Eigen::VectorXd e(k);
        for (Eigen::Index j = 0; j < k; ++j) e(j) = z(rng);
        const Eigen::VectorXd f = chol * e;
        const double decades = (rec.age - s.age_center) / 10.0;
        rec.deficits.resize(static_cast<std::size_t>(p));
        for (Eigen::Index j = 0; j < p; ++j) {
            double liability = s.loadings.row(j).dot(f) + unique_sd(j) * z(rng);
            if (!s.age_drift.empty()) liability += s.age_drift[static_cast<std::size_t>(j)] * decades;
            const bool present = liability > s.thresholds[static_cast<std::size_t>(j)];
            const bool masked = u(rng) < s.missing_rate;
            rec.deficits[static_cast<std::size_t>(j)] =
                masked ? Deficit::missing : present ? Deficit::present : Deficit::absent;
        }
        if (has_outcome) {
            const double raw = s.outcome.latent_weights.dot(f) +
                               s.outcome.sex_weight * (rec.sex - s.female_share) / sex_sd +
                               s.outcome.age_weight * (rec.age - s.age_center) / 7.0 + s.outcome.noise_sd * z(rng);
            rec.outcome = std::clamp(s.outcome.mean + s.outcome.sd * raw * outcome_scale, kOutcomeMin, kOutcomeMax);
        }
        out.latents.row(static_cast<Eigen::Index>(i)) = f.transpose();
        out.cohort.records[i] = std::move(rec);
    });
    return out;
}

// Presets ----------------------------------------------------------------

struct PresetItem {
    const char* id;
    const char* description;
    double prevalence;       // overall ELSA wave 9 prevalence
    int factor;              // subdimension the item loads on most strongly
    double reference_loading; // magnitude of that loading in the ELSA solution
    bool likert;             // 5-point self-rating, Fair/Poor = deficit
};

inline const std::vector<PresetItem>& elsa58_items() {
    static const std::vector<PresetItem> items{
        {"hemobwa", "Difficulty walking 100m", 0.164, 0, 0.64, false},
        {"hemobsi", "Difficulty sitting 2 hrs", 0.121, 0, 0.49, false},
        {"hemobch", "Difficulty getting up from chair", 0.271, 0, 0.67, false},
        {"hemobcs", "Difficulty climbing several flights of stairs without resting", 0.383, 0, 0.73, false},
        {"hemobcl", "Difficulty climbing one flight of stairs without resting", 0.179, 0, 0.67, false},
        {"hemobst", "Difficulty stooping, kneeling or crouching", 0.450, 0, 0.69, false},
        {"hemobre", "Difficulty extending arms above shoulders", 0.119, 0, 0.40, false},
        {"hemobpu", "Difficulty pulling or pushing large objects", 0.200, 0, 0.66, false},
        {"hemobli", "Difficulty lifting or carrying weights over 10 pounds", 0.261, 0, 0.69, false},
        {"hemobpi", "Difficulty picking up a 5p coin", 0.077, 1, 0.27, false},
        {"headldr", "Difficulty dressing", 0.154, 0, 0.44, false},
        {"headlwa", "Difficulty walking across a room", 0.051, 1, 0.47, false},
        {"headlba", "Difficulty bathing", 0.112, 1, 0.47, false},
        {"headlea", "Difficulty eating, such as cutting up food", 0.034, 1, 0.53, false},
        {"headlbe", "Difficulty getting in and out of bed", 0.074, 1, 0.38, false},
        {"headlwc", "Difficulty using the toilet", 0.051, 1, 0.49, false},
        {"headlma", "Difficulty using map", 0.065, 1, 0.60, false},
        {"headlpr", "Difficulty preparing a hot meal", 0.070, 1, 0.72, false},
        {"headlsh", "Difficulty shopping for groceries", 0.117, 1, 0.48, false},
        {"headlph", "Difficulty making phone calls", 0.043, 1, 0.69, false},
        {"headlme", "Difficulty taking medications", 0.045, 1, 0.77, false},
        {"headlhg", "Difficulty doing housework / gardening", 0.194, 0, 0.57, false},
        {"headlmo", "Difficulty managing money", 0.056, 1, 0.75, false},
        {"hedimbp", "High blood pressure", 0.454, 0, 0.24, false},
        {"hediman", "Angina", 0.036, 0, 0.16, false},
        {"hedimmi", "Heart attack", 0.035, 0, 0.14, false},
        {"hedimhf", "Congestive heart failure", 0.014, 0, 0.16, false},
        {"hedimar", "Abnormal heart rhythm", 0.107, 0, 0.19, false},
        {"hedimdi", "Diabetes", 0.143, 0, 0.19, false},
        {"hedimst", "Stroke", 0.049, 0, 0.14, false},
        {"hediblu", "Lung disease", 0.068, 0, 0.26, false},
        {"hedibas", "Asthma", 0.116, 0, 0.18, false},
        {"hedibar", "Arthritis", 0.488, 0, 0.48, false},
        {"hedibos", "Osteoporosis", 0.124, 0, 0.20, false},
        {"hedibca", "Cancer", 0.100, 0, 0.07, false},
        {"hedibpd", "Parkinson's", 0.012, 1, 0.11, false},
        {"hedibps", "Psychiatric condition", 0.079, 2, 0.16, false},
        {"hedibad", "Alzheimer's", 0.010, 1, 0.42, false},
        {"hedibde", "Dementia", 0.030, 1, 0.48, false},
        {"psceda", "Depressed", 0.105, 2, 0.72, false},
        {"pscedb", "Felt everything was an effort", 0.187, 2, 0.47, false},
        {"pscedc", "Restless sleep", 0.403, 2, 0.26, false},
        {"pscedd", "Lack of happiness", 0.075, 2, 0.65, false},
        {"pscede", "Loneliness", 0.105, 2, 0.50, false},
        {"pscedf", "Lack of life enjoyment", 0.075, 2, 0.59, false},
        {"pscedg", "Sadness", 0.169, 2, 0.60, false},
        {"pscedh", "Could not get going much of the time", 0.189, 2, 0.40, false},
        {"hehelp", "Self-reported general health", 0.267, 0, 0.59, true},
        {"heeye", "Eyesight impairment", 0.042, 1, 0.27, true},
        {"hehear", "Hearing impairment", 0.255, 0, 0.17, true},
        {"hefla", "Fall", 0.281, 0, 0.26, false},
        {"hefrac", "Hip fracture", 0.011, 0, 0.10, false},
        {"heji", "Joint replacement", 0.043, 0, 0.16, false},
        {"mmpain", "Pain whilst walking", 0.077, 0, 0.30, false},
        {"cfdatd", "Whether correct day of month given", 0.163, 3, 0.32, false},
        {"cfdatm", "Whether correct month given", 0.029, 3, 0.54, false},
        {"cfdaty", "Whether correct year given", 0.033, 3, 0.55, false},
        {"cfday", "Whether correct day given", 0.021, 3, 0.45, false},
    };
    return items;
}

inline std::vector<DeficitEntry> elsa58_entries() {
    std::vector<DeficitEntry> entries;
    for (const auto& it : elsa58_items()) {
        DeficitEntry e;
        e.id = it.id;
        e.description = it.description;
        if (it.likert) {
            e.kind = DeficitKind::likert5;
            e.likert.levels = standard_likert5_levels();
            e.likert.deficit_levels = {"Fair", "Poor"};
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

inline DeficitCatalog elsa58_catalog() { return DeficitCatalog(elsa58_entries()); }

inline Eigen::MatrixXd elsa58_phi() {
    Eigen::MatrixXd phi(4, 4);
    phi << 1.0, 0.5, 0.3, 0.2,
           0.5, 1.0, 0.2, 0.3,
           0.3, 0.2, 1.0, 0.1,
           0.2, 0.3, 0.1, 1.0;
    return phi;
}

// Four subdimensions with ELSA-like prevalences. Each item loads on its
// strongest ELSA subdimension only, with liability loading
// min(0.85, 0.35 + 0.6 * reference_loading). The outcome follows the
// direction and rough size of the ELSA quality-of-life associations.
inline SynthSpec elsa58_spec(std::size_t n = 4971, std::uint64_t seed = 1) {
    const auto& items = elsa58_items();
    const auto p = static_cast<Eigen::Index>(items.size());
    SynthSpec s;
    s.n = n;
    s.seed = seed;
    s.loadings = Eigen::MatrixXd::Zero(p, 4);
    std::vector<double> prev;
    for (Eigen::Index i = 0; i < p; ++i) {
        const auto& it = items[static_cast<std::size_t>(i)];
        s.loadings(i, it.factor) = std::min(0.85, 0.35 + 0.6 * it.reference_loading);
        prev.push_back(it.prevalence);
        const std::string id = it.id;
        const bool psychological = id.rfind("psced", 0) == 0 || id == "hedibps";
        s.age_drift.push_back(psychological ? 0.0 : 0.15);
    }
    s.phi = elsa58_phi();
    s.thresholds = thresholds_from_prevalence(prev);
    s.outcome.latent_weights = Eigen::Vector4d(-0.37, 0.08, -0.40, -0.04);
    s.outcome.sex_weight = 0.19;
    s.outcome.age_weight = -0.08;
    s.outcome.noise_sd = 0.8;
    s.entries = elsa58_entries();
    return s;
}

// k balanced subdimensions over the 58 ELSA prevalences: items are ranked
// by prevalence and dealt round-robin to factors, each with the same
// loading. loading = 0 gives a pure-noise cohort.
inline SynthSpec balanced_spec(std::size_t n, std::uint64_t seed, Eigen::Index k = 4, double loading = 0.6,
                               double factor_corr = 0.2) {
    const auto& items = elsa58_items();
    const auto p = static_cast<Eigen::Index>(items.size());
    std::vector<Eigen::Index> rank(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) rank[static_cast<std::size_t>(i)] = i;
    std::stable_sort(rank.begin(), rank.end(), [&](Eigen::Index a, Eigen::Index b) {
        return items[static_cast<std::size_t>(a)].prevalence > items[static_cast<std::size_t>(b)].prevalence;
    });
    SynthSpec s;
    s.n = n;
    s.seed = seed;
    s.loadings = Eigen::MatrixXd::Zero(p, k);
    std::vector<double> prev(static_cast<std::size_t>(p));
    for (Eigen::Index r = 0; r < p; ++r) {
        const Eigen::Index i = rank[static_cast<std::size_t>(r)];
        s.loadings(i, r % k) = loading;
        prev[static_cast<std::size_t>(i)] = items[static_cast<std::size_t>(i)].prevalence;
    }
    s.phi = Eigen::MatrixXd::Constant(k, k, factor_corr);
    s.phi.diagonal().setOnes();
    s.thresholds = thresholds_from_prevalence(prev);
    s.outcome.latent_weights = Eigen::VectorXd::Zero(k);
    if (k >= 1) s.outcome.latent_weights(0) = -0.4;
    if (k >= 2) s.outcome.latent_weights(1) = 0.1;
    if (k >= 3) s.outcome.latent_weights(2) = -0.4;
    s.outcome.noise_sd = 0.8;
    s.entries = elsa58_entries();
    return s;
}

// JSON form of a spec (the CLI's --spec file). Infinite thresholds are
// written as null.
inline nlohmann::json spec_to_json(const SynthSpec& s) {
    auto matrix = [](const Eigen::MatrixXd& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            nlohmann::json r = nlohmann::json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
            rows.push_back(std::move(r));
        }
        return rows;
    };
    nlohmann::json thr = nlohmann::json::array();
    for (double t : s.thresholds) thr.push_back(std::isfinite(t) ? nlohmann::json(t) : nlohmann::json(nullptr));
    nlohmann::json j{
        {"n", s.n},
        {"seed", s.seed},
        {"loadings", matrix(s.loadings)},
        {"phi", matrix(s.phi)},
        {"thresholds", thr},
        {"age_drift", s.age_drift},
        {"age_center", s.age_center},
        {"missing_rate", s.missing_rate},
        {"female_share", s.female_share},
        {"age_band_shares", s.age_band_shares},
        {"outcome",
         {{"latent_weights", std::vector<double>(s.outcome.latent_weights.data(),
                                                 s.outcome.latent_weights.data() + s.outcome.latent_weights.size())},
          {"sex_weight", s.outcome.sex_weight},
          {"age_weight", s.outcome.age_weight},
          {"noise_sd", s.outcome.noise_sd},
          {"mean", s.outcome.mean},
          {"sd", s.outcome.sd}}},
    };
    if (!s.entries.empty()) j["catalog"] = catalog_to_json(DeficitCatalog(s.entries));
    return j;
}

inline SynthSpec spec_from_json(const nlohmann::json& j) {
    try {
        SynthSpec s;
        auto matrix = [](const nlohmann::json& rows) {
            const auto r = static_cast<Eigen::Index>(rows.size());
            const auto c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
            Eigen::MatrixXd m(r, c);
            for (Eigen::Index i = 0; i < r; ++i) {
                if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
                    throw SpecError("synth", "ragged matrix in spec");
                for (Eigen::Index k = 0; k < c; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
            }
            return m;
        };
        s.n = j.at("n").get<std::size_t>();
        s.seed = j.value("seed", std::uint64_t{1});
        s.loadings = matrix(j.at("loadings"));
        s.phi = matrix(j.at("phi"));
        if (j.contains("thresholds")) {
            for (const auto& t : j["thresholds"])
                s.thresholds.push_back(t.is_null() ? std::numeric_limits<double>::infinity() : t.get<double>());
        } else {
            s.thresholds = thresholds_from_prevalence(j.at("prevalences").get<std::vector<double>>());
        }
        s.age_drift = j.value("age_drift", std::vector<double>{});
        s.age_center = j.value("age_center", 75.0);
        s.missing_rate = j.value("missing_rate", 0.0);
        s.female_share = j.value("female_share", 0.566);
        if (j.contains("age_band_shares")) s.age_band_shares = j["age_band_shares"].get<std::array<double, 4>>();
        if (j.contains("outcome")) {
            const auto& o = j["outcome"];
            const auto w = o.value("latent_weights", std::vector<double>{});
            s.outcome.latent_weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
            s.outcome.sex_weight = o.value("sex_weight", 0.0);
            s.outcome.age_weight = o.value("age_weight", 0.0);
            s.outcome.noise_sd = o.value("noise_sd", 1.0);
            s.outcome.mean = o.value("mean", 42.64);
            s.outcome.sd = o.value("sd", 8.11);
        }
        if (j.contains("catalog")) s.entries = parse_catalog(j["catalog"].dump()).entries();
        validate(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw SpecError("synth", std::string("malformed spec: ") + e.what());
    }
}

// Alignment ----------------------------------------------------------------

inline double tucker_congruence(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double d = std::sqrt(x.squaredNorm() * y.squaredNorm());
    return d > 0.0 ? x.dot(y) / d : 0.0;
}

struct Alignment {
    std::vector<Eigen::Index> permutation; // planted factor j <- recovered column permutation[j]
    std::vector<int> signs;
    Eigen::VectorXd congruence; // |congruence| per planted factor after alignment
};

// Greedy matching on absolute Tucker congruence: repeatedly pair the
// planted and recovered columns with the largest remaining |congruence|.
inline Alignment align(const Eigen::MatrixXd& recovered, const Eigen::MatrixXd& planted) {
    if (recovered.rows() != planted.rows() || recovered.cols() != planted.cols())
        throw SchemaError("synth", "recovered and planted loadings differ in shape");
    const Eigen::Index k = planted.cols();
    Eigen::MatrixXd cong(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) cong(a, b) = tucker_congruence(planted.col(a), recovered.col(b));
    Alignment al;
    al.permutation.assign(static_cast<std::size_t>(k), -1);
    al.signs.assign(static_cast<std::size_t>(k), 1);
    al.congruence = Eigen::VectorXd::Zero(k);
    std::vector<bool> used_p(static_cast<std::size_t>(k)), used_r(static_cast<std::size_t>(k));
    for (Eigen::Index step = 0; step < k; ++step) {
        Eigen::Index bp = -1, br = -1;
        double best = -1.0;
        for (Eigen::Index a = 0; a < k; ++a) {
            if (used_p[static_cast<std::size_t>(a)]) continue;
            for (Eigen::Index b = 0; b < k; ++b) {
                if (used_r[static_cast<std::size_t>(b)]) continue;
                if (std::abs(cong(a, b)) > best) {
                    best = std::abs(cong(a, b));
                    bp = a;
                    br = b;
                }
            }
        }
        used_p[static_cast<std::size_t>(bp)] = used_r[static_cast<std::size_t>(br)] = true;
        al.permutation[static_cast<std::size_t>(bp)] = br;
        al.signs[static_cast<std::size_t>(bp)] = cong(bp, br) < 0 ? -1 : 1;
        al.congruence(bp) = best;
    }
    return al;
}

// Recovered columns reordered and sign-flipped to match the planted ones.
inline Eigen::MatrixXd aligned(const Eigen::MatrixXd& recovered, const Alignment& al) {
    Eigen::MatrixXd out(recovered.rows(), recovered.cols());
    for (std::size_t j = 0; j < al.permutation.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = al.signs[j] * recovered.col(al.permutation[j]);
    return out;
}

} // namespace frailtyfa
