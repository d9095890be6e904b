#pragma once

// Command-line orchestration. run_pipeline() parses arguments, runs the
// stages a subcommand needs and writes its outputs plus run_meta.json.
// Exit codes: 0 success, 2 validation error, 1 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "frailtyfa/corr.hpp"
#include "frailtyfa/efa.hpp"
#include "frailtyfa/errors.hpp"
#include "frailtyfa/findex.hpp"
#include "frailtyfa/ingest.hpp"
#include "frailtyfa/regress.hpp"
#include "frailtyfa/report.hpp"
#include "frailtyfa/rotate.hpp"
#include "frailtyfa/scores.hpp"
#include "frailtyfa/synth.hpp"
#include "frailtyfa/version.hpp"

namespace frailtyfa {

struct PipelineConfig {
    std::string command;
    std::string input;
    std::string catalog;
    std::string outcome_col = "outcome";
    std::string out_dir = ".";
    int min_age = 65;
    std::size_t max_missing = 20;
    std::optional<std::size_t> nfactors;
    bool auto_nfactors = false;
    std::size_t replicates = 100;
    double quantile = 0.95;
    double salience = 0.20;
    std::uint64_t seed = 1;
    std::string pa_null = "normal";
    std::size_t min_pairs = 30;
    std::size_t restarts = 10;
    // synth only
    std::string spec;
    std::string preset = "elsa58";
    std::size_t n = 4971;
    double missing_rate = 0.0;
};

namespace detail {

inline std::uint64_t file_fingerprint(const std::string& path, std::uintmax_t& bytes) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    bytes = 0;
    for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 0x100000001b3ULL;
        ++bytes;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)), dir_(cfg_.out_dir) {}

    int run() {
        std::filesystem::create_directories(dir_);
        const auto& c = cfg_.command;
        if (c == "synth") return synth();
        ingest();
        if (c == "ingest") {
            emit("cohort_clean.csv", [&] {
                std::ostringstream s;
                write_cohort_csv(s, cohort_);
                return s.str();
            }());
            emit("exclusions.json", dump_json(exclusions_json()));
        }
        if (c == "fi" || c == "report") fi_outputs();
        if (c == "corr" || c == "report") corr_outputs();
        if (c == "pa" || c == "report") pa_outputs();
        if (c == "efa" || c == "report") efa_outputs();
        if (c == "scores" || c == "report") scores_outputs();
        if (c == "regress" || c == "report") regress_outputs();
        write_meta();
        return 0;
    }

private:
    PipelineConfig cfg_;
    std::filesystem::path dir_;
    std::vector<std::string> written_;
    nlohmann::json summary_ = nlohmann::json::object();

    Cohort cohort_;
    std::optional<DeficitMatrix> matrix_;
    std::optional<std::vector<FrailtyResult>> fi_;
    std::optional<CorrMatrix> corr_;
    std::optional<FactorabilityReport> factorability_;
    std::optional<ParallelResult> pa_;
    std::optional<UnrotatedSolution> unrotated_;
    std::optional<RotatedSolution> rotated_;
    std::optional<ScoreMatrix> scores_;
    std::size_t k_ = 0;
    bool k_auto_ = false;

    void emit(const std::string& name, const std::string& content) {
        write_text(dir_ / name, content);
        written_.push_back(name);
    }
    void emit_svg(const std::string& name, const std::string& svg) {
        write_svg(dir_ / name, svg);
        written_.push_back(name);
    }

    void ingest() {
        const DeficitCatalog catalog = load_catalog(cfg_.catalog);
        IngestOptions o;
        o.min_age = cfg_.min_age;
        o.max_missing = cfg_.max_missing;
        o.outcome_col = cfg_.outcome_col;
        cohort_ = parse_cohort(cfg_.input, catalog, o);
        if (cohort_.records.empty()) throw InsufficientData("cli", "no participants remain after exclusions");
        summary_["input_rows"] = cohort_.input_rows;
        summary_["included"] = cohort_.records.size();
        summary_["exclusions"] = exclusions_json();
    }

    nlohmann::json exclusions_json() const {
        return {{"input_rows", cohort_.input_rows},
                {"included", cohort_.records.size()},
                {"under_age", cohort_.exclusions.under_age},
                {"excess_missing", cohort_.exclusions.excess_missing},
                {"malformed", cohort_.exclusions.malformed}};
    }

    const DeficitMatrix& matrix() {
        if (!matrix_) matrix_.emplace(cohort_);
        return *matrix_;
    }

    const std::vector<FrailtyResult>& fi() {
        if (!fi_) fi_ = frailty_indices(cohort_);
        return *fi_;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (const auto& e : cohort_.catalog.entries()) out.push_back(e.id);
        return out;
    }

    const CorrMatrix& corr() {
        if (!corr_) {
            CorrOptions o;
            o.min_pairs = cfg_.min_pairs;
            const CorrMatrix raw = pairwise_phi_matrix(matrix(), ids(), o);
            corr_ = smooth_psd(raw);
            factorability_ = factorability(*corr_, cohort_.records.size());
        }
        return *corr_;
    }

    const ParallelResult& pa() {
        if (!pa_) {
            ParallelOptions o;
            o.replicates = cfg_.replicates;
            o.quantile = cfg_.quantile;
            o.seed = cfg_.seed;
            if (cfg_.pa_null == "binary") {
                o.null_model = NullModel::binary;
                for (const auto& d : criteria()) o.prevalences.push_back(d.prevalence);
            }
            pa_ = parallel_analysis(cohort_.records.size(), static_cast<std::size_t>(corr().size()), eigenvalues(corr()), o);
            summary_["suggested_k"] = pa_->suggested_k;
        }
        return *pa_;
    }

    std::vector<DeficitCriteria> criteria() { return criteria_report(cohort_); }

    std::size_t factor_count() {
        if (k_ == 0) {
            if (cfg_.nfactors && !cfg_.auto_nfactors) {
                k_ = *cfg_.nfactors;
            } else {
                k_ = pa().suggested_k;
                k_auto_ = true;
                if (k_ == 0) throw InsufficientData("cli", "parallel analysis retained no factors");
            }
            summary_["nfactors"] = k_;
        }
        return k_;
    }

    const RotatedSolution& rotated() {
        if (!rotated_) {
            unrotated_ = extract_minres(corr(), factor_count());
            ObliminOptions o;
            o.restarts = cfg_.restarts;
            o.seed = cfg_.seed;
            rotated_ = oblimin_rotate(*unrotated_, o);
        }
        return *rotated_;
    }

    const ScoreMatrix& scores() {
        if (!scores_) scores_ = regression_scores(matrix(), corr(), rotated());
        return *scores_;
    }

    void fi_outputs() {
        emit("fi_scores.csv", fi_scores_csv(cohort_, fi()));
        emit("deficit_criteria.csv", deficit_criteria_csv(criteria()));
    }

    void corr_outputs() {
        const auto& c = corr();
        emit("corr_matrix.csv", labelled_matrix_csv(c.ids, c.r));
        emit("corr_npairs.csv", labelled_matrix_csv(c.ids, c.n_pairs));
        emit("factorability.json", dump_json(factorability_json(*factorability_, c, cohort_.records.size())));
    }

    void pa_outputs() {
        emit("scree.csv", scree_csv(pa()));
        emit_svg("scree.svg", scree_svg(pa()));
    }

    void efa_outputs() {
        const auto& rot = rotated();
        const auto fit = fit_stats(corr(), *unrotated_);
        summary_["rmsr"] = fit.rmsr;
        if (k_auto_ && cfg_.command == "efa") pa_outputs();
        emit("efa_unrotated.csv", unrotated_csv(corr().ids, *unrotated_));
        emit("efa_fit.json", dump_json(efa_fit_json(*unrotated_, fit, rot, k_, k_auto_)));
        emit("loadings.csv", loadings_csv(cohort_.catalog, rot.pattern));
        emit("phi.csv", factor_matrix_csv(rot.phi));
        const auto sal = salience(rot.pattern, corr().ids, cfg_.salience);
        emit("salience.json", dump_json(salience_json(sal)));
        emit_svg("loadings.svg", loadings_svg(corr().ids, rot.pattern));
    }

    void scores_outputs() {
        const auto& s = scores();
        emit("scores.csv", scores_csv(cohort_, s, fi()));
        emit("score_correlations.csv", score_correlations_csv(score_correlation_report(s, fi())));
    }

    // Model 1: outcome ~ fi + sex + age. Model 2: outcome ~ F1..Fk + sex + age.
    // Both use the rows complete for every variable so they are comparable.
    void regress_outputs() {
        const auto& s = scores();
        const auto& f = fi();
        const std::size_t n = cohort_.records.size();
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        std::vector<double> y(n), fi_v(n), sex(n), age(n);
        std::vector<Predictor> factors;
        for (Eigen::Index j = 0; j < s.scores.cols(); ++j) factors.push_back({"F" + std::to_string(j + 1), std::vector<double>(n)});
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = cohort_.records[i];
            fi_v[i] = f[i].fi;
            sex[i] = r.sex;
            age[i] = r.age;
            bool complete = r.outcome.has_value() && std::isfinite(fi_v[i]);
            for (Eigen::Index j = 0; j < s.scores.cols(); ++j) {
                factors[static_cast<std::size_t>(j)].values[i] = s.scores(static_cast<Eigen::Index>(i), j);
                complete = complete && std::isfinite(s.scores(static_cast<Eigen::Index>(i), j));
            }
            y[i] = complete ? *r.outcome : nan;
        }
        std::vector<Predictor> p1{{"fi", fi_v}, {"sex", sex}, {"age", age}};
        std::vector<Predictor> p2 = factors;
        p2.push_back({"sex", sex});
        p2.push_back({"age", age});
        NamedFit m1{"model1", standardized_ols(cohort_.outcome_name, y, p1)};
        NamedFit m2{"model2", standardized_ols(cohort_.outcome_name, y, p2)};
        const ModelComparison cmp = compare_models(m1.fit, m2.fit);
        summary_["delta_r2"] = cmp.delta_r2;
        emit("regression.csv", regression_csv({m1, m2}));
        emit("model_comparison.json", dump_json(model_comparison_json(m1, m2, cmp)));
    }

    int synth() {
        SynthSpec spec;
        if (!cfg_.spec.empty()) {
            std::ifstream in(cfg_.spec);
            if (!in) throw ParseError("synth", "cannot open spec '" + cfg_.spec + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("synth", std::string("spec is not valid JSON: ") + e.what());
            }
            spec = spec_from_json(j);
        } else if (cfg_.preset == "elsa58") {
            spec = elsa58_spec(cfg_.n, cfg_.seed);
        } else if (cfg_.preset == "balanced") {
            spec = balanced_spec(cfg_.n, cfg_.seed);
        } else if (cfg_.preset == "noise") {
            spec = balanced_spec(cfg_.n, cfg_.seed, 4, 0.0, 0.0);
        } else {
            throw SpecError("synth", "unknown preset '" + cfg_.preset + "'");
        }
        if (cfg_.spec.empty()) spec.missing_rate = cfg_.missing_rate;
        const SynthCohort sc = generate(spec);
        std::ostringstream csv;
        write_cohort_csv(csv, sc.cohort);
        emit("cohort.csv", csv.str());
        emit("catalog.json", dump_json(catalog_to_json(sc.cohort.catalog)));
        emit("synth_spec.json", dump_json(spec_to_json(spec)));
        summary_["n"] = spec.n;
        write_meta();
        return 0;
    }

    void write_meta() {
        nlohmann::json inputs = nlohmann::json::object();
        for (const auto& [name, path] : {std::pair<std::string, std::string>{"input", cfg_.input},
                                         {"catalog", cfg_.catalog},
                                         {"spec", cfg_.spec}}) {
            if (path.empty()) continue;
            std::uintmax_t bytes = 0;
            const auto h = file_fingerprint(path, bytes);
            inputs[name] = {{"path", path}, {"bytes", bytes}, {"fnv1a64", hex64(h)}};
        }
        nlohmann::json config{
            {"command", cfg_.command},
            {"outcome_col", cfg_.outcome_col},
            {"min_age", cfg_.min_age},
            {"max_missing", cfg_.max_missing},
            {"nfactors", cfg_.nfactors ? nlohmann::json(*cfg_.nfactors) : nlohmann::json(nullptr)},
            {"auto_nfactors", cfg_.auto_nfactors || !cfg_.nfactors},
            {"replicates", cfg_.replicates},
            {"quantile", cfg_.quantile},
            {"salience", cfg_.salience},
            {"pa_null", cfg_.pa_null},
            {"min_pairs", cfg_.min_pairs},
            {"restarts", cfg_.restarts},
            {"out_dir", cfg_.out_dir},
        };
        if (cfg_.command == "synth") {
            config["preset"] = cfg_.spec.empty() ? nlohmann::json(cfg_.preset) : nlohmann::json(nullptr);
            config["n"] = cfg_.n;
            config["missing_rate"] = cfg_.missing_rate;
        }
        nlohmann::json meta{
            {"tool", "frailtyfa"},
            {"version", kVersion},
            {"config", std::move(config)},
            {"seeds", cfg_.command == "synth"
                          ? nlohmann::json{{"seed", cfg_.seed}, {"synth", cfg_.seed}}
                          : nlohmann::json{{"seed", cfg_.seed}, {"parallel_analysis", cfg_.seed}, {"rotation", cfg_.seed}}},
            {"inputs", std::move(inputs)},
            {"libraries",
             {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                            std::to_string(BOOST_VERSION % 100)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
            {"summary", summary_},
            {"outputs", written_},
        };
        write_text(dir_ / "run_meta.json", dump_json(meta));
    }
};

} // namespace detail

inline int run_pipeline(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    PipelineConfig cfg;
    CLI::App app{"Frailty index and exploratory factor analysis of cumulative-deficit data", "frailtyfa"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input, "Cohort CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--catalog", cfg.catalog, "Deficit catalog JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--outcome-col", cfg.outcome_col, "Outcome column name")->capture_default_str();
        sub->add_option("--min-age", cfg.min_age, "Minimum age for inclusion")->capture_default_str();
        sub->add_option("--max-missing", cfg.max_missing, "Maximum missing deficits per participant")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "Seed for parallel analysis and rotation starts")->capture_default_str();
        sub->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--min-pairs", cfg.min_pairs, "Minimum complete pairs per correlation")->capture_default_str();
    };
    auto add_pa = [&](CLI::App* sub) {
        sub->add_option("--replicates", cfg.replicates, "Parallel analysis replicates")
            ->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--quantile", cfg.quantile, "Parallel analysis quantile")
            ->capture_default_str()->check(CLI::Range(0.0, 1.0));
        sub->add_option("--pa-null", cfg.pa_null, "Null model: normal or binary")
            ->capture_default_str()->check(CLI::IsMember({"normal", "binary"}));
    };
    auto add_efa = [&](CLI::App* sub) {
        add_pa(sub);
        auto* nf = sub->add_option("--nfactors", cfg.nfactors, "Number of factors")->check(CLI::PositiveNumber);
        auto* af = sub->add_flag("--auto-nfactors", cfg.auto_nfactors, "Choose the factor count by parallel analysis");
        nf->excludes(af);
        sub->add_option("--salience", cfg.salience, "Salience threshold for |loading|")->capture_default_str();
        sub->add_option("--restarts", cfg.restarts, "Rotation starts")->capture_default_str()->check(CLI::PositiveNumber);
    };

    add_common(app.add_subcommand("ingest", "Validate the cohort and write the included rows"));
    add_common(app.add_subcommand("fi", "Frailty index per participant and per-deficit criteria"));
    add_common(app.add_subcommand("corr", "Pairwise phi matrix and factorability"));
    auto* pa = app.add_subcommand("pa", "Parallel analysis and scree plot");
    add_common(pa);
    add_pa(pa);
    for (const char* name : {"efa", "scores", "regress", "report"}) {
        const std::string desc = std::string(name) == "efa"      ? "Minres extraction and oblimin rotation"
                                 : std::string(name) == "scores" ? "Factor scores and their correlations with the index"
                                 : std::string(name) == "regress" ? "Outcome regressions on the index and on factor scores"
                                                                  : "Run every stage";
        auto* sub = app.add_subcommand(name, desc);
        add_common(sub);
        add_efa(sub);
    }
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort with planted factors");
    synth->add_option("--spec", cfg.spec, "Synthetic spec JSON")->check(CLI::ExistingFile);
    synth->add_option("--preset", cfg.preset, "elsa58, balanced or noise")
        ->capture_default_str()->check(CLI::IsMember({"elsa58", "balanced", "noise"}));
    synth->add_option("--n", cfg.n, "Participants")->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--missing-rate", cfg.missing_rate, "Share of masked cells")
        ->capture_default_str()->check(CLI::Range(0.0, 0.2));
    synth->add_option("--seed", cfg.seed, "Seed")->capture_default_str();
    synth->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    try {
        detail::Pipeline p(cfg);
        const int code = p.run();
        out << cfg.command << ": wrote outputs to " << cfg.out_dir << '\n';
        return code;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.is_validation() ? 2 : 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: io: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace frailtyfa
