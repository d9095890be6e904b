#pragma once

// Output files: CSV tables (6 significant digits), JSON (full precision)
// and two small self-contained SVG figures. Every writer has a string form
// so tests can compare content without touching the filesystem.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "frailtyfa/corr.hpp"
#include "frailtyfa/detail/text.hpp"
#include "frailtyfa/efa.hpp"
#include "frailtyfa/errors.hpp"
#include "frailtyfa/findex.hpp"
#include "frailtyfa/ingest.hpp"
#include "frailtyfa/regress.hpp"
#include "frailtyfa/rotate.hpp"
#include "frailtyfa/scores.hpp"

namespace frailtyfa {

inline constexpr std::size_t kMaxSvgBytes = 200 * 1024;

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("report", "cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out) throw IoError("report", "failed writing '" + path.string() + "'");
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

inline std::string factor_header(Eigen::Index k) {
    std::string h;
    for (Eigen::Index j = 0; j < k; ++j) h += ",F" + std::to_string(j + 1);
    return h;
}

} // namespace detail

// fi ----------------------------------------------------------------------

inline std::string fi_scores_csv(const Cohort& cohort, const std::vector<FrailtyResult>& fi) {
    std::ostringstream out;
    out << "id,present,assessed,fi\n";
    for (std::size_t i = 0; i < fi.size(); ++i)
        out << detail::csv_escape(cohort.records[i].id) << ',' << fi[i].present << ',' << fi[i].assessed << ','
            << detail::fmt6(fi[i].fi) << '\n';
    return out.str();
}

inline std::string deficit_criteria_csv(const std::vector<DeficitCriteria>& rep) {
    std::ostringstream out;
    out << "id,description,observed,prevalence,prevalence_male,prevalence_female";
    for (const auto& b : kAgeBands) out << ",prevalence_" << b.label;
    out << ",saturated,age_corr,age_cells\n";
    for (const auto& d : rep) {
        out << detail::csv_escape(d.id) << ',' << detail::csv_escape(d.description) << ',' << d.observed << ','
            << detail::fmt6(d.prevalence) << ',' << detail::fmt6(d.prevalence_male) << ','
            << detail::fmt6(d.prevalence_female);
        for (double v : d.band_prevalence) out << ',' << detail::fmt6(v);
        out << ',' << (d.saturated ? "true" : "false") << ',' << detail::fmt6(d.age_corr) << ',' << d.age_cells
            << '\n';
    }
    return out.str();
}

// corr --------------------------------------------------------------------

template <typename Matrix>
std::string labelled_matrix_csv(const std::vector<std::string>& ids, const Matrix& m) {
    std::ostringstream out;
    out << "id";
    for (const auto& id : ids) out << ',' << detail::csv_escape(id);
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << detail::csv_escape(ids[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if constexpr (std::is_integral_v<typename Matrix::Scalar>) out << ',' << m(i, j);
            else out << ',' << detail::fmt6(m(i, j));
        }
        out << '\n';
    }
    return out.str();
}

inline nlohmann::json factorability_json(const FactorabilityReport& f, const CorrMatrix& c, std::size_t n) {
    nlohmann::json per = nlohmann::json::object();
    for (Eigen::Index i = 0; i < f.kmo_per_variable.size(); ++i)
        per[c.ids[static_cast<std::size_t>(i)]] = f.kmo_per_variable(i);
    return {
        {"n", n},
        {"p", c.size()},
        {"bartlett", {{"defined", f.bartlett_defined}, {"chi2", f.bartlett_chi2}, {"df", f.bartlett_df}, {"p", f.bartlett_p}}},
        {"kmo", {{"overall", f.kmo_overall}, {"per_variable", per}}},
        {"smoothed", c.smoothed},
        {"min_eigenvalue_before_smoothing", c.min_eig_before},
        {"warnings", f.warnings},
    };
}

// pa ----------------------------------------------------------------------

inline std::string scree_csv(const ParallelResult& pa) {
    std::ostringstream out;
    out << "rank,observed_eig,pa_threshold\n";
    for (Eigen::Index i = 0; i < pa.observed.size(); ++i)
        out << i + 1 << ',' << detail::fmt6(pa.observed(i)) << ',' << detail::fmt6(pa.threshold(i)) << '\n';
    return out.str();
}

// Line plot of the observed eigenvalues (one marker each) with the
// parallel-analysis threshold as a dashed line.
inline std::string scree_svg(const ParallelResult& pa) {
    const Eigen::Index p = pa.observed.size();
    if (p == 0 || pa.threshold.size() != p) throw SchemaError("report", "scree plot needs observed and threshold eigenvalues");
    const double w = 640, h = 400, left = 60, right = 20, top = 30, bottom = 50;
    double ymax = std::max(pa.observed.maxCoeff(), pa.threshold.maxCoeff());
    ymax = std::max(1.0, std::ceil(ymax));
    const double ymin = std::min(0.0, std::floor(std::min(pa.observed.minCoeff(), pa.threshold.minCoeff())));
    auto x = [&](Eigen::Index i) {
        return p == 1 ? left + (w - left - right) / 2 : left + (w - left - right) * static_cast<double>(i) / static_cast<double>(p - 1);
    };
    auto y = [&](double v) { return top + (h - top - bottom) * (ymax - v) / (ymax - ymin); };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">Scree plot</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    const int ticks = static_cast<int>(ymax - ymin);
    const int step = std::max(1, ticks / 8);
    for (int t = static_cast<int>(ymin); t <= static_cast<int>(ymax); t += step)
        s << "<text x=\"" << left - 8 << "\" y=\"" << detail::fixed2(y(t) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << t << "</text>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">Factor number</text>\n";
    s << "<text x=\"16\" y=\"" << h / 2 << "\" transform=\"rotate(-90 16 " << h / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">Eigenvalue</text>\n";

    s << "<polyline class=\"observed-line\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\" points=\"";
    for (Eigen::Index i = 0; i < p; ++i) s << (i ? " " : "") << detail::fixed2(x(i)) << ',' << detail::fixed2(y(pa.observed(i)));
    s << "\"/>\n";
    s << "<polyline class=\"threshold\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\" points=\"";
    for (Eigen::Index i = 0; i < p; ++i) s << (i ? " " : "") << detail::fixed2(x(i)) << ',' << detail::fixed2(y(pa.threshold(i)));
    s << "\"/>\n";
    for (Eigen::Index i = 0; i < p; ++i)
        s << "<circle class=\"observed\" cx=\"" << detail::fixed2(x(i)) << "\" cy=\"" << detail::fixed2(y(pa.observed(i)))
          << "\" r=\"3\" fill=\"#1f4e79\"/>\n";
    s << "<text x=\"" << w - right - 150 << "\" y=\"" << top + 12
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f4e79\">observed</text>\n";
    s << "<text x=\"" << w - right - 150 << "\" y=\"" << top + 26
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c0392b\">parallel analysis "
      << detail::fmt6(pa.quantile) << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

// efa ---------------------------------------------------------------------

inline std::string unrotated_csv(const std::vector<std::string>& ids, const UnrotatedSolution& sol) {
    std::ostringstream out;
    out << "id" << detail::factor_header(sol.loadings.cols()) << ",communality,uniqueness\n";
    for (Eigen::Index i = 0; i < sol.loadings.rows(); ++i) {
        out << detail::csv_escape(ids[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < sol.loadings.cols(); ++j) out << ',' << detail::fmt6(sol.loadings(i, j));
        out << ',' << detail::fmt6(sol.communalities(i)) << ',' << detail::fmt6(sol.uniquenesses(i)) << '\n';
    }
    return out.str();
}

inline std::string loadings_csv(const DeficitCatalog& catalog, const Eigen::MatrixXd& pattern) {
    std::ostringstream out;
    out << "id,description" << detail::factor_header(pattern.cols()) << '\n';
    for (Eigen::Index i = 0; i < pattern.rows(); ++i) {
        const auto& e = catalog.entries()[static_cast<std::size_t>(i)];
        out << detail::csv_escape(e.id) << ',' << detail::csv_escape(e.description);
        for (Eigen::Index j = 0; j < pattern.cols(); ++j) out << ',' << detail::fmt6(pattern(i, j));
        out << '\n';
    }
    return out.str();
}

inline std::string factor_matrix_csv(const Eigen::MatrixXd& m, const std::string& corner = "factor") {
    std::ostringstream out;
    out << corner << detail::factor_header(m.cols()) << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << 'F' << i + 1;
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << detail::fmt6(m(i, j));
        out << '\n';
    }
    return out.str();
}

inline nlohmann::json salience_json(const SalienceReport& rep) {
    nlohmann::json factors = nlohmann::json::array();
    for (std::size_t j = 0; j < rep.factors.size(); ++j) {
        nlohmann::json items = nlohmann::json::array();
        for (const auto& it : rep.factors[j].items) items.push_back({{"id", it.id}, {"loading", it.loading}});
        factors.push_back({{"factor", "F" + std::to_string(j + 1)},
                           {"salient_count", rep.factors[j].items.size()},
                           {"adequate", rep.factors[j].adequate},
                           {"items", std::move(items)}});
    }
    return {{"threshold", rep.threshold}, {"min_items", rep.min_items}, {"factors", std::move(factors)}};
}

inline nlohmann::json efa_fit_json(const UnrotatedSolution& sol, const FitStats& fit, const RotatedSolution& rot,
                                   std::size_t nfactors, bool auto_selected) {
    return {
        {"nfactors", nfactors},
        {"auto_selected", auto_selected},
        {"extraction",
         {{"method", "minres"},
          {"objective", sol.objective},
          {"converged", sol.converged},
          {"heywood", sol.heywood},
          {"iterations", sol.iterations}}},
        {"rmsr", fit.rmsr},
        {"rmsr_gate", kRmsrGate},
        {"rmsr_acceptable", fit.rmsr <= kRmsrGate},
        {"ss_loadings", detail::to_vector(fit.ss_loadings)},
        {"proportion_variance", detail::to_vector(fit.prop_variance)},
        {"rotation",
         {{"method", "oblimin"},
          {"criterion", rot.criterion},
          {"start_criterion", rot.start_criterion},
          {"converged", rot.converged},
          {"iterations", rot.iterations},
          {"best_start", rot.restart}}},
    };
}

// Heatmap of the pattern matrix: one row per item, one column per factor,
// blue for negative and red for positive loadings.
inline std::string loadings_svg(const std::vector<std::string>& ids, const Eigen::MatrixXd& pattern) {
    const Eigen::Index p = pattern.rows(), k = pattern.cols();
    if (p == 0 || k == 0) throw SchemaError("report", "loadings heatmap needs at least one factor and one item");
    const double cell_w = 64, cell_h = 14, left = 90, top = 40;
    const double w = left + cell_w * static_cast<double>(k) + 20, h = top + cell_h * static_cast<double>(p) + 20;
    auto colour = [](double v) {
        const double a = std::min(1.0, std::abs(v));
        const int fade = static_cast<int>(std::lround(255.0 * (1.0 - a)));
        char buf[16];
        if (v >= 0) std::snprintf(buf, sizeof buf, "#%02x%02x%02x", 255, fade, fade);
        else std::snprintf(buf, sizeof buf, "#%02x%02x%02x", fade, fade, 255);
        return std::string(buf);
    };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << detail::fixed2(w / 2) << "\" y=\"16\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">Factor loadings</text>\n";
    for (Eigen::Index j = 0; j < k; ++j)
        s << "<text x=\"" << detail::fixed2(left + cell_w * (static_cast<double>(j) + 0.5)) << "\" y=\"" << top - 6
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">F" << j + 1 << "</text>\n";
    for (Eigen::Index i = 0; i < p; ++i) {
        const double yy = top + cell_h * static_cast<double>(i);
        const std::string label = static_cast<std::size_t>(i) < ids.size() ? ids[static_cast<std::size_t>(i)] : "V" + std::to_string(i + 1);
        s << "<text x=\"" << left - 4 << "\" y=\"" << detail::fixed2(yy + cell_h - 3)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << detail::xml_escape(label) << "</text>\n";
        for (Eigen::Index j = 0; j < k; ++j) {
            const double xx = left + cell_w * static_cast<double>(j);
            s << "<rect x=\"" << detail::fixed2(xx) << "\" y=\"" << detail::fixed2(yy) << "\" width=\"" << cell_w
              << "\" height=\"" << cell_h << "\" fill=\"" << colour(pattern(i, j)) << "\" stroke=\"#dddddd\"/>"
              << "<text x=\"" << detail::fixed2(xx + cell_w / 2) << "\" y=\"" << detail::fixed2(yy + cell_h - 3)
              << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" << detail::fixed2(pattern(i, j))
              << "</text>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

// Writes an SVG after the size check; nothing is written on failure.
inline void write_svg(const std::filesystem::path& path, const std::string& svg) {
    if (svg.size() > kMaxSvgBytes)
        throw IoError("report", "SVG '" + path.filename().string() + "' exceeds " + std::to_string(kMaxSvgBytes) + " bytes");
    write_text(path, svg);
}

inline void emit_scree_svg(const std::filesystem::path& path, const ParallelResult& pa) {
    write_svg(path, scree_svg(pa));
}

inline void emit_loadings_svg(const std::filesystem::path& path, const std::vector<std::string>& ids,
                              const Eigen::MatrixXd& pattern) {
    write_svg(path, loadings_svg(ids, pattern));
}

// scores ------------------------------------------------------------------

inline std::string scores_csv(const Cohort& cohort, const ScoreMatrix& s, const std::vector<FrailtyResult>& fi) {
    std::ostringstream out;
    out << "id" << detail::factor_header(s.scores.cols()) << ",fi\n";
    for (Eigen::Index i = 0; i < s.scores.rows(); ++i) {
        out << detail::csv_escape(cohort.records[static_cast<std::size_t>(i)].id);
        for (Eigen::Index j = 0; j < s.scores.cols(); ++j) out << ',' << detail::fmt6(s.scores(i, j));
        out << ',' << detail::fmt6(fi[static_cast<std::size_t>(i)].fi) << '\n';
    }
    return out.str();
}

inline std::string score_correlations_csv(const Eigen::MatrixXd& r) {
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j + 1 < r.cols(); ++j) names.push_back("F" + std::to_string(j + 1));
    names.push_back("fi");
    return labelled_matrix_csv(names, r);
}

// regress -----------------------------------------------------------------

struct NamedFit {
    std::string model;
    RegressionFit fit;
};

inline std::string regression_csv(const std::vector<NamedFit>& fits) {
    std::ostringstream out;
    out << "model,term,beta,se,t,p\n";
    for (const auto& f : fits)
        for (const auto& t : f.fit.terms)
            out << detail::csv_escape(f.model) << ',' << detail::csv_escape(t.name) << ',' << detail::fmt6(t.beta) << ','
                << detail::fmt6(t.se) << ',' << detail::fmt6(t.t) << ',' << detail::fmt6(t.p) << '\n';
    return out.str();
}

inline nlohmann::json fit_json(const RegressionFit& f) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : f.terms) terms.push_back({{"term", t.name}, {"beta", t.beta}, {"se", t.se}, {"t", t.t}, {"p", t.p}});
    return {{"outcome", f.outcome},       {"r2", f.r2},
            {"adj_r2", f.adj_r2},         {"residual_se", f.residual_se},
            {"n_used", f.n_used},         {"dropped_missing", f.dropped_missing},
            {"df_residual", f.df_residual}, {"terms", std::move(terms)}};
}

inline nlohmann::json model_comparison_json(const NamedFit& m1, const NamedFit& m2, const ModelComparison& c) {
    return {
        {"model1", {{"name", m1.model}, {"fit", fit_json(m1.fit)}}},
        {"model2", {{"name", m2.model}, {"fit", fit_json(m2.fit)}}},
        {"delta_r2", c.delta_r2},
        {"delta_adj_r2", c.delta_adj_r2},
        {"winner", c.winner == 0 ? std::string("tie") : c.winner == 1 ? m1.model : m2.model},
        {"n_used", c.n_used},
    };
}

} // namespace frailtyfa
