// Library walk-through on a synthetic ELSA-like cohort: frailty index,
// phi correlations, parallel analysis, minres + oblimin, factor scores.

#include <cstdio>

#include "frailtyfa.hpp"

int main() {
    using namespace frailtyfa;

    const SynthCohort synth = generate(elsa58_spec(4971, 11));
    const Cohort& cohort = synth.cohort;

    const auto fi = frailty_indices(cohort);
    double mean_fi = 0.0;
    for (const auto& r : fi) mean_fi += r.fi;
    std::printf("participants %zu, mean FI %.4f\n", fi.size(), mean_fi / static_cast<double>(fi.size()));

    const DeficitMatrix m(cohort);
    std::vector<std::string> ids;
    for (const auto& e : cohort.catalog.entries()) ids.push_back(e.id);
    const CorrMatrix c = smooth_psd(pairwise_phi_matrix(m, ids));
    const auto fac = factorability(c, fi.size());
    std::printf("KMO %.3f, Bartlett chi2 %.1f on %.0f df\n", fac.kmo_overall, fac.bartlett_chi2, fac.bartlett_df);

    ParallelOptions pa_opts;
    pa_opts.seed = 11;
    const ParallelResult pa = parallel_analysis(fi.size(), ids.size(), eigenvalues(c), pa_opts);
    std::printf("first eigenvalue %.2f, parallel analysis keeps %zu factors\n", pa.observed(0), pa.suggested_k);

    const UnrotatedSolution efa = extract_minres(c, pa.suggested_k);
    const RotatedSolution rot = oblimin_rotate(efa);
    std::printf("RMSR %.4f\n", fit_stats(c, efa).rmsr);

    const SalienceReport sal = salience(rot.pattern, ids);
    for (std::size_t j = 0; j < sal.factors.size(); ++j)
        std::printf("F%zu: %zu salient items%s\n", j + 1, sal.factors[j].items.size(),
                    sal.factors[j].adequate ? "" : " (inadequate)");

    const ScoreMatrix scores = regression_scores(m, c, rot);
    const Eigen::MatrixXd r = score_correlation_report(scores, fi);
    for (Eigen::Index j = 0; j + 1 < r.cols(); ++j) std::printf("r(F%ld, FI) = %.3f\n", static_cast<long>(j + 1), r(j, r.cols() - 1));
    return 0;
}
