#include "epifit/analysis.hpp"

#include "epifit/errors.hpp"

#include <algorithm>

namespace epifit {

VaccineAnalysis analyze_vaccination(const std::vector<VaccinationInput>& inputs,
                                    const Dictionary& dict, const AnalysisOptions& options)
{
    VaccineAnalysis out;

    for (const VaccinationInput& input : inputs) {
        if (!input.vaccination_day) {
            out.excluded.push_back({input.malware_id, "no vaccination day"});
            continue;
        }
        if (*input.vaccination_day < 0) {
            out.excluded.push_back({input.malware_id, "signature predates first sighting"});
            continue;
        }
        double total = 0.0;
        for (double v : input.incidence.values)
            total += v;
        if (!(total > 0.0)) {
            out.excluded.push_back({input.malware_id, "no infections"});
            continue;
        }

        try {
            const FeatureExtraction fx =
                extract_features(input.incidence, dict, *input.vaccination_day, options.prediction);

            VaccinationOutcome outcome;
            outcome.malware_id = input.malware_id;
            outcome.vaccination_day = *input.vaccination_day;
            const std::int64_t len = static_cast<std::int64_t>(input.incidence.values.size());
            double infected = 0.0;
            for (std::int64_t t = 0; t <= std::min(*input.vaccination_day, len - 1); ++t)
                infected += input.incidence.values[static_cast<std::size_t>(t)];
            outcome.infected_at_vax = infected;
            outcome.predicted_susceptible = fx.prediction.predicted_total;
            outcome.fraction_infected_at_vax =
                fx.prediction.predicted_total > 0.0
                    ? std::min(infected / fx.prediction.predicted_total, 1.0)
                    : 1.0;

            const auto [t_term, censored] = time_to_termination(input.incidence);
            outcome.censored = censored;
            outcome.t_term = censored ? len - 1 : t_term;

            out.outcomes.push_back(std::move(outcome));
            out.features.push_back(fx.features);
        } catch (const Error& e) {
            out.excluded.push_back({input.malware_id, e.what()});
        }
    }

    // Tree on uncensored strains only: their termination day is real.
    std::vector<std::array<double, FeatureVector::count>> tree_rows;
    std::vector<double> tree_targets;
    for (std::size_t k = 0; k < out.outcomes.size(); ++k) {
        if (out.outcomes[k].censored)
            continue;
        tree_rows.push_back(out.features[k].as_array());
        tree_targets.push_back(static_cast<double>(out.outcomes[k].t_term));
    }
    try {
        out.tree = fit_regression_tree(tree_rows, tree_targets, options.folds, options.seed);
        if (!out.tree->cv_degenerate && options.permutations > 0) {
            out.tree_permutation_p =
                cv_permutation_p(tree_rows, tree_targets, out.tree->cv_spearman, options.folds,
                                 options.seed, options.permutations);
            out.tree_p_defined = true;
        }
        out.importance = permutation_importance(out.tree->tree, tree_rows, tree_targets,
                                                options.seed);
    } catch (const Error& e) {
        out.tree.reset();
        out.tree_error = e.what();
    }

    // Hazard model sees every strain; censored ones contribute risk time.
    std::vector<std::array<double, FeatureVector::count>> cox_rows;
    std::vector<double> durations;
    std::vector<bool> events;
    for (std::size_t k = 0; k < out.outcomes.size(); ++k) {
        cox_rows.push_back(out.features[k].as_array());
        durations.push_back(static_cast<double>(out.outcomes[k].t_term));
        events.push_back(!out.outcomes[k].censored);
    }
    try {
        std::vector<std::string> names(FeatureVector::names().begin(),
                                       FeatureVector::names().end());
        out.hazard = fit_cox(cox_rows, durations, events, names);
    } catch (const Error& e) {
        out.hazard.reset();
        out.hazard_error = e.what();
    }

    out.split = eradication_split_analysis(out.outcomes, options.split_threshold);
    return out;
}

} // namespace epifit
