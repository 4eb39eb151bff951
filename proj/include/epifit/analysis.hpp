#pragma once

#include "epifit/vaccination.hpp"

#include <optional>

namespace epifit {

struct VaccinationInput {
    std::string malware_id;
    IncidenceSeries incidence;
    std::optional<std::int64_t> vaccination_day;
};

struct AnalysisOptions {
    double split_threshold = 0.6;
    int folds = 10;
    std::uint64_t seed = 1;
    int permutations = 199;
    PredictionOptions prediction;
};

struct ExcludedStrain {
    std::string malware_id;
    std::string reason;
};

struct VaccineAnalysis {
    // outcomes[i] pairs with features[i]; both follow the input order.
    std::vector<VaccinationOutcome> outcomes;
    std::vector<FeatureVector> features;
    std::vector<ExcludedStrain> excluded;

    std::optional<CrossValidation> tree;  // censored strains are left out
    double tree_permutation_p = 1.0;
    bool tree_p_defined = false;
    std::string tree_error;

    std::optional<HazardModel> hazard;  // censoring handled via event flags
    std::string hazard_error;

    SplitReport split;
    std::vector<FeatureImportance> importance;
};

// Full vaccination-effect study over ingested strains: per-strain outcome
// and features, regression tree with cross-validated rank correlation and
// permutation p-value, Cox hazard model, and the threshold split report.
// Strains that cannot be analyzed (no or too-early vaccination day, no
// infections, failed fits) are excluded and listed with reasons.
VaccineAnalysis analyze_vaccination(const std::vector<VaccinationInput>& inputs,
                                    const Dictionary& dict,
                                    const AnalysisOptions& options = {});

} // namespace epifit
