#pragma once

#include "epifit/prediction.hpp"
#include "epifit/stats.hpp"

#include <array>
#include <string>

namespace epifit {

struct VaccinationOutcome {
    std::string malware_id;
    std::int64_t vaccination_day = 0;
    double infected_at_vax = 0.0;       // cumulative infections through the vaccination day
    double predicted_susceptible = 0.0;
    double fraction_infected_at_vax = 0.0;  // min(infected/predicted, 1)
    std::int64_t t_term = 0;
    bool censored = false;  // when set, t_term is the last observed day
};

struct FeatureVector {
    double log_predicted_susceptible = 0.0;  // log10(1 + predicted total)
    double log_infected_at_vax = 0.0;        // log10(1 + infected at vaccination)
    double beta_best = 0.0;                  // infection rate of the winning template
    double fit_p2p = 0.0;                    // best per-mode correlations
    double fit_cs = 0.0;

    static constexpr std::size_t count = 5;
    static const std::array<std::string, count>& names();
    std::array<double, count> as_array() const;
};

// (t_term, censored): smallest day whose cumulative reaches 99% of the
// series total; the event counts as observed only when the series ends
// with at least 14 zero days (the epidemic demonstrably went quiet).
std::pair<std::int64_t, bool> time_to_termination(const IncidenceSeries& x,
                                                  double quantile = 0.99,
                                                  std::int64_t quiet_days = 14);

struct FeatureExtraction {
    FeatureVector features;
    SusceptiblePrediction prediction;  // prediction.fit holds the window fit
};

// Fit window is (0, min(30, vaccination_day)), clipped to the observed
// range. Throws when the window is shorter than 5 days or the fit fails;
// callers exclude and count such strains.
FeatureExtraction extract_features(const IncidenceSeries& x, const Dictionary& dict,
                                   std::int64_t vaccination_day,
                                   const PredictionOptions& options = {});

// Binary regression tree grown by variance reduction.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;  // mean target (prediction at leaves)
    std::size_t samples = 0;
    int left = -1;
    int right = -1;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root; empty = unfit
    double predict(const std::array<double, FeatureVector::count>& row) const;
};

RegressionTree fit_tree(const std::vector<std::array<double, FeatureVector::count>>& rows,
                        const std::vector<double>& targets, int max_depth = 4, int min_leaf = 5);

struct CrossValidation {
    RegressionTree tree;  // fit on all rows
    double cv_spearman = 0.0;
    bool cv_degenerate = false;  // constant predictions or targets out of fold
    std::vector<double> oof_predictions;
};

// Folds are assigned by a seeded shuffle, so the assignment (and therefore
// every number downstream) is reproducible.
CrossValidation fit_regression_tree(const std::vector<std::array<double, FeatureVector::count>>& rows,
                                    const std::vector<double>& targets, int folds = 10,
                                    std::uint64_t seed = 1, int max_depth = 4, int min_leaf = 5);

// One-sided permutation p-value for the cross-validated Spearman: targets
// are reshuffled, the whole CV rerun, and p = (1 + #{rho_perm >= rho}) /
// (permutations + 1).
double cv_permutation_p(const std::vector<std::array<double, FeatureVector::count>>& rows,
                        const std::vector<double>& targets, double observed_rho, int folds = 10,
                        std::uint64_t seed = 1, int permutations = 199);

struct HazardModel {
    std::vector<std::string> feature_names;
    std::vector<double> coefficients;
    std::vector<double> hazard_ratios;   // exp(coefficient)
    std::vector<double> standard_errors;
    std::vector<double> p_values;        // two-sided Wald
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double log_likelihood = 0.0;
};

// Cox proportional hazards via the Breslow partial likelihood, maximized
// by damped Newton iterations. event[i] = true means termination was
// observed at durations[i]; false marks a censored strain.
HazardModel fit_cox(const std::vector<std::array<double, FeatureVector::count>>& rows,
                    const std::vector<double>& durations, const std::vector<bool>& events,
                    const std::vector<std::string>& names);

struct SplitSide {
    std::size_t n = 0;
    double mean_t_term = 0.0;
    double rank_r2 = 0.0;  // squared Spearman of t_term on fraction
    double p_value = 1.0;
    bool degenerate = false;  // too few points or zero variance
    AffineFit line;           // least-squares t_term ~ fraction, for plotting
};

struct SplitPoint {
    double fraction = 0.0;
    double t_term = 0.0;
    bool above = false;
};

struct SplitReport {
    double threshold = 0.6;
    SplitSide below;
    SplitSide above;
    bool below_empty = false;
    bool above_empty = false;
    double ratio = 0.0;  // mean above / mean below
    bool ratio_defined = false;
    std::vector<SplitPoint> points;
};

SplitReport eradication_split_analysis(const std::vector<VaccinationOutcome>& outcomes,
                                       double threshold = 0.6);

struct FeatureImportance {
    std::size_t feature = 0;
    double importance = 0.0;  // mean Spearman degradation under permutation
};

// Permutation importance against the fitted tree, 20 reshuffles per
// feature, returned in descending order.
std::vector<FeatureImportance> permutation_importance(
    const RegressionTree& tree, const std::vector<std::array<double, FeatureVector::count>>& rows,
    const std::vector<double>& targets, std::uint64_t seed = 1, int reshuffles = 20);

} // namespace epifit
