#pragma once

#include "epifit/dictionary.hpp"

#include <map>
#include <optional>

namespace epifit {

struct LagCorrelation {
    std::int64_t tau = 0;
    double c = 0.0;
};

// Normalized lagged correlation of template d against observation x:
// for each tau, the overlapping windows are mean-subtracted and the inner
// product is divided by both Euclidean norms, giving a value in [-1, 1].
// Lags whose overlap is shorter than 3 points are omitted.
std::vector<LagCorrelation> cross_correlate(const IncidenceSeries& d, const IncidenceSeries& x,
                                            std::int64_t tau_max = 25);

struct ModeBest {
    std::int64_t entry_id = -1;
    double correlation = -2.0;
    std::int64_t lag = 0;
};

// Inclusive day range.
struct DayWindow {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

struct FitResult {
    std::int64_t best_entry = -1;
    InfectionMode mode = InfectionMode::P2P;
    double correlation = -2.0;
    std::int64_t lag_tau = 0;
    std::map<InfectionMode, ModeBest> per_mode_best;
    DayWindow window;
    // Best template shifted by lag_tau onto the observed day axis,
    // zero-filled before the lag.
    std::vector<double> model_series;
};

// Evaluates every dictionary entry at every lag in [0, tau_max] over the
// window (default: the whole series; days past the end of a shorter series
// count as zero incidence) and picks the highest correlation. Ties resolve
// to the smaller lag, then the smaller entry_id, so results are
// reproducible bit for bit regardless of jobs.
FitResult fit(const IncidenceSeries& x, const Dictionary& dict,
              std::optional<DayWindow> window = std::nullopt, std::int64_t tau_max = 25,
              int jobs = 1);

struct LabelAgreement {
    std::size_t n = 0;
    double observed_agreement = 0.0;
    double kappa = 0.0;
    // Set when either labeling is constant, where chance-corrected
    // agreement is not meaningful: both constant and equal reports 1,
    // constant and different reports 0.
    bool degenerate = false;
};

LabelAgreement cohens_kappa(const std::vector<InfectionMode>& a,
                            const std::vector<InfectionMode>& b);

} // namespace epifit
