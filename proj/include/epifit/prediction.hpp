#pragma once

#include "epifit/fitting.hpp"

namespace epifit {

struct PredictionOptions {
    // Last day (inclusive) of the fit window; the effective window is
    // further clipped to the observed series length.
    std::int64_t window_days = 30;
    // When set, the affine offset contributes once per template day to the
    // extrapolated total instead of once overall.
    bool offset_per_day = false;
    std::int64_t tau_max = 25;
    int jobs = 1;
};

struct SusceptiblePrediction {
    double alpha_scale = 0.0;
    double offset = 0.0;
    double predicted_total = 0.0;
    // Cumulative observed infections through the fit window; the floor of
    // predicted_total.
    double observed_cumulative = 0.0;
    // Set when the affine fit produced alpha <= 0 and the prediction fell
    // back to the observed cumulative count.
    bool degenerate = false;
    FitResult fit;
};

// Fits the dictionary on the early window, rescales the winning template
// onto the observations with a least-squares affine map x_t ~= alpha*m_t +
// offset, and extrapolates the total as alpha * (template's full-horizon
// sum) + offset, never below what was already observed.
SusceptiblePrediction predict_susceptible(const IncidenceSeries& x, const Dictionary& dict,
                                          const PredictionOptions& options = {});

} // namespace epifit
