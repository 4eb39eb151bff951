#include "epifit/prediction.hpp"

#include "epifit/errors.hpp"
#include "epifit/stats.hpp"

#include <algorithm>

namespace epifit {

SusceptiblePrediction predict_susceptible(const IncidenceSeries& x, const Dictionary& dict,
                                          const PredictionOptions& options)
{
    if (options.window_days < 0)
        throw DomainError("window_days must be >= 0");
    const std::int64_t len = static_cast<std::int64_t>(x.values.size());
    if (len < 5)
        throw InsufficientDataError("need at least 5 observed days to predict");
    const DayWindow window{0, std::min(options.window_days, len - 1)};

    SusceptiblePrediction out;
    out.fit = fit(x, dict, window, options.tau_max, options.jobs);

    std::vector<double> xs, ms;
    xs.reserve(static_cast<std::size_t>(window.hi + 1));
    ms.reserve(static_cast<std::size_t>(window.hi + 1));
    double observed = 0.0;
    for (std::int64_t t = window.lo; t <= window.hi; ++t) {
        xs.push_back(x.values[static_cast<std::size_t>(t)]);
        ms.push_back(out.fit.model_series[static_cast<std::size_t>(t)]);
        observed += x.values[static_cast<std::size_t>(t)];
    }
    out.observed_cumulative = observed;

    const AffineFit affine = least_squares(ms, xs);
    out.alpha_scale = affine.scale;
    out.offset = affine.offset;

    const DictionaryEntry* entry = dict.find(out.fit.best_entry);
    const double template_total = entry->prefix.back();

    if (out.alpha_scale <= 0.0) {
        out.degenerate = true;
        out.predicted_total = observed;
        return out;
    }
    double total = out.alpha_scale * template_total;
    total += options.offset_per_day ? out.offset * static_cast<double>(entry->values.size())
                                    : out.offset;
    out.predicted_total = std::max(total, observed);
    return out;
}

} // namespace epifit
