#include "epifit/fitting.hpp"

#include "epifit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace epifit {

namespace {

struct WindowedSeries {
    std::vector<double> values;
    std::vector<double> prefix;
};

std::vector<double> running_sums(const std::vector<double>& v)
{
    std::vector<double> p(v.size() + 1, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        acc += v[k];
        p[k + 1] = acc;
    }
    return p;
}

WindowedSeries make_window(const IncidenceSeries& x, const DayWindow& w)
{
    if (w.lo < 0 || w.hi < w.lo)
        throw DomainError("invalid window");
    WindowedSeries out;
    out.values.resize(static_cast<std::size_t>(w.hi - w.lo + 1), 0.0);
    for (std::int64_t t = w.lo; t <= w.hi; ++t)
        if (t < static_cast<std::int64_t>(x.values.size()))
            out.values[static_cast<std::size_t>(t - w.lo)] = x.values[static_cast<std::size_t>(t)];
    out.prefix = running_sums(out.values);
    return out;
}

bool zero_variance(const std::vector<double>& v)
{
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] != v[0])
            return false;
    return true;
}

// Centered correlation of d's first `overlap` points against the window
// slice starting at tau. All three sums run in one pass so that identical
// inputs produce identical accumulators, which pins self-correlation to
// exactly 1.0. Returns false when the lag is undefined (short overlap or a
// flat side).
bool correlate_at(const std::vector<double>& d, const std::vector<double>& dprefix,
                  const WindowedSeries& xw, std::int64_t tau, double& c_out)
{
    const std::int64_t overlap =
        std::min<std::int64_t>(static_cast<std::int64_t>(xw.values.size()) - tau,
                               static_cast<std::int64_t>(d.size()));
    if (overlap < 3)
        return false;
    const std::size_t n = static_cast<std::size_t>(overlap);
    const double inv_n = 1.0 / static_cast<double>(overlap);
    const double mean_d = dprefix[n] * inv_n;
    const double mean_x = (xw.prefix[static_cast<std::size_t>(tau) + n] -
                           xw.prefix[static_cast<std::size_t>(tau)]) *
                          inv_n;

    const double* dp = d.data();
    const double* xp = xw.values.data() + tau;
    // Four fixed lanes per sum break the floating-point add chain so the
    // loop can issue wide without -ffast-math reassociation; the order is
    // pinned by the code, so results stay bit-reproducible. All three sums
    // share the lane structure: identical windows give lane-for-lane equal
    // accumulators, which keeps self-correlation exactly 1.0 below.
    double dd[4] = {0.0, 0.0, 0.0, 0.0};
    double xx[4] = {0.0, 0.0, 0.0, 0.0};
    double dx[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double a = dp[k + j] - mean_d;
            const double b = xp[k + j] - mean_x;
            dd[j] += a * a;
            xx[j] += b * b;
            dx[j] += a * b;
        }
    }
    for (std::size_t j = 0; k < n; ++k, ++j) {
        const double a = dp[k] - mean_d;
        const double b = xp[k] - mean_x;
        dd[j] += a * a;
        xx[j] += b * b;
        dx[j] += a * b;
    }
    const double sdd = (dd[0] + dd[1]) + (dd[2] + dd[3]);
    const double sxx = (xx[0] + xx[1]) + (xx[2] + xx[3]);
    const double sdx = (dx[0] + dx[1]) + (dx[2] + dx[3]);
    if (sdd <= 0.0 || sxx <= 0.0)
        return false;
    if (sdx == sdd && sdd == sxx) {
        c_out = 1.0;
        return true;
    }
    double c = sdx / std::sqrt(sdd * sxx);
    c_out = std::clamp(c, -1.0, 1.0);
    return true;
}

struct EntryBest {
    double correlation = -2.0;
    std::int64_t lag = 0;
    bool defined = false;
};

EntryBest best_lag_for(const std::vector<double>& d, const std::vector<double>& dprefix,
                       const WindowedSeries& xw, std::int64_t tau_max)
{
    EntryBest best;
    for (std::int64_t tau = 0; tau <= tau_max; ++tau) {
        double c;
        if (!correlate_at(d, dprefix, xw, tau, c))
            continue;
        if (!best.defined || c > best.correlation) {
            best = {c, tau, true};
        }
        // Equal c keeps the smaller tau already held.
    }
    return best;
}

bool beats(double c, std::int64_t tau, std::int64_t id, const ModeBest& cur)
{
    if (c != cur.correlation)
        return c > cur.correlation;
    if (tau != cur.lag)
        return tau < cur.lag;
    return id < cur.entry_id;
}

} // namespace

std::vector<LagCorrelation> cross_correlate(const IncidenceSeries& d, const IncidenceSeries& x,
                                            std::int64_t tau_max)
{
    if (tau_max < 0)
        throw DomainError("tau_max must be >= 0");
    if (x.values.size() < 3)
        throw InsufficientDataError("need at least 3 observations");
    if (zero_variance(x.values))
        throw FitError("observed series is constant; correlation undefined");

    WindowedSeries xw;
    xw.values = x.values;
    xw.prefix = running_sums(xw.values);
    const std::vector<double> dprefix = running_sums(d.values);

    std::vector<LagCorrelation> out;
    for (std::int64_t tau = 0; tau <= tau_max; ++tau) {
        double c;
        if (correlate_at(d.values, dprefix, xw, tau, c))
            out.push_back({tau, c});
    }
    return out;
}

FitResult fit(const IncidenceSeries& x, const Dictionary& dict, std::optional<DayWindow> window,
              std::int64_t tau_max, int jobs)
{
    if (dict.entries.empty())
        throw ConfigError("dictionary has no entries");
    if (tau_max < 0)
        throw DomainError("tau_max must be >= 0");

    DayWindow w;
    if (window) {
        w = *window;
    } else {
        if (x.values.empty())
            throw InsufficientDataError("empty series");
        w = {0, static_cast<std::int64_t>(x.values.size()) - 1};
    }
    if (w.lo < 0 || w.hi < w.lo)
        throw DomainError("invalid window");
    if (w.hi - w.lo + 1 < 3)
        throw InsufficientDataError("window shorter than 3 days");

    const WindowedSeries xw = make_window(x, w);
    if (zero_variance(xw.values))
        throw FitError("observed series is constant in the fit window; correlation undefined");

    // Per-entry bests are computed independently (optionally in parallel)
    // and merged in entry order, so ties always resolve the same way.
    std::vector<EntryBest> bests(dict.entries.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
            bests[k] = best_lag_for(dict.entries[k].values, dict.entries[k].prefix, xw, tau_max);
    };
    const int workers = std::max(1, jobs);
    if (workers == 1 || dict.entries.size() < 16) {
        run_range(0, dict.entries.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (dict.entries.size() + workers - 1) / workers;
        for (int wk = 0; wk < workers; ++wk) {
            const std::size_t begin = std::min(dict.entries.size(), wk * chunk);
            const std::size_t end = std::min(dict.entries.size(), begin + chunk);
            if (begin < end)
                pool.emplace_back(run_range, begin, end);
        }
        for (auto& t : pool)
            t.join();
    }

    FitResult result;
    result.window = w;
    for (std::size_t k = 0; k < dict.entries.size(); ++k) {
        if (!bests[k].defined)
            continue;
        const DictionaryEntry& e = dict.entries[k];
        ModeBest& cur = result.per_mode_best
                            .try_emplace(e.params.mode, ModeBest{})
                            .first->second;
        if (cur.entry_id < 0 || beats(bests[k].correlation, bests[k].lag, e.entry_id, cur))
            cur = {e.entry_id, bests[k].correlation, bests[k].lag};
    }
    if (result.per_mode_best.empty())
        throw FitError("no dictionary entry produced a defined correlation");

    bool have = false;
    ModeBest overall;
    InfectionMode overall_mode = InfectionMode::P2P;
    for (const auto& [mode, mb] : result.per_mode_best) {
        if (!have || beats(mb.correlation, mb.lag, mb.entry_id, overall)) {
            overall = mb;
            overall_mode = mode;
            have = true;
        }
    }
    result.best_entry = overall.entry_id;
    result.mode = overall_mode;
    result.correlation = overall.correlation;
    result.lag_tau = overall.lag;

    const DictionaryEntry* chosen = dict.find(overall.entry_id);
    const std::int64_t axis_len =
        std::max<std::int64_t>(static_cast<std::int64_t>(x.values.size()), w.hi + 1);
    result.model_series.assign(static_cast<std::size_t>(axis_len), 0.0);
    for (std::int64_t t = 0; t < axis_len; ++t) {
        const std::int64_t k = t - w.lo - overall.lag;
        if (k >= 0 && k < static_cast<std::int64_t>(chosen->values.size()))
            result.model_series[static_cast<std::size_t>(t)] =
                chosen->values[static_cast<std::size_t>(k)];
    }
    return result;
}

LabelAgreement cohens_kappa(const std::vector<InfectionMode>& a,
                            const std::vector<InfectionMode>& b)
{
    if (a.empty() || a.size() != b.size())
        throw DomainError("label sequences must be equal-length and non-empty");

    const auto idx = [](InfectionMode m) {
        return static_cast<std::size_t>(m);
    };
    double table[3][3] = {};
    for (std::size_t k = 0; k < a.size(); ++k)
        table[idx(a[k])][idx(b[k])] += 1.0;

    const double n = static_cast<double>(a.size());
    double po = 0.0, pe = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            row += table[c][j];
            col += table[j][c];
        }
        po += table[c][c];
        pe += (row / n) * (col / n);
    }
    po /= n;

    LabelAgreement out;
    out.n = a.size();
    out.observed_agreement = po;

    const bool a_const = std::all_of(a.begin(), a.end(), [&](InfectionMode m) { return m == a[0]; });
    const bool b_const = std::all_of(b.begin(), b.end(), [&](InfectionMode m) { return m == b[0]; });
    if (a_const && b_const) {
        // Chance agreement is total; report exact agreement directly.
        out.degenerate = true;
        out.kappa = (a[0] == b[0]) ? 1.0 : 0.0;
        return out;
    }
    out.kappa = (po - pe) / (1.0 - pe);
    return out;
}

} // namespace epifit
