#include "epifit/vaccination.hpp"

#include "epifit/errors.hpp"
#include "epifit/rng.hpp"
#include "epifit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epifit {

const std::array<std::string, FeatureVector::count>& FeatureVector::names()
{
    static const std::array<std::string, count> n = {
        "log_predicted_susceptible", "log_infected_at_vax", "beta_best", "fit_p2p", "fit_cs"};
    return n;
}

std::array<double, FeatureVector::count> FeatureVector::as_array() const
{
    return {log_predicted_susceptible, log_infected_at_vax, beta_best, fit_p2p, fit_cs};
}

std::pair<std::int64_t, bool> time_to_termination(const IncidenceSeries& x, double quantile,
                                                  std::int64_t quiet_days)
{
    double total = 0.0;
    for (double v : x.values)
        total += v;
    if (!(total > 0.0))
        throw DomainError("series has no infections; termination undefined");

    const double threshold = quantile * total;
    double cum = 0.0;
    std::int64_t t_term = static_cast<std::int64_t>(x.values.size()) - 1;
    for (std::size_t t = 0; t < x.values.size(); ++t) {
        cum += x.values[t];
        if (cum >= threshold) {
            t_term = static_cast<std::int64_t>(t);
            break;
        }
    }

    // The threshold day always carries infections, so any trailing zero run
    // starts after it; a long enough quiet tail confirms the event.
    std::int64_t trailing = 0;
    for (auto it = x.values.rbegin(); it != x.values.rend() && *it == 0.0; ++it)
        ++trailing;
    return {t_term, trailing < quiet_days};
}

FeatureExtraction extract_features(const IncidenceSeries& x, const Dictionary& dict,
                                   std::int64_t vaccination_day, const PredictionOptions& options)
{
    if (vaccination_day < 0)
        throw DomainError("vaccination day must be >= 0");
    const std::int64_t len = static_cast<std::int64_t>(x.values.size());
    if (len == 0)
        throw InsufficientDataError("empty series");

    const std::int64_t hi = std::min({options.window_days, vaccination_day, len - 1});
    if (hi + 1 < 5)
        throw InsufficientDataError("fit window shorter than 5 days");

    PredictionOptions opt = options;
    opt.window_days = hi;

    FeatureExtraction out;
    out.prediction = predict_susceptible(x, dict, opt);

    double infected = 0.0;
    for (std::int64_t t = 0; t <= std::min(vaccination_day, len - 1); ++t)
        infected += x.values[static_cast<std::size_t>(t)];

    const FitResult& fr = out.prediction.fit;
    const DictionaryEntry* best = dict.find(fr.best_entry);
    out.features.log_predicted_susceptible = std::log10(1.0 + out.prediction.predicted_total);
    out.features.log_infected_at_vax = std::log10(1.0 + infected);
    out.features.beta_best = fr.mode == InfectionMode::CS ? best->params.beta_cs
                                                          : best->params.beta_p2p;
    if (auto it = fr.per_mode_best.find(InfectionMode::P2P); it != fr.per_mode_best.end())
        out.features.fit_p2p = it->second.correlation;
    if (auto it = fr.per_mode_best.find(InfectionMode::CS); it != fr.per_mode_best.end())
        out.features.fit_cs = it->second.correlation;
    return out;
}

namespace {

using Row = std::array<double, FeatureVector::count>;

struct TreeBuilder {
    const std::vector<Row>& rows;
    const std::vector<double>& targets;
    int max_depth;
    int min_leaf;
    std::vector<TreeNode> nodes;

    int grow(std::vector<std::size_t>& idx, int depth)
    {
        const double n = static_cast<double>(idx.size());
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i : idx) {
            sum += targets[i];
            sumsq += targets[i] * targets[i];
        }
        TreeNode node;
        node.value = sum / n;
        node.samples = idx.size();
        const int self = static_cast<int>(nodes.size());
        nodes.push_back(node);

        const double parent_sse = sumsq - sum * sum / n;
        if (depth >= max_depth || idx.size() < 2 * static_cast<std::size_t>(min_leaf) ||
            parent_sse <= 0.0)
            return self;

        // Best split: lowest summed SSE of the two children; ties keep the
        // first candidate in (feature, threshold) order.
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_sse = parent_sse;
        std::vector<std::size_t> sorted(idx);
        for (std::size_t f = 0; f < FeatureVector::count; ++f) {
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                if (rows[a][f] != rows[b][f])
                    return rows[a][f] < rows[b][f];
                return a < b;
            });
            double left_sum = 0.0, left_sumsq = 0.0;
            for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
                const double y = targets[sorted[k]];
                left_sum += y;
                left_sumsq += y * y;
                const std::size_t nl = k + 1;
                const std::size_t nr = sorted.size() - nl;
                if (nl < static_cast<std::size_t>(min_leaf) ||
                    nr < static_cast<std::size_t>(min_leaf))
                    continue;
                if (rows[sorted[k]][f] == rows[sorted[k + 1]][f])
                    continue;  // cannot separate equal values
                const double right_sum = sum - left_sum;
                const double right_sumsq = sumsq - left_sumsq;
                const double sse =
                    (left_sumsq - left_sum * left_sum / static_cast<double>(nl)) +
                    (right_sumsq - right_sum * right_sum / static_cast<double>(nr));
                if (sse < best_sse) {
                    best_sse = sse;
                    best_feature = static_cast<int>(f);
                    best_threshold =
                        rows[sorted[k]][f] + 0.5 * (rows[sorted[k + 1]][f] - rows[sorted[k]][f]);
                }
            }
        }
        if (best_feature < 0)
            return self;

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx)
            (rows[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right)
                .push_back(i);
        nodes[self].feature = best_feature;
        nodes[self].threshold = best_threshold;
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        nodes[self].left = l;
        nodes[self].right = r;
        return self;
    }
};

std::vector<double> oof_predictions_for(const std::vector<Row>& rows,
                                        const std::vector<double>& targets, int folds,
                                        std::uint64_t seed, int max_depth, int min_leaf)
{
    const std::size_t n = rows.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> fold_of(n);
    for (std::size_t p = 0; p < n; ++p)
        fold_of[order[p]] = static_cast<int>(p % static_cast<std::size_t>(folds));

    std::vector<double> oof(n, 0.0);
    std::vector<Row> train_rows;
    std::vector<double> train_targets;
    for (int f = 0; f < folds; ++f) {
        train_rows.clear();
        train_targets.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[i] != f) {
                train_rows.push_back(rows[i]);
                train_targets.push_back(targets[i]);
            }
        }
        if (train_rows.empty())
            continue;
        const RegressionTree tree = fit_tree(train_rows, train_targets, max_depth, min_leaf);
        for (std::size_t i = 0; i < n; ++i)
            if (fold_of[i] == f)
                oof[i] = tree.predict(rows[i]);
    }
    return oof;
}

} // namespace

double RegressionTree::predict(const Row& row) const
{
    if (nodes.empty())
        return 0.0;
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
        const TreeNode& nd = nodes[static_cast<std::size_t>(at)];
        at = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
}

RegressionTree fit_tree(const std::vector<Row>& rows, const std::vector<double>& targets,
                        int max_depth, int min_leaf)
{
    if (rows.empty() || rows.size() != targets.size())
        throw DomainError("tree requires matching non-empty rows and targets");
    TreeBuilder builder{rows, targets, max_depth, min_leaf, {}};
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    builder.grow(idx, 0);
    RegressionTree tree;
    tree.nodes = std::move(builder.nodes);
    return tree;
}

CrossValidation fit_regression_tree(const std::vector<Row>& rows,
                                    const std::vector<double>& targets, int folds,
                                    std::uint64_t seed, int max_depth, int min_leaf)
{
    if (rows.size() != targets.size())
        throw DomainError("rows and targets must align");
    if (rows.size() < 20)
        throw InsufficientDataError("need at least 20 samples for cross-validation");
    if (folds < 2 || static_cast<std::size_t>(folds) > rows.size())
        throw DomainError("folds must be in [2, n]");

    CrossValidation cv;
    cv.tree = fit_tree(rows, targets, max_depth, min_leaf);
    cv.oof_predictions = oof_predictions_for(rows, targets, folds, seed, max_depth, min_leaf);
    bool degenerate = false;
    cv.cv_spearman = spearman(cv.oof_predictions, targets, &degenerate);
    cv.cv_degenerate = degenerate;
    return cv;
}

double cv_permutation_p(const std::vector<Row>& rows, const std::vector<double>& targets,
                        double observed_rho, int folds, std::uint64_t seed, int permutations)
{
    if (permutations < 1)
        throw DomainError("permutations must be >= 1");
    Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<double> shuffled(targets);
    int at_least = 0;
    for (int b = 0; b < permutations; ++b) {
        rng.shuffle(shuffled);
        const std::vector<double> oof =
            oof_predictions_for(rows, shuffled, folds, seed, 4, 5);
        bool degenerate = false;
        const double rho = spearman(oof, shuffled, &degenerate);
        if ((degenerate ? 0.0 : rho) >= observed_rho)
            ++at_least;
    }
    return (1.0 + at_least) / (static_cast<double>(permutations) + 1.0);
}

namespace {

// Dense symmetric solve helpers for the small Cox system.
class SymMatrix {
public:
    explicit SymMatrix(std::size_t p) : p_(p), m_(p * p, 0.0) {}
    double& at(std::size_t i, std::size_t j) { return m_[i * p_ + j]; }
    double at(std::size_t i, std::size_t j) const { return m_[i * p_ + j]; }
    std::size_t dim() const { return p_; }
    void zero() { std::fill(m_.begin(), m_.end(), 0.0); }

private:
    std::size_t p_;
    std::vector<double> m_;
};

// Cholesky factorization; returns the index of the failing pivot or -1.
int cholesky(const SymMatrix& a, SymMatrix& l)
{
    const std::size_t p = a.dim();
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (!(s > 1e-12))
                    return static_cast<int>(i);
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return -1;
}

std::vector<double> chol_solve(const SymMatrix& l, const std::vector<double>& b)
{
    const std::size_t p = l.dim();
    std::vector<double> y(p, 0.0), x(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k)
            s -= l.at(i, k) * y[k];
        y[i] = s / l.at(i, i);
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < p; ++k)
            s -= l.at(k, ii) * x[k];
        x[ii] = s / l.at(ii, ii);
    }
    return x;
}

struct CoxWorkspace {
    std::vector<std::size_t> order;  // by duration descending
    std::vector<std::vector<double>> xc;  // centered covariates
    const std::vector<double>* durations;
    const std::vector<bool>* events;
    std::size_t p;

    // Breslow log partial likelihood with gradient and observed
    // information, one sweep over durations in descending order.
    double evaluate(const std::vector<double>& beta, std::vector<double>* grad,
                    SymMatrix* info) const
    {
        const std::size_t n = order.size();
        double s0 = 0.0;
        std::vector<double> s1(p, 0.0);
        SymMatrix s2(p);
        double ll = 0.0;
        if (grad)
            std::fill(grad->begin(), grad->end(), 0.0);
        if (info)
            info->zero();

        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            const double t = (*durations)[order[i]];
            while (j < n && (*durations)[order[j]] == t) {
                const std::size_t idx = order[j];
                double eta = 0.0;
                for (std::size_t f = 0; f < p; ++f)
                    eta += beta[f] * xc[idx][f];
                eta = std::clamp(eta, -500.0, 500.0);
                const double w = std::exp(eta);
                s0 += w;
                for (std::size_t f = 0; f < p; ++f) {
                    s1[f] += w * xc[idx][f];
                    for (std::size_t g = 0; g <= f; ++g)
                        s2.at(f, g) += w * xc[idx][f] * xc[idx][g];
                }
                ++j;
            }
            for (std::size_t k = i; k < j; ++k) {
                const std::size_t idx = order[k];
                if (!(*events)[idx])
                    continue;
                double eta = 0.0;
                for (std::size_t f = 0; f < p; ++f)
                    eta += beta[f] * xc[idx][f];
                ll += eta - std::log(s0);
                if (grad)
                    for (std::size_t f = 0; f < p; ++f)
                        (*grad)[f] += xc[idx][f] - s1[f] / s0;
                if (info) {
                    for (std::size_t f = 0; f < p; ++f)
                        for (std::size_t g = 0; g <= f; ++g) {
                            const double v = s2.at(f, g) / s0 - (s1[f] / s0) * (s1[g] / s0);
                            info->at(f, g) += v;
                            if (f != g)
                                info->at(g, f) += v;
                        }
                }
            }
            i = j;
        }
        return ll;
    }
};

} // namespace

HazardModel fit_cox(const std::vector<Row>& rows, const std::vector<double>& durations,
                    const std::vector<bool>& events, const std::vector<std::string>& names)
{
    const std::size_t n = rows.size();
    const std::size_t p = FeatureVector::count;
    if (n != durations.size() || n != events.size())
        throw DomainError("rows, durations and events must align");
    if (n < 20)
        throw InsufficientDataError("need at least 20 samples for the hazard model");
    if (names.size() != p)
        throw DomainError("need one name per covariate");

    {
        std::vector<double> distinct(durations);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2)
            throw InsufficientDataError("need at least 2 distinct durations");
    }
    if (std::none_of(events.begin(), events.end(), [](bool e) { return e; }))
        throw FitError("no termination events observed; hazard model undefined");

    CoxWorkspace ws;
    ws.durations = &durations;
    ws.events = &events;
    ws.p = p;
    ws.order.resize(n);
    std::iota(ws.order.begin(), ws.order.end(), std::size_t{0});
    std::stable_sort(ws.order.begin(), ws.order.end(),
                     [&](std::size_t a, std::size_t b) { return durations[a] > durations[b]; });

    // Center covariates; the partial likelihood only sees differences, so
    // estimates are unchanged while exp() stays in range.
    std::vector<double> means(p, 0.0);
    for (const Row& r : rows)
        for (std::size_t f = 0; f < p; ++f)
            means[f] += r[f];
    for (double& m : means)
        m /= static_cast<double>(n);
    ws.xc.assign(n, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < p; ++f)
            ws.xc[i][f] = rows[i][f] - means[f];

    HazardModel model;
    model.feature_names = names;
    std::vector<double> beta(p, 0.0), grad(p, 0.0);
    SymMatrix info(p), chol(p);
    double ll = ws.evaluate(beta, &grad, &info);

    for (int iter = 1; iter <= 100; ++iter) {
        model.iterations = iter;
        double gnorm = 0.0;
        for (double g : grad)
            gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        model.gradient_norm = gnorm;
        if (gnorm < 1e-8) {
            model.converged = true;
            break;
        }

        const int bad = cholesky(info, chol);
        if (bad >= 0)
            throw FitError("collinear covariates: information matrix is singular at '" +
                           names[static_cast<std::size_t>(bad)] + "'");
        const std::vector<double> step = chol_solve(chol, grad);

        double scale = 1.0;
        bool improved = false;
        std::vector<double> candidate(p, 0.0);
        for (int half = 0; half < 30; ++half) {
            for (std::size_t f = 0; f < p; ++f)
                candidate[f] = beta[f] + scale * step[f];
            const double ll_new = ws.evaluate(candidate, nullptr, nullptr);
            if (std::isfinite(ll_new) && ll_new >= ll - 1e-12) {
                beta = candidate;
                ll = ll_new;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved)
            break;  // stuck; report non-convergence with diagnostics
        ll = ws.evaluate(beta, &grad, &info);
    }

    model.log_likelihood = ll;
    model.coefficients = beta;
    model.hazard_ratios.resize(p);
    model.standard_errors.assign(p, 0.0);
    model.p_values.assign(p, 1.0);
    for (std::size_t f = 0; f < p; ++f)
        model.hazard_ratios[f] = std::exp(beta[f]);

    const int bad = cholesky(info, chol);
    if (bad >= 0)
        throw FitError("collinear covariates: information matrix is singular at '" +
                       names[static_cast<std::size_t>(bad)] + "'");
    for (std::size_t f = 0; f < p; ++f) {
        std::vector<double> unit(p, 0.0);
        unit[f] = 1.0;
        const std::vector<double> col = chol_solve(chol, unit);
        model.standard_errors[f] = std::sqrt(col[f]);
        if (model.standard_errors[f] > 0.0) {
            const double z = std::fabs(beta[f]) / model.standard_errors[f];
            model.p_values[f] = 2.0 * (1.0 - normal_cdf(z));
        }
    }
    return model;
}

SplitReport eradication_split_analysis(const std::vector<VaccinationOutcome>& outcomes,
                                       double threshold)
{
    SplitReport report;
    report.threshold = threshold;

    std::vector<double> f_lo, t_lo, f_hi, t_hi;
    for (const VaccinationOutcome& o : outcomes) {
        const bool above = o.fraction_infected_at_vax >= threshold;
        report.points.push_back(
            {o.fraction_infected_at_vax, static_cast<double>(o.t_term), above});
        if (above) {
            f_hi.push_back(o.fraction_infected_at_vax);
            t_hi.push_back(static_cast<double>(o.t_term));
        } else {
            f_lo.push_back(o.fraction_infected_at_vax);
            t_lo.push_back(static_cast<double>(o.t_term));
        }
    }

    const auto side_stats = [](const std::vector<double>& f, const std::vector<double>& t) {
        SplitSide side;
        side.n = f.size();
        if (f.empty())
            return side;
        side.mean_t_term = mean(t);
        side.line = least_squares(f, t);
        if (f.size() < 3) {
            side.degenerate = true;
            return side;
        }
        bool degenerate = false;
        const double rho = spearman(f, t, &degenerate);
        if (degenerate) {
            side.degenerate = true;
            return side;
        }
        side.rank_r2 = rho * rho;
        const double df = static_cast<double>(f.size()) - 2.0;
        if (side.rank_r2 >= 1.0) {
            side.p_value = 0.0;
        } else {
            const double t_stat = rho * std::sqrt(df / (1.0 - rho * rho));
            side.p_value = 2.0 * (1.0 - student_t_cdf(std::fabs(t_stat), df));
        }
        return side;
    };

    report.below = side_stats(f_lo, t_lo);
    report.above = side_stats(f_hi, t_hi);
    report.below_empty = f_lo.empty();
    report.above_empty = f_hi.empty();
    if (!report.below_empty && !report.above_empty && report.below.mean_t_term != 0.0) {
        report.ratio = report.above.mean_t_term / report.below.mean_t_term;
        report.ratio_defined = true;
    }
    return report;
}

std::vector<FeatureImportance> permutation_importance(const RegressionTree& tree,
                                                      const std::vector<Row>& rows,
                                                      const std::vector<double>& targets,
                                                      std::uint64_t seed, int reshuffles)
{
    if (rows.empty() || rows.size() != targets.size())
        throw DomainError("rows and targets must align");

    std::vector<double> base(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i)
        base[i] = tree.predict(rows[i]);
    bool degenerate = false;
    const double rho_base0 = spearman(base, targets, &degenerate);
    const double rho_base = degenerate ? 0.0 : rho_base0;

    std::vector<FeatureImportance> out;
    for (std::size_t f = 0; f < FeatureVector::count; ++f) {
        Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * (f + 1)));
        std::vector<double> column(rows.size(), 0.0);
        for (std::size_t i = 0; i < rows.size(); ++i)
            column[i] = rows[i][f];
        double acc = 0.0;
        std::vector<Row> shuffled_rows(rows);
        for (int s = 0; s < reshuffles; ++s) {
            rng.shuffle(column);
            for (std::size_t i = 0; i < rows.size(); ++i)
                shuffled_rows[i][f] = column[i];
            std::vector<double> pred(rows.size(), 0.0);
            for (std::size_t i = 0; i < rows.size(); ++i)
                pred[i] = tree.predict(shuffled_rows[i]);
            bool deg = false;
            const double rho = spearman(pred, targets, &deg);
            acc += deg ? 0.0 : rho;
        }
        out.push_back({f, rho_base - acc / static_cast<double>(reshuffles)});
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureImportance& a, const FeatureImportance& b) {
        return a.importance > b.importance;
    });
    return out;
}

} // namespace epifit
