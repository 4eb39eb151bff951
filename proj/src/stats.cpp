#include "epifit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epifit {

double mean(const std::vector<double>& v)
{
    if (v.empty())
        return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v)
{
    if (v.empty())
        return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v)
        acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size());
}

std::vector<double> ranks(const std::vector<double>& v)
{
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> out(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]])
            ++j;
        // Positions i..j (0-based) tie; all get the average 1-based rank.
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            out[order[k]] = r;
        i = j + 1;
    }
    return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y, bool* degenerate)
{
    if (degenerate)
        *degenerate = false;
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) {
        if (degenerate)
            *degenerate = true;
        return 0.0;
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        if (degenerate)
            *degenerate = true;
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y, bool* degenerate)
{
    if (x.size() != y.size() || x.size() < 2) {
        if (degenerate)
            *degenerate = true;
        return 0.0;
    }
    return pearson(ranks(x), ranks(y), degenerate);
}

AffineFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    AffineFit fit;
    const std::size_t n = x.size();
    if (n == 0 || n != y.size())
        return fit;
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx > 0.0)
        fit.scale = sxy / sxx;
    fit.offset = my - fit.scale * mx;
    return fit;
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double incomplete_beta(double a, double b, double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;

    // I_x(a,b) = prefactor * cf / a, with the symmetry swap keeping the
    // continued fraction in its fast-converging region.
    if (x > (a + 1.0) / (a + b + 2.0))
        return 1.0 - incomplete_beta(b, a, 1.0 - x);

    const double log_pre = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);

    // Lentz's algorithm for the standard continued fraction expansion.
    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;

        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15)
            break;
    }
    return std::exp(log_pre) * h / a;
}

double student_t_cdf(double t, double nu)
{
    if (nu <= 0.0)
        return 0.5;
    const double x = nu / (nu + t * t);
    const double p = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - p : p;
}

} // namespace epifit
