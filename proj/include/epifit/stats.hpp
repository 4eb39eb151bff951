#pragma once

#include <cstddef>
#include <vector>

namespace epifit {

double mean(const std::vector<double>& v);

// Population variance (divides by n). n == 0 returns 0.
double variance(const std::vector<double>& v);

// Average ranks, 1-based; ties share the mean of the positions they span.
std::vector<double> ranks(const std::vector<double>& v);

// Pearson correlation. Returns 0 with *degenerate = true when either side
// has zero variance (flag optional).
double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* degenerate = nullptr);

// Spearman rank correlation: Pearson on average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y,
                bool* degenerate = nullptr);

// Least-squares affine fit y ~= scale * x + offset.
// When x is constant the slope is 0 and offset is mean(y).
struct AffineFit {
    double scale = 0.0;
    double offset = 0.0;
};
AffineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

// Standard normal CDF.
double normal_cdf(double z);

// CDF of Student's t with nu degrees of freedom, via the regularized
// incomplete beta function.
double student_t_cdf(double t, double nu);

// Regularized incomplete beta I_x(a, b), evaluated with Lentz's continued
// fraction. Exposed for tests.
double incomplete_beta(double a, double b, double x);

} // namespace epifit
