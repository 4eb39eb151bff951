#include <doctest.h>

#include "epifit/stats.hpp"

#include <cmath>
#include <vector>

using namespace epifit;

TEST_CASE("mean and population variance")
{
    CHECK(mean({2.0, 4.0, 6.0}) == doctest::Approx(4.0));
    CHECK(variance({2.0, 4.0, 6.0}) == doctest::Approx(8.0 / 3.0));
    CHECK(variance({5.0}) == 0.0);
    CHECK(variance({}) == 0.0);
}

TEST_CASE("average ranks with ties")
{
    CHECK(ranks({10.0, 20.0, 30.0}) == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(ranks({5.0, 5.0, 7.0}) == std::vector<double>{1.5, 1.5, 3.0});
    CHECK(ranks({4.0, 4.0, 4.0, 4.0}) == std::vector<double>{2.5, 2.5, 2.5, 2.5});
    CHECK(ranks({3.0, 1.0, 2.0}) == std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("pearson on a hand-computed table")
{
    // x=[1,2,3,4], y=[1,3,2,4]: cov=1, var_x=var_y=1.25 -> r=0.8.
    CHECK(pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0));
}

TEST_CASE("pearson degenerate flag on flat input")
{
    bool degenerate = false;
    CHECK(pearson({1, 1, 1}, {1, 2, 3}, &degenerate) == 0.0);
    CHECK(degenerate);
    degenerate = false;
    CHECK(pearson({1, 2}, {}, &degenerate) == 0.0);
    CHECK(degenerate);
}

TEST_CASE("spearman sees monotone structure through nonlinearity")
{
    std::vector<double> x, y;
    for (int k = 0; k < 20; ++k) {
        x.push_back(k);
        y.push_back(std::exp(0.3 * k));
    }
    CHECK(spearman(x, y) == doctest::Approx(1.0));
    std::vector<double> yr(y.rbegin(), y.rend());
    CHECK(spearman(x, yr) == doctest::Approx(-1.0));
    // Tied case: ranks x=[1,2,3], y=[1.5,1.5,3] -> rho = sqrt(3)/2.
    CHECK(spearman({1, 2, 3}, {1, 1, 2}) == doctest::Approx(0.8660254037844386).epsilon(1e-12));
}

TEST_CASE("least squares recovers an exact line")
{
    std::vector<double> x{0, 1, 2, 3, 4}, y;
    for (double v : x)
        y.push_back(2.0 * v + 1.0);
    const AffineFit f = least_squares(x, y);
    CHECK(f.scale == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(f.offset == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("least squares on constant x degrades to the mean")
{
    const AffineFit f = least_squares({3, 3, 3}, {1, 2, 6});
    CHECK(f.scale == 0.0);
    CHECK(f.offset == doctest::Approx(3.0));
}

TEST_CASE("normal cdf reference points")
{
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(-1.0) + normal_cdf(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(normal_cdf(8.0) > 0.999999999);
}

TEST_CASE("student t cdf against closed forms")
{
    // nu=1 is Cauchy: F(t) = 1/2 + atan(t)/pi.
    CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(student_t_cdf(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    // nu=2: F(t) = 1/2 + t / (2*sqrt(2+t^2)).
    const auto f2 = [](double t) { return 0.5 + t / (2.0 * std::sqrt(2.0 + t * t)); };
    for (double t : {-2.0, -0.5, 0.5, 1.4142135623730951, 3.0}) {
        CAPTURE(t);
        CHECK(student_t_cdf(t, 2.0) == doctest::Approx(f2(t)).epsilon(1e-10));
    }
    // Large nu approaches the normal.
    CHECK(student_t_cdf(1.0, 300.0) == doctest::Approx(normal_cdf(1.0)).epsilon(2e-3));
}

TEST_CASE("incomplete beta identities")
{
    for (double x : {0.1, 0.3, 0.5, 0.9}) {
        CAPTURE(x);
        CHECK(incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
        // Reflection: I_x(a,b) = 1 - I_{1-x}(b,a).
        CHECK(incomplete_beta(2.5, 4.0, x) ==
              doctest::Approx(1.0 - incomplete_beta(4.0, 2.5, 1.0 - x)).epsilon(1e-12));
    }
    // Integer case expands to a binomial tail: I_.25(2,3) = 0.26171875.
    CHECK(incomplete_beta(2.0, 3.0, 0.25) == doctest::Approx(0.26171875).epsilon(1e-12));
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}
