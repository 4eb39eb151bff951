#include <doctest.h>

#include "epifit/epidemic.hpp"
#include "epifit/errors.hpp"
#include "epifit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

using namespace epifit;

namespace {

// Final-size relation for the pure contact-driven model with R(0)=0:
// S_inf = S0 * exp(-(beta/gamma) * (N - S_inf)), bracketed bisection.
double final_size_root(double s0, double i0, double beta, double gamma)
{
    const double n = s0 + i0;
    double lo = 1e-12, hi = s0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double f = mid - s0 * std::exp(-(beta / gamma) * (n - mid));
        (f > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

void check_conserved(const CompartmentTrajectory& traj)
{
    for (std::size_t t = 0; t < traj.s.size(); ++t) {
        const double total = traj.s[t] + traj.i[t] + traj.r[t];
        CHECK(std::abs(total - traj.population) <= 1e-6 * traj.population);
    }
}

void check_monotone(const CompartmentTrajectory& traj)
{
    for (std::size_t t = 1; t < traj.s.size(); ++t) {
        CHECK(traj.s[t] <= traj.s[t - 1]);
        CHECK(traj.r[t] >= traj.r[t - 1]);
        CHECK(traj.s[t] >= 0.0);
        CHECK(traj.i[t] >= 0.0);
        CHECK(traj.r[t] >= 0.0);
    }
}

} // namespace

TEST_CASE("central-source decay matches the analytic exponential")
{
    // beta_cs = 0.1/day on S(0)=1000: S(t) = 1000*exp(-0.1 t).
    const EpidemicParams p = EpidemicParams::central_source(1.0, 10.0, 0.01, 1001.0);
    CHECK(p.beta_cs == doctest::Approx(0.1).epsilon(1e-15));
    const CompartmentTrajectory traj = simulate(p, 30);
    CHECK(traj.s[10] == doctest::Approx(367.87944117144235).epsilon(1e-4));
    // RK4 at h=0.05 is far tighter than the contract asks.
    for (int t = 0; t <= 30; ++t) {
        CAPTURE(t);
        CHECK(traj.s[t] == doctest::Approx(1000.0 * std::exp(-0.1 * t)).epsilon(1e-9));
    }
    const IncidenceSeries inc = incidence_of(traj);
    CHECK(inc.values[0] == doctest::Approx(95.16258196404048).epsilon(1e-6));
    CHECK(static_cast<std::int64_t>(inc.values.size()) == traj.horizon_days);
}

TEST_CASE("zero infection force leaves S flat and I decaying")
{
    const EpidemicParams p = EpidemicParams::hybrid(10.0, 0.0, 0.0, 0.05, 1000.0);
    const CompartmentTrajectory traj = simulate(p, 40);
    for (double s : traj.s)
        CHECK(s == 990.0);  // derivative is exactly zero in every RK4 stage
    CHECK(traj.i[20] == doctest::Approx(3.6787944117144233).epsilon(1e-9));
    const IncidenceSeries inc = incidence_of(traj);
    for (double v : inc.values)
        CHECK(v == 0.0);
    check_conserved(traj);
    check_monotone(traj);
}

TEST_CASE("contact-driven epidemic reaches the final-size root")
{
    // r0=2, gamma=0.01/day is a slow burn: the outbreak needs ~2300 days
    // to finish, so the horizon runs well past that.
    const EpidemicParams p = EpidemicParams::peer_to_peer(10.0, 2.0, 0.01, 1e5);
    const double root = final_size_root(p.s0(), p.i0, p.beta_p2p, p.gamma);
    const CompartmentTrajectory traj = simulate(p, 2700);
    CHECK(std::abs(traj.s.back() - root) <= 1e-3 * root);
    CHECK(traj.i.back() < 2.0);
    check_conserved(traj);
    check_monotone(traj);
}

TEST_CASE("conservation and monotonicity across random parameters")
{
    Rng rng(99);
    for (int k = 0; k < 25; ++k) {
        const double i0 = 1.0 + std::floor(rng.uniform(0, 100));
        const double r0 = rng.uniform(0.7, 5.0);
        const double gamma = std::pow(10.0, rng.uniform(-4.0, -1.0));
        const double n = i0 + std::pow(10.0, rng.uniform(3.0, 7.0));
        const EpidemicParams p = (k % 2 == 0)
                                     ? EpidemicParams::peer_to_peer(i0, r0, gamma, n)
                                     : EpidemicParams::central_source(i0, r0, gamma, n);
        CAPTURE(k);
        const CompartmentTrajectory traj = simulate(p, 365);
        check_conserved(traj);
        check_monotone(traj);
        CHECK(traj.s.size() == 366);
    }
}

TEST_CASE("central-source incidence is strictly decreasing")
{
    for (double r0 : {0.7, 2.0, 5.0}) {
        for (double gamma : {1e-4, 1e-3, 1e-2}) {
            CAPTURE(r0);
            CAPTURE(gamma);
            const EpidemicParams p = EpidemicParams::central_source(5.0, r0, gamma, 1e7 + 5.0);
            const IncidenceSeries inc = incidence_of(simulate(p, 730));
            for (std::size_t t = 1; t < inc.values.size(); ++t)
                CHECK(inc.values[t] < inc.values[t - 1]);
        }
    }
}

TEST_CASE("contact-driven incidence is unimodal when it takes off")
{
    for (double r0 : {1.5, 2.5, 4.0}) {
        CAPTURE(r0);
        const EpidemicParams p = EpidemicParams::peer_to_peer(100.0, r0, 0.05, 1e6);
        const IncidenceSeries inc = incidence_of(simulate(p, 730));
        const double tol = 1e-9 * *std::max_element(inc.values.begin(), inc.values.end());
        // Significant day-to-day movements must rise first, then fall.
        bool falling = false;
        std::size_t peak = 0;
        for (std::size_t t = 1; t < inc.values.size(); ++t) {
            const double d = inc.values[t] - inc.values[t - 1];
            if (std::abs(d) <= tol)
                continue;
            if (d < 0.0) {
                if (!falling)
                    peak = t - 1;
                falling = true;
            } else {
                CHECK_FALSE(falling);  // a rise after the fall breaks unimodality
            }
        }
        CHECK(falling);      // the epidemic did turn over
        CHECK(peak > 0);     // interior peak
        CHECK(peak + 1 < inc.values.size());
    }
}

TEST_CASE("halving the step moves no daily sample by more than 1e-6")
{
    const std::vector<std::pair<InfectionRates, std::int64_t>> cases_p2p = {
        {{2.0 * 0.05 / 1e6, 0.0, 0.05}, 365}};
    const std::vector<std::pair<InfectionRates, std::int64_t>> cases_cs = {
        {{0.0, 0.03, 0.01}, 365}};
    for (const auto& segments : {cases_p2p, cases_cs}) {
        const CompartmentTrajectory a = simulate_piecewise(1e6, 50.0, 0.0, segments, 20);
        const CompartmentTrajectory b = simulate_piecewise(1e6, 50.0, 0.0, segments, 40);
        for (std::size_t t = 0; t < a.s.size(); ++t) {
            const auto close = [&](double x, double y) {
                return std::abs(x - y) <= 1e-6 * std::max({std::abs(x), std::abs(y), 1.0});
            };
            CHECK(close(a.s[t], b.s[t]));
            CHECK(close(a.i[t], b.i[t]));
            CHECK(close(a.r[t], b.r[t]));
        }
    }
}

TEST_CASE("hybrid with one rate zeroed reproduces the pure mode bit for bit")
{
    const EpidemicParams p2p = EpidemicParams::peer_to_peer(20.0, 3.0, 0.04, 2e5);
    const EpidemicParams hp = EpidemicParams::hybrid(20.0, p2p.beta_p2p, 0.0, 0.04, 2e5);
    const CompartmentTrajectory a = simulate(p2p, 400);
    const CompartmentTrajectory b = simulate(hp, 400);
    CHECK(a.s == b.s);
    CHECK(a.i == b.i);
    CHECK(a.r == b.r);

    const EpidemicParams cs = EpidemicParams::central_source(20.0, 3.0, 0.04, 2e5);
    const EpidemicParams hc = EpidemicParams::hybrid(20.0, 0.0, cs.beta_cs, 0.04, 2e5);
    const CompartmentTrajectory c = simulate(cs, 400);
    const CompartmentTrajectory d = simulate(hc, 400);
    CHECK(c.s == d.s);
    CHECK(c.i == d.i);
    CHECK(c.r == d.r);
}

TEST_CASE("violent rates trip the instability guard")
{
    // beta_cs=100/day puts lambda*h = 5, far outside RK4's stability region;
    // the integration blows up instead of decaying.
    const EpidemicParams p = EpidemicParams::hybrid(1.0, 0.0, 100.0, 0.01, 1000.0);
    CHECK_THROWS_AS(simulate(p, 30), NumericalError);
    // The quadratic contact term overshoots negative within a step.
    const EpidemicParams q = EpidemicParams::peer_to_peer(10.0, 500.0, 1.0, 1000.0);
    CHECK_THROWS_AS(simulate(q, 30), NumericalError);
}

TEST_CASE("parameter validation rejects out-of-domain values")
{
    CHECK_THROWS_AS(EpidemicParams::peer_to_peer(0.5, 2.0, 0.1, 100.0), DomainError);   // i0 < 1
    CHECK_THROWS_AS(EpidemicParams::peer_to_peer(10.0, 2.0, 0.1, 10.0), DomainError);   // N <= i0
    CHECK_THROWS_AS(EpidemicParams::peer_to_peer(1.0, 2.0, 0.0, 100.0), DomainError);   // gamma
    CHECK_THROWS_AS(EpidemicParams::peer_to_peer(1.0, 0.0, 0.1, 100.0), DomainError);   // r0
    CHECK_THROWS_AS(EpidemicParams::peer_to_peer(1.0, -2.0, 0.1, 100.0), DomainError);
    CHECK_THROWS_AS(EpidemicParams::hybrid(1.0, -1e-9, 0.0, 0.1, 100.0), DomainError);
    CHECK_THROWS_AS(simulate(EpidemicParams::central_source(1.0, 2.0, 0.1, 100.0), 0),
                    DomainError);

    EpidemicParams broken = EpidemicParams::peer_to_peer(1.0, 2.0, 0.1, 100.0);
    broken.beta_cs = 0.01;  // a contact-only strain must not carry a source rate
    CHECK_THROWS_AS(broken.validate(), DomainError);
}

TEST_CASE("mode names round trip")
{
    for (InfectionMode m : {InfectionMode::P2P, InfectionMode::CS, InfectionMode::Hybrid})
        CHECK(mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(mode_from_string("psp"), ParseError);
}

TEST_CASE("incidence telescopes back to the susceptible drop")
{
    const EpidemicParams p = EpidemicParams::central_source(1.0, 10.0, 0.01, 1001.0);
    const CompartmentTrajectory traj = simulate(p, 100);
    const IncidenceSeries inc = incidence_of(traj);
    double sum = 0.0;
    for (double v : inc.values)
        sum += v;
    CHECK(sum == doctest::Approx(traj.s.front() - traj.s.back()).epsilon(1e-12));
    for (double v : inc.values)
        CHECK(v >= 0.0);
}

TEST_CASE("piecewise segments switch rates on the configured day")
{
    const InfectionRates fast{0.0, 0.2, 0.01};
    const InfectionRates off{0.0, 0.0, 0.5};
    const CompartmentTrajectory traj = simulate_piecewise(1000.0, 1.0, 0.0, {{fast, 10}, {off, 10}});
    const IncidenceSeries inc = incidence_of(traj);
    CHECK(inc.values[9] > 0.5);        // still spreading on the last fast day
    CHECK(inc.values[10] == 0.0);      // source cut off from day 10 on
    CHECK(traj.s[10] == traj.s[20]);   // S frozen once beta drops to zero
    CHECK(traj.i[20] < traj.i[10]);    // clearance keeps running
    CHECK_THROWS_AS(simulate_piecewise(1000.0, 1.0, 0.0, {{fast, 0}}), DomainError);
    CHECK_THROWS_AS(simulate_piecewise(1000.0, 1.0, 0.0, {{fast, 10}}, 0), DomainError);
}

TEST_CASE("trajectory and incidence csv io")
{
    const EpidemicParams p = EpidemicParams::central_source(2.0, 3.0, 0.01, 500.0);
    const CompartmentTrajectory traj = simulate(p, 5);
    std::ostringstream tout;
    write_trajectory_csv(tout, traj);
    CHECK(tout.str().substr(0, 10) == "day,s,i,r\n");

    const IncidenceSeries inc = incidence_of(traj);
    std::ostringstream iout;
    write_incidence_csv(iout, inc);
    std::istringstream iin(iout.str());
    const IncidenceSeries back = read_incidence_csv(iin);
    CHECK(back.values == inc.values);

    std::istringstream bad_header("day,count\n0,1\n");
    CHECK_THROWS_AS(read_incidence_csv(bad_header), ParseError);
    std::istringstream bad_day("day,incidence\n0,1\n2,1\n");
    CHECK_THROWS_AS(read_incidence_csv(bad_day), ParseError);
    std::istringstream negative("day,incidence\n0,-1\n");
    CHECK_THROWS_AS(read_incidence_csv(negative), ParseError);
}
