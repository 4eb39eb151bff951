#include "epifit/epidemic.hpp"

#include "epifit/csv.hpp"
#include "epifit/errors.hpp"
#include "epifit/numformat.hpp"

#include <cmath>
#include <ostream>

namespace epifit {

std::string to_string(InfectionMode mode)
{
    switch (mode) {
    case InfectionMode::P2P: return "p2p";
    case InfectionMode::CS: return "cs";
    case InfectionMode::Hybrid: return "hybrid";
    }
    return "?";
}

InfectionMode mode_from_string(std::string_view text)
{
    if (text == "p2p")
        return InfectionMode::P2P;
    if (text == "cs")
        return InfectionMode::CS;
    if (text == "hybrid")
        return InfectionMode::Hybrid;
    throw ParseError("unknown infection mode '" + std::string(text) + "'");
}

EpidemicParams EpidemicParams::peer_to_peer(double i0, double r0, double gamma, double population)
{
    EpidemicParams p;
    p.mode = InfectionMode::P2P;
    p.i0 = i0;
    p.r0 = r0;
    p.gamma = gamma;
    p.population = population;
    p.beta_p2p = r0 * gamma / (population - i0);
    p.beta_cs = 0.0;
    p.validate();
    return p;
}

EpidemicParams EpidemicParams::central_source(double i0, double r0, double gamma, double population)
{
    EpidemicParams p;
    p.mode = InfectionMode::CS;
    p.i0 = i0;
    p.r0 = r0;
    p.gamma = gamma;
    p.population = population;
    p.beta_p2p = 0.0;
    p.beta_cs = r0 * gamma;
    p.validate();
    return p;
}

EpidemicParams EpidemicParams::hybrid(double i0, double beta_p2p, double beta_cs, double gamma,
                                      double population)
{
    EpidemicParams p;
    p.mode = InfectionMode::Hybrid;
    p.i0 = i0;
    p.gamma = gamma;
    p.population = population;
    p.beta_p2p = beta_p2p;
    p.beta_cs = beta_cs;
    p.r0 = (beta_p2p * p.s0() + beta_cs) / gamma;
    p.validate();
    return p;
}

void EpidemicParams::validate() const
{
    if (!(i0 >= 1.0))
        throw DomainError("i0 must be >= 1, got " + format_double(i0));
    if (!(population > i0))
        throw DomainError("population must exceed i0, got N=" + format_double(population) +
                          " i0=" + format_double(i0));
    if (!(gamma > 0.0))
        throw DomainError("gamma must be positive, got " + format_double(gamma));
    if (!(beta_p2p >= 0.0) || !(beta_cs >= 0.0))
        throw DomainError("infection rates must be non-negative");
    switch (mode) {
    case InfectionMode::P2P:
        if (!(beta_p2p > 0.0) || beta_cs != 0.0)
            throw DomainError("p2p mode requires beta_p2p > 0 and beta_cs = 0");
        break;
    case InfectionMode::CS:
        if (!(beta_cs > 0.0) || beta_p2p != 0.0)
            throw DomainError("cs mode requires beta_cs > 0 and beta_p2p = 0");
        break;
    case InfectionMode::Hybrid:
        // Both rates may be zero: a seeded population that only recovers.
        break;
    }
    if (mode != InfectionMode::Hybrid && !(r0 > 0.0))
        throw DomainError("r0 must be positive, got " + format_double(r0));
}

namespace {

struct State {
    double s, i, r;
};

State deriv(const State& c, const InfectionRates& k)
{
    const double force = k.beta_p2p * c.s * c.i + k.beta_cs * c.s;
    return {-force, force - k.gamma * c.i, k.gamma * c.i};
}

State rk4_step(const State& c, const InfectionRates& k, double h)
{
    const State d1 = deriv(c, k);
    const State c2{c.s + 0.5 * h * d1.s, c.i + 0.5 * h * d1.i, c.r + 0.5 * h * d1.r};
    const State d2 = deriv(c2, k);
    const State c3{c.s + 0.5 * h * d2.s, c.i + 0.5 * h * d2.i, c.r + 0.5 * h * d2.r};
    const State d3 = deriv(c3, k);
    const State c4{c.s + h * d3.s, c.i + h * d3.i, c.r + h * d3.r};
    const State d4 = deriv(c4, k);
    return {c.s + h / 6.0 * (d1.s + 2.0 * d2.s + 2.0 * d3.s + d4.s),
            c.i + h / 6.0 * (d1.i + 2.0 * d2.i + 2.0 * d3.i + d4.i),
            c.r + h / 6.0 * (d1.r + 2.0 * d2.r + 2.0 * d3.r + d4.r)};
}

// Stored samples tolerate float noise just below zero; anything lower
// means the step size cannot resolve the dynamics.
double clamp_sample(double v, double floor_mag, const char* name)
{
    if (v >= 0.0)
        return v;
    if (v >= -floor_mag)
        return 0.0;
    throw NumericalError(std::string(name) + " fell below -1e-9*population (" +
                         format_double(v) + "); step size too coarse for these rates");
}

} // namespace

CompartmentTrajectory simulate_piecewise(double s0, double i0, double r0,
                                         const std::vector<std::pair<InfectionRates, std::int64_t>>& segments,
                                         std::int64_t steps_per_day)
{
    std::int64_t horizon = 0;
    for (const auto& seg : segments) {
        if (seg.second < 0)
            throw DomainError("segment length must be non-negative");
        horizon += seg.second;
    }
    if (horizon < 1)
        throw DomainError("horizon must be at least 1 day");
    if (steps_per_day < 1)
        throw DomainError("steps_per_day must be >= 1");

    const double population = s0 + i0 + r0;
    const double floor_mag = 1e-9 * population;
    const double h = 1.0 / static_cast<double>(steps_per_day);

    CompartmentTrajectory traj;
    traj.horizon_days = horizon;
    traj.population = population;
    traj.s.reserve(static_cast<std::size_t>(horizon) + 1);
    traj.i.reserve(static_cast<std::size_t>(horizon) + 1);
    traj.r.reserve(static_cast<std::size_t>(horizon) + 1);

    State c{s0, i0, r0};
    auto store = [&](const State& st) {
        traj.s.push_back(clamp_sample(st.s, floor_mag, "S"));
        traj.i.push_back(clamp_sample(st.i, floor_mag, "I"));
        traj.r.push_back(clamp_sample(st.r, floor_mag, "R"));
    };
    store(c);

    for (const auto& [rates, days] : segments) {
        for (std::int64_t day = 0; day < days; ++day) {
            for (std::int64_t k = 0; k < steps_per_day; ++k) {
                c = rk4_step(c, rates, h);
                if (c.s < -floor_mag || c.i < -floor_mag || c.r < -floor_mag)
                    throw NumericalError("compartment fell below -1e-9*population during "
                                         "integration; step size too coarse for these rates");
            }
            store(c);
        }
    }
    return traj;
}

CompartmentTrajectory simulate(const EpidemicParams& params, std::int64_t horizon_days)
{
    params.validate();
    if (horizon_days < 1)
        throw DomainError("horizon_days must be >= 1");
    return simulate_piecewise(params.s0(), params.i0, 0.0, {{params.rates(), horizon_days}});
}

IncidenceSeries incidence_of(const CompartmentTrajectory& traj)
{
    IncidenceSeries out;
    if (traj.s.size() < 2)
        return out;
    out.values.reserve(traj.s.size() - 1);
    for (std::size_t t = 0; t + 1 < traj.s.size(); ++t) {
        const double d = traj.s[t] - traj.s[t + 1];
        out.values.push_back(d > 0.0 ? d : 0.0);
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, const CompartmentTrajectory& traj)
{
    out << "day,s,i,r\n";
    for (std::size_t t = 0; t < traj.s.size(); ++t)
        out << t << ',' << format_double(traj.s[t]) << ',' << format_double(traj.i[t]) << ','
            << format_double(traj.r[t]) << '\n';
}

void write_incidence_csv(std::ostream& out, const IncidenceSeries& series)
{
    out << "day,incidence\n";
    for (std::size_t t = 0; t < series.values.size(); ++t)
        out << t << ',' << format_double(series.values[t]) << '\n';
}

IncidenceSeries read_incidence_csv(std::istream& in)
{
    const auto rows = read_csv(in);
    if (rows.empty())
        throw ParseError("empty incidence file");
    if (rows[0].fields != std::vector<std::string>{"day", "incidence"})
        throw ParseError("line 1: expected header 'day,incidence'");

    IncidenceSeries out;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& row = rows[k];
        if (row.fields.size() != 2)
            throw ParseError("line " + std::to_string(row.line) + ": expected 2 fields");
        const std::int64_t day = parse_int(row.fields[0]);
        if (day != static_cast<std::int64_t>(out.values.size()))
            throw ParseError("line " + std::to_string(row.line) + ": days must be consecutive from 0");
        const double v = parse_double(row.fields[1]);
        if (v < 0.0)
            throw ParseError("line " + std::to_string(row.line) + ": negative incidence");
        out.values.push_back(v);
    }
    return out;
}

} // namespace epifit
