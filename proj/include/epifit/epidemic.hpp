#pragma once

#include "epifit/dates.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace epifit {

enum class InfectionMode { P2P, CS, Hybrid };

std::string to_string(InfectionMode mode);
InfectionMode mode_from_string(std::string_view text);

// Instantaneous transition rates of the compartment system:
//   dS/dt = -beta_p2p*S*I - beta_cs*S
//   dI/dt =  beta_p2p*S*I + beta_cs*S - gamma*I
//   dR/dt =  gamma*I
struct InfectionRates {
    double beta_p2p = 0.0;
    double beta_cs = 0.0;
    double gamma = 0.0;
};

struct EpidemicParams {
    InfectionMode mode = InfectionMode::P2P;
    double i0 = 1.0;        // initially infected machines, >= 1
    double r0 = 0.0;        // basic reproduction number
    double gamma = 0.0;     // recovery rate, 1/day
    double population = 0.0;
    double beta_p2p = 0.0;  // per-contact rate, 1/(machine*day)
    double beta_cs = 0.0;   // central-source rate, 1/day

    double s0() const { return population - i0; }
    InfectionRates rates() const { return {beta_p2p, beta_cs, gamma}; }

    // Factories derive the rates from r0 so that the initial per-infected
    // reproduction equals r0 in both modes: beta_cs = r0*gamma (both 1/day),
    // beta_p2p = r0*gamma/S(0).
    static EpidemicParams peer_to_peer(double i0, double r0, double gamma, double population);
    static EpidemicParams central_source(double i0, double r0, double gamma, double population);
    // Hybrid takes explicit rates; both may be zero (no infection force),
    // which pure modes reject. Its r0 is the sum of the per-mode
    // contributions, beta_p2p*S(0)/gamma + beta_cs/gamma.
    static EpidemicParams hybrid(double i0, double beta_p2p, double beta_cs, double gamma,
                                 double population);

    // Throws DomainError when any field violates its constraints.
    void validate() const;
};

struct CompartmentTrajectory {
    std::vector<double> s;
    std::vector<double> i;
    std::vector<double> r;
    std::int64_t horizon_days = 0;  // s/i/r have horizon_days+1 daily samples
    double population = 0.0;
};

struct IncidenceSeries {
    std::vector<double> values;  // new infections per day, >= 0
    std::optional<Date> day0;
};

// Fixed-step RK4, h = 0.05 day, sampled at integer days. A compartment
// dipping below -1e-9*population is a numerical-instability error; dips
// within that band are clamped to zero in the stored samples.
CompartmentTrajectory simulate(const EpidemicParams& params, std::int64_t horizon_days);

// Same integrator over consecutive rate regimes (segment = rates + day
// count); used for vaccination scenarios where rates change mid-run.
// steps_per_day is exposed so callers can check step-size convergence.
CompartmentTrajectory simulate_piecewise(double s0, double i0, double r0,
                                         const std::vector<std::pair<InfectionRates, std::int64_t>>& segments,
                                         std::int64_t steps_per_day = 20);

// values[t] = s[t] - s[t+1], floored at 0; length = horizon_days.
IncidenceSeries incidence_of(const CompartmentTrajectory& traj);

void write_trajectory_csv(std::ostream& out, const CompartmentTrajectory& traj);
void write_incidence_csv(std::ostream& out, const IncidenceSeries& series);
IncidenceSeries read_incidence_csv(std::istream& in);

} // namespace epifit
