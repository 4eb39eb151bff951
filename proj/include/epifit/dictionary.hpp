#pragma once

#include "epifit/epidemic.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace epifit {

struct GridPoint {
    double i0 = 0.0;
    double r0 = 0.0;
    double gamma = 0.0;
};

struct GridSpec {
    int points_per_axis = 10;
    double i0_lo = 1.0, i0_hi = 1e7;          // log-spaced
    double r0_lo = 0.7, r0_hi = 5.0;          // linear
    double gamma_lo = 1e-6, gamma_hi = 1e-2;  // log-spaced
};

// Full cross product ordered by (i0, r0, gamma) ascending, endpoints
// included on every axis.
std::vector<GridPoint> build_grid(const GridSpec& spec);
std::vector<GridPoint> build_grid(int points_per_axis = 10);

struct DictionaryEntry {
    std::int64_t entry_id = 0;
    EpidemicParams params;
    std::vector<double> values;       // incidence template, one value per day
    std::vector<double> prefix;       // running sums of values, length+1 (not serialized)
};

struct Dictionary {
    std::vector<DictionaryEntry> entries;
    GridSpec grid_spec;
    std::int64_t horizon_days = 730;
    double s0 = 1e7;
    std::vector<InfectionMode> modes;
    std::int64_t degenerate_dropped = 0;

    const DictionaryEntry* find(std::int64_t entry_id) const;
};

// One entry per (grid point, mode) whose template moves at least one whole
// machine; flatter templates are dropped and counted. Every entry's curve
// uses S(0) = 1e7 (population = 1e7 + i0), so templates form pure shape
// families and absolute scale is left to the downstream affine fit.
//
// entry_id = mode_slot * grid_size + grid_index, with mode_slot 0 for P2P
// and 1 for CS; ids are therefore stable under mode subsetting and
// degenerate drops.
Dictionary build_dictionary(const std::vector<GridPoint>& grid, const std::vector<InfectionMode>& modes,
                            std::int64_t horizon_days = 730, int jobs = 1);
Dictionary build_dictionary(const GridSpec& spec, const std::vector<InfectionMode>& modes,
                            std::int64_t horizon_days = 730, int jobs = 1);

// On-disk layout: <dir>/manifest.json, <dir>/entries.csv
// (entry_id,mode,i0,r0,gamma), <dir>/templates.csv (entry_id followed by
// one field per day). Doubles are written in shortest round-trip form, so
// save -> load -> save is byte-stable.
void save_dictionary(const Dictionary& dict, const std::filesystem::path& dir);
Dictionary load_dictionary(const std::filesystem::path& dir);

} // namespace epifit
