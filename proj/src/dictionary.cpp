#include "epifit/dictionary.hpp"

#include "epifit/csv.hpp"
#include "epifit/errors.hpp"
#include "epifit/numformat.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <thread>

namespace epifit {

namespace {

double log_spaced(double lo, double hi, int n, int k)
{
    if (k == 0)
        return lo;
    if (k == n - 1)
        return hi;
    const double e = std::log10(lo) + (std::log10(hi) - std::log10(lo)) *
                                          (static_cast<double>(k) / (n - 1));
    return std::pow(10.0, e);
}

double lin_spaced(double lo, double hi, int n, int k)
{
    if (k == 0)
        return lo;
    if (k == n - 1)
        return hi;
    return lo + (hi - lo) * (static_cast<double>(k) / (n - 1));
}

int mode_slot(InfectionMode mode)
{
    switch (mode) {
    case InfectionMode::P2P: return 0;
    case InfectionMode::CS: return 1;
    default: throw DomainError("dictionary supports p2p and cs modes only");
    }
}

std::vector<double> prefix_sums(const std::vector<double>& v)
{
    std::vector<double> p(v.size() + 1, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        acc += v[k];
        p[k + 1] = acc;
    }
    return p;
}

EpidemicParams params_for(InfectionMode mode, const GridPoint& g, double s0)
{
    const double population = s0 + g.i0;
    return mode == InfectionMode::P2P
               ? EpidemicParams::peer_to_peer(g.i0, g.r0, g.gamma, population)
               : EpidemicParams::central_source(g.i0, g.r0, g.gamma, population);
}

} // namespace

std::vector<GridPoint> build_grid(const GridSpec& spec)
{
    const int n = spec.points_per_axis;
    if (n < 2)
        throw DomainError("points_per_axis must be >= 2");
    std::vector<GridPoint> grid;
    grid.reserve(static_cast<std::size_t>(n) * n * n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                grid.push_back({log_spaced(spec.i0_lo, spec.i0_hi, n, a),
                                lin_spaced(spec.r0_lo, spec.r0_hi, n, b),
                                log_spaced(spec.gamma_lo, spec.gamma_hi, n, c)});
    return grid;
}

std::vector<GridPoint> build_grid(int points_per_axis)
{
    GridSpec spec;
    spec.points_per_axis = points_per_axis;
    return build_grid(spec);
}

const DictionaryEntry* Dictionary::find(std::int64_t entry_id) const
{
    const auto it = std::lower_bound(entries.begin(), entries.end(), entry_id,
                                     [](const DictionaryEntry& e, std::int64_t id) {
                                         return e.entry_id < id;
                                     });
    if (it == entries.end() || it->entry_id != entry_id)
        return nullptr;
    return &*it;
}

Dictionary build_dictionary(const std::vector<GridPoint>& grid, const std::vector<InfectionMode>& modes,
                            std::int64_t horizon_days, int jobs)
{
    if (grid.empty())
        throw DomainError("grid must be non-empty");
    if (horizon_days < 1)
        throw DomainError("horizon_days must be >= 1");
    if (modes.empty())
        throw DomainError("at least one mode required");

    // Canonical mode order regardless of how the caller listed them.
    std::vector<InfectionMode> ordered;
    for (InfectionMode m : {InfectionMode::P2P, InfectionMode::CS})
        if (std::find(modes.begin(), modes.end(), m) != modes.end())
            ordered.push_back(m);
    if (ordered.size() != modes.size())
        throw DomainError("dictionary supports p2p and cs modes only");

    Dictionary dict;
    dict.horizon_days = horizon_days;
    dict.modes = ordered;

    struct Task {
        InfectionMode mode;
        std::size_t grid_index;
    };
    std::vector<Task> tasks;
    tasks.reserve(ordered.size() * grid.size());
    for (InfectionMode m : ordered)
        for (std::size_t g = 0; g < grid.size(); ++g)
            tasks.push_back({m, g});

    std::vector<std::optional<DictionaryEntry>> slots(tasks.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const Task& task = tasks[k];
            const GridPoint& gp = grid[task.grid_index];
            const EpidemicParams params = params_for(task.mode, gp, dict.s0);
            const CompartmentTrajectory traj = simulate(params, horizon_days);
            IncidenceSeries inc = incidence_of(traj);
            double total = 0.0;
            for (double v : inc.values)
                total += v;
            if (total < 1.0)
                continue;  // no measurable spread at this grid point
            DictionaryEntry entry;
            entry.entry_id = static_cast<std::int64_t>(mode_slot(task.mode)) *
                                 static_cast<std::int64_t>(grid.size()) +
                             static_cast<std::int64_t>(task.grid_index);
            entry.params = params;
            entry.values = std::move(inc.values);
            slots[k] = std::move(entry);
        }
    };

    const int workers = std::max(1, jobs);
    if (workers == 1 || tasks.size() < 2) {
        run_range(0, tasks.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (tasks.size() + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(tasks.size(), w * chunk);
            const std::size_t end = std::min(tasks.size(), begin + chunk);
            if (begin < end)
                pool.emplace_back(run_range, begin, end);
        }
        for (auto& t : pool)
            t.join();
    }

    for (auto& slot : slots) {
        if (!slot) {
            ++dict.degenerate_dropped;
            continue;
        }
        slot->prefix = prefix_sums(slot->values);
        dict.entries.push_back(std::move(*slot));
    }
    if (dict.entries.empty())
        throw ConfigError("dictionary is empty: every grid point was degenerate");
    return dict;
}

Dictionary build_dictionary(const GridSpec& spec, const std::vector<InfectionMode>& modes,
                            std::int64_t horizon_days, int jobs)
{
    Dictionary dict = build_dictionary(build_grid(spec), modes, horizon_days, jobs);
    dict.grid_spec = spec;
    return dict;
}

void save_dictionary(const Dictionary& dict, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["points_per_axis"] = dict.grid_spec.points_per_axis;
    manifest["ranges"]["i0"] = {dict.grid_spec.i0_lo, dict.grid_spec.i0_hi};
    manifest["ranges"]["r0"] = {dict.grid_spec.r0_lo, dict.grid_spec.r0_hi};
    manifest["ranges"]["gamma"] = {dict.grid_spec.gamma_lo, dict.grid_spec.gamma_hi};
    manifest["horizon_days"] = dict.horizon_days;
    manifest["s0"] = dict.s0;
    nlohmann::json mode_names = nlohmann::json::array();
    for (InfectionMode m : dict.modes)
        mode_names.push_back(to_string(m));
    manifest["modes"] = mode_names;
    manifest["entry_count"] = dict.entries.size();
    manifest["degenerate_dropped"] = dict.degenerate_dropped;

    {
        std::ofstream out(dir / "manifest.json");
        if (!out)
            throw ParseError("cannot write " + (dir / "manifest.json").string());
        out << manifest.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "entries.csv");
        out << "entry_id,mode,i0,r0,gamma\n";
        for (const auto& e : dict.entries)
            out << e.entry_id << ',' << to_string(e.params.mode) << ','
                << format_double(e.params.i0) << ',' << format_double(e.params.r0) << ','
                << format_double(e.params.gamma) << '\n';
    }
    {
        std::ofstream out(dir / "templates.csv");
        out << "entry_id,values\n";
        for (const auto& e : dict.entries) {
            out << e.entry_id;
            for (double v : e.values)
                out << ',' << format_double(v);
            out << '\n';
        }
    }
}

Dictionary load_dictionary(const std::filesystem::path& dir)
{
    std::ifstream mf(dir / "manifest.json");
    if (!mf)
        throw ParseError("cannot open " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest.json: " + std::string(e.what()));
    }

    Dictionary dict;
    try {
        dict.grid_spec.points_per_axis = manifest.at("points_per_axis").get<int>();
        dict.grid_spec.i0_lo = manifest.at("ranges").at("i0").at(0).get<double>();
        dict.grid_spec.i0_hi = manifest.at("ranges").at("i0").at(1).get<double>();
        dict.grid_spec.r0_lo = manifest.at("ranges").at("r0").at(0).get<double>();
        dict.grid_spec.r0_hi = manifest.at("ranges").at("r0").at(1).get<double>();
        dict.grid_spec.gamma_lo = manifest.at("ranges").at("gamma").at(0).get<double>();
        dict.grid_spec.gamma_hi = manifest.at("ranges").at("gamma").at(1).get<double>();
        dict.horizon_days = manifest.at("horizon_days").get<std::int64_t>();
        dict.s0 = manifest.at("s0").get<double>();
        for (const auto& m : manifest.at("modes"))
            dict.modes.push_back(mode_from_string(m.get<std::string>()));
        dict.degenerate_dropped = manifest.at("degenerate_dropped").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest.json: " + std::string(e.what()));
    }
    const auto expected = manifest.at("entry_count").get<std::size_t>();

    std::ifstream ef(dir / "entries.csv");
    if (!ef)
        throw ParseError("cannot open " + (dir / "entries.csv").string());
    const auto entry_rows = read_csv(ef);
    if (entry_rows.empty() || entry_rows[0].fields != std::vector<std::string>{"entry_id", "mode", "i0", "r0", "gamma"})
        throw ParseError("entries.csv: bad header");
    for (std::size_t k = 1; k < entry_rows.size(); ++k) {
        const auto& row = entry_rows[k];
        if (row.fields.size() != 5)
            throw ParseError("entries.csv line " + std::to_string(row.line) + ": expected 5 fields");
        DictionaryEntry e;
        e.entry_id = parse_int(row.fields[0]);
        const InfectionMode mode = mode_from_string(row.fields[1]);
        GridPoint gp{parse_double(row.fields[2]), parse_double(row.fields[3]),
                     parse_double(row.fields[4])};
        e.params = params_for(mode, gp, dict.s0);
        dict.entries.push_back(std::move(e));
    }
    if (dict.entries.size() != expected)
        throw ParseError("entries.csv: manifest expects " + std::to_string(expected) +
                         " entries, file has " + std::to_string(dict.entries.size()));

    std::ifstream tf(dir / "templates.csv");
    if (!tf)
        throw ParseError("cannot open " + (dir / "templates.csv").string());
    const auto tmpl_rows = read_csv(tf);
    if (tmpl_rows.empty() || tmpl_rows[0].fields.empty() || tmpl_rows[0].fields[0] != "entry_id")
        throw ParseError("templates.csv: bad header");
    if (tmpl_rows.size() != dict.entries.size() + 1)
        throw ParseError("templates.csv: row count does not match entries.csv");
    for (std::size_t k = 1; k < tmpl_rows.size(); ++k) {
        const auto& row = tmpl_rows[k];
        DictionaryEntry& e = dict.entries[k - 1];
        if (row.fields.empty() || parse_int(row.fields[0]) != e.entry_id)
            throw ParseError("templates.csv line " + std::to_string(row.line) +
                             ": entry_id does not match entries.csv order");
        if (static_cast<std::int64_t>(row.fields.size()) != dict.horizon_days + 1)
            throw ParseError("templates.csv line " + std::to_string(row.line) +
                             ": expected " + std::to_string(dict.horizon_days) + " values");
        e.values.reserve(row.fields.size() - 1);
        for (std::size_t f = 1; f < row.fields.size(); ++f)
            e.values.push_back(parse_double(row.fields[f]));
        e.prefix = prefix_sums(e.values);
    }
    return dict;
}

} // namespace epifit
