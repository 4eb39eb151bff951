// Command-line front end: builds template dictionaries, generates synthetic
// telemetry, ingests event files, fits/predicts per strain, and runs the
// vaccination-effect study. Every command writes its artifacts plus a
// run.json manifest; reruns with equal inputs are byte-identical except for
// the manifest's "run" stamp.

#include "epifit/analysis.hpp"
#include "epifit/csv.hpp"
#include "epifit/dictionary.hpp"
#include "epifit/errors.hpp"
#include "epifit/fitting.hpp"
#include "epifit/numformat.hpp"
#include "epifit/prediction.hpp"
#include "epifit/telemetry.hpp"
#include "epifit/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace {

using epifit::Date;
using epifit::format_double;
using epifit::IncidenceSeries;
using epifit::parse_double;
using epifit::parse_int;
using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p);
    if (!out)
        throw epifit::ParseError("cannot write " + p.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw epifit::ParseError("cannot open " + p.string());
    return in;
}

std::string iso_timestamp_utc()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class RunManifest {
public:
    RunManifest(std::string command, std::filesystem::path out_dir)
        : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now())
    {
        doc_["command"] = std::move(command);
        doc_["tool"] = {{"name", epifit::kToolName}, {"version", epifit::kToolVersion}};
    }

    json& config() { return doc_["config"]; }
    json& inputs() { return doc_["inputs"]; }
    json& extra() { return doc_["results"]; }

    void add_output(const std::string& name) { outputs_.push_back(name); }

    void write()
    {
        doc_["outputs"] = outputs_;
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start_);
        doc_["run"] = {{"timestamp", iso_timestamp_utc()},
                       {"elapsed_ms", static_cast<std::int64_t>(elapsed.count())}};
        auto out = open_out(out_dir_ / "run.json");
        out << doc_.dump(2) << '\n';
    }

private:
    std::filesystem::path out_dir_;
    std::chrono::steady_clock::time_point start_;
    json doc_;
    std::vector<std::string> outputs_;
};

std::vector<epifit::InfectionMode> parse_modes(const std::string& text)
{
    std::vector<epifit::InfectionMode> modes;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string tok =
            comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start);
        if (!tok.empty())
            modes.push_back(epifit::mode_from_string(tok));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    if (modes.empty())
        throw epifit::DomainError("at least one mode required");
    return modes;
}

struct NamedSeries {
    std::string id;
    IncidenceSeries series;
};

// series.csv: file_id,day,incidence with days consecutive from 0 per file.
std::vector<NamedSeries> read_series_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    const auto rows = epifit::read_csv(in);
    if (rows.empty() || rows[0].fields != std::vector<std::string>{"file_id", "day", "incidence"})
        throw epifit::ParseError(path.string() + ": expected header 'file_id,day,incidence'");

    std::vector<NamedSeries> out;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& row = rows[k];
        if (row.fields.size() != 3)
            throw epifit::ParseError(path.string() + " line " + std::to_string(row.line) +
                                     ": expected 3 fields");
        const std::string& id = row.fields[0];
        const std::int64_t day = parse_int(row.fields[1]);
        const double value = parse_double(row.fields[2]);
        if (out.empty() || out.back().id != id) {
            if (day != 0)
                throw epifit::ParseError(path.string() + " line " + std::to_string(row.line) +
                                         ": first day of a file must be 0");
            out.push_back({id, {}});
        } else if (day != static_cast<std::int64_t>(out.back().series.values.size())) {
            throw epifit::ParseError(path.string() + " line " + std::to_string(row.line) +
                                     ": days must be consecutive");
        }
        out.back().series.values.push_back(value);
    }
    return out;
}

struct FileMeta {
    std::int64_t machine_total = 0;
    std::optional<Date> day0;
    std::optional<std::int64_t> vaccination_day;
};

// files.csv: file_id,machine_total,day0,vaccination_day (last two optional).
std::map<std::string, FileMeta> read_files_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    const auto rows = epifit::read_csv(in);
    if (rows.empty() ||
        rows[0].fields != std::vector<std::string>{"file_id", "machine_total", "day0", "vaccination_day"})
        throw epifit::ParseError(path.string() +
                                 ": expected header 'file_id,machine_total,day0,vaccination_day'");
    std::map<std::string, FileMeta> out;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& row = rows[k];
        if (row.fields.size() != 4)
            throw epifit::ParseError(path.string() + " line " + std::to_string(row.line) +
                                     ": expected 4 fields");
        FileMeta meta;
        meta.machine_total = parse_int(row.fields[1]);
        if (!row.fields[2].empty())
            meta.day0 = Date::parse_iso(row.fields[2]);
        if (!row.fields[3].empty())
            meta.vaccination_day = parse_int(row.fields[3]);
        out[row.fields[0]] = meta;
    }
    return out;
}

// ---------------------------------------------------------------- dict-build

struct DictBuildArgs {
    std::string out_dir;
    int points = 10;
    std::int64_t horizon = 730;
    std::string modes = "p2p,cs";
    int jobs = 1;
};

void run_dict_build(const DictBuildArgs& args)
{
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest("dict-build", args.out_dir);
    manifest.config() = {{"points", args.points},
                         {"horizon", args.horizon},
                         {"modes", args.modes},
                         {"jobs", args.jobs}};

    epifit::GridSpec spec;
    spec.points_per_axis = args.points;
    const epifit::Dictionary dict =
        epifit::build_dictionary(spec, parse_modes(args.modes), args.horizon, args.jobs);
    epifit::save_dictionary(dict, args.out_dir);

    manifest.extra() = {{"entries", dict.entries.size()},
                        {"degenerate_dropped", dict.degenerate_dropped}};
    manifest.add_output("manifest.json");
    manifest.add_output("entries.csv");
    manifest.add_output("templates.csv");
    manifest.write();
    std::cout << "dictionary: " << dict.entries.size() << " entries ("
              << dict.degenerate_dropped << " degenerate grid points dropped)\n";
}

// ------------------------------------------------------------------ synth-gen

struct SynthGenArgs {
    std::string scenarios_path;
    std::string out_dir;
};

epifit::SyntheticScenario scenario_from_row(const epifit::CsvRow& row, const std::string& path)
{
    const auto fail = [&](const std::string& msg) -> epifit::ParseError {
        return epifit::ParseError(path + " line " + std::to_string(row.line) + ": " + msg);
    };
    if (row.fields.size() != 12)
        throw fail("expected 12 fields");

    epifit::SyntheticScenario s;
    s.file_id = row.fields[0];
    const epifit::InfectionMode mode = epifit::mode_from_string(row.fields[1]);
    const double i0 = parse_double(row.fields[2]);
    const double r0 = parse_double(row.fields[3]);
    const double gamma = parse_double(row.fields[4]);
    const double population = parse_double(row.fields[5]);
    try {
        s.params = mode == epifit::InfectionMode::P2P
                       ? epifit::EpidemicParams::peer_to_peer(i0, r0, gamma, population)
                       : epifit::EpidemicParams::central_source(i0, r0, gamma, population);
    } catch (const epifit::DomainError& e) {
        throw fail(e.what());
    }
    if (mode == epifit::InfectionMode::Hybrid)
        throw fail("hybrid scenarios are not supported in scenario files");
    if (!row.fields[6].empty())
        s.vaccination_day = parse_int(row.fields[6]);
    s.gamma_post_vax = parse_double(row.fields[7]);
    s.block_prob = parse_double(row.fields[8]);
    s.observation_days = parse_int(row.fields[9]);
    s.noise_seed = static_cast<std::uint64_t>(parse_int(row.fields[10]));
    if (row.fields[11] == "poisson")
        s.expectation_only = false;
    else if (row.fields[11] == "none")
        s.expectation_only = true;
    else
        throw fail("noise must be 'poisson' or 'none'");
    return s;
}

void run_synth_gen(const SynthGenArgs& args)
{
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest("synth-gen", args.out_dir);
    manifest.inputs() = {{"scenarios", args.scenarios_path}};

    auto in = open_in(args.scenarios_path);
    const auto rows = epifit::read_csv(in);
    const std::vector<std::string> header = {
        "file_id", "mode", "i0", "r0", "gamma", "population", "vaccination_day",
        "gamma_post_vax", "block_prob", "observation_days", "seed", "noise"};
    if (rows.empty() || rows[0].fields != header)
        throw epifit::ParseError(args.scenarios_path + ": bad header");

    auto events_out = open_out(std::filesystem::path(args.out_dir) / "events.csv");
    auto truth_out = open_out(std::filesystem::path(args.out_dir) / "truth.csv");
    auto series_out = open_out(std::filesystem::path(args.out_dir) / "truth_series.csv");
    truth_out << "file_id,mode,i0,r0,gamma,population,vaccination_day_raw,vaccination_day,"
                 "day0_offset,machine_total,expected_total\n";
    series_out << "file_id,day,count\n";

    bool first = true;
    std::size_t scenario_count = 0;
    std::int64_t event_count = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const epifit::SyntheticScenario scenario = scenario_from_row(rows[k], args.scenarios_path);
        const epifit::SyntheticResult result = epifit::generate(scenario);
        ++scenario_count;
        event_count += static_cast<std::int64_t>(result.events.size());

        if (first) {
            epifit::write_events_csv(events_out, result.events);
            first = false;
        } else {
            // Append without repeating the header.
            std::ostringstream chunk;
            epifit::write_events_csv(chunk, result.events);
            const std::string text = chunk.str();
            events_out << text.substr(text.find('\n') + 1);
        }

        const epifit::GroundTruth& t = result.truth;
        truth_out << t.file_id << ',' << epifit::to_string(t.params.mode) << ','
                  << format_double(t.params.i0) << ',' << format_double(t.params.r0) << ','
                  << format_double(t.params.gamma) << ',' << format_double(t.params.population)
                  << ','
                  << (t.vaccination_day_raw ? std::to_string(*t.vaccination_day_raw) : "") << ','
                  << (t.vaccination_day ? std::to_string(*t.vaccination_day) : "") << ','
                  << t.day0_offset << ',' << t.machine_total << ','
                  << format_double(t.expected_total) << '\n';
        for (std::size_t d = 0; d < t.incidence.size(); ++d)
            series_out << t.file_id << ',' << d << ',' << format_double(t.incidence[d]) << '\n';
    }
    if (scenario_count == 0)
        throw epifit::ParseError(args.scenarios_path + ": no scenarios");

    manifest.extra() = {{"scenarios", scenario_count}, {"events", event_count}};
    manifest.add_output("events.csv");
    manifest.add_output("truth.csv");
    manifest.add_output("truth_series.csv");
    manifest.write();
    std::cout << "generated " << event_count << " events for " << scenario_count
              << " scenarios\n";
}

// --------------------------------------------------------------------- ingest

struct IngestArgs {
    std::string events_path;
    std::string out_dir;
    std::int64_t min_machines = 200;
};

void run_ingest(const IngestArgs& args)
{
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest("ingest", args.out_dir);
    manifest.inputs() = {{"events", args.events_path}};
    manifest.config() = {{"min_machines", args.min_machines}};

    auto in = open_in(args.events_path);
    epifit::IngestStats stats;
    const std::vector<epifit::MalwareSeries> series =
        epifit::ingest(in, args.min_machines, stats);

    auto series_out = open_out(std::filesystem::path(args.out_dir) / "series.csv");
    series_out << "file_id,day,incidence\n";
    for (const epifit::MalwareSeries& s : series)
        for (std::size_t d = 0; d < s.incidence.values.size(); ++d)
            series_out << s.file_id << ',' << d << ',' << format_double(s.incidence.values[d])
                       << '\n';

    auto files_out = open_out(std::filesystem::path(args.out_dir) / "files.csv");
    files_out << "file_id,machine_total,day0,vaccination_day\n";
    for (const epifit::MalwareSeries& s : series) {
        files_out << s.file_id << ',' << s.machine_total << ','
                  << (s.incidence.day0 ? s.incidence.day0->to_iso() : "") << ','
                  << (s.vaccination_day ? std::to_string(*s.vaccination_day) : "") << '\n';
    }

    manifest.extra() = {{"rows_total", stats.rows_total},
                        {"rows_rejected", stats.rows_rejected},
                        {"files_seen", stats.files_seen},
                        {"files_kept", stats.files_kept},
                        {"reject_samples", stats.reject_samples}};
    manifest.add_output("series.csv");
    manifest.add_output("files.csv");
    manifest.write();
    std::cout << "kept " << stats.files_kept << " of " << stats.files_seen << " files ("
              << stats.rows_rejected << " malformed rows)\n";
}

// ------------------------------------------------------------------------ fit

struct FitArgs {
    std::string series_path;
    std::string dict_dir;
    std::string out_dir;
    std::int64_t tau_max = 25;
    std::int64_t window_start = -1;  // <0 means full series
    std::int64_t window_end = -1;
    int jobs = 1;
};

void write_fit_row(std::ostream& out, const std::string& id, const epifit::FitResult& fr,
                   const epifit::Dictionary& dict)
{
    const epifit::DictionaryEntry* e = dict.find(fr.best_entry);
    out << id << ',' << epifit::to_string(fr.mode) << ',' << fr.best_entry << ','
        << format_double(e->params.i0) << ',' << format_double(e->params.r0) << ','
        << format_double(e->params.gamma) << ',' << format_double(fr.correlation) << ','
        << fr.lag_tau << ',' << fr.window.lo << ',' << fr.window.hi << '\n';
}

void run_fit(const FitArgs& args)
{
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest("fit", args.out_dir);
    manifest.inputs() = {{"series", args.series_path}, {"dict", args.dict_dir}};
    manifest.config() = {{"tau_max", args.tau_max},
                         {"window_start", args.window_start},
                         {"window_end", args.window_end},
                         {"jobs", args.jobs}};

    const auto all = read_series_csv(args.series_path);
    if (all.empty())
        throw epifit::InsufficientDataError("no series passed filters");
    const epifit::Dictionary dict = epifit::load_dictionary(args.dict_dir);

    std::optional<epifit::DayWindow> window;
    if (args.window_start >= 0 || args.window_end >= 0) {
        if (args.window_start < 0 || args.window_end < args.window_start)
            throw epifit::DomainError("both window bounds required, end >= start");
        window = epifit::DayWindow{args.window_start, args.window_end};
    }

    auto fits_out = open_out(std::filesystem::path(args.out_dir) / "fits.csv");
    fits_out << "malware_id,mode,entry_id,i0,r0,gamma,correlation,tau,window_start,window_end\n";
    auto errors_out = open_out(std::filesystem::path(args.out_dir) / "errors.csv");
    errors_out << "malware_id,error\n";

    std::size_t ok = 0, failed = 0;
    for (const NamedSeries& item : all) {
        try {
            const epifit::FitResult fr =
                epifit::fit(item.series, dict, window, args.tau_max, args.jobs);
            write_fit_row(fits_out, item.id, fr, dict);
            ++ok;
        } catch (const epifit::Error& e) {
            errors_out << item.id << ',' << e.what() << '\n';
            ++failed;
        }
    }
    if (ok == 0)
        throw epifit::FitError("every series failed to fit (" + std::to_string(failed) +
                               " failures)");

    manifest.extra() = {{"fitted", ok}, {"failed", failed}};
    manifest.add_output("fits.csv");
    manifest.add_output("errors.csv");
    manifest.write();
    std::cout << "fitted " << ok << " series, " << failed << " failed\n";
}

// -------------------------------------------------------------------- predict

struct PredictArgs {
    std::string series_path;
    std::string dict_dir;
    std::string out_dir;
    std::string truth_path;  // optional: actual totals for the scatter file
    std::int64_t window_days = 30;
    bool offset_per_day = false;
    std::int64_t tau_max = 25;
    int jobs = 1;
};

std::map<std::string, double> read_truth_totals(const std::filesystem::path& path)
{
    auto in = open_in(path);
    const auto rows = epifit::read_csv(in);
    if (rows.empty() || rows[0].fields.size() < 10 || rows[0].fields[0] != "file_id")
        throw epifit::ParseError(path.string() + ": bad truth header");
    std::size_t total_col = 0;
    for (std::size_t c = 0; c < rows[0].fields.size(); ++c)
        if (rows[0].fields[c] == "machine_total")
            total_col = c;
    if (total_col == 0)
        throw epifit::ParseError(path.string() + ": no machine_total column");
    std::map<std::string, double> out;
    for (std::size_t k = 1; k < rows.size(); ++k)
        out[rows[k].fields[0]] = parse_double(rows[k].fields[total_col]);
    return out;
}

void run_predict(const PredictArgs& args)
{
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest("predict", args.out_dir);
    manifest.inputs() = {{"series", args.series_path}, {"dict", args.dict_dir}};
    if (!args.truth_path.empty())
        manifest.inputs()["truth"] = args.truth_path;
    manifest.config() = {{"window_days", args.window_days},
                         {"offset_per_day", args.offset_per_day},
                         {"tau_max", args.tau_max},
                         {"jobs", args.jobs}};

    const auto all = read_series_csv(args.series_path);
    if (all.empty())
        throw epifit::InsufficientDataError("no series passed filters");
    const epifit::Dictionary dict = epifit::load_dictionary(args.dict_dir);
    std::map<std::string, double> truth;
    if (!args.truth_path.empty())
        truth = read_truth_totals(args.truth_path);

    epifit::PredictionOptions options;
    options.window_days = args.window_days;
    options.offset_per_day = args.offset_per_day;
    options.tau_max = args.tau_max;
    options.jobs = args.jobs;

    auto pred_out = open_out(std::filesystem::path(args.out_dir) / "predictions.csv");
    pred_out << "malware_id,mode,alpha,offset,predicted_total,observed_total,correlation\n";
    auto scatter_out = open_out(std::filesystem::path(args.out_dir) / "predicted_vs_actual.csv");
    scatter_out << "malware_id,predicted,actual\n";
    auto errors_out = open_out(std::filesystem::path(args.out_dir) / "errors.csv");
    errors_out << "malware_id,error\n";

    std::size_t ok = 0, failed = 0;
    for (const NamedSeries& item : all) {
        try {
            const epifit::SusceptiblePrediction p =
                epifit::predict_susceptible(item.series, dict, options);
            double observed_total = 0.0;
            for (double v : item.series.values)
                observed_total += v;
            pred_out << item.id << ',' << epifit::to_string(p.fit.mode) << ','
                     << format_double(p.alpha_scale) << ',' << format_double(p.offset) << ','
                     << format_double(p.predicted_total) << ',' << format_double(observed_total)
                     << ',' << format_double(p.fit.correlation) << '\n';
            const auto it = truth.find(item.id);
            const double actual = it != truth.end() ? it->second : observed_total;
            scatter_out << item.id << ',' << format_double(p.predicted_total) << ','
                        << format_double(actual) << '\n';
            ++ok;
        } catch (const epifit::Error& e) {
            errors_out << item.id << ',' << e.what() << '\n';
            ++failed;
        }
    }
    if (ok == 0)
        throw epifit::FitError("every series failed to predict (" + std::to_string(failed) +
                               " failures)");

    manifest.extra() = {{"predicted", ok}, {"failed", failed}};
    manifest.add_output("predictions.csv");
    manifest.add_output("predicted_vs_actual.csv");
    manifest.add_output("errors.csv");
    manifest.write();
    std::cout << "predicted " << ok << " series, " << failed << " failed\n";
}

// ------------------------------------------------------------ vaccine-analyze

struct AnalyzeArgs {
    std::string series_path;
    std::string files_path;
    std::string dict_dir;
    std::string out_dir;
    double threshold = 0.6;
    int folds = 10;
    std::uint64_t seed = 1;
    int permutations = 199;
    std::int64_t tau_max = 25;
    int jobs = 1;
};

json tree_to_json(const epifit::RegressionTree& tree)
{
    json nodes = json::array();
    for (const epifit::TreeNode& n : tree.nodes) {
        json node;
        node["samples"] = n.samples;
        node["value"] = n.value;
        if (n.feature >= 0) {
            node["feature"] = epifit::FeatureVector::names()[static_cast<std::size_t>(n.feature)];
            node["threshold"] = n.threshold;
            node["left"] = n.left;
            node["right"] = n.right;
        }
        nodes.push_back(node);
    }
    return nodes;
}

void write_hazard_text(std::ostream& out, const epifit::HazardModel& hm)
{
    out << "Time-to-termination hazard model (Cox, Breslow ties)\n";
    out << "converged: " << (hm.converged ? "yes" : "no") << "  iterations: " << hm.iterations
        << "  |grad|: " << format_double(hm.gradient_norm) << '\n';
    char line[160];
    std::snprintf(line, sizeof(line), "%-28s %12s %12s %12s %12s\n", "feature", "coef", "hazard",
                  "std err", "p");
    out << line;
    for (std::size_t f = 0; f < hm.coefficients.size(); ++f) {
        std::snprintf(line, sizeof(line), "%-28s %12.4f %12.4f %12.4f %12.4g\n",
                      hm.feature_names[f].c_str(), hm.coefficients[f], hm.hazard_ratios[f],
                      hm.standard_errors[f], hm.p_values[f]);
        out << line;
    }
}

json side_to_json(const epifit::SplitSide& side)
{
    return {{"n", side.n},
            {"mean_t_term", side.mean_t_term},
            {"rank_r2", side.rank_r2},
            {"p_value", side.p_value},
            {"degenerate", side.degenerate},
            {"line", {{"scale", side.line.scale}, {"offset", side.line.offset}}}};
}

void run_analyze(const AnalyzeArgs& args)
{
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest("vaccine-analyze", args.out_dir);
    manifest.inputs() = {{"series", args.series_path},
                         {"files", args.files_path},
                         {"dict", args.dict_dir}};
    manifest.config() = {{"threshold", args.threshold}, {"folds", args.folds},
                         {"seed", args.seed},           {"permutations", args.permutations},
                         {"tau_max", args.tau_max},     {"jobs", args.jobs}};

    const auto all = read_series_csv(args.series_path);
    if (all.empty())
        throw epifit::InsufficientDataError("no series passed filters");
    const auto meta = read_files_csv(args.files_path);
    const epifit::Dictionary dict = epifit::load_dictionary(args.dict_dir);

    std::vector<epifit::VaccinationInput> inputs;
    for (const NamedSeries& item : all) {
        epifit::VaccinationInput input;
        input.malware_id = item.id;
        input.incidence = item.series;
        if (const auto it = meta.find(item.id); it != meta.end())
            input.vaccination_day = it->second.vaccination_day;
        inputs.push_back(std::move(input));
    }

    epifit::AnalysisOptions options;
    options.split_threshold = args.threshold;
    options.folds = args.folds;
    options.seed = args.seed;
    options.permutations = args.permutations;
    options.prediction.tau_max = args.tau_max;
    options.prediction.jobs = args.jobs;
    const epifit::VaccineAnalysis analysis = epifit::analyze_vaccination(inputs, dict, options);

    {
        auto out = open_out(std::filesystem::path(args.out_dir) / "outcomes.csv");
        out << "malware_id,vaccination_day,infected_at_vax,predicted_susceptible,fraction,t_term,"
               "censored\n";
        for (const epifit::VaccinationOutcome& o : analysis.outcomes)
            out << o.malware_id << ',' << o.vaccination_day << ','
                << format_double(o.infected_at_vax) << ','
                << format_double(o.predicted_susceptible) << ','
                << format_double(o.fraction_infected_at_vax) << ',' << o.t_term << ','
                << (o.censored ? 1 : 0) << '\n';
    }
    {
        auto out = open_out(std::filesystem::path(args.out_dir) / "features.csv");
        out << "malware_id";
        for (const std::string& name : epifit::FeatureVector::names())
            out << ',' << name;
        out << '\n';
        for (std::size_t k = 0; k < analysis.features.size(); ++k) {
            out << analysis.outcomes[k].malware_id;
            for (double v : analysis.features[k].as_array())
                out << ',' << format_double(v);
            out << '\n';
        }
    }
    {
        auto out = open_out(std::filesystem::path(args.out_dir) / "excluded.csv");
        out << "malware_id,reason\n";
        for (const epifit::ExcludedStrain& e : analysis.excluded)
            out << e.malware_id << ',' << e.reason << '\n';
    }
    {
        json doc;
        if (analysis.tree) {
            doc["cv_spearman"] = analysis.tree->cv_spearman;
            doc["cv_degenerate"] = analysis.tree->cv_degenerate;
            if (analysis.tree_p_defined)
                doc["permutation_p"] = analysis.tree_permutation_p;
            doc["nodes"] = tree_to_json(analysis.tree->tree);
            json imp = json::array();
            for (const epifit::FeatureImportance& fi : analysis.importance)
                imp.push_back({{"feature", epifit::FeatureVector::names()[fi.feature]},
                               {"importance", fi.importance}});
            doc["importance"] = imp;
        } else {
            doc["error"] = analysis.tree_error;
        }
        auto out = open_out(std::filesystem::path(args.out_dir) / "tree.json");
        out << doc.dump(2) << '\n';
    }
    {
        auto out = open_out(std::filesystem::path(args.out_dir) / "hazard.csv");
        out << "feature,coefficient,hazard_ratio,std_error,p_value\n";
        if (analysis.hazard)
            for (std::size_t f = 0; f < analysis.hazard->coefficients.size(); ++f)
                out << analysis.hazard->feature_names[f] << ','
                    << format_double(analysis.hazard->coefficients[f]) << ','
                    << format_double(analysis.hazard->hazard_ratios[f]) << ','
                    << format_double(analysis.hazard->standard_errors[f]) << ','
                    << format_double(analysis.hazard->p_values[f]) << '\n';
        auto text = open_out(std::filesystem::path(args.out_dir) / "hazard.txt");
        if (analysis.hazard)
            write_hazard_text(text, *analysis.hazard);
        else
            text << "hazard model unavailable: " << analysis.hazard_error << '\n';
    }
    {
        json doc;
        doc["threshold"] = analysis.split.threshold;
        doc["below"] = side_to_json(analysis.split.below);
        doc["above"] = side_to_json(analysis.split.above);
        doc["below_empty"] = analysis.split.below_empty;
        doc["above_empty"] = analysis.split.above_empty;
        if (analysis.split.ratio_defined)
            doc["ratio"] = analysis.split.ratio;
        auto out = open_out(std::filesystem::path(args.out_dir) / "split.json");
        out << doc.dump(2) << '\n';

        auto points = open_out(std::filesystem::path(args.out_dir) / "split_points.csv");
        points << "fraction,t_term,side\n";
        for (const epifit::SplitPoint& p : analysis.split.points)
            points << format_double(p.fraction) << ',' << format_double(p.t_term) << ','
                   << (p.above ? "above" : "below") << '\n';
    }

    manifest.extra() = {{"analyzed", analysis.outcomes.size()},
                        {"excluded", analysis.excluded.size()}};
    if (analysis.tree)
        manifest.extra()["cv_spearman"] = analysis.tree->cv_spearman;
    if (analysis.hazard)
        manifest.extra()["hazard_converged"] = analysis.hazard->converged;
    manifest.add_output("outcomes.csv");
    manifest.add_output("features.csv");
    manifest.add_output("excluded.csv");
    manifest.add_output("tree.json");
    manifest.add_output("hazard.csv");
    manifest.add_output("hazard.txt");
    manifest.add_output("split.json");
    manifest.add_output("split_points.csv");
    manifest.write();
    std::cout << "analyzed " << analysis.outcomes.size() << " strains, "
              << analysis.excluded.size() << " excluded\n";
}

// --------------------------------------------------------------------- report

struct ReportArgs {
    std::string predictions_path;
    std::string outcomes_path;
    std::string truth_path;
    std::string out_dir;
    double threshold = 0.6;
    bool svg = false;
};

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    bool above = false;
};

void write_svg_scatter(const std::filesystem::path& path, const std::vector<ScatterPoint>& pts,
                       const std::string& x_label, const std::string& y_label, bool log_axes,
                       bool identity_line, std::optional<double> vline)
{
    const double width = 640, height = 480, margin = 56;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const ScatterPoint& p : pts) {
        const double x = log_axes ? std::log10(std::max(p.x, 1.0)) : p.x;
        const double y = log_axes ? std::log10(std::max(p.y, 1.0)) : p.y;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (pts.empty()) {
        xmin = ymin = 0;
        xmax = ymax = 1;
    }
    if (xmax <= xmin)
        xmax = xmin + 1;
    if (ymax <= ymin)
        ymax = ymin + 1;
    const auto sx = [&](double v) {
        const double t = log_axes ? std::log10(std::max(v, 1.0)) : v;
        return margin + (t - xmin) / (xmax - xmin) * (width - 2 * margin);
    };
    const auto sy = [&](double v) {
        const double t = log_axes ? std::log10(std::max(v, 1.0)) : v;
        return height - margin - (t - ymin) / (ymax - ymin) * (height - 2 * margin);
    };

    auto out = open_out(path);
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  margin, height - margin, width - margin, height - margin);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  margin, margin, margin, height - margin);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
                  width / 2, height - 12.0, x_label.c_str());
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"14\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 14 %.1f)\">%s</text>\n",
                  height / 2, height / 2, y_label.c_str());
    out << buf;
    if (identity_line) {
        const double lo = std::max(xmin, ymin), hi = std::min(xmax, ymax);
        if (hi > lo) {
            const auto px = [&](double t) {
                return margin + (t - xmin) / (xmax - xmin) * (width - 2 * margin);
            };
            const auto py = [&](double t) {
                return height - margin - (t - ymin) / (ymax - ymin) * (height - 2 * margin);
            };
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                          "stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
                          px(lo), py(lo), px(hi), py(hi));
            out << buf;
        }
    }
    if (vline) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"gray\" "
                      "stroke-dasharray=\"4 3\"/>\n",
                      sx(*vline), margin, sx(*vline), height - margin);
        out << buf;
    }
    for (const ScatterPoint& p : pts) {
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\" fill-opacity=\"0.7\"/>\n",
                      sx(p.x), sy(p.y), p.above ? "#d62728" : "#1f77b4");
        out << buf;
    }
    out << "</svg>\n";
}

void run_report(const ReportArgs& args)
{
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest("report", args.out_dir);
    manifest.inputs() = {{"predictions", args.predictions_path},
                         {"outcomes", args.outcomes_path}};
    if (!args.truth_path.empty())
        manifest.inputs()["truth"] = args.truth_path;
    manifest.config() = {{"threshold", args.threshold}, {"svg", args.svg}};

    std::map<std::string, double> truth;
    if (!args.truth_path.empty())
        truth = read_truth_totals(args.truth_path);

    // Figure 1 analog: predicted vs actual totals, log-log, identity line.
    std::vector<ScatterPoint> fig1;
    {
        auto in = open_in(args.predictions_path);
        const auto rows = epifit::read_csv(in);
        const std::vector<std::string> header = {"malware_id", "mode",           "alpha",
                                                 "offset",     "predicted_total", "observed_total",
                                                 "correlation"};
        if (rows.empty() || rows[0].fields != header)
            throw epifit::ParseError(args.predictions_path + ": bad header");
        auto out = open_out(std::filesystem::path(args.out_dir) / "figure1.csv");
        out << "malware_id,predicted,actual,log10_predicted,log10_actual\n";
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const auto& f = rows[k].fields;
            const double predicted = parse_double(f[4]);
            const auto it = truth.find(f[0]);
            const double actual = it != truth.end() ? it->second : parse_double(f[5]);
            out << f[0] << ',' << format_double(predicted) << ',' << format_double(actual) << ','
                << format_double(std::log10(1.0 + predicted)) << ','
                << format_double(std::log10(1.0 + actual)) << '\n';
            fig1.push_back({predicted, actual, false});
        }
    }

    // Figure 2 analog: infected fraction at signature time vs termination day.
    std::vector<ScatterPoint> fig2;
    {
        auto in = open_in(args.outcomes_path);
        const auto rows = epifit::read_csv(in);
        if (rows.empty() || rows[0].fields.size() != 7 || rows[0].fields[0] != "malware_id")
            throw epifit::ParseError(args.outcomes_path + ": bad header");
        auto out = open_out(std::filesystem::path(args.out_dir) / "figure2.csv");
        out << "fraction,t_term,side\n";
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const auto& f = rows[k].fields;
            const double fraction = parse_double(f[4]);
            const double t_term = parse_double(f[5]);
            const bool above = fraction >= args.threshold;
            out << format_double(fraction) << ',' << format_double(t_term) << ','
                << (above ? "above" : "below") << '\n';
            fig2.push_back({fraction, t_term, above});
        }
    }

    manifest.add_output("figure1.csv");
    manifest.add_output("figure2.csv");
    if (args.svg) {
        write_svg_scatter(std::filesystem::path(args.out_dir) / "figure1.svg", fig1,
                          "predicted total (log)", "actual total (log)", true, true,
                          std::nullopt);
        write_svg_scatter(std::filesystem::path(args.out_dir) / "figure2.svg", fig2,
                          "fraction infected at signature", "termination day", false, false,
                          args.threshold);
        manifest.add_output("figure1.svg");
        manifest.add_output("figure2.svg");
    }
    manifest.write();
    std::cout << "report written (" << fig1.size() << " predictions, " << fig2.size()
              << " outcomes)\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Malware epidemic toolkit: template dictionaries, incidence fitting, "
                 "susceptible-population prediction, and signature-timing analysis"};
    app.require_subcommand(1);

    DictBuildArgs dict_args;
    CLI::App* dict_cmd = app.add_subcommand("dict-build", "Build the template dictionary");
    dict_cmd->add_option("--out", dict_args.out_dir, "Output directory")
        ->required()
        ->envname("EPIFIT_OUT");
    dict_cmd->add_option("--points", dict_args.points, "Grid points per parameter axis")
        ->capture_default_str();
    dict_cmd->add_option("--horizon", dict_args.horizon, "Template length in days")
        ->capture_default_str();
    dict_cmd->add_option("--modes", dict_args.modes, "Comma-separated modes (p2p,cs)")
        ->capture_default_str();
    dict_cmd->add_option("--jobs", dict_args.jobs, "Worker threads")->capture_default_str();

    SynthGenArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth-gen", "Generate synthetic telemetry");
    synth_cmd->add_option("--scenarios", synth_args.scenarios_path, "Scenario CSV")
        ->required()
        ->envname("EPIFIT_SCENARIOS");
    synth_cmd->add_option("--out", synth_args.out_dir, "Output directory")
        ->required()
        ->envname("EPIFIT_OUT");

    IngestArgs ingest_args;
    CLI::App* ingest_cmd = app.add_subcommand("ingest", "Aggregate telemetry events");
    ingest_cmd->add_option("--events", ingest_args.events_path, "Event CSV")
        ->required()
        ->envname("EPIFIT_EVENTS");
    ingest_cmd->add_option("--out", ingest_args.out_dir, "Output directory")
        ->required()
        ->envname("EPIFIT_OUT");
    ingest_cmd->add_option("--min-machines", ingest_args.min_machines, "Minimum machines per file")
        ->capture_default_str();

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit dictionary templates to series");
    fit_cmd->add_option("--series", fit_args.series_path, "series.csv from ingest")
        ->required()
        ->envname("EPIFIT_SERIES");
    fit_cmd->add_option("--dict", fit_args.dict_dir, "Dictionary directory")
        ->required()
        ->envname("EPIFIT_DICT");
    fit_cmd->add_option("--out", fit_args.out_dir, "Output directory")
        ->required()
        ->envname("EPIFIT_OUT");
    fit_cmd->add_option("--tau-max", fit_args.tau_max, "Largest lag to scan")
        ->capture_default_str();
    fit_cmd->add_option("--window-start", fit_args.window_start, "Fit window start day");
    fit_cmd->add_option("--window-end", fit_args.window_end, "Fit window end day (inclusive)");
    fit_cmd->add_option("--jobs", fit_args.jobs, "Worker threads")->capture_default_str();

    PredictArgs predict_args;
    CLI::App* predict_cmd = app.add_subcommand("predict", "Predict susceptible totals");
    predict_cmd->add_option("--series", predict_args.series_path, "series.csv from ingest")
        ->required()
        ->envname("EPIFIT_SERIES");
    predict_cmd->add_option("--dict", predict_args.dict_dir, "Dictionary directory")
        ->required()
        ->envname("EPIFIT_DICT");
    predict_cmd->add_option("--out", predict_args.out_dir, "Output directory")
        ->required()
        ->envname("EPIFIT_OUT");
    predict_cmd->add_option("--truth", predict_args.truth_path, "truth.csv for actual totals")
        ->envname("EPIFIT_TRUTH");
    predict_cmd->add_option("--window-days", predict_args.window_days, "Fit window end day")
        ->capture_default_str();
    predict_cmd->add_flag("--offset-per-day", predict_args.offset_per_day,
                          "Apply the affine offset per template day");
    predict_cmd->add_option("--tau-max", predict_args.tau_max, "Largest lag to scan")
        ->capture_default_str();
    predict_cmd->add_option("--jobs", predict_args.jobs, "Worker threads")->capture_default_str();

    AnalyzeArgs analyze_args;
    CLI::App* analyze_cmd =
        app.add_subcommand("vaccine-analyze", "Signature-timing effect analysis");
    analyze_cmd->add_option("--series", analyze_args.series_path, "series.csv from ingest")
        ->required()
        ->envname("EPIFIT_SERIES");
    analyze_cmd->add_option("--files", analyze_args.files_path, "files.csv from ingest")
        ->required()
        ->envname("EPIFIT_FILES");
    analyze_cmd->add_option("--dict", analyze_args.dict_dir, "Dictionary directory")
        ->required()
        ->envname("EPIFIT_DICT");
    analyze_cmd->add_option("--out", analyze_args.out_dir, "Output directory")
        ->required()
        ->envname("EPIFIT_OUT");
    analyze_cmd->add_option("--threshold", analyze_args.threshold, "Infected-fraction split")
        ->capture_default_str();
    analyze_cmd->add_option("--folds", analyze_args.folds, "Cross-validation folds")
        ->capture_default_str();
    analyze_cmd->add_option("--seed", analyze_args.seed, "Seed for folds and permutations")
        ->capture_default_str();
    analyze_cmd->add_option("--permutations", analyze_args.permutations,
                            "Permutations for the CV p-value")
        ->capture_default_str();
    analyze_cmd->add_option("--tau-max", analyze_args.tau_max, "Largest lag to scan")
        ->capture_default_str();
    analyze_cmd->add_option("--jobs", analyze_args.jobs, "Worker threads")->capture_default_str();

    ReportArgs report_args;
    CLI::App* report_cmd = app.add_subcommand("report", "Emit plot data files");
    report_cmd->add_option("--predictions", report_args.predictions_path, "predictions.csv")
        ->required()
        ->envname("EPIFIT_PREDICTIONS");
    report_cmd->add_option("--outcomes", report_args.outcomes_path, "outcomes.csv")
        ->required()
        ->envname("EPIFIT_OUTCOMES");
    report_cmd->add_option("--truth", report_args.truth_path, "truth.csv for actual totals")
        ->envname("EPIFIT_TRUTH");
    report_cmd->add_option("--out", report_args.out_dir, "Output directory")
        ->required()
        ->envname("EPIFIT_OUT");
    report_cmd->add_option("--threshold", report_args.threshold, "Infected-fraction split")
        ->capture_default_str();
    report_cmd->add_flag("--svg", report_args.svg, "Also render static SVG figures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (dict_cmd->parsed())
            run_dict_build(dict_args);
        else if (synth_cmd->parsed())
            run_synth_gen(synth_args);
        else if (ingest_cmd->parsed())
            run_ingest(ingest_args);
        else if (fit_cmd->parsed())
            run_fit(fit_args);
        else if (predict_cmd->parsed())
            run_predict(predict_args);
        else if (analyze_cmd->parsed())
            run_analyze(analyze_args);
        else if (report_cmd->parsed())
            run_report(report_args);
        return 0;
    } catch (const epifit::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const epifit::InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const epifit::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const epifit::FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const epifit::Error& e) {
        // Domain and configuration problems are usage errors.
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
