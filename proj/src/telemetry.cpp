#include "epifit/telemetry.hpp"

#include "epifit/errors.hpp"
#include "epifit/numformat.hpp"
#include "epifit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

namespace epifit {

namespace {

constexpr std::size_t kMaxRejectSamples = 10;

const char* const kEventHeader = "machine_id,file_id,first_seen,scan_time,verdict,signature_date";

struct FileAccumulator {
    std::unordered_map<std::string, Date> machine_first_seen;
    std::optional<Date> earliest_malware;
    std::optional<Date> last_scan;
};

void fold_event(std::map<std::string, FileAccumulator>& files, const TelemetryEvent& ev)
{
    FileAccumulator& acc = files[ev.file_id];
    auto [it, inserted] = acc.machine_first_seen.try_emplace(ev.machine_id, ev.first_seen);
    if (!inserted && ev.first_seen < it->second)
        it->second = ev.first_seen;
    if (!acc.last_scan || *acc.last_scan < ev.scan_time)
        acc.last_scan = ev.scan_time;
    if (ev.malware_verdict) {
        const Date when = ev.signature_date ? *ev.signature_date : ev.scan_time;
        if (!acc.earliest_malware || when < *acc.earliest_malware)
            acc.earliest_malware = when;
    }
}

std::vector<MalwareSeries> finish_ingest(std::map<std::string, FileAccumulator>& files,
                                         std::int64_t min_machines, IngestStats& stats)
{
    std::vector<MalwareSeries> out;
    stats.files_seen = files.size();
    for (auto& [file_id, acc] : files) {
        if (static_cast<std::int64_t>(acc.machine_first_seen.size()) < min_machines)
            continue;
        Date day0 = acc.machine_first_seen.begin()->second;
        for (const auto& [machine, seen] : acc.machine_first_seen)
            if (seen < day0)
                day0 = seen;
        // The series runs to the file's last telemetry event, not its last
        // new-machine sighting: rescans of already-counted machines extend
        // the window with genuine zero days, which is what lets a quiet
        // tail after the outbreak be observed at all.
        Date last = *acc.last_scan;
        MalwareSeries series;
        series.file_id = file_id;
        series.incidence.day0 = day0;
        series.incidence.values.assign(static_cast<std::size_t>(last - day0) + 1, 0.0);
        for (const auto& [machine, seen] : acc.machine_first_seen)
            series.incidence.values[static_cast<std::size_t>(seen - day0)] += 1.0;
        series.machine_total = static_cast<std::int64_t>(acc.machine_first_seen.size());
        if (acc.earliest_malware)
            series.vaccination_day = *acc.earliest_malware - day0;
        out.push_back(std::move(series));
        ++stats.files_kept;
    }
    return out;
}

void check_reject_budget(const IngestStats& stats)
{
    if (stats.rows_total >= 10 &&
        stats.rows_rejected * 10 > stats.rows_total) {
        std::string detail;
        for (const std::string& s : stats.reject_samples)
            detail += "\n  " + s;
        throw ParseError("too many malformed rows: " + std::to_string(stats.rows_rejected) +
                         " of " + std::to_string(stats.rows_total) + detail);
    }
}

bool parse_event_fields(const std::vector<std::string>& fields, TelemetryEvent& ev,
                        std::string& error)
{
    if (fields.size() != 6) {
        error = "expected 6 fields, got " + std::to_string(fields.size());
        return false;
    }
    if (fields[0].empty() || fields[1].empty()) {
        error = "empty machine_id or file_id";
        return false;
    }
    ev.machine_id = fields[0];
    ev.file_id = fields[1];
    try {
        ev.first_seen = Date::parse_iso(fields[2]);
        ev.scan_time = Date::parse_iso(fields[3]);
        if (!fields[5].empty())
            ev.signature_date = Date::parse_iso(fields[5]);
        else
            ev.signature_date.reset();
    } catch (const ParseError& e) {
        error = e.what();
        return false;
    }
    if (ev.scan_time < ev.first_seen) {
        error = "scan_time precedes first_seen";
        return false;
    }
    if (fields[4] == "malware") {
        ev.malware_verdict = true;
    } else if (fields[4] == "clean") {
        ev.malware_verdict = false;
    } else {
        error = "unknown verdict '" + fields[4] + "'";
        return false;
    }
    return true;
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

} // namespace

std::vector<MalwareSeries> ingest(std::istream& events_csv, std::int64_t min_machines,
                                  IngestStats& stats)
{
    std::string line;
    if (!std::getline(events_csv, line))
        throw ParseError("empty event stream");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kEventHeader)
        throw ParseError("line 1: expected header '" + std::string(kEventHeader) + "'");

    std::map<std::string, FileAccumulator> files;
    std::size_t lineno = 1;
    while (std::getline(events_csv, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        ++stats.rows_total;
        TelemetryEvent ev;
        std::string error;
        if (!parse_event_fields(split_fields(line), ev, error)) {
            ++stats.rows_rejected;
            if (stats.reject_samples.size() < kMaxRejectSamples)
                stats.reject_samples.push_back("line " + std::to_string(lineno) + ": " + error);
            continue;
        }
        fold_event(files, ev);
    }
    check_reject_budget(stats);
    return finish_ingest(files, min_machines, stats);
}

std::vector<MalwareSeries> ingest(const std::vector<TelemetryEvent>& events,
                                  std::int64_t min_machines, IngestStats& stats)
{
    std::map<std::string, FileAccumulator> files;
    for (const TelemetryEvent& ev : events) {
        ++stats.rows_total;
        if (ev.machine_id.empty() || ev.file_id.empty() || ev.scan_time < ev.first_seen) {
            ++stats.rows_rejected;
            if (stats.reject_samples.size() < kMaxRejectSamples)
                stats.reject_samples.push_back("event " + std::to_string(stats.rows_total) +
                                               ": invalid fields");
            continue;
        }
        fold_event(files, ev);
    }
    check_reject_budget(stats);
    return finish_ingest(files, min_machines, stats);
}

void write_events_csv(std::ostream& out, const std::vector<TelemetryEvent>& events)
{
    out << kEventHeader << '\n';
    for (const TelemetryEvent& ev : events) {
        out << ev.machine_id << ',' << ev.file_id << ',' << ev.first_seen.to_iso() << ','
            << ev.scan_time.to_iso() << ',' << (ev.malware_verdict ? "malware" : "clean") << ',';
        if (ev.signature_date)
            out << ev.signature_date->to_iso();
        out << '\n';
    }
}

SyntheticResult generate(const SyntheticScenario& scenario)
{
    scenario.params.validate();
    if (scenario.file_id.empty())
        throw DomainError("scenario needs a file_id");
    if (scenario.observation_days < 1)
        throw DomainError("observation_days must be >= 1");
    if (scenario.block_prob < 0.0 || scenario.block_prob > 1.0)
        throw DomainError("block_prob must be in [0, 1]");
    if (scenario.gamma_post_vax < scenario.params.gamma)
        throw DomainError("gamma_post_vax must be >= gamma");
    if (scenario.vaccination_day &&
        (*scenario.vaccination_day < 0 || *scenario.vaccination_day >= scenario.observation_days))
        throw DomainError("vaccination_day must fall inside the observation window");

    // Deterministic expectation: the pre-signature rates run through the
    // signature day inclusive (that day's infections happen either way);
    // afterwards infections are thinned by the block probability and
    // clearance speeds up.
    const std::int64_t obs = scenario.observation_days;
    std::vector<std::pair<InfectionRates, std::int64_t>> segments;
    if (scenario.vaccination_day) {
        const std::int64_t pre = std::min(*scenario.vaccination_day + 1, obs);
        segments.push_back({scenario.params.rates(), pre});
        if (obs > pre) {
            InfectionRates post = scenario.params.rates();
            post.beta_p2p *= 1.0 - scenario.block_prob;
            post.beta_cs *= 1.0 - scenario.block_prob;
            post.gamma = scenario.gamma_post_vax;
            segments.push_back({post, obs - pre});
        }
    } else {
        segments.push_back({scenario.params.rates(), obs});
    }
    const CompartmentTrajectory traj =
        simulate_piecewise(scenario.params.s0(), scenario.params.i0, 0.0, segments);
    const IncidenceSeries expectation = incidence_of(traj);

    Rng rng(scenario.noise_seed);
    std::vector<std::int64_t> installs(static_cast<std::size_t>(obs), 0);
    double carry = 0.0;
    for (std::int64_t t = 0; t < obs; ++t) {
        const double lambda = expectation.values[static_cast<std::size_t>(t)];
        if (lambda > 1e9)
            throw DomainError("expected daily infections exceed 1e9 on day " + std::to_string(t));
        if (scenario.expectation_only) {
            carry += lambda;
            const std::int64_t k = std::llround(carry);
            installs[static_cast<std::size_t>(t)] = k < 0 ? 0 : k;
            carry -= static_cast<double>(installs[static_cast<std::size_t>(t)]);
        } else {
            installs[static_cast<std::size_t>(t)] = rng.poisson(lambda);
        }
    }

    SyntheticResult result;
    result.truth.file_id = scenario.file_id;
    result.truth.params = scenario.params;
    result.truth.vaccination_day_raw = scenario.vaccination_day;
    result.truth.expected_total = traj.s.front() - traj.s.back();

    const std::optional<Date> signature_date =
        scenario.vaccination_day
            ? std::optional<Date>(scenario.day0_date + static_cast<int>(*scenario.vaccination_day))
            : std::nullopt;

    std::int64_t counter = 0;
    std::vector<std::pair<std::string, std::int64_t>> installed;  // (machine_id, day)
    char idbuf[24];
    for (std::int64_t t = 0; t < obs; ++t) {
        const Date day = scenario.day0_date + static_cast<int>(t);
        const bool signature_out = scenario.vaccination_day && t >= *scenario.vaccination_day;
        for (std::int64_t k = 0; k < installs[static_cast<std::size_t>(t)]; ++k) {
            ++counter;
            std::snprintf(idbuf, sizeof(idbuf), "m%07lld", static_cast<long long>(counter));
            TelemetryEvent ev;
            ev.machine_id = idbuf;
            ev.file_id = scenario.file_id;
            ev.first_seen = day;
            ev.scan_time = day;
            ev.malware_verdict = signature_out;
            if (signature_out)
                ev.signature_date = signature_date;
            result.events.push_back(ev);
            installed.emplace_back(ev.machine_id, t);
        }
        // Signature-day rescan: the machines still infected are detected,
        // so the stream always carries the signature date when anyone was
        // ever infected. Rescans duplicate machines and dedup away.
        if (scenario.vaccination_day && t == *scenario.vaccination_day && !installed.empty()) {
            const double infected_now = traj.i[static_cast<std::size_t>(t)];
            std::int64_t scans = std::llround(infected_now);
            scans = std::clamp<std::int64_t>(scans, 1, static_cast<std::int64_t>(installed.size()));
            for (std::size_t k = installed.size() - static_cast<std::size_t>(scans);
                 k < installed.size(); ++k) {
                TelemetryEvent ev;
                ev.machine_id = installed[k].first;
                ev.file_id = scenario.file_id;
                ev.first_seen = scenario.day0_date + static_cast<int>(installed[k].second);
                ev.scan_time = day;
                ev.malware_verdict = true;
                ev.signature_date = signature_date;
                result.events.push_back(ev);
            }
        }
    }

    // Monitoring outlives the outbreak: the first installed machine gets a
    // routine clean rescan on the window's final day, so the observed series
    // keeps its zero tail instead of stopping at the last new install.
    if (!installed.empty()) {
        TelemetryEvent ev;
        ev.machine_id = installed.front().first;
        ev.file_id = scenario.file_id;
        ev.first_seen = scenario.day0_date + static_cast<int>(installed.front().second);
        ev.scan_time = scenario.day0_date + static_cast<int>(obs - 1);
        ev.malware_verdict = false;
        result.events.push_back(ev);
    }

    // Anchor the truth the same way ingest will: day 0 is the first actual
    // install, and the series extends to the last event (the final-day
    // rescan), so truth and ingest output agree sample for sample.
    std::int64_t first = -1;
    for (std::int64_t t = 0; t < obs && first < 0; ++t)
        if (installs[static_cast<std::size_t>(t)] > 0)
            first = t;
    if (first >= 0) {
        result.truth.day0_offset = first;
        result.truth.machine_total = counter;
        result.truth.incidence.assign(static_cast<std::size_t>(obs - first), 0.0);
        for (std::int64_t t = first; t < obs; ++t)
            result.truth.incidence[static_cast<std::size_t>(t - first)] =
                static_cast<double>(installs[static_cast<std::size_t>(t)]);
        if (scenario.vaccination_day)
            result.truth.vaccination_day = *scenario.vaccination_day - first;
    }
    return result;
}

} // namespace epifit
