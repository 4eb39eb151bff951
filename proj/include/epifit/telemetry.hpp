#pragma once

#include "epifit/epidemic.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace epifit {

struct TelemetryEvent {
    std::string machine_id;
    std::string file_id;
    Date first_seen;
    Date scan_time;
    bool malware_verdict = false;
    std::optional<Date> signature_date;
};

struct MalwareSeries {
    std::string file_id;
    // Day 0 anchored at the earliest first_seen; the series extends to the
    // file's last telemetry event, so rescans preserve the quiet tail.
    IncidenceSeries incidence;
    std::int64_t machine_total = 0;
    std::optional<std::int64_t> vaccination_day;  // days from anchor; may be negative
};

struct IngestStats {
    std::size_t rows_total = 0;
    std::size_t rows_rejected = 0;
    std::size_t files_seen = 0;
    std::size_t files_kept = 0;
    std::vector<std::string> reject_samples;  // first few reasons, with line numbers
};

// Folds an event stream into per-file daily first-seen counts: machines
// dedup to their earliest first_seen, day 0 is the file's earliest
// sighting, and files seen on fewer than min_machines machines are
// dropped. The vaccination day is the earliest malware-verdict date
// (signature date when present, otherwise scan time) relative to day 0.
// Malformed rows are skipped and counted; more than 10% rejects aborts.
std::vector<MalwareSeries> ingest(std::istream& events_csv, std::int64_t min_machines,
                                  IngestStats& stats);
std::vector<MalwareSeries> ingest(const std::vector<TelemetryEvent>& events,
                                  std::int64_t min_machines, IngestStats& stats);

void write_events_csv(std::ostream& out, const std::vector<TelemetryEvent>& events);

struct SyntheticScenario {
    std::string file_id;
    EpidemicParams params;
    std::optional<std::int64_t> vaccination_day;  // generator day the signature ships
    double gamma_post_vax = 0.1;  // clearance rate once the signature is out
    double block_prob = 0.95;     // chance a post-signature infection is blocked
    std::uint64_t noise_seed = 0;
    std::int64_t observation_days = 365;
    bool expectation_only = false;  // integer-rounded expectation instead of Poisson
    Date day0_date = Date::from_civil(2024, 1, 1);
};

struct GroundTruth {
    std::string file_id;
    EpidemicParams params;
    std::optional<std::int64_t> vaccination_day_raw;  // generator clock
    std::optional<std::int64_t> vaccination_day;      // relative to first install
    std::int64_t day0_offset = 0;  // generator day of the first install
    std::int64_t machine_total = 0;
    std::vector<double> incidence;  // machines first infected per day, anchored
    double expected_total = 0.0;    // deterministic S(0) - S(end)
};

struct SyntheticResult {
    std::vector<TelemetryEvent> events;
    GroundTruth truth;
};

// Daily chain: the deterministic expectation (post-signature rates scaled
// by the block probability, clearance at gamma_post_vax) drives one
// Poisson draw per day; each infected machine emits an install event, and
// machines infected while the signature exists are reported as malware.
// On the signature day the currently infected machines are re-scanned so
// the detection date is always present in the stream, and the first
// installed machine gets a clean rescan on the window's last day so the
// series keeps its zero tail. Seed-identical runs produce identical
// events. The truth side records exactly what was emitted, anchored the
// same way ingest anchors.
SyntheticResult generate(const SyntheticScenario& scenario);

} // namespace epifit
