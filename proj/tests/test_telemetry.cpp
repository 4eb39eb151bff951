#include <doctest.h>

#include "epifit/errors.hpp"
#include "epifit/rng.hpp"
#include "epifit/telemetry.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace epifit;

namespace {

const Date kBase = Date::from_civil(2024, 1, 1);

TelemetryEvent make_event(std::string machine, std::string file, int first, int scan,
                          bool malware = false, std::optional<int> sig = std::nullopt)
{
    TelemetryEvent ev;
    ev.machine_id = std::move(machine);
    ev.file_id = std::move(file);
    ev.first_seen = kBase + first;
    ev.scan_time = kBase + scan;
    ev.malware_verdict = malware;
    if (sig)
        ev.signature_date = kBase + *sig;
    return ev;
}

SyntheticScenario base_scenario(std::string file_id, std::uint64_t seed)
{
    SyntheticScenario sc;
    sc.file_id = std::move(file_id);
    sc.params = EpidemicParams::peer_to_peer(20.0, 3.0, 0.05, 5000.0);
    sc.noise_seed = seed;
    sc.observation_days = 90;
    sc.day0_date = kBase;
    return sc;
}

} // namespace

TEST_CASE("ingest agrees with a brute-force fold of random event streams")
{
    Rng rng(2718);
    std::vector<TelemetryEvent> events;
    for (int k = 0; k < 300; ++k) {
        const std::string file = std::string("f") + static_cast<char>('A' + rng.below(3));
        const std::string machine = file + "_m" + std::to_string(rng.below(12));
        const int first = static_cast<int>(rng.below(40));
        const int scan = first + static_cast<int>(rng.below(20));
        const bool malware = rng.below(5) == 0;
        std::optional<int> sig;
        if (malware && rng.below(2) == 0)
            sig = first - 3 + static_cast<int>(rng.below(10));
        events.push_back(make_event(machine, file, first, scan, malware, sig));
    }

    // The obvious O(n^2)-ish reference: min first_seen per machine, max
    // scan_time per file, earliest malware date per file.
    struct Ref {
        std::map<std::string, Date> machines;
        std::optional<Date> last_scan;
        std::optional<Date> earliest_malware;
    };
    std::map<std::string, Ref> refs;
    for (const auto& ev : events) {
        Ref& r = refs[ev.file_id];
        auto it = r.machines.find(ev.machine_id);
        if (it == r.machines.end() || ev.first_seen < it->second)
            r.machines[ev.machine_id] = ev.first_seen;
        if (!r.last_scan || *r.last_scan < ev.scan_time)
            r.last_scan = ev.scan_time;
        if (ev.malware_verdict) {
            const Date when = ev.signature_date ? *ev.signature_date : ev.scan_time;
            if (!r.earliest_malware || when < *r.earliest_malware)
                r.earliest_malware = when;
        }
    }

    IngestStats stats;
    const auto series = ingest(events, 1, stats);
    CHECK(stats.rows_total == events.size());
    CHECK(stats.rows_rejected == 0);
    CHECK(stats.files_seen == refs.size());
    REQUIRE(series.size() == refs.size());

    std::size_t at = 0;
    for (const auto& [file_id, ref] : refs) {
        const MalwareSeries& s = series[at++];
        CAPTURE(file_id);
        CHECK(s.file_id == file_id);  // output is sorted by file id
        Date day0 = ref.machines.begin()->second;
        for (const auto& [m, seen] : ref.machines)
            if (seen < day0)
                day0 = seen;
        REQUIRE(s.incidence.day0.has_value());
        CHECK(*s.incidence.day0 == day0);
        CHECK(s.machine_total == static_cast<std::int64_t>(ref.machines.size()));
        std::vector<double> expected(static_cast<std::size_t>(*ref.last_scan - day0) + 1, 0.0);
        for (const auto& [m, seen] : ref.machines)
            expected[static_cast<std::size_t>(seen - day0)] += 1.0;
        CHECK(s.incidence.values == expected);
        if (ref.earliest_malware) {
            REQUIRE(s.vaccination_day.has_value());
            CHECK(*s.vaccination_day == *ref.earliest_malware - day0);
        } else {
            CHECK_FALSE(s.vaccination_day.has_value());
        }
    }
}

TEST_CASE("the machine floor is inclusive")
{
    std::vector<TelemetryEvent> events;
    for (int k = 0; k < 200; ++k)
        events.push_back(make_event("a" + std::to_string(k), "big", 0, 0));
    for (int k = 0; k < 199; ++k)
        events.push_back(make_event("b" + std::to_string(k), "small", 0, 0));

    IngestStats stats;
    const auto series = ingest(events, 200, stats);
    CHECK(stats.files_seen == 2);
    CHECK(stats.files_kept == 1);
    REQUIRE(series.size() == 1);
    CHECK(series[0].file_id == "big");
    CHECK(series[0].machine_total == 200);
    CHECK(series[0].incidence.values == std::vector<double>{200.0});
}

TEST_CASE("a rescanned machine keeps its earliest sighting")
{
    std::vector<TelemetryEvent> events{
        make_event("m1", "f", 5, 5),
        make_event("m1", "f", 2, 9),   // backfilled earlier install
        make_event("m1", "f", 7, 12),  // later rescan must not move it
        make_event("m2", "f", 2, 2),
    };
    IngestStats stats;
    const auto series = ingest(events, 1, stats);
    REQUIRE(series.size() == 1);
    CHECK(series[0].machine_total == 2);
    // Day axis runs from day 2 (earliest install) to day 12 (last scan).
    REQUIRE(series[0].incidence.values.size() == 11);
    CHECK(series[0].incidence.values[0] == 2.0);
    for (std::size_t t = 1; t < 11; ++t)
        CHECK(series[0].incidence.values[t] == 0.0);
}

TEST_CASE("vaccination day prefers the signature date and may precede day 0")
{
    SUBCASE("signature date wins over scan time")
    {
        const std::vector<TelemetryEvent> events{
            make_event("m1", "f", 0, 0),
            make_event("m2", "f", 1, 9, true, 7),
            make_event("m3", "f", 2, 4, true),  // no signature: scan day 4 counts
        };
        IngestStats stats;
        const auto series = ingest(events, 1, stats);
        REQUIRE(series.size() == 1);
        REQUIRE(series[0].vaccination_day.has_value());
        CHECK(*series[0].vaccination_day == 4);
    }
    SUBCASE("a signature issued before the first sighting goes negative")
    {
        const std::vector<TelemetryEvent> events{
            make_event("m1", "f", 10, 10),
            make_event("m2", "f", 11, 12, true, 5),
        };
        IngestStats stats;
        const auto series = ingest(events, 1, stats);
        REQUIRE(series.size() == 1);
        CHECK(*series[0].vaccination_day == -5);
    }
}

TEST_CASE("csv ingest skips malformed rows and reports line numbers")
{
    std::ostringstream csv;
    csv << "machine_id,file_id,first_seen,scan_time,verdict,signature_date\r\n";
    for (int k = 0; k < 36; ++k)
        csv << "m" << k << ",f,2024-01-0" << (1 + k % 9) << ",2024-01-09,clean,\n";
    csv << "m90,f,2024-01-01,2024-01-02\n";                      // 5 fields (line 38)
    csv << "m91,f,2024-13-40,2024-01-02,clean,\n";               // bad date (line 39)
    csv << "m92,f,2024-01-05,2024-01-02,clean,\n";               // scan precedes install
    csv << "m93,f,2024-01-01,2024-01-02,suspicious,\n";          // unknown verdict

    std::istringstream in(csv.str());
    IngestStats stats;
    const auto series = ingest(in, 1, stats);
    CHECK(stats.rows_total == 40);
    CHECK(stats.rows_rejected == 4);
    REQUIRE(stats.reject_samples.size() == 4);
    CHECK(stats.reject_samples[0].find("line 38:") == 0);
    CHECK(stats.reject_samples[1].find("line 39:") == 0);
    CHECK(stats.reject_samples[2].find("precedes") != std::string::npos);
    CHECK(stats.reject_samples[3].find("suspicious") != std::string::npos);
    REQUIRE(series.size() == 1);
    CHECK(series[0].machine_total == 36);
}

TEST_CASE("too many malformed rows aborts with samples")
{
    std::ostringstream csv;
    csv << "machine_id,file_id,first_seen,scan_time,verdict,signature_date\n";
    for (int k = 0; k < 8; ++k)
        csv << "m" << k << ",f,2024-01-01,2024-01-02,clean,\n";
    csv << "bad-row-one\n";
    csv << "bad-row-two\n";

    std::istringstream in(csv.str());
    IngestStats stats;
    try {
        ingest(in, 1, stats);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2 of 10") != std::string::npos);
        CHECK(msg.find("line 10:") != std::string::npos);
        CHECK(msg.find("line 11:") != std::string::npos);
    }

    // Exactly 10% stays within budget.
    std::ostringstream ok;
    ok << "machine_id,file_id,first_seen,scan_time,verdict,signature_date\n";
    for (int k = 0; k < 9; ++k)
        ok << "m" << k << ",f,2024-01-01,2024-01-02,clean,\n";
    ok << "just-one-bad-row\n";
    std::istringstream in_ok(ok.str());
    IngestStats stats_ok;
    const auto series = ingest(in_ok, 1, stats_ok);
    CHECK(stats_ok.rows_rejected == 1);
    CHECK(series.size() == 1);

    std::istringstream empty("");
    IngestStats s2;
    CHECK_THROWS_AS(ingest(empty, 1, s2), ParseError);
    std::istringstream bad_header("machine,file\nx,y\n");
    IngestStats s3;
    CHECK_THROWS_AS(ingest(bad_header, 1, s3), ParseError);
}

TEST_CASE("generated outbreaks round-trip through ingest exactly")
{
    SyntheticScenario sc = base_scenario("wormA", 11);
    sc.vaccination_day = 25;
    const SyntheticResult gen = generate(sc);
    REQUIRE(!gen.events.empty());

    IngestStats stats;
    const auto series = ingest(gen.events, 1, stats);
    CHECK(stats.rows_rejected == 0);
    REQUIRE(series.size() == 1);
    const MalwareSeries& s = series[0];

    CHECK(s.file_id == "wormA");
    CHECK(s.machine_total == gen.truth.machine_total);
    CHECK(s.incidence.values == gen.truth.incidence);
    REQUIRE(s.incidence.day0.has_value());
    CHECK(*s.incidence.day0 == kBase + static_cast<int>(gen.truth.day0_offset));
    REQUIRE(s.vaccination_day.has_value());
    REQUIRE(gen.truth.vaccination_day.has_value());
    CHECK(*s.vaccination_day == *gen.truth.vaccination_day);
    CHECK(*gen.truth.vaccination_day ==
          *gen.truth.vaccination_day_raw - gen.truth.day0_offset);

    double total = 0.0;
    for (double v : s.incidence.values)
        total += v;
    CHECK(total == static_cast<double>(s.machine_total));
    CHECK(s.incidence.values.front() > 0.0);  // day 0 is the first install day

    // The same stream serialized and re-parsed folds identically.
    std::ostringstream csv;
    write_events_csv(csv, gen.events);
    std::istringstream in(csv.str());
    IngestStats stats2;
    const auto series2 = ingest(in, 1, stats2);
    REQUIRE(series2.size() == 1);
    CHECK(series2[0].incidence.values == s.incidence.values);
    CHECK(series2[0].machine_total == s.machine_total);
    CHECK(series2[0].vaccination_day == s.vaccination_day);
}

TEST_CASE("generation is a pure function of the seed")
{
    const SyntheticResult a = generate(base_scenario("wormB", 7));
    const SyntheticResult b = generate(base_scenario("wormB", 7));
    const SyntheticResult c = generate(base_scenario("wormB", 8));

    std::ostringstream sa, sb, sscc;
    write_events_csv(sa, a.events);
    write_events_csv(sb, b.events);
    write_events_csv(sscc, c.events);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() != sscc.str());
    CHECK(a.truth.incidence == b.truth.incidence);
}

TEST_CASE("expectation-only noise never drifts from the deterministic curve")
{
    SyntheticScenario sc = base_scenario("wormC", 0);
    sc.expectation_only = true;
    const SyntheticResult gen = generate(sc);

    // Independent recomputation of the expectation the generator followed.
    const IncidenceSeries expect = incidence_of(
        simulate(sc.params, sc.observation_days));

    double cum_expect = 0.0, cum_installs = 0.0;
    for (std::int64_t t = 0; t < sc.observation_days; ++t) {
        cum_expect += expect.values[static_cast<std::size_t>(t)];
        const std::int64_t at = t - gen.truth.day0_offset;
        if (at >= 0)
            cum_installs += gen.truth.incidence[static_cast<std::size_t>(at)];
        // Error diffusion keeps the integer series within half a machine of
        // the running expectation at every single day.
        CHECK(std::abs(cum_installs - cum_expect) <= 0.5 + 1e-9);
    }
    CHECK(std::abs(static_cast<double>(gen.truth.machine_total) - gen.truth.expected_total) <=
          0.5 + 1e-6);
}

TEST_CASE("a perfect same-day signature stops the outbreak at day zero")
{
    SyntheticScenario sc = base_scenario("wormD", 3);
    sc.params = EpidemicParams::peer_to_peer(50.0, 4.0, 0.05, 2000.0);
    sc.vaccination_day = 0;
    sc.block_prob = 1.0;
    sc.gamma_post_vax = 2.0;
    sc.observation_days = 30;
    const SyntheticResult gen = generate(sc);

    REQUIRE(gen.truth.machine_total > 0);
    CHECK(gen.truth.day0_offset == 0);
    REQUIRE(!gen.truth.incidence.empty());
    CHECK(gen.truth.incidence[0] > 0.0);
    for (std::size_t t = 1; t < gen.truth.incidence.size(); ++t)
        CHECK(gen.truth.incidence[t] == 0.0);

    IngestStats stats;
    const auto series = ingest(gen.events, 1, stats);
    REQUIRE(series.size() == 1);
    CHECK(series[0].incidence.values == gen.truth.incidence);
    REQUIRE(series[0].vaccination_day.has_value());
    CHECK(*series[0].vaccination_day == 0);
}

TEST_CASE("raising the machine floor only shrinks the kept set")
{
    std::vector<TelemetryEvent> events;
    for (const auto& [file, machines] : std::vector<std::pair<std::string, int>>{
             {"tiny", 40}, {"mid", 220}, {"large", 500}}) {
        for (int k = 0; k < machines; ++k)
            events.push_back(make_event(file + std::to_string(k), file, k % 7, k % 7));
    }

    std::set<std::string> prev;
    bool first = true;
    for (std::int64_t floor : {1, 200, 10000}) {
        IngestStats stats;
        const auto series = ingest(events, floor, stats);
        std::set<std::string> kept;
        for (const auto& s : series)
            kept.insert(s.file_id);
        if (!first)
            for (const auto& id : kept)
                CHECK(prev.count(id) == 1);
        prev = kept;
        first = false;
        if (floor == 200)
            CHECK(kept == std::set<std::string>{"large", "mid"});
        if (floor == 10000)
            CHECK(kept.empty());
    }
}

TEST_CASE("generator rejects unusable scenarios")
{
    auto sc = base_scenario("worm", 1);
    sc.block_prob = -0.1;
    CHECK_THROWS_AS(generate(sc), DomainError);
    sc.block_prob = 1.1;
    CHECK_THROWS_AS(generate(sc), DomainError);

    sc = base_scenario("worm", 1);
    sc.gamma_post_vax = sc.params.gamma / 2.0;
    CHECK_THROWS_AS(generate(sc), DomainError);

    sc = base_scenario("worm", 1);
    sc.vaccination_day = -1;
    CHECK_THROWS_AS(generate(sc), DomainError);
    sc.vaccination_day = sc.observation_days;
    CHECK_THROWS_AS(generate(sc), DomainError);

    sc = base_scenario("worm", 1);
    sc.observation_days = 0;
    CHECK_THROWS_AS(generate(sc), DomainError);

    sc = base_scenario("", 1);
    CHECK_THROWS_AS(generate(sc), DomainError);

    // More than 1e9 expected installs in one day is a configuration error,
    // not something to sample.
    sc = base_scenario("flood", 1);
    sc.params = EpidemicParams::central_source(1000.0, 50.0, 0.1, 1e12);
    sc.observation_days = 3;
    CHECK_THROWS_AS(generate(sc), DomainError);
}
