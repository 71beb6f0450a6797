#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "tia/errors.hpp"
#include "tia/redundancy.hpp"

using namespace tia;
using fixtures::make_incident;
using fixtures::two_path_doc;

namespace {

Path make_path(double headway, double capacity, double travel_time) {
    Path p;
    p.legs = {{"x", "a", "b"}};
    p.headway = headway;
    p.capacity = capacity;
    p.travel_time = travel_time;
    return p;
}

// Straight-line re-derivation of the throughput sum, written without reuse of
// the library routine.
double oracle_throughput(double H, double C, double L, double D) {
    int vehicles = static_cast<int>(D / H);
    double passengers = 0.0;
    for (int k = 1; k <= vehicles; ++k) {
        double window = D - (k - 1) * H;
        if (window >= L) passengers += C;
        else passengers += C * window / L;
    }
    return passengers * 60.0 / D;
}

} // namespace

TEST_CASE("worked example values") {
    CHECK(path_throughput(make_path(30, 200, 20), 60.0) == 400.0);
    CHECK(path_throughput(make_path(30, 200, 60), 60.0) == 300.0);
}

TEST_CASE("no vehicle dispatched within a short window") {
    CHECK(path_throughput(make_path(30, 200, 20), 10.0) == 0.0);
}

TEST_CASE("long incidents approach the classical capacity") {
    double a = path_throughput(make_path(10, 100, 25), 100000.0);
    CHECK(std::abs(a - 600.0) / 600.0 < 1e-3);

    // declared tolerance at D = 1000 * max(H, L)
    for (auto [H, C, L] : {std::tuple{7.0, 120.0, 31.0}, {12.5, 80.0, 5.0}, {30.0, 200.0, 60.0}}) {
        double D = 1000.0 * std::max(H, L);
        double got = path_throughput(make_path(H, C, L), D);
        double limit = C * 60.0 / H;
        CHECK(std::abs(got - limit) / limit < 1e-2);
    }
}

TEST_CASE("throughput bound and oracle agreement on random inputs") {
    std::mt19937 rng(8123);
    std::uniform_real_distribution<double> u(0.5, 120.0);
    for (int i = 0; i < 500; ++i) {
        double H = u(rng), L = u(rng), D = u(rng) * 4.0;
        double C = 20.0 + u(rng) * 8.0;
        Path p = make_path(H, C, L);
        double got = path_throughput(p, D);
        CHECK(got == doctest::Approx(oracle_throughput(H, C, L, D)).epsilon(1e-12));
        CHECK(got >= 0.0);
        // each dispatched vehicle carries at most C
        CHECK(got <= C * 60.0 / H * (1.0 + H / D) + 1e-9);
    }
}

TEST_CASE("invalid throughput inputs") {
    CHECK_THROWS_AS(path_throughput(make_path(30, 200, 20), 0.0), Error);
    CHECK_THROWS_AS(path_throughput(make_path(0, 200, 20), 60.0), Error);
    CHECK_THROWS_AS(path_throughput(make_path(30, 0, 20), 60.0), Error);
    CHECK_THROWS_AS(path_throughput(make_path(30, 200, 0), 60.0), Error);
}

TEST_CASE("od throughputs on the worked example") {
    TransitNetwork net = load_network(two_path_doc());
    PathFilter filter;
    auto sets = incident_path_sets(net, make_incident({"s-oa"}), {{"O", "D"}}, filter);
    const PathSet& set = sets.at({"O", "D"});

    OdThroughput t = od_throughputs(set, 60.0);
    CHECK(t.affected);
    CHECK(t.before == 700.0);  // both baseline paths: 400 + 300
    CHECK(t.after == 300.0);

    SUBCASE("clamp binds when nothing is blocked") {
        auto quiet = incident_path_sets(net, make_incident({"s-oa"}), {{"O", "D"}}, filter);
        PathSet same = quiet.at({"O", "D"});
        same.incident = same.baseline;
        OdThroughput full = od_throughputs(same, 60.0);
        CHECK(full.after == full.before);
    }

    SUBCASE("empty incident set zeroes the after throughput") {
        PathSet none = set;
        none.incident.clear();
        CHECK(od_throughputs(none, 60.0).after == 0.0);
    }
}

TEST_CASE("single-OD example reproduces the 0.75 ratio") {
    // Baseline path choice is the direct line only (k = 1); the slow route
    // becomes relevant only once the incident removes the fast one.
    TransitNetwork net = load_network(two_path_doc());
    PathFilter filter;
    filter.k = 1;
    ThroughputReport report =
        throughput_report(net, make_incident({"s-oa"}), {{"O", "D"}}, filter);
    CHECK(report.duration == 60.0);
    CHECK_FALSE(report.redundancy.vacuous);
    CHECK(report.redundancy.value == 0.75);
    REQUIRE(report.ods.size() == 1);
    CHECK(report.ods[0].before == 400.0);
    CHECK(report.ods[0].after == 300.0);
    REQUIRE(report.ods[0].ratio.has_value());
    CHECK(*report.ods[0].ratio == 0.75);

    auto sets = incident_path_sets(net, make_incident({"s-oa"}), {{"O", "D"}}, filter);
    CHECK(od_redundancy(sets.at({"O", "D"}), 60.0) == 0.75);
}

TEST_CASE("vacuous and zero-redundancy extremes") {
    json doc = two_path_doc();
    doc["stations"].push_back({{"id", "Z1"}, {"name", "Za"}, {"lat", 41.5}, {"lon", -87.5}});
    doc["stations"].push_back({{"id", "Z2"}, {"name", "Zb"}, {"lat", 41.6}, {"lon", -87.5}});
    doc["segments"].push_back({{"id", "s-z"}, {"from", "Z1"}, {"to", "Z2"}});
    doc["lines"].push_back({{"id", "pz"},
                            {"mode", "rail"},
                            {"stations", {"Z1", "Z2"}},
                            {"segments", {"s-z"}},
                            {"headway", 10.0},
                            {"capacity", 100.0},
                            {"travel_times", {5.0}}});
    TransitNetwork net = load_network(doc);
    PathFilter filter;

    SUBCASE("incident nobody uses is vacuous") {
        ThroughputReport report =
            throughput_report(net, make_incident({"s-z"}), {{"O", "D"}}, filter);
        CHECK(report.redundancy.vacuous);
        CHECK(report.redundancy.value == 1.0);
    }

    SUBCASE("blocking every route zeroes the index") {
        ThroughputReport report = throughput_report(
            net, make_incident({"s-oa", "s-ob"}), {{"O", "D"}}, filter);
        CHECK_FALSE(report.redundancy.vacuous);
        CHECK(report.redundancy.value == 0.0);
    }

    SUBCASE("od_redundancy requires positive baseline throughput") {
        auto sets = incident_path_sets(net, make_incident({"s-z"}), {{"O", "D"}}, filter);
        PathSet set = sets.at({"O", "D"});
        // headway longer than the evaluation window: zero vehicles, T_w = 0
        CHECK_THROWS_AS(od_redundancy(set, 10.0), Error);
    }
}

TEST_CASE("nrui equals independent recomputation on random instances") {
    std::mt19937 rng(271828);
    for (int trial = 0; trial < 10; ++trial) {
        json doc = fixtures::random_network_doc(rng, 10, 5, 2);
        TransitNetwork net = load_network(doc);
        std::vector<std::string> seg_ids;
        for (const auto& [id, seg] : net.segments) seg_ids.push_back(id);
        std::vector<std::string> blocked{seg_ids[rng() % seg_ids.size()]};
        IncidentSpec incident = make_incident(blocked);

        std::vector<std::string> ids;
        for (const auto& [id, st] : net.stations) ids.push_back(id);
        std::vector<Od> ods;
        for (int q = 0; q < 10; ++q) {
            Od od{ids[rng() % ids.size()], ids[rng() % ids.size()]};
            if (od.origin != od.destination) ods.push_back(od);
        }
        PathFilter filter;
        double D = 30.0 + static_cast<double>(rng() % 120);
        ThroughputReport report = throughput_report(net, incident, ods, filter, D);

        // independent recomputation straight from path sets and Eq. sums
        auto sets = incident_path_sets(net, incident, ods, filter);
        double num = 0.0, den = 0.0;
        bool any = false;
        for (const auto& [od, set] : sets) {
            if (!set.affected) continue;
            any = true;
            double before = 0.0, after = 0.0;
            for (const auto& p : set.baseline)
                before += oracle_throughput(p.headway, p.capacity, p.travel_time, D);
            for (const auto& p : set.incident)
                after += oracle_throughput(p.headway, p.capacity, p.travel_time, D);
            den += before;
            num += std::min(after, before);
        }
        if (!any || den == 0.0) {
            CHECK(report.redundancy.vacuous);
        } else {
            REQUIRE_FALSE(report.redundancy.vacuous);
            CHECK(report.redundancy.value == doctest::Approx(num / den).epsilon(1e-12));
            CHECK(report.redundancy.value >= 0.0);
            CHECK(report.redundancy.value <= 1.0 + 1e-12);
        }

        // scale invariance: scaling every capacity leaves R_I unchanged
        json scaled_doc = doc;
        for (auto& line : scaled_doc["lines"])
            line["capacity"] = line["capacity"].get<double>() * 3.5;
        TransitNetwork scaled = load_network(scaled_doc);
        ThroughputReport scaled_report = throughput_report(scaled, incident, ods, filter, D);
        CHECK(scaled_report.redundancy.vacuous == report.redundancy.vacuous);
        if (!report.redundancy.vacuous)
            CHECK(scaled_report.redundancy.value ==
                  doctest::Approx(report.redundancy.value).epsilon(1e-12));
    }
}

TEST_CASE("blocking more segments never raises the index over a fixed universe") {
    // Exhaustive path enumeration makes the degraded path set shrink as the
    // blocked set grows; with the OD universe held fixed the ratio can only
    // fall. Truncated searches do not have this guarantee, so the filter is
    // opened wide here.
    std::mt19937 rng(462);
    PathFilter exhaustive;
    exhaustive.k = 100000;
    exhaustive.max_transfers = 50;
    exhaustive.max_detour_ratio = 1e9;
    for (int trial = 0; trial < 8; ++trial) {
        json doc = fixtures::random_network_doc(rng, 9, 4, 2);
        TransitNetwork net = load_network(doc);
        std::vector<std::string> seg_ids;
        for (const auto& [id, seg] : net.segments) seg_ids.push_back(id);
        std::vector<std::string> small{seg_ids[rng() % seg_ids.size()]};
        std::vector<std::string> large = small;
        large.push_back(seg_ids[rng() % seg_ids.size()]);
        large.push_back(seg_ids[rng() % seg_ids.size()]);

        std::vector<std::string> ids;
        for (const auto& [id, st] : net.stations) ids.push_back(id);
        std::vector<Od> ods;
        for (int q = 0; q < 8; ++q) {
            Od od{ids[rng() % ids.size()], ids[rng() % ids.size()]};
            if (od.origin != od.destination) ods.push_back(od);
        }
        double D = 60.0;
        auto small_sets = incident_path_sets(net, make_incident(small), ods, exhaustive);
        auto large_sets = incident_path_sets(net, make_incident(large), ods, exhaustive);

        // fixed universe: every OD affected by the larger incident
        double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
        for (const auto& [od, set2] : large_sets) {
            if (!set2.affected) continue;
            OdThroughput t1 = od_throughputs(small_sets.at(od), D);
            OdThroughput t2 = od_throughputs(set2, D);
            num1 += t1.after;
            den1 += t1.before;
            num2 += t2.after;
            den2 += t2.before;
        }
        if (den1 > 0.0) {
            CHECK(den1 == doctest::Approx(den2).epsilon(1e-12));
            CHECK(num2 / den2 <= num1 / den1 + 1e-12);
        }
    }
}

TEST_CASE("sweep on a corridor with and without a parallel bus") {
    json doc;
    doc["stations"] = json::array();
    for (const char* id : {"A", "B", "C"}) {
        doc["stations"].push_back({{"id", id}, {"name", id}, {"lat", 41.9}, {"lon", -87.6}});
    }
    doc["segments"] = {{{"id", "r-ab"}, {"from", "A"}, {"to", "B"}},
                       {{"id", "r-bc"}, {"from", "B"}, {"to", "C"}}};
    doc["lines"] = {{{"id", "rail-e"},
                     {"mode", "rail"},
                     {"stations", {"A", "B", "C"}},
                     {"segments", {"r-ab", "r-bc"}},
                     {"headway", 10.0},
                     {"capacity", 400.0},
                     {"travel_times", {5.0, 5.0}}},
                    {{"id", "rail-w"},
                     {"mode", "rail"},
                     {"stations", {"C", "B", "A"}},
                     {"segments", {"r-bc", "r-ab"}},
                     {"headway", 10.0},
                     {"capacity", 400.0},
                     {"travel_times", {5.0, 5.0}}}};
    PathFilter filter;
    SweepOptions options;
    options.threads = 2;

    SUBCASE("no alternative: blocking the only track zeroes redundancy") {
        TransitNetwork net = load_network(doc);
        auto rows = station_sweep(net, {}, filter, options);
        // one track group per station: both segments share the rail lines
        REQUIRE(rows.size() == 3);
        for (const auto& row : rows) {
            CHECK(row.redundancy == 0.0);
            CHECK_FALSE(row.vacuous);
            CHECK(row.incidents_per_year == 0.0);
        }
        CHECK(rows[0].station == "A");
        CHECK(rows[0].blocked_segments == std::vector<std::string>{"r-ab"});
        // middle station has track on both sides, joined by shared service
        CHECK(rows[1].station == "B");
        CHECK(rows[1].blocked_segments == std::vector<std::string>{"r-ab", "r-bc"});
    }

    SUBCASE("parallel bus provides measurable redundancy") {
        doc["segments"].push_back({{"id", "b-ab"}, {"from", "A"}, {"to", "B"}});
        doc["segments"].push_back({{"id", "b-bc"}, {"from", "B"}, {"to", "C"}});
        doc["lines"].push_back({{"id", "bus-e"},
                                {"mode", "bus"},
                                {"stations", {"A", "B", "C"}},
                                {"segments", {"b-ab", "b-bc"}},
                                {"headway", 15.0},
                                {"capacity", 60.0},
                                {"travel_times", {8.0, 8.0}}});
        doc["lines"].push_back({{"id", "bus-w"},
                                {"mode", "bus"},
                                {"stations", {"C", "B", "A"}},
                                {"segments", {"b-bc", "b-ab"}},
                                {"headway", 15.0},
                                {"capacity", 60.0},
                                {"travel_times", {8.0, 8.0}}});
        TransitNetwork net = load_network(doc);
        auto rows = station_sweep(net, {}, filter, options);
        REQUIRE(rows.size() == 3);

        // Hand computation for the middle-station case. Blocking either rail
        // segment removes both rail directions, so only the bus survives.
        // Per-path sums of Eq. 1 at D = 60:
        //   rail leg paths: H=10, 6 departures, every window >= L -> 6*400
        //   bus end-to-end: H=15, windows 60,45,30,15 vs L=16 -> 60*(3+15/16)
        //   bus one-hop: L=8, all 4 windows full -> 4*60
        //   rail+bus mixed one-hop pairs: H=15, C=60, L=13 -> 4*60
        double rail_thru = 6.0 * 400.0;
        double bus_ac = (3.0 + 15.0 / 16.0) * 60.0;
        double bus_ab = 4.0 * 60.0;
        double mixed = 4.0 * 60.0;
        double t_ac = rail_thru + 2.0 * mixed + bus_ac;  // rail, 2 mixes, bus
        double t_ab = rail_thru + bus_ab;
        // end-to-end ODs (A,C),(C,A) plus 4 one-hop ODs, all affected
        double before = 2.0 * t_ac + 4.0 * t_ab;
        double after = 2.0 * bus_ac + 4.0 * bus_ab;
        double expect = after / before;
        const StationSweepRow* middle = nullptr;
        for (const auto& row : rows)
            if (row.station == "B") middle = &row;
        REQUIRE(middle != nullptr);
        CHECK(middle->redundancy == doctest::Approx(expect).epsilon(1e-12));
        CHECK(middle->redundancy > 0.0);
    }
}

TEST_CASE("sweep counts only long incidents and assigns quadrants") {
    json doc = two_path_doc();
    TransitNetwork net = load_network(doc);
    std::vector<IncidentLogEntry> log;
    auto add = [&log](const std::string& station, double minutes) {
        IncidentLogEntry e;
        e.id = "i" + std::to_string(log.size());
        e.station = station;
        e.line = "p1";
        e.start = parse_timestamp("2019-01-10T08:00");
        e.end = e.start + minutes;
        log.push_back(e);
    };
    add("O", 30.0);
    add("O", 10.0);  // exactly 10 min: not counted
    add("O", 11.0);
    add("A", 5.0);

    PathFilter filter;
    SweepOptions options;
    options.log_years = 2.0;
    auto rows = station_sweep(net, log, filter, options);
    REQUIRE(!rows.empty());
    for (const auto& row : rows) {
        if (row.station == "O") CHECK(row.incidents_per_year == 1.0);  // 2 long ones over 2 years
        if (row.station == "A") CHECK(row.incidents_per_year == 0.0);
        CHECK((row.quadrant == "critical-red" || row.quadrant == "informable-yellow" ||
               row.quadrant == "prepare-blue" || row.quadrant == "low-priority-green"));
    }

    // explicit thresholds drive the quadrant corners
    SweepOptions fixed = options;
    fixed.redundancy_threshold = 2.0;  // everything is "low redundancy"
    fixed.rate_threshold = -1.0;       // everything is "high rate"
    for (const auto& row : station_sweep(net, log, filter, fixed))
        CHECK(row.quadrant == "critical-red");
}

TEST_CASE("transfer-station cross tracks sweep independently") {
    // Two rail lines crossing at X with no shared track: two separate groups.
    json doc;
    doc["stations"] = json::array();
    for (const char* id : {"N", "S", "E", "W", "X"})
        doc["stations"].push_back({{"id", id}, {"name", id}, {"lat", 41.9}, {"lon", -87.6}});
    doc["segments"] = {{{"id", "v-nx"}, {"from", "N"}, {"to", "X"}},
                       {{"id", "v-xs"}, {"from", "X"}, {"to", "S"}},
                       {{"id", "h-wx"}, {"from", "W"}, {"to", "X"}},
                       {{"id", "h-xe"}, {"from", "X"}, {"to", "E"}}};
    doc["lines"] = {{{"id", "ns"},
                     {"mode", "rail"},
                     {"stations", {"N", "X", "S"}},
                     {"segments", {"v-nx", "v-xs"}},
                     {"headway", 10.0},
                     {"capacity", 300.0},
                     {"travel_times", {4.0, 4.0}}},
                    {{"id", "we"},
                     {"mode", "rail"},
                     {"stations", {"W", "X", "E"}},
                     {"segments", {"h-wx", "h-xe"}},
                     {"headway", 12.0},
                     {"capacity", 250.0},
                     {"travel_times", {5.0, 5.0}}}};
    TransitNetwork net = load_network(doc);
    PathFilter filter;
    SweepOptions options;
    auto rows = station_sweep(net, {}, filter, options);
    int x_rows = 0;
    for (const auto& row : rows)
        if (row.station == "X") ++x_rows;
    CHECK(x_rows == 2);
    for (const auto& row : rows) {
        if (row.station != "X") continue;
        if (row.track == "h-wx")
            CHECK(row.blocked_segments == std::vector<std::string>{"h-wx", "h-xe"});
        if (row.track == "v-nx")
            CHECK(row.blocked_segments == std::vector<std::string>{"v-nx", "v-xs"});
    }
}
