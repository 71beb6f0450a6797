#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "tia/errors.hpp"
#include "tia/network.hpp"

using namespace tia;
using fixtures::make_incident;
using fixtures::minimal_doc;
using fixtures::two_path_doc;

TEST_CASE("smallest legal network loads with derived adjacency") {
    TransitNetwork net = load_network(minimal_doc());
    CHECK(net.stations.size() == 2);
    CHECK(net.segments.size() == 1);
    CHECK(net.stations.at("A").served_tracks == std::set<std::string>{"s-ab"});
    CHECK(net.stations.at("B").served_tracks == std::set<std::string>{"s-ab"});
    CHECK(net.segments.at("s-ab").lines_using == std::set<std::string>{"l1"});
    CHECK(net.rail_stations() == std::vector<std::string>{"A", "B"});
}

TEST_CASE("unknown station reference is a referential-integrity error") {
    json doc = minimal_doc();
    doc["segments"][0]["to"] = "Z";
    try {
        load_network(doc);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::integrity);
        CHECK(std::string(e.what()).find("s-ab") != std::string::npos);
        CHECK(std::string(e.what()).find("Z") != std::string::npos);
    }
}

TEST_CASE("two-path example network loads with documented attributes") {
    TransitNetwork net = load_network(two_path_doc());
    CHECK(net.lines.size() == 2);
    for (const auto& [id, line] : net.lines) {
        CHECK(line.scheduled_headway == 30.0);
        CHECK(line.vehicle_capacity == 200.0);
    }
    double l1 = 0.0, l2 = 0.0;
    for (double t : net.lines.at("p1").segment_travel_times) l1 += t;
    for (double t : net.lines.at("p2").segment_travel_times) l2 += t;
    CHECK(l1 == 20.0);
    CHECK(l2 == 60.0);
}

TEST_CASE("schema violations name the offending record") {
    json doc = minimal_doc();
    doc["lines"][0]["travel_times"] = {4.0, 5.0};
    try {
        load_network(doc);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::schema);
        CHECK(std::string(e.what()).find("l1") != std::string::npos);
    }

    json dup = minimal_doc();
    dup["stations"].push_back(dup["stations"][0]);
    CHECK_THROWS_AS(load_network(dup), Error);

    json badlat = minimal_doc();
    badlat["stations"][0]["lat"] = 123.0;
    CHECK_THROWS_AS(load_network(badlat), Error);

    json zerohw = minimal_doc();
    zerohw["lines"][0]["headway"] = 0.0;
    CHECK_THROWS_AS(load_network(zerohw), Error);

    json loop = two_path_doc();
    loop["lines"][0]["stations"] = {"O", "A", "O"};
    CHECK_THROWS_AS(load_network(loop), Error);
}

TEST_CASE("serialization round-trips to an equal network") {
    json doc = two_path_doc();
    doc["transfers"] = {{{"from", "A"}, {"to", "B"}, {"walk_time", 5.0}}};
    doc["downtown"] = {"D"};
    doc["income"] = {{"O", 54000.0}, {"B", 130000.0}};
    TransitNetwork net = load_network(doc);
    TransitNetwork again = load_network(network_to_json(net));
    CHECK(net == again);
    CHECK(again.stations.at("D").is_downtown);
    CHECK(again.income.at("B") == 130000.0);
}

TEST_CASE("incident document basics") {
    IncidentSpec spec = load_incident(json{{"blocked_segments", {"s-ab", "s-ab"}},
                                           {"start_time", "2019-03-04T08:00"},
                                           {"end_time", "2019-03-04T09:00"}});
    CHECK(spec.blocked_segments == std::vector<std::string>{"s-ab"});
    CHECK(spec.duration() == doctest::Approx(60.0));
    IncidentSpec back = load_incident(incident_to_json(spec));
    CHECK(back == spec);

    CHECK_THROWS_AS(load_incident(json{{"blocked_segments", json::array()},
                                       {"start_time", "2019-03-04T08:00"},
                                       {"end_time", "2019-03-04T09:00"}}),
                    Error);
    CHECK_THROWS_AS(load_incident(json{{"blocked_segments", {"s"}},
                                       {"start_time", "2019-03-04T09:00"},
                                       {"end_time", "2019-03-04T08:00"}}),
                    Error);
}

TEST_CASE("blocked_line_directions basic cases") {
    json doc = two_path_doc();
    // A bus line sharing segment s-oa with rail p1, plus a bus-only link.
    doc["lines"].push_back({{"id", "bus1"},
                            {"mode", "bus"},
                            {"stations", {"O", "A"}},
                            {"segments", {"s-oa"}},
                            {"headway", 12.0},
                            {"capacity", 60.0},
                            {"travel_times", {15.0}}});
    doc["segments"].push_back({{"id", "s-bd-bus"}, {"from", "B"}, {"to", "D"}});
    doc["lines"].push_back({{"id", "bus2"},
                            {"mode", "bus"},
                            {"stations", {"B", "D"}},
                            {"segments", {"s-bd-bus"}},
                            {"headway", 12.0},
                            {"capacity", 60.0},
                            {"travel_times", {18.0}}});
    TransitNetwork net = load_network(doc);

    auto shared = blocked_line_directions(net, make_incident({"s-oa"}));
    CHECK(shared == std::vector<std::string>{"bus1", "p1"});

    auto bus_only = blocked_line_directions(net, make_incident({"s-bd-bus"}));
    CHECK(bus_only == std::vector<std::string>{"bus2"});
    for (const auto& id : bus_only) CHECK(net.line(id).mode == Mode::bus);

    CHECK_THROWS_AS(blocked_line_directions(net, make_incident({"nope"})), Error);
}

TEST_CASE("blocked_line_directions matches brute-force scan on random networks") {
    std::mt19937 rng(20190304);
    for (int trial = 0; trial < 25; ++trial) {
        int n_stations = 6 + static_cast<int>(rng() % 6);
        int n_lines = 2 + static_cast<int>(rng() % 4);
        json doc = fixtures::random_network_doc(rng, n_stations, n_lines, 0);
        TransitNetwork net = load_network(doc);

        std::vector<std::string> all_segments;
        for (const auto& [id, seg] : net.segments) all_segments.push_back(id);
        std::vector<std::string> blocked;
        for (const auto& sid : all_segments)
            if (rng() % 3 == 0) blocked.push_back(sid);
        if (blocked.empty()) blocked.push_back(all_segments.front());

        auto got = blocked_line_directions(net, make_incident(blocked));

        // Oracle: scan every line's segment list directly.
        std::vector<std::string> expect;
        for (const auto& [id, line] : net.lines) {
            bool hit = false;
            for (const auto& sid : line.segment_sequence)
                for (const auto& b : blocked)
                    if (sid == b) hit = true;
            if (hit) expect.push_back(id);
        }
        CHECK(got == expect);

        // Monotone: adding one more blocked segment never shrinks the set.
        for (const auto& extra : all_segments) {
            auto grown = blocked;
            grown.push_back(extra);
            auto got2 = blocked_line_directions(net, make_incident(grown));
            CHECK(std::includes(got2.begin(), got2.end(), got.begin(), got.end()));
        }
    }
}
