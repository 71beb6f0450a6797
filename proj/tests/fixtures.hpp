#pragma once

// Network documents shared across test suites.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "tia/network.hpp"

namespace fixtures {

using tia::json;

inline json minimal_doc() {
    return json{
        {"stations",
         {{{"id", "A"}, {"name", "Alpha"}, {"lat", 41.88}, {"lon", -87.63}},
          {{"id", "B"}, {"name", "Beta"}, {"lat", 41.90}, {"lon", -87.62}}}},
        {"segments", {{{"id", "s-ab"}, {"from", "A"}, {"to", "B"}}}},
        {"lines",
         {{{"id", "l1"},
           {"mode", "rail"},
           {"stations", {"A", "B"}},
           {"segments", {"s-ab"}},
           {"headway", 10.0},
           {"capacity", 500.0},
           {"travel_times", {4.0}}}}},
    };
}

// Two station-disjoint routes between O and D: a fast direct line (20 min) and
// a slow alternative (60 min), both with 30 min headway and capacity 200.
inline json two_path_doc() {
    json doc;
    doc["stations"] = json::array();
    for (auto [id, name] : std::vector<std::pair<std::string, std::string>>{
             {"O", "Origin"}, {"A", "Mid fast"}, {"B", "Mid slow"}, {"D", "Destination"}}) {
        doc["stations"].push_back({{"id", id}, {"name", name}, {"lat", 41.9}, {"lon", -87.6}});
    }
    doc["segments"] = {{{"id", "s-oa"}, {"from", "O"}, {"to", "A"}},
                       {{"id", "s-ad"}, {"from", "A"}, {"to", "D"}},
                       {{"id", "s-ob"}, {"from", "O"}, {"to", "B"}},
                       {{"id", "s-bd"}, {"from", "B"}, {"to", "D"}}};
    doc["lines"] = {{{"id", "p1"},
                     {"mode", "rail"},
                     {"stations", {"O", "A", "D"}},
                     {"segments", {"s-oa", "s-ad"}},
                     {"headway", 30.0},
                     {"capacity", 200.0},
                     {"travel_times", {10.0, 10.0}}},
                    {{"id", "p2"},
                     {"mode", "rail"},
                     {"stations", {"O", "B", "D"}},
                     {"segments", {"s-ob", "s-bd"}},
                     {"headway", 30.0},
                     {"capacity", 200.0},
                     {"travel_times", {30.0, 30.0}}}};
    return doc;
}

inline tia::IncidentSpec make_incident(std::vector<std::string> segments,
                                       const std::string& start = "2019-03-04T08:00",
                                       const std::string& end = "2019-03-04T09:00") {
    tia::IncidentSpec spec;
    spec.blocked_segments = std::move(segments);
    std::sort(spec.blocked_segments.begin(), spec.blocked_segments.end());
    spec.blocked_segments.erase(
        std::unique(spec.blocked_segments.begin(), spec.blocked_segments.end()),
        spec.blocked_segments.end());
    spec.start_time = tia::parse_timestamp(start);
    spec.end_time = tia::parse_timestamp(end);
    return spec;
}

// Random connected-ish document: `n_stations` stations, lines as shuffled
// station runs with shared segment ids for repeated pairs, and a few walk
// links. rng is any UniformRandomBitGenerator.
template <typename Rng>
json random_network_doc(Rng& rng, int n_stations, int n_lines, int n_transfers) {
    json doc;
    doc["stations"] = json::array();
    for (int i = 0; i < n_stations; ++i) {
        doc["stations"].push_back({{"id", "S" + std::to_string(i)},
                                   {"name", "Station " + std::to_string(i)},
                                   {"lat", 41.0 + 0.01 * i},
                                   {"lon", -87.0 - 0.01 * i}});
    }
    doc["segments"] = json::array();
    doc["lines"] = json::array();
    std::vector<std::string> seg_seen;
    for (int l = 0; l < n_lines; ++l) {
        std::vector<int> order(n_stations);
        for (int i = 0; i < n_stations; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        int len = 2 + static_cast<int>(rng() % std::min(n_stations - 1, 5));
        json stations = json::array(), segments = json::array(), times = json::array();
        for (int i = 0; i < len; ++i) stations.push_back("S" + std::to_string(order[i]));
        for (int i = 0; i + 1 < len; ++i) {
            int a = std::min(order[i], order[i + 1]);
            int b = std::max(order[i], order[i + 1]);
            std::string sid = "g" + std::to_string(a) + "-" + std::to_string(b);
            if (std::find(seg_seen.begin(), seg_seen.end(), sid) == seg_seen.end()) {
                seg_seen.push_back(sid);
                doc["segments"].push_back({{"id", sid},
                                           {"from", "S" + std::to_string(a)},
                                           {"to", "S" + std::to_string(b)}});
            }
            segments.push_back(sid);
            times.push_back(2.0 + static_cast<double>(rng() % 10));
        }
        doc["lines"].push_back({{"id", "L" + std::to_string(l)},
                                {"mode", l % 2 == 0 ? "rail" : "bus"},
                                {"stations", stations},
                                {"segments", segments},
                                {"headway", 5.0 + static_cast<double>(rng() % 20)},
                                {"capacity", 100.0 + static_cast<double>(rng() % 900)},
                                {"travel_times", times}});
    }
    doc["transfers"] = json::array();
    std::vector<std::pair<int, int>> pairs;
    while (static_cast<int>(pairs.size()) < n_transfers) {
        int a = static_cast<int>(rng() % n_stations);
        int b = static_cast<int>(rng() % n_stations);
        if (a == b) continue;
        if (std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) != pairs.end()) continue;
        pairs.push_back({a, b});
        doc["transfers"].push_back({{"from", "S" + std::to_string(a)},
                                    {"to", "S" + std::to_string(b)},
                                    {"walk_time", 1.0 + static_cast<double>(rng() % 5)}});
    }
    return doc;
}

} // namespace fixtures
