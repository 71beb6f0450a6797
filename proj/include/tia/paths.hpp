#pragma once

#include <map>
#include <string>
#include <vector>

#include "tia/network.hpp"

namespace tia {

/// One contiguous ride: board `board`, stay on `line`, alight at `alight`.
struct PathLeg {
    std::string line;
    std::string board;
    std::string alight;

    bool operator==(const PathLeg&) const = default;
    auto operator<=>(const PathLeg&) const = default;
};

/// A simple (loop-free) itinerary. Attribute conventions follow the throughput
/// model: headway is the worst leg, capacity the tightest leg, travel_time the
/// in-vehicle sum plus declared transfer walk times.
struct Path {
    std::vector<PathLeg> legs;
    int transfer_count = 0;     ///< legs - 1
    double headway = 0.0;       ///< H_p, minutes
    double capacity = 0.0;      ///< C_p, passengers per vehicle
    double travel_time = 0.0;   ///< L_p, minutes

    bool operator==(const Path& other) const { return legs == other.legs; }
};

struct PathFilter {
    int k = 5;
    int max_transfers = 3;
    double max_detour_ratio = 3.0;  ///< vs the shortest path that passes the transfer cap
};

struct Od {
    std::string origin;
    std::string destination;

    bool operator==(const Od&) const = default;
    auto operator<=>(const Od&) const = default;
};

struct PathSet {
    Od od;
    std::vector<Path> baseline;  ///< P_w, on the intact network
    std::vector<Path> incident;  ///< P̃_w, never touches a blocked line-direction
    bool affected = false;       ///< OD ∈ W_I: some baseline path uses a blocked line
};

/// Enumerates up to filter.k loop-free paths in ascending (travel_time, leg-id
/// sequence) order. Paths over the transfer cap are skipped; the first kept
/// path anchors the detour-ratio cut. No path at all yields an empty list.
/// Unknown stations or origin == destination are errors.
std::vector<Path> k_shortest_paths(const TransitNetwork& net, const Od& od,
                                   const PathFilter& filter);

/// Baseline and degraded path sets per OD. The degraded network drops every
/// blocked line-direction entirely; surviving baseline paths are kept and
/// augmented with a fresh search, so P̃_w ⊇ (P_w minus blocked paths).
std::map<Od, PathSet> incident_path_sets(const TransitNetwork& net,
                                         const IncidentSpec& incident,
                                         const std::vector<Od>& ods,
                                         const PathFilter& filter);

/// Same, reusing baseline path lists computed once (the sweep re-blocks the
/// same network hundreds of times; baselines never change).
std::map<Od, PathSet> incident_path_sets(const TransitNetwork& net,
                                         const IncidentSpec& incident,
                                         const std::map<Od, std::vector<Path>>& baselines,
                                         const PathFilter& filter);

/// Baselines in the shape the overload above wants.
std::map<Od, std::vector<Path>> baseline_path_sets(const TransitNetwork& net,
                                                   const std::vector<Od>& ods,
                                                   const PathFilter& filter);

/// True if some leg of `path` rides a line in `blocked_lines` (sorted vector).
bool path_uses_blocked_line(const Path& path, const std::vector<std::string>& blocked_lines);

} // namespace tia
