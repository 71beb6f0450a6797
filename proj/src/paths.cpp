#include "tia/paths.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>

#include "tia/errors.hpp"

namespace tia {

namespace {

// Boarding opportunities and walk links indexed by station, built once per
// search over the (possibly degraded) line set.
struct SearchIndex {
    // station -> list of (line id, position in that line's station_sequence)
    std::map<std::string, std::vector<std::pair<std::string, size_t>>> boardings;
    // station -> list of (target station, walk minutes)
    std::map<std::string, std::vector<std::pair<std::string, double>>> walks;
    const TransitNetwork* net = nullptr;

    SearchIndex(const TransitNetwork& network, const std::set<std::string>& excluded_lines)
        : net(&network) {
        for (const auto& [id, line] : network.lines) {
            if (excluded_lines.count(id)) continue;
            for (size_t i = 0; i + 1 < line.station_sequence.size(); ++i)
                boardings[line.station_sequence[i]].push_back({id, i});
        }
        for (const auto& link : network.transfers)
            walks[link.from].push_back({link.to, link.walk_time});
    }
};

struct SearchState {
    double cost = 0.0;
    std::vector<std::string> key;  // flattened (line, board, alight) per leg
    std::vector<PathLeg> legs;
    std::set<std::string> visited;
    std::string at;  // alight station of the last leg, or the origin

    bool operator>(const SearchState& other) const {
        if (cost != other.cost) return cost > other.cost;
        return key > other.key;
    }
};

Path finish(const TransitNetwork& net, const SearchState& state) {
    Path path;
    path.legs = state.legs;
    path.transfer_count = static_cast<int>(state.legs.size()) - 1;
    path.travel_time = state.cost;
    path.headway = 0.0;
    path.capacity = std::numeric_limits<double>::infinity();
    for (const auto& leg : state.legs) {
        const LineDirection& line = net.line(leg.line);
        path.headway = std::max(path.headway, line.scheduled_headway);
        path.capacity = std::min(path.capacity, line.vehicle_capacity);
    }
    return path;
}

constexpr size_t kExpansionBudget = 5'000'000;

std::vector<Path> search(const TransitNetwork& net, const SearchIndex& index, const Od& od,
                         const PathFilter& filter) {
    if (od.origin == od.destination)
        throw bad_argument_error("origin and destination must differ");
    net.station(od.origin);
    net.station(od.destination);
    if (filter.k < 1) throw bad_argument_error("k must be >= 1");

    using Queue = std::priority_queue<SearchState, std::vector<SearchState>, std::greater<>>;
    Queue queue;
    SearchState root;
    root.at = od.origin;
    root.visited.insert(od.origin);
    queue.push(std::move(root));

    std::vector<Path> kept;
    double best = -1.0;  // L of the first kept path, anchors the detour cut
    size_t pops = 0;

    // Pushes every leg boardable at `station`, applying walk cost already paid.
    auto expand_boardings = [&](const SearchState& state, const std::string& station,
                                double extra_cost) {
        if (static_cast<int>(state.legs.size()) > filter.max_transfers)
            return;  // one more leg would exceed the transfer cap
        auto it = index.boardings.find(station);
        if (it == index.boardings.end()) return;
        for (const auto& [line_id, pos] : it->second) {
            if (!state.legs.empty() && extra_cost == 0.0 && state.legs.back().line == line_id)
                continue;  // re-boarding the ride just left is never a distinct path
            const LineDirection& line = net.line(line_id);
            double ride = 0.0;
            for (size_t j = pos + 1; j < line.station_sequence.size(); ++j) {
                ride += line.segment_travel_times[j - 1];
                const std::string& stop = line.station_sequence[j];
                // Riding through an already-visited station would loop: no
                // alighting at it or anywhere beyond it on this boarding.
                if (state.visited.count(stop)) break;
                SearchState next = state;
                next.cost += extra_cost + ride;
                if (best >= 0.0 && next.cost > filter.max_detour_ratio * best) continue;
                next.legs.push_back({line_id, station, stop});
                next.key.push_back(line_id);
                next.key.push_back(station);
                next.key.push_back(stop);
                for (size_t m = pos + 1; m <= j; ++m) next.visited.insert(line.station_sequence[m]);
                if (extra_cost > 0.0) next.visited.insert(station);
                next.at = stop;
                // States that swallowed the destination mid-ride can never finish.
                if (stop != od.destination && next.visited.count(od.destination)) continue;
                queue.push(std::move(next));
            }
        }
    };

    while (!queue.empty()) {
        if (++pops > kExpansionBudget)
            throw Error(ErrorCode::internal, "path search exceeded expansion budget");
        SearchState state = queue.top();
        queue.pop();

        if (!state.legs.empty() && state.at == od.destination) {
            if (best < 0.0) best = state.cost;
            if (state.cost > filter.max_detour_ratio * best) break;
            kept.push_back(finish(net, state));
            if (static_cast<int>(kept.size()) >= filter.k) break;
            continue;
        }

        expand_boardings(state, state.at, 0.0);
        if (!state.legs.empty()) {  // walks connect legs; no leading walk
            auto wit = index.walks.find(state.at);
            if (wit != index.walks.end()) {
                for (const auto& [target, walk_time] : wit->second) {
                    if (state.visited.count(target)) continue;
                    expand_boardings(state, target, walk_time);
                }
            }
        }
    }
    return kept;
}

} // namespace

std::vector<Path> k_shortest_paths(const TransitNetwork& net, const Od& od,
                                   const PathFilter& filter) {
    SearchIndex index(net, {});
    return search(net, index, od, filter);
}

bool path_uses_blocked_line(const Path& path, const std::vector<std::string>& blocked_lines) {
    for (const auto& leg : path.legs)
        if (std::binary_search(blocked_lines.begin(), blocked_lines.end(), leg.line))
            return true;
    return false;
}

std::map<Od, std::vector<Path>> baseline_path_sets(const TransitNetwork& net,
                                                   const std::vector<Od>& ods,
                                                   const PathFilter& filter) {
    SearchIndex full(net, {});
    std::map<Od, std::vector<Path>> out;
    for (const Od& od : ods)
        if (!out.count(od)) out.emplace(od, search(net, full, od, filter));
    return out;
}

std::map<Od, PathSet> incident_path_sets(const TransitNetwork& net,
                                         const IncidentSpec& incident,
                                         const std::map<Od, std::vector<Path>>& baselines,
                                         const PathFilter& filter) {
    std::vector<std::string> blocked = blocked_line_directions(net, incident);
    std::set<std::string> excluded(blocked.begin(), blocked.end());
    SearchIndex degraded(net, excluded);

    std::map<Od, PathSet> out;
    for (const auto& [od, baseline] : baselines) {
        PathSet set;
        set.od = od;
        set.baseline = baseline;
        for (const Path& p : set.baseline)
            if (path_uses_blocked_line(p, blocked)) set.affected = true;

        std::vector<Path> survivors;
        for (const Path& p : set.baseline)
            if (!path_uses_blocked_line(p, blocked)) survivors.push_back(p);
        std::vector<Path> fresh = search(net, degraded, od, filter);
        for (Path& p : fresh) {
            if (std::find(survivors.begin(), survivors.end(), p) == survivors.end())
                survivors.push_back(std::move(p));
        }
        std::sort(survivors.begin(), survivors.end(), [](const Path& a, const Path& b) {
            if (a.travel_time != b.travel_time) return a.travel_time < b.travel_time;
            return a.legs < b.legs;
        });
        set.incident = std::move(survivors);
        out.emplace(od, std::move(set));
    }
    return out;
}

std::map<Od, PathSet> incident_path_sets(const TransitNetwork& net,
                                         const IncidentSpec& incident,
                                         const std::vector<Od>& ods,
                                         const PathFilter& filter) {
    return incident_path_sets(net, incident, baseline_path_sets(net, ods, filter), filter);
}

} // namespace tia
