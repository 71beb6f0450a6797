#include "tia/redundancy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include "tia/errors.hpp"

namespace tia {

double path_throughput(const Path& path, double duration_minutes) {
    if (duration_minutes <= 0.0) throw bad_argument_error("duration must be > 0");
    if (path.headway <= 0.0 || path.travel_time <= 0.0 || path.capacity <= 0.0)
        throw bad_argument_error("path attributes must be > 0");
    double dispatched = std::floor(duration_minutes / path.headway);
    if (dispatched > 5e7) throw bad_argument_error("duration too large relative to headway");
    long long m = static_cast<long long>(dispatched);
    double total = 0.0;
    for (long long k = 1; k <= m; ++k) {
        double remaining = duration_minutes - static_cast<double>(k - 1) * path.headway;
        double fraction = std::min(remaining, path.travel_time) / path.travel_time;
        total += fraction * path.capacity;
    }
    return total * (60.0 / duration_minutes);
}

OdThroughput od_throughputs(const PathSet& set, double duration_minutes) {
    OdThroughput out;
    out.od = set.od;
    out.affected = set.affected;
    for (const Path& p : set.baseline) out.before += path_throughput(p, duration_minutes);
    double raw = 0.0;
    for (const Path& p : set.incident) raw += path_throughput(p, duration_minutes);
    out.after = std::min(raw, out.before);
    return out;
}

NruiValue nrui(const std::vector<OdThroughput>& rows) {
    double num = 0.0, den = 0.0;
    bool any = false;
    for (const OdThroughput& row : rows) {
        if (!row.affected) continue;
        any = true;
        num += row.after;
        den += row.before;
    }
    NruiValue out;
    if (!any || den <= 0.0) return out;  // vacuous 1.0
    out.value = num / den;
    out.vacuous = false;
    return out;
}

double od_redundancy(const PathSet& set, double duration_minutes) {
    OdThroughput t = od_throughputs(set, duration_minutes);
    if (t.before <= 0.0)
        throw data_error("OD " + set.od.origin + "->" + set.od.destination +
                         " has zero baseline throughput; R^OD undefined");
    return t.after / t.before;
}

namespace {

std::vector<Od> sorted_unique(std::vector<Od> ods) {
    std::sort(ods.begin(), ods.end());
    ods.erase(std::unique(ods.begin(), ods.end()), ods.end());
    return ods;
}

std::vector<PathThroughputRow> annotate(const std::vector<Path>& paths, double duration) {
    std::vector<PathThroughputRow> rows;
    for (const Path& p : paths) rows.push_back({p, path_throughput(p, duration)});
    return rows;
}

} // namespace

ThroughputReport throughput_report(const TransitNetwork& net, const IncidentSpec& incident,
                                   const std::vector<Od>& ods, const PathFilter& filter,
                                   double duration_minutes) {
    ThroughputReport report;
    report.duration = duration_minutes > 0.0 ? duration_minutes : incident.duration();
    report.blocked_lines = blocked_line_directions(net, incident);

    auto sets = incident_path_sets(net, incident, sorted_unique(ods), filter);
    std::vector<OdThroughput> rows;
    for (const auto& [od, set] : sets) {
        OdThroughput t = od_throughputs(set, report.duration);
        rows.push_back(t);
        OdReport od_report;
        od_report.od = od;
        od_report.affected = set.affected;
        od_report.before = t.before;
        od_report.after = t.after;
        if (t.before > 0.0) od_report.ratio = t.after / t.before;
        od_report.baseline = annotate(set.baseline, report.duration);
        od_report.incident = annotate(set.incident, report.duration);
        report.ods.push_back(std::move(od_report));
    }
    report.redundancy = nrui(rows);
    return report;
}

namespace {

json path_row_to_json(const PathThroughputRow& row) {
    json legs = json::array();
    for (const PathLeg& leg : row.path.legs)
        legs.push_back({{"line", leg.line}, {"board", leg.board}, {"alight", leg.alight}});
    return {{"legs", legs},
            {"travel_time", row.path.travel_time},
            {"headway", row.path.headway},
            {"capacity", row.path.capacity},
            {"transfers", row.path.transfer_count},
            {"throughput", row.throughput}};
}

} // namespace

json report_to_json(const ThroughputReport& report) {
    json ods = json::array();
    int affected = 0;
    for (const OdReport& od : report.ods) {
        if (od.affected) ++affected;
        json row = {{"origin", od.od.origin},
                    {"destination", od.od.destination},
                    {"affected", od.affected},
                    {"throughput_before", od.before},
                    {"throughput_after", od.after},
                    {"redundancy", od.ratio ? json(*od.ratio) : json()},
                    {"baseline_paths", json::array()},
                    {"incident_paths", json::array()}};
        for (const auto& p : od.baseline) row["baseline_paths"].push_back(path_row_to_json(p));
        for (const auto& p : od.incident) row["incident_paths"].push_back(path_row_to_json(p));
        ods.push_back(std::move(row));
    }
    return {{"duration_minutes", report.duration},
            {"nrui", report.redundancy.value},
            {"vacuous", report.redundancy.vacuous},
            {"blocked_line_directions", report.blocked_lines},
            {"od_count", report.ods.size()},
            {"affected_od_count", affected},
            {"ods", ods}};
}

namespace {

struct SweepCase {
    std::string station;
    std::string track;
    std::vector<std::string> blocked;
};

// A station's blockable units: its incident rail segments, grouped by shared
// rail service. Each group is one sweep case.
std::vector<SweepCase> sweep_cases(const TransitNetwork& net) {
    std::vector<SweepCase> cases;
    for (const auto& [sid, station] : net.stations) {
        // rail segments at this station, with the rail lines over each
        std::map<std::string, std::vector<std::string>> rail_lines_of;
        for (const auto& seg : station.served_tracks) {
            for (const auto& line_id : net.segment(seg).lines_using)
                if (net.line(line_id).mode == Mode::rail) rail_lines_of[seg].push_back(line_id);
        }
        std::map<std::string, std::string> parent;
        for (const auto& [seg, lines] : rail_lines_of)
            if (!lines.empty()) parent[seg] = seg;
        std::function<std::string(const std::string&)> find = [&](const std::string& x) {
            return parent[x] == x ? x : parent[x] = find(parent[x]);
        };
        std::map<std::string, std::string> line_anchor;
        for (const auto& [seg, lines] : rail_lines_of) {
            if (lines.empty()) continue;
            for (const auto& line_id : lines) {
                auto it = line_anchor.find(line_id);
                if (it == line_anchor.end()) line_anchor[line_id] = seg;
                else parent[find(seg)] = find(it->second);
            }
        }
        std::map<std::string, std::vector<std::string>> groups;
        for (const auto& [seg, lines] : rail_lines_of)
            if (!lines.empty()) groups[find(seg)].push_back(seg);
        for (auto& [root, members] : groups) {
            std::sort(members.begin(), members.end());
            cases.push_back({sid, members.front(), members});
        }
    }
    std::sort(cases.begin(), cases.end(), [](const SweepCase& a, const SweepCase& b) {
        return std::tie(a.station, a.track) < std::tie(b.station, b.track);
    });
    return cases;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

std::vector<StationSweepRow> station_sweep(const TransitNetwork& net,
                                           const std::vector<IncidentLogEntry>& log,
                                           const PathFilter& filter,
                                           const SweepOptions& options) {
    if (options.duration <= 0.0) throw bad_argument_error("sweep duration must be > 0");
    if (options.log_years <= 0.0) throw bad_argument_error("log_years must be > 0");

    std::vector<Od> universe;
    auto rail = net.rail_stations();
    for (const auto& o : rail)
        for (const auto& d : rail)
            if (o != d) universe.push_back({o, d});
    if (universe.empty()) throw data_error("no rail OD pairs to sweep");

    auto baselines = baseline_path_sets(net, universe, filter);
    auto cases = sweep_cases(net);

    // Qualifying incident counts per station. Only stoppages longer than 10
    // minutes count.
    std::map<std::string, int> station_counts;
    for (const auto& entry : log)
        if (entry.duration() > 10.0) ++station_counts[entry.station];

    std::vector<StationSweepRow> rows(cases.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= cases.size()) return;
            const SweepCase& c = cases[i];
            IncidentSpec incident;
            incident.blocked_segments = c.blocked;
            incident.start_time = 0.0;
            incident.end_time = options.duration;
            auto sets = incident_path_sets(net, incident, baselines, filter);
            std::vector<OdThroughput> throughputs;
            for (const auto& [od, set] : sets)
                throughputs.push_back(od_throughputs(set, options.duration));
            NruiValue value = nrui(throughputs);
            StationSweepRow& row = rows[i];
            row.station = c.station;
            row.track = c.track;
            row.blocked_segments = c.blocked;
            row.redundancy = value.value;
            row.vacuous = value.vacuous;
            auto it = station_counts.find(c.station);
            row.incidents_per_year =
                (it == station_counts.end() ? 0 : it->second) / options.log_years;
        }
    };
    unsigned n_threads = options.threads > 0
                             ? static_cast<unsigned>(options.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, static_cast<unsigned>(std::max<size_t>(cases.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<double> r_values, rate_values;
    for (const auto& row : rows) {
        r_values.push_back(row.redundancy);
        rate_values.push_back(row.incidents_per_year);
    }
    double r_cut = options.redundancy_threshold.value_or(median(r_values));
    double rate_cut = options.rate_threshold.value_or(median(rate_values));
    for (auto& row : rows) {
        bool low_r = row.redundancy < r_cut;
        bool high_rate = row.incidents_per_year > rate_cut;
        if (low_r && high_rate) row.quadrant = "critical-red";
        else if (high_rate) row.quadrant = "informable-yellow";
        else if (low_r) row.quadrant = "prepare-blue";
        else row.quadrant = "low-priority-green";
    }
    return rows;
}

} // namespace tia
