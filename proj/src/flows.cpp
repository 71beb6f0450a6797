#include "tia/flows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "tia/errors.hpp"

namespace tia {

namespace {

bool parse_bool_cell(const std::string& cell, const std::string& context) {
    if (cell == "true" || cell == "1") return true;
    if (cell == "false" || cell == "0") return false;
    throw schema_error(context + ": bad boolean '" + cell + "'");
}

} // namespace

std::vector<TapEvent> load_afc_file(const std::string& path, const TransitNetwork* net,
                                    Day expect_day) {
    CsvTable table = read_csv_file(path, {"card_id", "timestamp_iso8601", "location_id",
                                          "mode", "fare_type", "reduced_fare"});
    int c_card = table.col("card_id"), c_time = table.col("timestamp_iso8601");
    int c_loc = table.col("location_id"), c_mode = table.col("mode");
    int c_fare = table.col("fare_type"), c_red = table.col("reduced_fare");
    int c_dest = table.col("destination_id");
    std::vector<TapEvent> out;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path + " row " + std::to_string(i + 2);
        TapEvent tap;
        tap.card = row[c_card];
        tap.time = parse_timestamp(row[c_time]);
        tap.location = row[c_loc];
        tap.mode = parse_mode(row[c_mode]);
        tap.fare_type = row[c_fare];
        if (tap.fare_type != "pass" && tap.fare_type != "pay-as-you-go")
            throw schema_error(where + ": bad fare_type '" + tap.fare_type + "'");
        tap.reduced = parse_bool_cell(row[c_red], where);
        if (c_dest >= 0 && !row[c_dest].empty()) tap.destination = row[c_dest];
        if (tap.card.empty()) throw schema_error(where + ": empty card_id");
        if (expect_day >= 0 && day_of(tap.time) != expect_day)
            throw schema_error(where + ": timestamp outside day " + format_date(expect_day));
        if (net) {
            if (!net->stations.count(tap.location))
                throw integrity_error(where + ": unknown location '" + tap.location + "'");
            if (tap.destination && !net->stations.count(*tap.destination))
                throw integrity_error(where + ": unknown destination '" + *tap.destination + "'");
        }
        out.push_back(std::move(tap));
    }
    return out;
}

std::vector<TapEvent> load_afc_days(const std::string& dir, const std::vector<Day>& days,
                                    const TransitNetwork* net) {
    std::vector<Day> sorted(days);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<TapEvent> out;
    for (Day d : sorted) {
        auto taps = load_afc_file(dir + "/" + format_date(d) + ".csv", net, d);
        out.insert(out.end(), std::make_move_iterator(taps.begin()),
                   std::make_move_iterator(taps.end()));
    }
    return out;
}

NormalDaySet select_normal_days(const TransitNetwork& net, const IncidentSpec& incident,
                                const std::vector<IncidentLogEntry>& log, int window_weeks,
                                double buffer_minutes) {
    if (window_weeks < 1) throw bad_argument_error("window must be >= 1 week");
    if (buffer_minutes < 0.0) throw bad_argument_error("buffer must be >= 0");

    NormalDaySet out;
    out.incident_day = day_of(incident.start_time);
    auto affected = blocked_line_directions(net, incident);
    std::set<std::string> affected_set(affected.begin(), affected.end());

    // incident clock window relative to its own day, reused on candidate days
    double start_offset = incident.start_time - day_start(out.incident_day);
    double end_offset = incident.end_time - day_start(out.incident_day);

    for (int w = window_weeks; w >= 1; --w)
        out.candidates.push_back(out.incident_day - 7 * w);

    for (Day d : out.candidates) {
        double win_start = day_start(d) + start_offset - buffer_minutes;
        double win_end = day_start(d) + end_offset + buffer_minutes;
        bool hit = false;
        for (const auto& entry : log) {
            if (!affected_set.count(entry.line)) continue;
            if (entry.start < win_end && entry.end > win_start) {
                hit = true;
                break;
            }
        }
        if (hit) out.excluded.push_back(d);
        else out.days.push_back(d);
    }
    if (out.days.empty())
        throw data_error("no qualifying normal day within " + std::to_string(window_weeks) +
                         " weeks of " + format_date(out.incident_day));
    return out;
}

Scope parse_scope(const std::string& text) {
    auto pos = text.find(':');
    if (pos == std::string::npos)
        throw bad_argument_error("scope must look like kind:id, got '" + text + "'");
    std::string kind = text.substr(0, pos);
    Scope scope;
    scope.id = text.substr(pos + 1);
    if (scope.id.empty()) throw bad_argument_error("scope id missing in '" + text + "'");
    if (kind == "station") scope.kind = ScopeKind::station;
    else if (kind == "line") scope.kind = ScopeKind::line;
    else if (kind == "system") {
        scope.kind = ScopeKind::system;
        parse_mode(scope.id);  // id must be a mode name
    } else {
        throw bad_argument_error("unknown scope kind '" + kind + "'");
    }
    return scope;
}

std::string scope_name(const Scope& scope) {
    switch (scope.kind) {
        case ScopeKind::system: return "system:" + scope.id;
        case ScopeKind::line: return "line:" + scope.id;
        case ScopeKind::station: break;
    }
    return "station:" + scope.id;
}

std::string significance_name(Significance s) {
    switch (s) {
        case Significance::none: return "normal";
        case Significance::higher: return "higher";
        case Significance::lower: return "lower";
        case Significance::insufficient: break;
    }
    return "insufficient baseline";
}

namespace {

// True if `tap` belongs to the scope's aggregate.
struct ScopeMatcher {
    const TransitNetwork& net;
    const Scope& scope;
    std::set<std::string> line_stations;
    Mode mode = Mode::rail;

    ScopeMatcher(const TransitNetwork& n, const Scope& s) : net(n), scope(s) {
        switch (scope.kind) {
            case ScopeKind::station:
                net.station(scope.id);
                break;
            case ScopeKind::line: {
                const LineDirection& line = net.line(scope.id);
                mode = line.mode;
                line_stations.insert(line.station_sequence.begin(),
                                     line.station_sequence.end());
                break;
            }
            case ScopeKind::system:
                mode = parse_mode(scope.id);
                break;
        }
    }

    bool operator()(const TapEvent& tap) const {
        switch (scope.kind) {
            case ScopeKind::station: return tap.location == scope.id;
            case ScopeKind::line: return tap.mode == mode && line_stations.count(tap.location);
            case ScopeKind::system: return tap.mode == mode;
        }
        return false;
    }
};

} // namespace

DemandSeries demand_series(const std::vector<TapEvent>& taps, const TransitNetwork& net,
                           const Scope& scope, Day incident_day,
                           const std::vector<Day>& normal_days, double interval_minutes) {
    if (interval_minutes <= 0.0) throw bad_argument_error("interval must be > 0");
    DemandSeries series;
    series.scope = scope;
    series.interval_minutes = interval_minutes;
    series.incident_day = incident_day;
    series.normal_days = normal_days;
    std::sort(series.normal_days.begin(), series.normal_days.end());
    series.normal_days.erase(
        std::unique(series.normal_days.begin(), series.normal_days.end()),
        series.normal_days.end());

    ScopeMatcher matches(net, scope);
    int n_intervals = static_cast<int>(std::ceil(kMinutesPerDay / interval_minutes));
    std::vector<double> incident_counts(n_intervals, 0.0);
    std::map<Day, std::vector<double>> baseline_counts;
    for (Day d : series.normal_days) baseline_counts[d].assign(n_intervals, 0.0);

    for (const TapEvent& tap : taps) {
        if (!matches(tap)) continue;
        Day d = day_of(tap.time);
        int idx = static_cast<int>(minute_of_day(tap.time) / interval_minutes);
        if (idx < 0 || idx >= n_intervals) continue;
        if (d == incident_day) incident_counts[idx] += 1.0;
        else if (auto it = baseline_counts.find(d); it != baseline_counts.end())
            it->second[idx] += 1.0;
    }

    int n_days = static_cast<int>(series.normal_days.size());
    for (int idx = 0; idx < n_intervals; ++idx) {
        DemandCell cell;
        cell.interval_index = idx;
        int start_minute = static_cast<int>(idx * interval_minutes);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%02d:%02d", start_minute / 60, start_minute % 60);
        cell.start = buf;
        cell.incident_count = incident_counts[idx];
        cell.baseline_days = n_days;
        if (n_days >= 1) {
            double mean = 0.0;
            for (const auto& [d, counts] : baseline_counts) mean += counts[idx];
            mean /= n_days;
            cell.baseline_mean = mean;
            if (n_days >= 2) {
                double ss = 0.0;
                for (const auto& [d, counts] : baseline_counts)
                    ss += (counts[idx] - mean) * (counts[idx] - mean);
                cell.baseline_sigma = std::sqrt(ss / (n_days - 1));
            }
        }
        if (n_days < 3) {
            cell.significance = Significance::insufficient;
        } else {
            double dev = cell.incident_count - *cell.baseline_mean;
            if (std::abs(dev) > 2.0 * *cell.baseline_sigma)
                cell.significance = dev > 0.0 ? Significance::higher : Significance::lower;
            else
                cell.significance = Significance::none;
        }
        series.cells.push_back(std::move(cell));
    }
    return series;
}

CsvTable demand_series_to_csv(const DemandSeries& series) {
    CsvTable table;
    table.header = {"interval_start", "incident_count", "baseline_mean",
                    "baseline_sigma", "baseline_days", "significance"};
    for (const auto& cell : series.cells) {
        table.rows.push_back({cell.start,
                              format_double(cell.incident_count),
                              cell.baseline_mean ? format_double(*cell.baseline_mean) : "",
                              cell.baseline_sigma ? format_double(*cell.baseline_sigma) : "",
                              std::to_string(cell.baseline_days),
                              significance_name(cell.significance)});
    }
    return table;
}

DemandDeltaReport demand_delta_report(const std::vector<DemandSeries>& series,
                                      const IncidentSpec& incident) {
    DemandDeltaReport report;
    std::vector<DemandDelta> all;
    for (const DemandSeries& s : series) {
        if (!s.cells.empty() && !series.empty()) {
            if (s.interval_minutes != series.front().interval_minutes ||
                s.incident_day != series.front().incident_day)
                throw bad_argument_error("series must share interval grid and incident day");
        }
        DemandDelta delta;
        delta.scope = s.scope;
        for (const auto& cell : s.cells) {
            double int_start = day_start(s.incident_day) +
                               cell.interval_index * s.interval_minutes;
            double int_end = int_start + s.interval_minutes;
            if (!(int_start < incident.end_time && int_end > incident.start_time)) continue;
            ++delta.intervals;
            if (cell.baseline_mean)
                delta.delta += cell.incident_count - *cell.baseline_mean;
            else
                delta.delta += cell.incident_count;
        }
        all.push_back(std::move(delta));
    }
    std::stable_sort(all.begin(), all.end(), [](const DemandDelta& a, const DemandDelta& b) {
        return a.delta > b.delta;
    });
    for (auto& d : all) {
        if (d.delta > 0.0) report.increases.push_back(d);
        else if (d.delta < 0.0) report.decreases.push_back(d);
        else report.unchanged.push_back(d);
    }
    std::stable_sort(report.decreases.begin(), report.decreases.end(),
                     [](const DemandDelta& a, const DemandDelta& b) { return a.delta < b.delta; });
    return report;
}

json delta_report_to_json(const DemandDeltaReport& report) {
    auto rows = [](const std::vector<DemandDelta>& deltas) {
        json out = json::array();
        for (const auto& d : deltas)
            out.push_back({{"scope", scope_name(d.scope)},
                           {"delta", d.delta},
                           {"intervals", d.intervals}});
        return out;
    };
    return {{"increases", rows(report.increases)},
            {"decreases", rows(report.decreases)},
            {"unchanged", rows(report.unchanged)}};
}

} // namespace tia
