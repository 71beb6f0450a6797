#include "tia/headway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "tia/errors.hpp"

namespace tia {

std::vector<VehicleEvent> load_avl(const std::string& path, const TransitNetwork* net) {
    CsvTable table = read_csv_file(
        path, {"trip_id", "line_direction_id", "station_id", "arrival_iso8601"});
    int c_trip = table.col("trip_id"), c_line = table.col("line_direction_id");
    int c_station = table.col("station_id"), c_arrival = table.col("arrival_iso8601");
    std::vector<VehicleEvent> out;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path + " row " + std::to_string(i + 2);
        VehicleEvent ev;
        ev.trip = row[c_trip];
        ev.line = row[c_line];
        ev.station = row[c_station];
        ev.arrival = parse_timestamp(row[c_arrival]);
        if (ev.trip.empty()) throw schema_error(where + ": empty trip_id");
        if (net) {
            if (!net->lines.count(ev.line))
                throw integrity_error(where + ": unknown line '" + ev.line + "'");
            if (!net->stations.count(ev.station))
                throw integrity_error(where + ": unknown station '" + ev.station + "'");
        }
        out.push_back(std::move(ev));
    }
    if (net) {
        // strictly increasing arrivals along each trip's station sequence
        std::map<std::string, std::map<std::string, Minutes>> trips;  // trip -> station -> t
        std::map<std::string, std::string> trip_line;
        for (const auto& ev : out) {
            auto [it, fresh] = trips[ev.trip].emplace(ev.station, ev.arrival);
            if (!fresh)
                throw data_error("trip '" + ev.trip + "' observed twice at station '" +
                                 ev.station + "'");
            auto [lit, line_fresh] = trip_line.emplace(ev.trip, ev.line);
            if (!line_fresh && lit->second != ev.line)
                throw data_error("trip '" + ev.trip + "' reported on two lines");
        }
        for (const auto& [trip, stations] : trips) {
            const LineDirection& line = net->line(trip_line.at(trip));
            double last = -1.0;
            bool have_last = false;
            for (const auto& sid : line.station_sequence) {
                auto it = stations.find(sid);
                if (it == stations.end()) continue;
                if (have_last && it->second <= last)
                    throw data_error("trip '" + trip + "' arrivals not increasing at station '" +
                                     sid + "'");
                last = it->second;
                have_last = true;
            }
        }
    }
    return out;
}

namespace {

// (day, station) -> sorted arrivals with trip ids, duplicate-checked.
struct DayStationArrivals {
    std::map<std::pair<Day, std::string>, std::vector<std::pair<Minutes, std::string>>> groups;
};

DayStationArrivals group_arrivals(const std::vector<VehicleEvent>& events,
                                  const std::string& line) {
    DayStationArrivals out;
    std::set<std::pair<std::string, std::string>> seen;  // (trip, station)
    for (const auto& ev : events) {
        if (ev.line != line) continue;
        if (!seen.insert({ev.trip, ev.station}).second)
            throw data_error("duplicate event for trip '" + ev.trip + "' at station '" +
                             ev.station + "'");
        out.groups[{day_of(ev.arrival), ev.station}].push_back({ev.arrival, ev.trip});
    }
    for (auto& [key, arrivals] : out.groups) std::sort(arrivals.begin(), arrivals.end());
    return out;
}

} // namespace

std::vector<double> station_headways(const std::vector<VehicleEvent>& events,
                                     const std::string& station, const std::string& line) {
    DayStationArrivals grouped = group_arrivals(events, line);
    std::vector<double> out;
    for (const auto& [key, arrivals] : grouped.groups) {
        if (key.second != station) continue;
        for (size_t j = 0; j < arrivals.size(); ++j)
            out.push_back(j == 0 ? 0.0 : arrivals[j].first - arrivals[j - 1].first);
    }
    return out;
}

std::map<int, HeadwayCell> day_headway_cells(const std::vector<VehicleEvent>& events,
                                             const std::string& line,
                                             double interval_minutes, Day day) {
    if (interval_minutes <= 0.0) throw bad_argument_error("interval must be > 0");
    DayStationArrivals grouped = group_arrivals(events, line);
    std::map<int, HeadwayCell> cells;
    for (const auto& [key, arrivals] : grouped.groups) {
        if (key.first != day) continue;
        for (size_t j = 0; j < arrivals.size(); ++j) {
            double headway = j == 0 ? 0.0 : arrivals[j].first - arrivals[j - 1].first;
            int idx = static_cast<int>(minute_of_day(arrivals[j].first) / interval_minutes);
            HeadwayCell& cell = cells[idx];
            cell.numerator += headway;
            cell.trip_count += 1;
        }
    }
    return cells;
}

HeadwaySeries line_headway_series(const std::vector<VehicleEvent>& events,
                                  const std::string& line, double interval_minutes,
                                  Day incident_day, const std::vector<Day>& normal_days) {
    if (interval_minutes <= 0.0) throw bad_argument_error("interval must be > 0");
    HeadwaySeries series;
    series.line = line;
    series.interval_minutes = interval_minutes;
    series.incident_day = incident_day;
    series.normal_days = normal_days;
    std::sort(series.normal_days.begin(), series.normal_days.end());

    auto incident_cells = day_headway_cells(events, line, interval_minutes, incident_day);
    std::vector<std::map<int, HeadwayCell>> baseline_cells;
    for (Day d : series.normal_days)
        baseline_cells.push_back(day_headway_cells(events, line, interval_minutes, d));

    int n_intervals = static_cast<int>(std::ceil(kMinutesPerDay / interval_minutes));
    for (int idx = 0; idx < n_intervals; ++idx) {
        HeadwayRow row;
        row.interval_index = idx;
        int start_minute = static_cast<int>(idx * interval_minutes);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%02d:%02d", start_minute / 60, start_minute % 60);
        row.start = buf;

        if (auto it = incident_cells.find(idx); it != incident_cells.end()) {
            row.incident = it->second.value();
            row.incident_trips = it->second.trip_count;
        }
        std::vector<double> values;
        for (const auto& cells : baseline_cells) {
            auto it = cells.find(idx);
            if (it == cells.end()) continue;
            if (auto v = it->second.value()) values.push_back(*v);
        }
        row.baseline_days = static_cast<int>(values.size());
        if (!values.empty()) {
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= values.size();
            row.baseline_mean = mean;
            if (values.size() >= 2) {
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                row.baseline_sigma = std::sqrt(ss / (values.size() - 1));
            }
        }
        series.rows.push_back(std::move(row));
    }
    return series;
}

CsvTable headway_series_to_csv(const HeadwaySeries& series) {
    CsvTable table;
    table.header = {"interval_start", "incident_headway", "incident_trips",
                    "baseline_mean", "baseline_sigma", "baseline_days"};
    for (const auto& row : series.rows) {
        table.rows.push_back({row.start,
                              row.incident ? format_double(*row.incident) : "",
                              std::to_string(row.incident_trips),
                              row.baseline_mean ? format_double(*row.baseline_mean) : "",
                              row.baseline_sigma ? format_double(*row.baseline_sigma) : "",
                              std::to_string(row.baseline_days)});
    }
    return table;
}

} // namespace tia
