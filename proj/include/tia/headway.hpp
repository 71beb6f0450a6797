#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tia/network.hpp"

namespace tia {

struct VehicleEvent {
    std::string trip;
    std::string line;
    std::string station;
    Minutes arrival = 0.0;
};

/// CSV with columns trip_id, line_direction_id, station_id, arrival_iso8601.
/// With a network: references must resolve and each trip's arrivals must be
/// strictly increasing along its line's station sequence.
std::vector<VehicleEvent> load_avl(const std::string& path,
                                   const TransitNetwork* net = nullptr);

/// Observed headways H_{i,j} at one station of one line, in arrival order.
/// Each service day restarts the sequence: the day's first trip gets 0.
/// Duplicate (trip, station) observations are data errors.
std::vector<double> station_headways(const std::vector<VehicleEvent>& events,
                                     const std::string& station,
                                     const std::string& line);

/// One (line, interval) aggregation cell for a single day.
struct HeadwayCell {
    double numerator = 0.0;  ///< Σ_i Σ_{j∈R_{i,τ}} H_{i,j}
    int trip_count = 0;      ///< Σ_i |R_{i,τ}|

    /// Mean headway; absent when the verbatim denominator (trip_count - 1)
    /// is not positive, i.e. the interval effectively saw no service.
    std::optional<double> value() const {
        if (trip_count <= 1) return std::nullopt;
        return numerator / (trip_count - 1);
    }
};

/// Per-interval cells for `line` on `day`. Interval index = arrival minute of
/// day / interval_minutes. Only intervals with arrivals appear.
std::map<int, HeadwayCell> day_headway_cells(const std::vector<VehicleEvent>& events,
                                             const std::string& line,
                                             double interval_minutes, Day day);

struct HeadwayRow {
    int interval_index = 0;
    std::string start;  ///< "HH:MM" start of the interval
    std::optional<double> incident;  ///< H_{l,τ} on the incident day
    int incident_trips = 0;
    std::optional<double> baseline_mean;
    std::optional<double> baseline_sigma;  ///< sample σ, needs >= 2 day values
    int baseline_days = 0;  ///< normal days with a defined value in this interval
};

struct HeadwaySeries {
    std::string line;
    double interval_minutes = 15.0;
    Day incident_day = 0;
    std::vector<Day> normal_days;
    std::vector<HeadwayRow> rows;  ///< full day grid, one row per interval
};

HeadwaySeries line_headway_series(const std::vector<VehicleEvent>& events,
                                  const std::string& line, double interval_minutes,
                                  Day incident_day, const std::vector<Day>& normal_days);

/// Plot-ready table: one row per interval with the baseline band columns.
CsvTable headway_series_to_csv(const HeadwaySeries& series);

} // namespace tia
