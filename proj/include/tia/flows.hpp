#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tia/network.hpp"

namespace tia {

struct TapEvent {
    std::string card;
    Minutes time = 0.0;
    std::string location;  ///< station or stop id, entry side only
    Mode mode = Mode::rail;
    std::string fare_type;  ///< "pass" or "pay-as-you-go"
    bool reduced = false;
    /// Exit station when the feed carries a precomputed destination column.
    std::optional<std::string> destination;
};

/// CSV columns: card_id, timestamp_iso8601, location_id, mode, fare_type,
/// reduced_fare; optional destination_id. `expect_day` >= 0 constrains all
/// timestamps to that service day.
std::vector<TapEvent> load_afc_file(const std::string& path, const TransitNetwork* net,
                                    Day expect_day = -1);

/// Loads <dir>/<YYYY-MM-DD>.csv for each requested day.
std::vector<TapEvent> load_afc_days(const std::string& dir, const std::vector<Day>& days,
                                    const TransitNetwork* net);

struct NormalDaySet {
    Day incident_day = 0;
    std::vector<Day> candidates;  ///< same weekday, within the lookback window
    std::vector<Day> excluded;    ///< dropped for a logged same-line incident
    std::vector<Day> days;        ///< candidates minus excluded, ascending
};

/// Same-weekday days in the `window_weeks` before the incident, dropping any
/// with a logged incident on the affected lines inside the buffered clock
/// window. Zero surviving days is an error.
NormalDaySet select_normal_days(const TransitNetwork& net, const IncidentSpec& incident,
                                const std::vector<IncidentLogEntry>& log, int window_weeks,
                                double buffer_minutes);

enum class ScopeKind { system, line, station };

struct Scope {
    ScopeKind kind = ScopeKind::station;
    std::string id;  ///< station id, line-direction id, or mode name for system
};

/// Parses "station:X", "line:Y", "system:rail", "system:bus".
Scope parse_scope(const std::string& text);
std::string scope_name(const Scope& scope);

enum class Significance { none, higher, lower, insufficient };
std::string significance_name(Significance s);

struct DemandCell {
    int interval_index = 0;
    std::string start;  ///< "HH:MM"
    double incident_count = 0.0;
    std::optional<double> baseline_mean;
    std::optional<double> baseline_sigma;  ///< sample σ, needs >= 2 days
    int baseline_days = 0;
    Significance significance = Significance::insufficient;
};

struct DemandSeries {
    Scope scope;
    double interval_minutes = 15.0;
    Day incident_day = 0;
    std::vector<Day> normal_days;
    std::vector<DemandCell> cells;  ///< full day grid
};

/// Tap-in counts per interval under a scope, with the normal-day baseline and
/// the 2σ flag. Scope membership: station = taps at that location; line = taps
/// at the line's stations in the line's mode; system = all taps of a mode.
/// Fewer than 3 baseline days yields "insufficient" flags throughout.
DemandSeries demand_series(const std::vector<TapEvent>& taps, const TransitNetwork& net,
                           const Scope& scope, Day incident_day,
                           const std::vector<Day>& normal_days, double interval_minutes);

CsvTable demand_series_to_csv(const DemandSeries& series);

struct DemandDelta {
    Scope scope;
    double delta = 0.0;  ///< Σ (incident - baseline mean) over the incident window
    int intervals = 0;   ///< grid cells overlapping the incident period
};

struct DemandDeltaReport {
    std::vector<DemandDelta> increases;  ///< delta > 0, largest first
    std::vector<DemandDelta> decreases;  ///< delta < 0, most negative first
    std::vector<DemandDelta> unchanged;  ///< delta == 0
};

/// All series must share interval length and incident day.
DemandDeltaReport demand_delta_report(const std::vector<DemandSeries>& series,
                                      const IncidentSpec& incident);

json delta_report_to_json(const DemandDeltaReport& report);

} // namespace tia
