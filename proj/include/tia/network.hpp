#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tia/io.hpp"
#include "tia/timeutil.hpp"

namespace tia {

enum class Mode { rail, bus };

Mode parse_mode(const std::string& text);
std::string mode_name(Mode mode);

struct Station {
    std::string id;
    std::string name;
    double lat = 0.0;
    double lon = 0.0;
    bool is_downtown = false;             ///< from the document's `downtown` section
    std::set<std::string> served_tracks;  ///< derived: segment ids incident to this station

    bool operator==(const Station&) const = default;
};

/// Blockable unit of infrastructure. Rail track between adjacent stations, or a
/// stop-to-stop running link for bus lines.
struct TrackSegment {
    std::string id;
    std::string from;
    std::string to;
    std::set<std::string> lines_using;  ///< derived: line-direction ids traversing this segment

    bool operator==(const TrackSegment&) const = default;
};

/// One direction of service on a line. Attribute granularity is per
/// line-direction, not per vehicle trip: path attributes need a single
/// headway/capacity per traversed service.
struct LineDirection {
    std::string id;
    Mode mode = Mode::rail;
    std::vector<std::string> station_sequence;
    std::vector<std::string> segment_sequence;  ///< size = stations - 1, segment k joins stations k,k+1
    double scheduled_headway = 0.0;             ///< minutes, > 0
    double vehicle_capacity = 0.0;              ///< passengers per vehicle, > 0
    std::vector<double> segment_travel_times;   ///< minutes per segment, each > 0

    bool operator==(const LineDirection&) const = default;
};

/// Declared walking connection between two stations (e.g. rail platform to
/// nearby bus stop). Transfers between lines sharing a station need no link.
struct TransferLink {
    std::string from;
    std::string to;
    double walk_time = 0.0;  ///< minutes, > 0

    bool operator==(const TransferLink&) const = default;
};

struct IncidentSpec {
    std::vector<std::string> blocked_segments;  ///< sorted, unique, non-empty
    Minutes start_time = 0.0;
    Minutes end_time = 0.0;

    double duration() const { return end_time - start_time; }

    bool operator==(const IncidentSpec&) const = default;
};

/// Immutable after load; safe for concurrent readers.
struct TransitNetwork {
    std::map<std::string, Station> stations;
    std::map<std::string, TrackSegment> segments;
    std::map<std::string, LineDirection> lines;
    std::vector<TransferLink> transfers;    ///< sorted by (from, to), pairs unique
    std::map<std::string, double> income;   ///< station id -> median annual household income

    bool operator==(const TransitNetwork&) const = default;

    const Station& station(const std::string& id) const;
    const TrackSegment& segment(const std::string& id) const;
    const LineDirection& line(const std::string& id) const;
    bool has_station(const std::string& id) const { return stations.count(id) > 0; }

    /// Stations appearing in at least one rail line-direction, sorted by id.
    std::vector<std::string> rail_stations() const;
};

/// Validates the document and derives served_tracks / lines_using / is_downtown.
/// Schema or referential-integrity failures raise errors naming the offending record.
TransitNetwork load_network(const json& doc);
TransitNetwork load_network_file(const std::string& path);

/// Inverse of load_network up to field order; reloading the result yields an
/// equal network.
json network_to_json(const TransitNetwork& net);
void save_network_file(const std::string& path, const TransitNetwork& net);

/// Incident document: {"blocked_segments": [...], "start_time": ..., "end_time": ...}.
/// Checks interval direction and non-emptiness only; segment existence is
/// checked against a network by validate_incident.
IncidentSpec load_incident(const json& doc);
IncidentSpec load_incident_file(const std::string& path);
json incident_to_json(const IncidentSpec& incident);

/// Raises integrity_error naming any blocked segment absent from the network.
void validate_incident(const TransitNetwork& net, const IncidentSpec& incident);

/// One row of the agency's historical disruption log.
struct IncidentLogEntry {
    std::string id;
    std::string station;  ///< station nearest the disruption
    std::string line;     ///< line-direction affected
    Minutes start = 0.0;
    Minutes end = 0.0;

    double duration() const { return end - start; }
};

/// CSV with columns incident_id, station_id, line_id, start_time, end_time.
/// Rows with end <= start are schema errors. Station and line references are
/// checked when a network is supplied.
std::vector<IncidentLogEntry> load_incident_log(const std::string& path,
                                                const TransitNetwork* net = nullptr);

/// Line-direction ids whose segment_sequence intersects the blocked set, sorted.
std::vector<std::string> blocked_line_directions(const TransitNetwork& net,
                                                 const IncidentSpec& incident);

} // namespace tia
