#include "tia/network.hpp"

#include <algorithm>
#include <cmath>

#include "tia/errors.hpp"

namespace tia {

Mode parse_mode(const std::string& text) {
    if (text == "rail") return Mode::rail;
    if (text == "bus") return Mode::bus;
    throw schema_error("unknown mode '" + text + "' (expected rail or bus)");
}

std::string mode_name(Mode mode) {
    return mode == Mode::rail ? "rail" : "bus";
}

const Station& TransitNetwork::station(const std::string& id) const {
    auto it = stations.find(id);
    if (it == stations.end()) throw integrity_error("unknown station '" + id + "'");
    return it->second;
}

const TrackSegment& TransitNetwork::segment(const std::string& id) const {
    auto it = segments.find(id);
    if (it == segments.end()) throw integrity_error("unknown segment '" + id + "'");
    return it->second;
}

const LineDirection& TransitNetwork::line(const std::string& id) const {
    auto it = lines.find(id);
    if (it == lines.end()) throw integrity_error("unknown line-direction '" + id + "'");
    return it->second;
}

std::vector<std::string> TransitNetwork::rail_stations() const {
    std::set<std::string> out;
    for (const auto& [id, line] : lines) {
        if (line.mode != Mode::rail) continue;
        out.insert(line.station_sequence.begin(), line.station_sequence.end());
    }
    return {out.begin(), out.end()};
}

namespace {

const json& require_key(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw schema_error(where + ": missing field '" + key + "'");
    return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_string() || v.get<std::string>().empty())
        throw schema_error(where + ": field '" + key + "' must be a non-empty string");
    return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_number()) throw schema_error(where + ": field '" + key + "' must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw schema_error(where + ": field '" + key + "' must be finite");
    return d;
}

double require_positive(const json& obj, const char* key, const std::string& where) {
    double d = require_number(obj, key, where);
    if (d <= 0.0) throw schema_error(where + ": field '" + key + "' must be > 0");
    return d;
}

std::vector<std::string> string_array(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw schema_error(where + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) throw schema_error(where + ": expected an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

Minutes timestamp_field(const json& obj, const char* key, const std::string& where) {
    return parse_timestamp(require_string(obj, key, where));
}

void validate_and_derive(TransitNetwork& net) {
    for (auto& [id, seg] : net.segments) {
        if (seg.from == seg.to)
            throw schema_error("segment '" + id + "': endpoints must be distinct");
        for (const std::string* st : {&seg.from, &seg.to}) {
            auto it = net.stations.find(*st);
            if (it == net.stations.end())
                throw integrity_error("segment '" + id + "' references unknown station '" + *st + "'");
            it->second.served_tracks.insert(id);
        }
    }

    for (auto& [id, line] : net.lines) {
        const std::string where = "line '" + id + "'";
        if (line.station_sequence.size() < 2)
            throw schema_error(where + ": needs at least 2 stations");
        if (line.segment_sequence.size() + 1 != line.station_sequence.size())
            throw schema_error(where + ": segment count must be station count - 1");
        if (line.segment_travel_times.size() != line.segment_sequence.size())
            throw schema_error(where + ": one travel time per segment required");
        std::set<std::string> seen;
        for (const auto& st : line.station_sequence) {
            if (!net.stations.count(st))
                throw integrity_error(where + " references unknown station '" + st + "'");
            if (!seen.insert(st).second)
                throw schema_error(where + ": station '" + st + "' repeats in sequence");
        }
        for (size_t k = 0; k < line.segment_sequence.size(); ++k) {
            const std::string& sid = line.segment_sequence[k];
            auto it = net.segments.find(sid);
            if (it == net.segments.end())
                throw integrity_error(where + " references unknown segment '" + sid + "'");
            const TrackSegment& seg = it->second;
            const std::string& a = line.station_sequence[k];
            const std::string& b = line.station_sequence[k + 1];
            bool joins = (seg.from == a && seg.to == b) || (seg.from == b && seg.to == a);
            if (!joins)
                throw integrity_error(where + ": segment '" + sid + "' does not join stations '" +
                                      a + "' and '" + b + "'");
            it->second.lines_using.insert(id);
            double t = line.segment_travel_times[k];
            if (!std::isfinite(t) || t <= 0.0)
                throw schema_error(where + ": travel time " + std::to_string(k) + " must be > 0");
        }
    }

    for (size_t i = 0; i < net.transfers.size(); ++i) {
        const TransferLink& link = net.transfers[i];
        const std::string where = "transfer " + link.from + "->" + link.to;
        if (link.from == link.to) throw schema_error(where + ": endpoints must be distinct");
        for (const std::string* st : {&link.from, &link.to}) {
            if (!net.stations.count(*st))
                throw integrity_error(where + " references unknown station '" + *st + "'");
        }
        if (i > 0) {
            const TransferLink& prev = net.transfers[i - 1];
            if (prev.from == link.from && prev.to == link.to)
                throw schema_error(where + ": duplicate transfer link");
        }
    }

    for (const auto& [st, value] : net.income) {
        if (!net.stations.count(st))
            throw integrity_error("income entry references unknown station '" + st + "'");
        if (!std::isfinite(value) || value < 0.0)
            throw schema_error("income for station '" + st + "' must be >= 0");
    }

    for (const std::string& st : net.rail_stations()) {
        if (net.stations.at(st).served_tracks.empty())
            throw integrity_error("rail station '" + st + "' has no incident track segments");
    }
}

} // namespace

TransitNetwork load_network(const json& doc) {
    if (!doc.is_object()) throw schema_error("network document must be a JSON object");
    TransitNetwork net;

    for (const auto& item : require_key(doc, "stations", "network")) {
        Station st;
        st.id = require_string(item, "id", "station");
        const std::string where = "station '" + st.id + "'";
        st.name = require_string(item, "name", where);
        st.lat = require_number(item, "lat", where);
        st.lon = require_number(item, "lon", where);
        if (st.lat < -90.0 || st.lat > 90.0)
            throw schema_error(where + ": lat out of range");
        if (st.lon < -180.0 || st.lon > 180.0)
            throw schema_error(where + ": lon out of range");
        if (!net.stations.emplace(st.id, st).second)
            throw schema_error(where + ": duplicate id");
    }

    for (const auto& item : require_key(doc, "segments", "network")) {
        TrackSegment seg;
        seg.id = require_string(item, "id", "segment");
        const std::string where = "segment '" + seg.id + "'";
        seg.from = require_string(item, "from", where);
        seg.to = require_string(item, "to", where);
        if (!net.segments.emplace(seg.id, seg).second)
            throw schema_error(where + ": duplicate id");
    }

    for (const auto& item : require_key(doc, "lines", "network")) {
        LineDirection line;
        line.id = require_string(item, "id", "line");
        const std::string where = "line '" + line.id + "'";
        line.mode = parse_mode(require_string(item, "mode", where));
        line.station_sequence = string_array(require_key(item, "stations", where), where + ".stations");
        line.segment_sequence = string_array(require_key(item, "segments", where), where + ".segments");
        line.scheduled_headway = require_positive(item, "headway", where);
        line.vehicle_capacity = require_positive(item, "capacity", where);
        const json& times = require_key(item, "travel_times", where);
        if (!times.is_array()) throw schema_error(where + ": travel_times must be an array");
        for (const auto& t : times) {
            if (!t.is_number()) throw schema_error(where + ": travel_times must be numbers");
            line.segment_travel_times.push_back(t.get<double>());
        }
        if (!net.lines.emplace(line.id, line).second)
            throw schema_error(where + ": duplicate id");
    }

    if (doc.contains("transfers")) {
        for (const auto& item : doc.at("transfers")) {
            TransferLink link;
            link.from = require_string(item, "from", "transfer");
            link.to = require_string(item, "to", "transfer " + link.from);
            link.walk_time = require_positive(item, "walk_time",
                                              "transfer " + link.from + "->" + link.to);
            net.transfers.push_back(link);
        }
        std::sort(net.transfers.begin(), net.transfers.end(),
                  [](const TransferLink& a, const TransferLink& b) {
                      return std::tie(a.from, a.to) < std::tie(b.from, b.to);
                  });
    }

    if (doc.contains("downtown")) {
        for (const auto& st : string_array(doc.at("downtown"), "downtown")) {
            auto it = net.stations.find(st);
            if (it == net.stations.end())
                throw integrity_error("downtown list references unknown station '" + st + "'");
            it->second.is_downtown = true;
        }
    }

    if (doc.contains("income")) {
        const json& inc = doc.at("income");
        if (!inc.is_object()) throw schema_error("income must be an object of station -> value");
        for (const auto& [st, value] : inc.items()) {
            if (!value.is_number())
                throw schema_error("income for station '" + st + "' must be a number");
            net.income[st] = value.get<double>();
        }
    }

    validate_and_derive(net);
    return net;
}

TransitNetwork load_network_file(const std::string& path) {
    return load_network(read_json_file(path));
}

json network_to_json(const TransitNetwork& net) {
    json doc;
    doc["stations"] = json::array();
    json downtown = json::array();
    for (const auto& [id, st] : net.stations) {
        doc["stations"].push_back({{"id", st.id}, {"name", st.name}, {"lat", st.lat}, {"lon", st.lon}});
        if (st.is_downtown) downtown.push_back(id);
    }
    doc["segments"] = json::array();
    for (const auto& [id, seg] : net.segments)
        doc["segments"].push_back({{"id", seg.id}, {"from", seg.from}, {"to", seg.to}});
    doc["lines"] = json::array();
    for (const auto& [id, line] : net.lines) {
        doc["lines"].push_back({{"id", line.id},
                                {"mode", mode_name(line.mode)},
                                {"stations", line.station_sequence},
                                {"segments", line.segment_sequence},
                                {"headway", line.scheduled_headway},
                                {"capacity", line.vehicle_capacity},
                                {"travel_times", line.segment_travel_times}});
    }
    doc["transfers"] = json::array();
    for (const auto& link : net.transfers)
        doc["transfers"].push_back({{"from", link.from}, {"to", link.to}, {"walk_time", link.walk_time}});
    doc["downtown"] = downtown;
    doc["income"] = json::object();
    for (const auto& [st, value] : net.income) doc["income"][st] = value;
    return doc;
}

void save_network_file(const std::string& path, const TransitNetwork& net) {
    write_json_file(path, network_to_json(net));
}

IncidentSpec load_incident(const json& doc) {
    if (!doc.is_object()) throw schema_error("incident document must be a JSON object");
    IncidentSpec spec;
    spec.blocked_segments = string_array(require_key(doc, "blocked_segments", "incident"),
                                         "incident.blocked_segments");
    std::sort(spec.blocked_segments.begin(), spec.blocked_segments.end());
    spec.blocked_segments.erase(
        std::unique(spec.blocked_segments.begin(), spec.blocked_segments.end()),
        spec.blocked_segments.end());
    if (spec.blocked_segments.empty())
        throw schema_error("incident: blocked_segments must be non-empty");
    spec.start_time = timestamp_field(doc, "start_time", "incident");
    spec.end_time = timestamp_field(doc, "end_time", "incident");
    if (!(spec.end_time > spec.start_time))
        throw schema_error("incident: end_time must be after start_time");
    return spec;
}

IncidentSpec load_incident_file(const std::string& path) {
    return load_incident(read_json_file(path));
}

json incident_to_json(const IncidentSpec& incident) {
    return {{"blocked_segments", incident.blocked_segments},
            {"start_time", format_timestamp(incident.start_time)},
            {"end_time", format_timestamp(incident.end_time)}};
}

void validate_incident(const TransitNetwork& net, const IncidentSpec& incident) {
    for (const auto& sid : incident.blocked_segments) {
        if (!net.segments.count(sid))
            throw integrity_error("incident references unknown segment '" + sid + "'");
    }
}

std::vector<IncidentLogEntry> load_incident_log(const std::string& path,
                                                const TransitNetwork* net) {
    CsvTable table = read_csv_file(
        path, {"incident_id", "station_id", "line_id", "start_time", "end_time"});
    int c_id = table.col("incident_id"), c_station = table.col("station_id");
    int c_line = table.col("line_id"), c_start = table.col("start_time");
    int c_end = table.col("end_time");
    std::vector<IncidentLogEntry> out;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path + " row " + std::to_string(i + 2);
        IncidentLogEntry entry;
        entry.id = row[c_id];
        entry.station = row[c_station];
        entry.line = row[c_line];
        entry.start = parse_timestamp(row[c_start]);
        entry.end = parse_timestamp(row[c_end]);
        if (!(entry.end > entry.start))
            throw schema_error(where + ": end_time must be after start_time");
        if (net) {
            if (!net->stations.count(entry.station))
                throw integrity_error(where + ": unknown station '" + entry.station + "'");
            if (!net->lines.count(entry.line))
                throw integrity_error(where + ": unknown line '" + entry.line + "'");
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<std::string> blocked_line_directions(const TransitNetwork& net,
                                                 const IncidentSpec& incident) {
    validate_incident(net, incident);
    std::set<std::string> blocked(incident.blocked_segments.begin(),
                                  incident.blocked_segments.end());
    std::vector<std::string> out;
    for (const auto& [id, line] : net.lines) {
        for (const auto& sid : line.segment_sequence) {
            if (blocked.count(sid)) {
                out.push_back(id);
                break;
            }
        }
    }
    return out;
}

} // namespace tia
