// Python extension module. The boundary speaks JSON strings and file paths;
// the pure-python package layered on top converts to and from dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include "tia/behavior.hpp"
#include "tia/errors.hpp"
#include "tia/flows.hpp"
#include "tia/headway.hpp"
#include "tia/io.hpp"
#include "tia/logit.hpp"
#include "tia/network.hpp"
#include "tia/paths.hpp"
#include "tia/pipeline.hpp"
#include "tia/redundancy.hpp"
#include "tia/synth.hpp"
#include "tia/timeutil.hpp"

namespace py = pybind11;
using namespace tia;

namespace {

json parse_doc(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::schema, std::string("invalid JSON document: ") + e.what());
    }
}

PathFilter make_filter(int k, int max_transfers, double max_detour_ratio) {
    PathFilter filter;
    filter.k = k;
    filter.max_transfers = max_transfers;
    filter.max_detour_ratio = max_detour_ratio;
    return filter;
}

std::vector<Day> parse_days(const std::vector<std::string>& dates) {
    std::vector<Day> days;
    days.reserve(dates.size());
    for (const std::string& d : dates) days.push_back(parse_date(d));
    return days;
}

json headway_series_doc(const HeadwaySeries& series) {
    json rows = json::array();
    for (const HeadwayRow& row : series.rows) {
        json r{{"interval_index", row.interval_index},
               {"start", row.start},
               {"incident", nullptr},
               {"incident_trips", row.incident_trips},
               {"baseline_mean", nullptr},
               {"baseline_sigma", nullptr},
               {"baseline_days", row.baseline_days}};
        if (row.incident) r["incident"] = *row.incident;
        if (row.baseline_mean) r["baseline_mean"] = *row.baseline_mean;
        if (row.baseline_sigma) r["baseline_sigma"] = *row.baseline_sigma;
        rows.push_back(std::move(r));
    }
    return json{{"line", series.line},
                {"interval_minutes", series.interval_minutes},
                {"incident_day", format_date(series.incident_day)},
                {"rows", std::move(rows)}};
}

json demand_series_doc(const DemandSeries& series) {
    json rows = json::array();
    for (const DemandCell& cell : series.cells) {
        json r{{"interval_index", cell.interval_index},
               {"start", cell.start},
               {"incident_count", cell.incident_count},
               {"baseline_mean", nullptr},
               {"baseline_sigma", nullptr},
               {"baseline_days", cell.baseline_days},
               {"significance", significance_name(cell.significance)}};
        if (cell.baseline_mean) r["baseline_mean"] = *cell.baseline_mean;
        if (cell.baseline_sigma) r["baseline_sigma"] = *cell.baseline_sigma;
        rows.push_back(std::move(r));
    }
    return json{{"scope", scope_name(series.scope)}, {"cells", std::move(rows)}};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Transit incident analytics core";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.code()) {
                case ErrorCode::missing_input:
                    PyErr_SetString(PyExc_FileNotFoundError, e.what());
                    break;
                case ErrorCode::bad_argument:
                case ErrorCode::schema:
                case ErrorCode::integrity:
                case ErrorCode::data:
                    PyErr_SetString(PyExc_ValueError, e.what());
                    break;
                default:
                    PyErr_SetString(PyExc_RuntimeError, e.what());
            }
        }
    });

    m.def(
        "path_throughput",
        [](double headway, double capacity, double travel_time, double duration) {
            Path path;
            path.legs = {{"x", "a", "b"}};
            path.headway = headway;
            path.capacity = capacity;
            path.travel_time = travel_time;
            return path_throughput(path, duration);
        },
        py::arg("headway"), py::arg("capacity"), py::arg("travel_time"), py::arg("duration"),
        "Hourly passengers a single path can move during a disruption window.");

    m.def(
        "throughput_report",
        [](const std::string& network_doc, const std::string& incident_doc,
           const std::vector<std::pair<std::string, std::string>>& ods, int k, int max_transfers,
           double max_detour_ratio, double buffer_minutes) {
            TransitNetwork net = load_network(parse_doc(network_doc));
            IncidentSpec incident = load_incident(parse_doc(incident_doc));
            validate_incident(net, incident);
            std::vector<Od> list;
            list.reserve(ods.size());
            for (const auto& [origin, destination] : ods) list.push_back({origin, destination});
            ThroughputReport report = throughput_report(
                net, incident, list, make_filter(k, max_transfers, max_detour_ratio),
                buffer_minutes);
            return report_to_json(report).dump();
        },
        py::arg("network"), py::arg("incident"), py::arg("ods"), py::arg("k") = 5,
        py::arg("max_transfers") = 3, py::arg("max_detour_ratio") = 3.0,
        py::arg("buffer_minutes") = 0.0,
        "Per-OD before/after throughput and the redundancy index, as JSON.");

    m.def(
        "station_sweep",
        [](const std::string& network_doc, const std::string& incident_log_path, int k,
           int max_transfers, double max_detour_ratio, double duration, double log_years,
           int threads) {
            TransitNetwork net = load_network(parse_doc(network_doc));
            std::vector<IncidentLogEntry> log = load_incident_log(incident_log_path);
            SweepOptions options;
            options.duration = duration;
            options.log_years = log_years;
            options.threads = threads;
            std::vector<StationSweepRow> rows = station_sweep(
                net, log, make_filter(k, max_transfers, max_detour_ratio), options);
            json doc = json::array();
            for (const StationSweepRow& row : rows)
                doc.push_back({{"station", row.station},
                               {"track", row.track},
                               {"blocked_segments", row.blocked_segments},
                               {"redundancy", row.redundancy},
                               {"vacuous", row.vacuous},
                               {"incidents_per_year", row.incidents_per_year},
                               {"quadrant", row.quadrant}});
            return doc.dump();
        },
        py::arg("network"), py::arg("incident_log"), py::arg("k") = 5,
        py::arg("max_transfers") = 3, py::arg("max_detour_ratio") = 3.0,
        py::arg("duration") = 60.0, py::arg("log_years") = 1.0, py::arg("threads") = 0,
        "Hypothetical per-station blockage scores with quadrant labels, as JSON.");

    m.def(
        "select_normal_days",
        [](const std::string& network_doc, const std::string& incident_doc,
           const std::string& incident_log_path, int window_weeks, double buffer_minutes) {
            TransitNetwork net = load_network(parse_doc(network_doc));
            IncidentSpec incident = load_incident(parse_doc(incident_doc));
            validate_incident(net, incident);
            std::vector<IncidentLogEntry> log = load_incident_log(incident_log_path);
            NormalDaySet set = select_normal_days(net, incident, log, window_weeks,
                                                  buffer_minutes);
            auto dates = [](const std::vector<Day>& days) {
                json out = json::array();
                for (Day d : days) out.push_back(format_date(d));
                return out;
            };
            return json{{"incident_day", format_date(set.incident_day)},
                        {"candidates", dates(set.candidates)},
                        {"excluded", dates(set.excluded)},
                        {"days", dates(set.days)}}
                .dump();
        },
        py::arg("network"), py::arg("incident"), py::arg("incident_log"),
        py::arg("window_weeks") = 8, py::arg("buffer_minutes") = 60.0,
        "Same-weekday baseline days before the incident, minus logged-incident days.");

    m.def(
        "headway_series",
        [](const std::string& avl_path, const std::string& line, double interval_minutes,
           const std::string& incident_date, const std::vector<std::string>& normal_dates) {
            std::vector<VehicleEvent> events = load_avl(avl_path);
            HeadwaySeries series = line_headway_series(events, line, interval_minutes,
                                                       parse_date(incident_date),
                                                       parse_days(normal_dates));
            return headway_series_doc(series).dump();
        },
        py::arg("avl"), py::arg("line"), py::arg("interval_minutes"), py::arg("incident_date"),
        py::arg("normal_dates"),
        "Interval headways on the incident day against the baseline band, as JSON.");

    m.def(
        "demand_report",
        [](const std::string& network_doc, const std::string& afc_dir,
           const std::string& incident_doc, const std::string& scope,
           const std::vector<std::string>& normal_dates, double interval_minutes) {
            TransitNetwork net = load_network(parse_doc(network_doc));
            IncidentSpec incident = load_incident(parse_doc(incident_doc));
            validate_incident(net, incident);
            Day incident_day = day_of(incident.start_time);
            std::vector<Day> days = parse_days(normal_dates);
            std::vector<Day> wanted = days;
            wanted.push_back(incident_day);
            std::vector<TapEvent> taps = load_afc_days(afc_dir, wanted, &net);
            DemandSeries series = demand_series(taps, net, parse_scope(scope), incident_day,
                                                days, interval_minutes);
            DemandDeltaReport deltas = demand_delta_report({series}, incident);
            return json{{"series", demand_series_doc(series)},
                        {"deltas", delta_report_to_json(deltas)}}
                .dump();
        },
        py::arg("network"), py::arg("afc"), py::arg("incident"), py::arg("scope"),
        py::arg("normal_dates"), py::arg("interval_minutes") = 15.0,
        "Tap-in counts for one scope with 2-sigma significance and deltas, as JSON.");

    m.def(
        "fit_observations",
        [](const std::string& observations_path, const std::vector<std::string>& features) {
            std::vector<ChoiceObservation> observations = load_observations(observations_path);
            LogitSpec spec = default_logit_spec();
            if (!features.empty()) spec.features = features;
            return fit_to_json(fit(spec, observations)).dump();
        },
        py::arg("observations"), py::arg("features") = std::vector<std::string>{},
        "Binary logit fit of an observation table; empty features means the full spec.");

    m.def(
        "fit_table",
        [](const std::string& fit_doc) { return fit_table(fit_from_json(parse_doc(fit_doc))); },
        py::arg("fit"), "Regression-style text table for a stored fit.");

    m.def(
        "sensitivity",
        [](const std::string& fit_doc, const std::string& grid,
           const std::map<std::string, double>& overrides) {
            FitResult result = fit_from_json(parse_doc(fit_doc));
            SensitivityCurve curve = sensitivity_curve(result, parse_grid(grid), overrides);
            json points = json::array();
            for (const SensitivityPoint& p : curve.points)
                points.push_back({{"value", p.value},
                                  {"probability", p.probability},
                                  {"elasticity", p.elasticity}});
            return json{{"variable", curve.variable}, {"points", std::move(points)}}.dump();
        },
        py::arg("fit"), py::arg("grid") = "0:1:0.05",
        py::arg("overrides") = std::map<std::string, double>{},
        "Choice probability and elasticity swept over OD redundancy, as JSON.");

    m.def(
        "generate_scenario",
        [](const std::string& config_path, const std::string& out_dir) {
            Scenario scenario = generate(load_scenario_config(config_path));
            write_scenario(scenario, out_dir);
            return ground_truth_to_json(scenario.truth).dump();
        },
        py::arg("config"), py::arg("out"),
        "Deterministic synthetic scenario written to a directory; returns the ground truth.");

    m.def(
        "report_scenario",
        [](const std::string& scenario_dir, const std::string& out_dir) {
            return report_scenario(scenario_dir, out_dir).dump();
        },
        py::arg("scenario"), py::arg("out"),
        "Full incident dossier over a scenario directory; returns report.json.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> storage;
            storage.reserve(args.size() + 1);
            storage.push_back("tia");
            storage.insert(storage.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            argv.reserve(storage.size());
            for (const std::string& s : storage) argv.push_back(s.c_str());
            return run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Invoke the command-line interface; returns its exit code.");

    m.attr("__version__") = "0.1.0";
}
