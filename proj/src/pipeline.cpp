#include "tia/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tia/behavior.hpp"
#include "tia/flows.hpp"
#include "tia/headway.hpp"
#include "tia/logit.hpp"
#include "tia/network.hpp"
#include "tia/paths.hpp"
#include "tia/redundancy.hpp"
#include "tia/synth.hpp"
#include "tia/timeutil.hpp"

namespace fs = std::filesystem;

namespace tia {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_argument: return 64;   // EX_USAGE
        case ErrorCode::missing_input: return 66;  // EX_NOINPUT
        case ErrorCode::schema:
        case ErrorCode::integrity:
        case ErrorCode::data: return 65;           // EX_DATAERR
        case ErrorCode::estimation:
        case ErrorCode::internal: break;
    }
    return 70;  // EX_SOFTWARE
}

namespace {

// ---------------------------------------------------------------------------
// shared plumbing

/// Flag defaults, optionally overridden by the JSON file named in $TIA_CONFIG.
struct FlagDefaults {
    PathFilter filter;
    double interval_minutes = 15.0;
    int window_weeks = 8;
    double buffer_minutes = 60.0;
    double duration_minutes = 0.0;  ///< 0 = the incident's own duration
    double log_years = 1.0;
    int threads = 0;
};

FlagDefaults load_flag_defaults() {
    FlagDefaults defaults;
    const char* path = std::getenv(kConfigEnvVar);
    if (path == nullptr || *path == '\0') return defaults;
    json doc = read_json_file(path);
    if (!doc.is_object())
        throw schema_error(std::string(path) + ": config must be a JSON object");
    static const std::set<std::string> known = {
        "k", "max_transfers", "max_detour_ratio", "interval_minutes",
        "window_weeks", "buffer_minutes", "duration_minutes", "log_years", "threads"};
    for (const auto& item : doc.items())
        if (known.count(item.key()) == 0)
            throw schema_error(std::string(path) + ": unknown config key \"" + item.key() + "\"");
    try {
        defaults.filter.k = doc.value("k", defaults.filter.k);
        defaults.filter.max_transfers = doc.value("max_transfers", defaults.filter.max_transfers);
        defaults.filter.max_detour_ratio =
            doc.value("max_detour_ratio", defaults.filter.max_detour_ratio);
        defaults.interval_minutes = doc.value("interval_minutes", defaults.interval_minutes);
        defaults.window_weeks = doc.value("window_weeks", defaults.window_weeks);
        defaults.buffer_minutes = doc.value("buffer_minutes", defaults.buffer_minutes);
        defaults.duration_minutes = doc.value("duration_minutes", defaults.duration_minutes);
        defaults.log_years = doc.value("log_years", defaults.log_years);
        defaults.threads = doc.value("threads", defaults.threads);
    } catch (const json::exception& e) {
        throw schema_error(std::string(path) + ": " + e.what());
    }
    return defaults;
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::internal, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

/// File-name-safe version of a scope or line id ("line:Red" -> "line_Red").
std::string safe_component(const std::string& text) {
    std::string out = text;
    for (char& c : out)
        if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '.' && c != '-' && c != '_')
            c = '_';
    return out;
}

std::vector<Day> parse_day_list(const std::string& text) {
    std::vector<Day> days;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ','))
        if (!item.empty()) days.push_back(parse_date(item));
    if (days.empty()) throw bad_argument_error("--normal-days: empty day list");
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    return days;
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::vector<Od> all_rail_ods(const TransitNetwork& net) {
    std::vector<Od> ods;
    std::vector<std::string> stations = net.rail_stations();
    for (const std::string& origin : stations)
        for (const std::string& destination : stations)
            if (origin != destination) ods.push_back({origin, destination});
    return ods;
}

json cohort_summary_json(const ObservationSet& set, bool include_cards) {
    std::map<std::string, int> labels;
    for (const ChoiceObservation& obs : set.observations) ++labels[label_name(obs.label)];
    std::map<std::string, int> reasons;
    for (const DroppedCard& card : set.dropped) ++reasons[card.reason];
    json doc{{"panels", set.panel_count},
             {"regular", set.regular_count},
             {"observations", set.observations.size()},
             {"labels", labels},
             {"drop_reasons", reasons}};
    if (include_cards) {
        json dropped = json::array();
        for (const DroppedCard& card : set.dropped)
            dropped.push_back({{"card", card.card}, {"reason", card.reason}});
        doc["dropped"] = std::move(dropped);
    }
    return doc;
}

std::string cohort_summary_line(const ObservationSet& set) {
    int transit = 0, other = 0;
    for (const ChoiceObservation& obs : set.observations) {
        if (obs.label == ChoiceLabel::transit) ++transit;
        if (obs.label == ChoiceLabel::other) ++other;
    }
    std::ostringstream out;
    out << "panels " << set.panel_count << ", regular " << set.regular_count << ", observations "
        << set.observations.size() << " (Transit " << transit << " / Other " << other
        << "), dropped " << set.dropped.size();
    return out.str();
}

CsvTable sweep_to_csv(const std::vector<StationSweepRow>& rows) {
    CsvTable table;
    table.header = {"station", "track", "blocked_segments", "redundancy",
                    "vacuous", "incidents_per_year", "quadrant"};
    for (const StationSweepRow& row : rows) {
        std::string group;
        for (const std::string& seg : row.blocked_segments) {
            if (!group.empty()) group += ';';
            group += seg;
        }
        table.rows.push_back({row.station, row.track, group, format_double(row.redundancy),
                              row.vacuous ? "true" : "false",
                              format_double(row.incidents_per_year), row.quadrant});
    }
    return table;
}

/// Count of incident-day interval values strictly above [mean - σ, mean + σ],
/// overall and restricted to the incident clock window.
struct BandExceedances {
    int total = 0;
    int in_window = 0;
    int window_intervals = 0;
};

BandExceedances band_exceedances(const HeadwaySeries& series, const IncidentSpec& incident) {
    BandExceedances result;
    double window_start = minute_of_day(incident.start_time);
    double window_end = window_start + incident.duration();
    for (const HeadwayRow& row : series.rows) {
        double lo = row.interval_index * series.interval_minutes;
        double hi = lo + series.interval_minutes;
        bool in_window = hi > window_start && lo < window_end;
        if (in_window) ++result.window_intervals;
        if (!row.incident || !row.baseline_mean || !row.baseline_sigma) continue;
        if (*row.incident > *row.baseline_mean + *row.baseline_sigma) {
            ++result.total;
            if (in_window) ++result.in_window;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// subcommands

struct RedundancyArgs {
    std::string network, incident, ods, out = ".";
    PathFilter filter;
    double duration = 0.0;
};

void cmd_redundancy(const RedundancyArgs& args) {
    TransitNetwork net = load_network_file(args.network);
    IncidentSpec incident = load_incident_file(args.incident);
    validate_incident(net, incident);
    std::vector<Od> ods = args.ods.empty() ? all_rail_ods(net) : load_od_file(args.ods, &net);
    ThroughputReport report = throughput_report(net, incident, ods, args.filter, args.duration);
    json doc = report_to_json(report);
    fs::path dir = prepare_out_dir(args.out);
    write_json_file((dir / "redundancy.json").string(), doc);
    std::cout << doc.dump(2) << "\n";
}

struct SweepArgs {
    std::string network, incident_log, out = ".";
    PathFilter filter;
    SweepOptions options;
    double redundancy_threshold = 0.0;  ///< applied only when the flag is given
    double rate_threshold = 0.0;
};

void cmd_sweep(const SweepArgs& args) {
    TransitNetwork net = load_network_file(args.network);
    std::vector<IncidentLogEntry> log = load_incident_log(args.incident_log, &net);
    std::vector<StationSweepRow> rows = station_sweep(net, log, args.filter, args.options);
    fs::path dir = prepare_out_dir(args.out);
    write_csv_file((dir / "sweep.csv").string(), sweep_to_csv(rows));
    std::map<std::string, int> quadrants;
    for (const StationSweepRow& row : rows) ++quadrants[row.quadrant];
    std::cout << rows.size() << " track groups -> " << (dir / "sweep.csv").string() << "\n";
    for (const char* name : {"critical-red", "informable-yellow", "prepare-blue", "low-priority-green"})
        std::cout << "  " << name << ": " << quadrants[name] << "\n";
}

struct HeadwayArgs {
    std::string avl, network, incident, incident_log, out = ".";
    std::vector<std::string> lines;
    std::string normal_days = "auto";
    std::string incident_day;
    double interval = 15.0;
    int window_weeks = 8;
    double buffer = 60.0;
};

void cmd_headway(const HeadwayArgs& args) {
    std::optional<TransitNetwork> net;
    if (!args.network.empty()) net = load_network_file(args.network);
    std::optional<IncidentSpec> incident;
    if (!args.incident.empty()) {
        incident = load_incident_file(args.incident);
        if (net) validate_incident(*net, *incident);
    }
    std::vector<VehicleEvent> events = load_avl(args.avl, net ? &*net : nullptr);

    Day incident_day = 0;
    if (!args.incident_day.empty()) incident_day = parse_date(args.incident_day);
    else if (incident) incident_day = day_of(incident->start_time);
    else throw bad_argument_error("need --incident-day or --incident");

    std::vector<Day> normal_days;
    if (args.normal_days == "auto") {
        if (!net || !incident || args.incident_log.empty())
            throw bad_argument_error(
                "--normal-days auto needs --network, --incident and --incident-log");
        std::vector<IncidentLogEntry> log = load_incident_log(args.incident_log, &*net);
        normal_days = select_normal_days(*net, *incident, log, args.window_weeks, args.buffer).days;
    } else {
        normal_days = parse_day_list(args.normal_days);
    }

    std::vector<std::string> lines = args.lines;
    if (lines.empty()) {
        if (!net || !incident)
            throw bad_argument_error("need --line, or --network and --incident to infer the blocked lines");
        lines = blocked_line_directions(*net, *incident);
        if (lines.empty()) throw data_error("incident blocks no line");
    }
    if (net)
        for (const std::string& line : lines)
            if (net->lines.count(line) == 0)
                throw integrity_error("--line: unknown line-direction \"" + line + "\"");

    std::vector<HeadwaySeries> series;
    for (const std::string& line : lines)
        series.push_back(
            line_headway_series(events, line, args.interval, incident_day, normal_days));

    fs::path dir = prepare_out_dir(args.out);
    for (const HeadwaySeries& s : series) {
        std::string file = "headway_" + safe_component(s.line) + ".csv";
        write_csv_file((dir / file).string(), headway_series_to_csv(s));
        int above = 0;
        for (const HeadwayRow& row : s.rows)
            if (row.incident && row.baseline_mean && row.baseline_sigma &&
                *row.incident > *row.baseline_mean + *row.baseline_sigma)
                ++above;
        std::cout << s.line << " -> " << (dir / file).string() << " (" << above
                  << " intervals above the baseline band)\n";
    }
}

struct FlowsArgs {
    std::string network, afc, incident, incident_log, out = ".";
    std::vector<std::string> scopes;
    std::string normal_days = "auto";
    double interval = 15.0;
    int window_weeks = 8;
    double buffer = 60.0;
};

void cmd_flows(const FlowsArgs& args) {
    TransitNetwork net = load_network_file(args.network);
    IncidentSpec incident = load_incident_file(args.incident);
    validate_incident(net, incident);
    Day incident_day = day_of(incident.start_time);

    std::vector<Day> normal_days;
    if (args.normal_days == "auto") {
        if (args.incident_log.empty())
            throw bad_argument_error("--normal-days auto needs --incident-log");
        std::vector<IncidentLogEntry> log = load_incident_log(args.incident_log, &net);
        normal_days = select_normal_days(net, incident, log, args.window_weeks, args.buffer).days;
    } else {
        normal_days = parse_day_list(args.normal_days);
    }

    std::vector<Day> days = normal_days;
    days.push_back(incident_day);
    std::vector<TapEvent> taps = load_afc_days(args.afc, days, &net);

    std::vector<Scope> scopes;
    if (args.scopes.empty()) {
        scopes.push_back({ScopeKind::system, "rail"});
        for (const std::string& line : blocked_line_directions(net, incident))
            scopes.push_back({ScopeKind::line, line});
    } else {
        for (const std::string& text : args.scopes) scopes.push_back(parse_scope(text));
    }

    std::vector<DemandSeries> series;
    for (const Scope& scope : scopes)
        series.push_back(demand_series(taps, net, scope, incident_day, normal_days, args.interval));
    DemandDeltaReport deltas = demand_delta_report(series, incident);

    fs::path dir = prepare_out_dir(args.out);
    for (const DemandSeries& s : series) {
        std::string file = "flows_" + safe_component(scope_name(s.scope)) + ".csv";
        write_csv_file((dir / file).string(), demand_series_to_csv(s));
    }
    write_json_file((dir / "flow_deltas.json").string(), delta_report_to_json(deltas));

    std::cout << series.size() << " scopes -> " << dir.string() << "\n";
    auto print_deltas = [](const char* title, const std::vector<DemandDelta>& list) {
        std::cout << title << ":";
        if (list.empty()) std::cout << " none";
        std::cout << "\n";
        for (size_t i = 0; i < list.size() && i < 3; ++i)
            std::cout << "  " << scope_name(list[i].scope) << " " << format_double(list[i].delta)
                      << " taps over the incident window\n";
    };
    print_deltas("increases", deltas.increases);
    print_deltas("decreases", deltas.decreases);
}

struct BehaviorArgs {
    std::string network, afc, incident, incident_log, sales, out = ".";
    std::string normal_days = "auto";
    int window_weeks = 8;
    double buffer = 60.0;
    PathFilter filter;
    double duration = 0.0;
    int sales_year = 0;
};

void cmd_behavior(const BehaviorArgs& args) {
    TransitNetwork net = load_network_file(args.network);
    IncidentSpec incident = load_incident_file(args.incident);
    validate_incident(net, incident);
    Day incident_day = day_of(incident.start_time);

    std::vector<Day> normal_days;
    if (args.normal_days == "auto") {
        if (args.incident_log.empty())
            throw bad_argument_error("--normal-days auto needs --incident-log");
        std::vector<IncidentLogEntry> log = load_incident_log(args.incident_log, &net);
        normal_days = select_normal_days(net, incident, log, args.window_weeks, args.buffer).days;
    } else {
        normal_days = parse_day_list(args.normal_days);
    }

    std::vector<Day> days = normal_days;
    days.push_back(incident_day);
    std::vector<TapEvent> taps = load_afc_days(args.afc, days, &net);
    std::vector<PassengerPanel> panels = build_panels(taps, normal_days, incident_day);
    std::vector<SaleTransaction> sales = load_sales(args.sales);

    FeatureConfig config;
    config.sales_year = args.sales_year;
    config.filter = args.filter;
    config.duration_minutes = args.duration;
    ObservationSet set = build_observations(panels, normal_days, sales, net, incident, config);

    fs::path dir = prepare_out_dir(args.out);
    write_csv_file((dir / "observations.csv").string(), observations_to_csv(set.observations));
    write_json_file((dir / "behavior_summary.json").string(), cohort_summary_json(set, true));
    std::cout << cohort_summary_line(set) << "\n";
}

struct FitArgs {
    std::string observations, spec, out = ".";
    int max_iterations = FitOptions{}.max_iterations;
};

void cmd_fit(const FitArgs& args) {
    std::vector<ChoiceObservation> obs = load_observations(args.observations);
    LogitSpec spec = args.spec.empty() ? default_logit_spec() : load_logit_spec(args.spec);
    FitOptions options;
    options.max_iterations = args.max_iterations;
    FitResult result = fit(spec, obs, options);
    std::string table = fit_table(result);
    fs::path dir = prepare_out_dir(args.out);
    write_json_file((dir / "fit.json").string(), fit_to_json(result));
    write_text_file((dir / "fit_table.txt").string(), table);
    std::cout << table;
    if (table.empty() || table.back() != '\n') std::cout << "\n";
}

struct SensitivityArgs {
    std::string fit, out = ".";
    std::string var = "od_redundancy";
    std::string grid = "0:1:0.01";
    std::vector<std::string> overrides;
};

void cmd_sensitivity(const SensitivityArgs& args) {
    FitResult fitted = load_fit(args.fit);
    if (args.var != "od_redundancy")
        throw bad_argument_error("--var: only od_redundancy can be swept");
    std::vector<double> grid = parse_grid(args.grid);
    std::map<std::string, double> overrides;
    for (const std::string& item : args.overrides) {
        size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw bad_argument_error("--set expects name=value, got \"" + item + "\"");
        overrides[item.substr(0, eq)] = parse_double_cell(item.substr(eq + 1), "--set " + item);
    }
    SensitivityCurve curve = sensitivity_curve(fitted, grid, overrides);
    fs::path dir = prepare_out_dir(args.out);
    write_csv_file((dir / "sensitivity.csv").string(), sensitivity_to_csv(curve));
    const SensitivityPoint& first = curve.points.front();
    const SensitivityPoint& last = curve.points.back();
    std::cout << "P(" << chosen_alternative(fitted.spec) << ") over " << curve.variable << " in ["
              << format_double(first.value) << ", " << format_double(last.value) << "]: "
              << fixed3(first.probability) << " -> " << fixed3(last.probability) << " ("
              << curve.points.size() << " points)\n";
}

struct SynthArgs {
    std::string config, out;
};

void cmd_synth(const SynthArgs& args) {
    ScenarioConfig config = load_scenario_config(args.config);
    Scenario scenario = generate(config);
    write_scenario(scenario, args.out);
    size_t taps = 0;
    for (const auto& day : scenario.afc) taps += day.second.size();
    std::cout << template_name(config.network_template) << " scenario -> " << args.out << " ("
              << scenario.truth.cards.size() << " cards, " << scenario.afc.size() << " AFC days, "
              << taps << " taps)\n";
}

struct ReportArgs {
    std::string scenario, out = ".";
};

void cmd_report(const ReportArgs& args) {
    report_scenario(args.scenario, args.out);
    std::ifstream in(fs::path(args.out) / "report.txt");
    std::cout << in.rdbuf();
}

// ---------------------------------------------------------------------------
// CLI wiring

void add_filter_flags(CLI::App* cmd, PathFilter& filter) {
    cmd->add_option("--k", filter.k, "paths kept per OD")->capture_default_str();
    cmd->add_option("--max-transfers", filter.max_transfers, "transfer cap per path")
        ->capture_default_str();
    cmd->add_option("--max-detour-ratio", filter.max_detour_ratio,
                    "travel-time cap vs the shortest usable path")
        ->capture_default_str();
}

} // namespace

json report_scenario(const std::string& scenario_dir, const std::string& out_dir) {
    fs::path dir(scenario_dir);
    if (!fs::is_directory(dir))
        throw missing_input_error(scenario_dir + ": no such scenario directory");

    // interval, baseline window and path rules come from the scenario itself
    json sdoc = read_json_file((dir / "scenario.json").string());
    PathFilter filter;
    double interval = 15.0;
    int window_weeks = 8;
    try {
        interval = sdoc.value("interval_minutes", interval);
        window_weeks = sdoc.value("window_weeks", window_weeks);
        if (sdoc.contains("filter")) {
            const json& f = sdoc.at("filter");
            filter.k = f.value("k", filter.k);
            filter.max_transfers = f.value("max_transfers", filter.max_transfers);
            filter.max_detour_ratio = f.value("max_detour_ratio", filter.max_detour_ratio);
        }
    } catch (const json::exception& e) {
        throw schema_error("scenario.json: " + std::string(e.what()));
    }

    TransitNetwork net = load_network_file((dir / "network.json").string());
    IncidentSpec incident = load_incident_file((dir / "incident.json").string());
    validate_incident(net, incident);
    std::vector<IncidentLogEntry> log = load_incident_log((dir / "incident_log.csv").string(), &net);
    std::vector<Od> ods = load_od_file((dir / "ods.csv").string(), &net);
    Day incident_day = day_of(incident.start_time);

    // dossier order: redundancy, headways, demand, cohort, choice model

    ThroughputReport throughput = throughput_report(net, incident, ods, filter, 0.0);

    std::vector<Day> normal_days = select_normal_days(net, incident, log, window_weeks, 60.0).days;

    std::vector<VehicleEvent> events = load_avl((dir / "avl.csv").string(), &net);
    std::vector<std::string> lines = blocked_line_directions(net, incident);
    std::vector<HeadwaySeries> headways;
    for (const std::string& line : lines)
        headways.push_back(line_headway_series(events, line, interval, incident_day, normal_days));

    std::vector<Day> days = normal_days;
    days.push_back(incident_day);
    std::vector<TapEvent> taps = load_afc_days((dir / "afc").string(), days, &net);
    std::vector<Scope> scopes;
    scopes.push_back({ScopeKind::system, "rail"});
    for (const std::string& line : lines) scopes.push_back({ScopeKind::line, line});
    std::set<std::string> endpoint_seen;
    for (const std::string& seg : incident.blocked_segments) {
        const TrackSegment& segment = net.segment(seg);
        for (const std::string& sid : {segment.from, segment.to})
            if (endpoint_seen.insert(sid).second) scopes.push_back({ScopeKind::station, sid});
    }
    std::vector<DemandSeries> demand;
    for (const Scope& scope : scopes)
        demand.push_back(demand_series(taps, net, scope, incident_day, normal_days, interval));
    DemandDeltaReport deltas = demand_delta_report(demand, incident);

    std::vector<PassengerPanel> panels = build_panels(taps, normal_days, incident_day);
    std::vector<SaleTransaction> sales = load_sales((dir / "sales.csv").string());
    FeatureConfig feature_config;
    feature_config.filter = filter;
    ObservationSet cohort = build_observations(panels, normal_days, sales, net, incident,
                                               feature_config);

    FitResult fitted = fit(default_logit_spec(), cohort.observations);
    std::string table = fit_table(fitted);

    // assemble the dossier document
    json headway_section = json::array();
    for (const HeadwaySeries& s : headways) {
        BandExceedances bands = band_exceedances(s, incident);
        headway_section.push_back({{"line", s.line},
                                   {"file", "headway_" + safe_component(s.line) + ".csv"},
                                   {"intervals_above_band", bands.total},
                                   {"window_intervals_above_band", bands.in_window},
                                   {"window_intervals", bands.window_intervals}});
    }
    json flow_files = json::array();
    for (const DemandSeries& s : demand)
        flow_files.push_back("flows_" + safe_component(scope_name(s.scope)) + ".csv");
    json day_list = json::array();
    for (Day day : normal_days) day_list.push_back(format_date(day));

    json doc{{"incident", incident_to_json(incident)},
             {"incident_day", format_date(incident_day)},
             {"normal_days", day_list},
             {"nrui", throughput.redundancy.value},
             {"nrui_vacuous", throughput.redundancy.vacuous},
             {"redundancy", report_to_json(throughput)},
             {"headway", headway_section},
             {"flows", {{"files", flow_files}, {"deltas", delta_report_to_json(deltas)}}},
             {"cohort", cohort_summary_json(cohort, false)},
             {"fit", fit_to_json(fitted)}};

    // the text dossier, one block per section
    std::ostringstream text;
    text << "INCIDENT DOSSIER\n";
    text << "incident day " << format_date(incident_day) << ", "
         << format_timestamp(incident.start_time).substr(11) << " to "
         << format_timestamp(incident.end_time).substr(11) << "\n";
    text << "blocked segments:";
    for (const std::string& seg : incident.blocked_segments) text << " " << seg;
    text << "\nblocked lines:";
    for (const std::string& line : lines) text << " " << line;
    text << "\nbaseline: " << normal_days.size() << " normal days";
    if (!normal_days.empty())
        text << " (" << format_date(normal_days.front()) << " to "
             << format_date(normal_days.back()) << ")";
    text << "\n";

    text << "\n1. Network redundancy\n";
    text << "   NRUI = " << fixed3(throughput.redundancy.value)
         << (throughput.redundancy.vacuous ? " (vacuous: no affected throughput)" : "") << "\n";
    int affected = 0;
    for (const OdReport& od : throughput.ods) affected += od.affected ? 1 : 0;
    text << "   affected ODs: " << affected << " of " << throughput.ods.size() << "\n";
    const OdReport* worst = nullptr;
    for (const OdReport& od : throughput.ods)
        if (od.affected && od.ratio && (!worst || *od.ratio < *worst->ratio)) worst = &od;
    if (worst)
        text << "   worst OD " << worst->od.origin << " -> " << worst->od.destination << ": "
             << format_double(worst->before) << " to " << format_double(worst->after)
             << " pax/h (ratio " << fixed3(*worst->ratio) << ")\n";

    text << "\n2. Service headways\n";
    for (const HeadwaySeries& s : headways) {
        BandExceedances bands = band_exceedances(s, incident);
        text << "   " << s.line << ": " << bands.in_window << " of " << bands.window_intervals
             << " incident-window intervals above the baseline band (" << bands.total
             << " all day)\n";
    }

    text << "\n3. Tap-in demand\n";
    auto delta_lines = [&text](const char* title, const std::vector<DemandDelta>& list) {
        text << "   " << title << ":";
        if (list.empty()) text << " none";
        text << "\n";
        for (size_t i = 0; i < list.size() && i < 5; ++i)
            text << "     " << scope_name(list[i].scope) << " " << format_double(list[i].delta)
                 << " taps over the incident window\n";
    };
    delta_lines("demand increases", deltas.increases);
    delta_lines("demand decreases", deltas.decreases);

    text << "\n4. Passenger cohort\n";
    text << "   " << cohort_summary_line(cohort) << "\n";

    text << "\n5. Choice model\n" << table;
    if (table.empty() || table.back() != '\n') text << "\n";

    // everything computed; only now touch the output directory
    fs::path out = prepare_out_dir(out_dir);
    for (const HeadwaySeries& s : headways)
        write_csv_file((out / ("headway_" + safe_component(s.line) + ".csv")).string(),
                       headway_series_to_csv(s));
    for (const DemandSeries& s : demand)
        write_csv_file((out / ("flows_" + safe_component(scope_name(s.scope)) + ".csv")).string(),
                       demand_series_to_csv(s));
    write_csv_file((out / "observations.csv").string(), observations_to_csv(cohort.observations));
    write_json_file((out / "redundancy.json").string(), report_to_json(throughput));
    write_json_file((out / "fit.json").string(), fit_to_json(fitted));
    write_text_file((out / "fit_table.txt").string(), table);
    write_json_file((out / "report.json").string(), doc);
    write_text_file((out / "report.txt").string(), text.str());
    return doc;
}

int run_cli(int argc, const char* const* argv) {
    try {
        FlagDefaults defaults = load_flag_defaults();

        CLI::App app{"transit incident analytics"};
        app.require_subcommand(1);

        RedundancyArgs redundancy_args;
        redundancy_args.filter = defaults.filter;
        redundancy_args.duration = defaults.duration_minutes;
        CLI::App* redundancy = app.add_subcommand(
            "redundancy", "network redundancy and throughput loss for one incident");
        redundancy->add_option("--network", redundancy_args.network, "network JSON")->required();
        redundancy->add_option("--incident", redundancy_args.incident, "incident JSON")->required();
        redundancy->add_option("--ods", redundancy_args.ods,
                               "OD pair CSV (default: all ordered rail pairs)");
        redundancy->add_option("--duration", redundancy_args.duration,
                               "override window minutes (0 = incident duration)")
            ->capture_default_str();
        redundancy->add_option("--out", redundancy_args.out, "output directory")
            ->capture_default_str();
        add_filter_flags(redundancy, redundancy_args.filter);
        redundancy->callback([&redundancy_args] { cmd_redundancy(redundancy_args); });

        SweepArgs sweep_args;
        sweep_args.filter = defaults.filter;
        if (defaults.duration_minutes > 0) sweep_args.options.duration = defaults.duration_minutes;
        sweep_args.options.log_years = defaults.log_years;
        sweep_args.options.threads = defaults.threads;
        CLI::App* sweep =
            app.add_subcommand("sweep", "hypothetical per-station blockages over the whole network");
        sweep->add_option("--network", sweep_args.network, "network JSON")->required();
        sweep->add_option("--incident-log", sweep_args.incident_log, "historical disruption CSV")
            ->required();
        sweep->add_option("--duration", sweep_args.options.duration,
                          "minutes each hypothetical block lasts")
            ->capture_default_str();
        sweep->add_option("--log-years", sweep_args.options.log_years,
                          "years the incident log covers")
            ->capture_default_str();
        CLI::Option* sweep_rt = sweep->add_option("--redundancy-threshold",
                                                  sweep_args.redundancy_threshold,
                                                  "quadrant cut (default: median)");
        CLI::Option* sweep_ft = sweep->add_option("--rate-threshold", sweep_args.rate_threshold,
                                                  "incidents/year cut (default: median)");
        sweep->add_option("--threads", sweep_args.options.threads,
                          "worker threads (0 = hardware)")
            ->capture_default_str();
        sweep->add_option("--out", sweep_args.out, "output directory")->capture_default_str();
        add_filter_flags(sweep, sweep_args.filter);
        sweep->callback([&sweep_args, sweep_rt, sweep_ft] {
            SweepArgs args = sweep_args;
            if (sweep_rt->count() > 0) args.options.redundancy_threshold = args.redundancy_threshold;
            if (sweep_ft->count() > 0) args.options.rate_threshold = args.rate_threshold;
            cmd_sweep(args);
        });

        HeadwayArgs headway_args;
        headway_args.interval = defaults.interval_minutes;
        headway_args.window_weeks = defaults.window_weeks;
        headway_args.buffer = defaults.buffer_minutes;
        CLI::App* headway =
            app.add_subcommand("headway", "per-interval headways vs the normal-day band");
        headway->add_option("--avl", headway_args.avl, "AVL arrivals CSV")->required();
        headway->add_option("--line", headway_args.lines,
                            "line-direction id (repeatable; default: blocked lines)")
            ->delimiter(',');
        headway->add_option("--interval", headway_args.interval, "interval minutes")
            ->capture_default_str();
        headway->add_option("--normal-days", headway_args.normal_days,
                            "comma-separated dates, or auto")
            ->capture_default_str();
        headway->add_option("--incident-day", headway_args.incident_day, "YYYY-MM-DD");
        headway->add_option("--network", headway_args.network, "network JSON");
        headway->add_option("--incident", headway_args.incident, "incident JSON");
        headway->add_option("--incident-log", headway_args.incident_log,
                            "historical disruption CSV (for --normal-days auto)");
        headway->add_option("--window-weeks", headway_args.window_weeks,
                            "lookback weeks for auto day selection")
            ->capture_default_str();
        headway->add_option("--buffer", headway_args.buffer,
                            "minutes around the incident window when excluding days")
            ->capture_default_str();
        headway->add_option("--out", headway_args.out, "output directory")->capture_default_str();
        headway->callback([&headway_args] { cmd_headway(headway_args); });

        FlowsArgs flows_args;
        flows_args.interval = defaults.interval_minutes;
        flows_args.window_weeks = defaults.window_weeks;
        flows_args.buffer = defaults.buffer_minutes;
        CLI::App* flows = app.add_subcommand("flows", "tap-in demand vs the normal-day baseline");
        flows->add_option("--network", flows_args.network, "network JSON")->required();
        flows->add_option("--afc", flows_args.afc, "directory of per-day AFC CSVs")->required();
        flows->add_option("--incident", flows_args.incident, "incident JSON")->required();
        flows->add_option("--scope", flows_args.scopes,
                          "station:X / line:Y / system:rail (repeatable; default: system "
                          "plus blocked lines)");
        flows->add_option("--normal-days", flows_args.normal_days,
                          "comma-separated dates, or auto")
            ->capture_default_str();
        flows->add_option("--incident-log", flows_args.incident_log,
                          "historical disruption CSV (for --normal-days auto)");
        flows->add_option("--interval", flows_args.interval, "interval minutes")
            ->capture_default_str();
        flows->add_option("--window-weeks", flows_args.window_weeks,
                          "lookback weeks for auto day selection")
            ->capture_default_str();
        flows->add_option("--buffer", flows_args.buffer,
                          "minutes around the incident window when excluding days")
            ->capture_default_str();
        flows->add_option("--out", flows_args.out, "output directory")->capture_default_str();
        flows->callback([&flows_args] { cmd_flows(flows_args); });

        BehaviorArgs behavior_args;
        behavior_args.window_weeks = defaults.window_weeks;
        behavior_args.buffer = defaults.buffer_minutes;
        behavior_args.filter = defaults.filter;
        behavior_args.duration = defaults.duration_minutes;
        CLI::App* behavior = app.add_subcommand(
            "behavior", "regular-passenger cohort: regularity, labels, choice features");
        behavior->add_option("--network", behavior_args.network, "network JSON")->required();
        behavior->add_option("--afc", behavior_args.afc, "directory of per-day AFC CSVs")
            ->required();
        behavior->add_option("--incident", behavior_args.incident, "incident JSON")->required();
        behavior->add_option("--sales", behavior_args.sales, "add-value transaction CSV")
            ->required();
        behavior->add_option("--normal-days", behavior_args.normal_days,
                             "comma-separated dates, or auto")
            ->capture_default_str();
        behavior->add_option("--incident-log", behavior_args.incident_log,
                             "historical disruption CSV (for --normal-days auto)");
        behavior->add_option("--window-weeks", behavior_args.window_weeks,
                             "lookback weeks for auto day selection")
            ->capture_default_str();
        behavior->add_option("--buffer", behavior_args.buffer,
                             "minutes around the incident window when excluding days")
            ->capture_default_str();
        behavior->add_option("--duration", behavior_args.duration,
                             "throughput window minutes (0 = incident duration)")
            ->capture_default_str();
        behavior->add_option("--sales-year", behavior_args.sales_year,
                             "calendar year for add-value aggregates (0 = incident year)")
            ->capture_default_str();
        behavior->add_option("--out", behavior_args.out, "output directory")
            ->capture_default_str();
        add_filter_flags(behavior, behavior_args.filter);
        behavior->callback([&behavior_args] { cmd_behavior(behavior_args); });

        FitArgs fit_args;
        CLI::App* fit_cmd = app.add_subcommand("fit", "binary logit fit over labeled observations");
        fit_cmd->add_option("--observations", fit_args.observations, "observation CSV")->required();
        fit_cmd->add_option("--spec", fit_args.spec,
                            "model spec JSON (default: the full nine-variable spec)");
        fit_cmd->add_option("--max-iterations", fit_args.max_iterations, "BFGS iteration cap")
            ->capture_default_str();
        fit_cmd->add_option("--out", fit_args.out, "output directory")->capture_default_str();
        fit_cmd->callback([&fit_args] { cmd_fit(fit_args); });

        SensitivityArgs sensitivity_args;
        CLI::App* sensitivity = app.add_subcommand(
            "sensitivity", "choice probability and elasticity across an OD-redundancy grid");
        sensitivity->add_option("--fit", sensitivity_args.fit, "fit JSON from the fit command")
            ->required();
        sensitivity->add_option("--var", sensitivity_args.var, "variable to sweep")
            ->capture_default_str();
        sensitivity->add_option("--grid", sensitivity_args.grid, "start:stop:step")
            ->capture_default_str();
        sensitivity->add_option("--set", sensitivity_args.overrides,
                                "pin a feature, name=value (repeatable)");
        sensitivity->add_option("--out", sensitivity_args.out, "output directory")
            ->capture_default_str();
        sensitivity->callback([&sensitivity_args] { cmd_sensitivity(sensitivity_args); });

        SynthArgs synth_args;
        CLI::App* synth = app.add_subcommand("synth", "deterministic scenario generator");
        synth->add_option("--config", synth_args.config, "scenario config JSON")->required();
        synth->add_option("--out", synth_args.out, "scenario output directory")->required();
        synth->callback([&synth_args] { cmd_synth(synth_args); });

        ReportArgs report_args;
        CLI::App* report = app.add_subcommand("report", "full incident dossier over a scenario directory");
        report->add_option("--scenario", report_args.scenario, "scenario directory from synth")
            ->required();
        report->add_option("--out", report_args.out, "output directory")->capture_default_str();
        report->callback([&report_args] { cmd_report(report_args); });

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            int code = app.exit(e);
            return code == 0 ? 0 : exit_code_for(ErrorCode::bad_argument);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(ErrorCode::internal);
    }
}

} // namespace tia
