#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tia/behavior.hpp"
#include "tia/flows.hpp"
#include "tia/headway.hpp"
#include "tia/network.hpp"
#include "tia/paths.hpp"

namespace tia {

enum class Template { paper_example, two_parallel_lines, grid, logit_cohort };

Template parse_template(const std::string& text);
std::string template_name(Template value);

/// Shares of the regular cohort assigned to each incident-day behavior.
/// rule-1 riders add a trip inside the window, rule-2 riders shift to another
/// origin, "other" riders skip the window, unaffected riders change nothing.
struct MixtureConfig {
    double transit_rule1 = 0.2;
    double transit_rule2 = 0.2;
    double other = 0.2;
    double unaffected = 0.4;
};

/// Multiplies one station's background tap rate during a clock window on the
/// incident day. Gives the 2-sigma rule something with a known footprint.
struct InjectionConfig {
    std::string station;
    double start_minute = 0.0;  ///< minute of day
    double end_minute = 0.0;
    double factor = 1.0;
};

struct IncidentConfig {
    std::string date = "2019-03-04";
    std::string start = "08:00";
    std::string end = "09:00";
    /// Empty means "the template's default block".
    std::vector<std::string> blocked_segments;
};

/// One parallel route in the two-parallel-lines template.
struct RouteParams {
    double travel_minutes = 20.0;  ///< end to end, split over two segments
    double headway = 10.0;
    double capacity = 500.0;
};

struct ScenarioConfig {
    unsigned long long seed = 1;
    Template network_template = Template::paper_example;
    int cards = 200;
    double regular_share = 0.5;
    MixtureConfig mixture;
    double demand_rate = 3.0;       ///< background taps per station-interval
    double interval_minutes = 15.0;
    int window_weeks = 8;           ///< normal-day lookback; also the jitter sample size
    double jitter_minutes = 2.0;    ///< bound on |trip-time deviation|, see generate()
    IncidentConfig incident;
    std::optional<InjectionConfig> injection;
    int extra_log_entries = 0;      ///< historic log rows well before the lookback window
    // template-specific knobs
    int grid_size = 4;                       // grid
    RouteParams fast{20.0, 10.0, 500.0};     // two-parallel-lines
    RouteParams slow{30.0, 10.0, 500.0};
    std::map<std::string, double> coefficients;  // logit-cohort truth
    int observations = 5000;                     // logit-cohort
};

ScenarioConfig load_scenario_config(const std::string& path);
json scenario_config_to_json(const ScenarioConfig& config);

/// Raises bad_argument on anything generate() cannot honor exactly: mixture
/// not summing to 1, a mixture slice that is not a whole number of cards,
/// zero demand with regular cards to hide in it, and so on.
void validate_config(const ScenarioConfig& config);

struct CardTruth {
    bool regular = false;
    std::string label;  ///< intended Transit/Other/Unlabeled; empty for irregulars
    std::string home;
    std::string work;  ///< evening tap station; the morning trip's destination
    std::vector<double> scheduled_minutes;  ///< per-ordinal minute of day
};

struct GroundTruth {
    std::optional<double> analytic_nrui;  ///< closed form, when the template has one
    std::vector<Day> normal_days;
    std::vector<std::string> blocked_lines;
    double dispatch_factor = 2.0;  ///< incident-window headway multiplier on blocked lines
    std::optional<InjectionConfig> injection;
    std::map<std::string, double> coefficients;
    std::map<std::string, CardTruth> cards;
};

json ground_truth_to_json(const GroundTruth& truth);
GroundTruth load_ground_truth(const std::string& path);

/// Everything one seed produces, in memory. write_scenario() lays it out on
/// disk in the shape the analysis commands consume.
struct Scenario {
    ScenarioConfig config;
    PathFilter filter;  ///< filter under which analytic_nrui holds
    TransitNetwork network;
    IncidentSpec incident;
    std::vector<IncidentLogEntry> log;
    std::vector<VehicleEvent> avl;
    std::map<Day, std::vector<TapEvent>> afc;  ///< normal days + incident day
    std::vector<SaleTransaction> sales;
    std::vector<Od> ods;
    std::vector<ChoiceObservation> observations;  ///< logit-cohort only
    GroundTruth truth;
};

/// Deterministic build-out of a scenario: one mt19937_64 seeded from the
/// config drives every draw, so a seed fully determines the output.
///
/// Regular cards repeat the same trips each normal day with balanced +/-
/// jitter (equal counts of +j and -j, plus one untouched day when the count
/// is odd), which keeps every deviation within one sample standard deviation
/// by construction. Irregular cards alternate their daily trip count, which
/// breaks regularity on any calendar with at least two normal days.
Scenario generate(const ScenarioConfig& config);

/// Writes network.json, incident.json, incident_log.csv, avl.csv,
/// afc/<date>.csv, sales.csv, ods.csv, ground_truth.json, scenario.json
/// (and observations.csv for logit-cohort) under `out_dir`.
void write_scenario(const Scenario& scenario, const std::string& out_dir);

/// CSV with columns origin, destination. References are checked when a
/// network is supplied; duplicate pairs are schema errors.
std::vector<Od> load_od_file(const std::string& path, const TransitNetwork* net = nullptr);

} // namespace tia
