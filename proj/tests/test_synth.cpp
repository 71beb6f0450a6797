#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tia/behavior.hpp"
#include "tia/errors.hpp"
#include "tia/flows.hpp"
#include "tia/headway.hpp"
#include "tia/logit.hpp"
#include "tia/redundancy.hpp"
#include "tia/synth.hpp"

using namespace tia;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

std::map<std::string, std::string> dir_contents(const std::string& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    return out;
}

ScenarioConfig small_parallel_config() {
    ScenarioConfig config;
    config.network_template = Template::two_parallel_lines;
    config.seed = 7;
    config.cards = 40;
    config.regular_share = 0.5;
    config.mixture = {0.25, 0.25, 0.25, 0.25};
    config.demand_rate = 2.0;
    return config;
}

std::vector<TapEvent> all_taps(const Scenario& scenario) {
    std::vector<TapEvent> out;
    for (const auto& [day, taps] : scenario.afc) {
        (void)day;
        out.insert(out.end(), taps.begin(), taps.end());
    }
    return out;
}

const PassengerPanel& panel_of(const std::vector<PassengerPanel>& panels,
                               const std::string& card) {
    for (const PassengerPanel& p : panels)
        if (p.card == card) return p;
    REQUIRE(false);
    return panels.front();
}

} // namespace

TEST_CASE("one seed fully determines the emitted files") {
    ScenarioConfig config = small_parallel_config();
    config.injection = InjectionConfig{"B", 480.0, 540.0, 3.0};
    config.extra_log_entries = 3;
    fs::remove_all("synth_det_a");
    fs::remove_all("synth_det_b");
    write_scenario(generate(config), "synth_det_a");
    write_scenario(generate(config), "synth_det_b");
    auto a = dir_contents("synth_det_a");
    auto b = dir_contents("synth_det_b");
    REQUIRE(a.size() == b.size());
    CHECK(a.size() >= 14);  // 9 afc days + the fixed artifacts
    CHECK(a == b);

    ScenarioConfig other = config;
    other.seed = 8;
    fs::remove_all("synth_det_c");
    write_scenario(generate(other), "synth_det_c");
    CHECK(dir_contents("synth_det_c") != a);
}

TEST_CASE("paper-example scenario reproduces the worked numbers end to end") {
    ScenarioConfig config;
    config.network_template = Template::paper_example;
    config.cards = 20;
    config.regular_share = 0.5;
    config.mixture = {0.2, 0.2, 0.2, 0.4};
    fs::remove_all("synth_paper");
    Scenario scenario = generate(config);
    write_scenario(scenario, "synth_paper");

    REQUIRE(scenario.truth.analytic_nrui.has_value());
    CHECK(*scenario.truth.analytic_nrui == 0.75);
    CHECK(scenario.filter.k == 1);
    CHECK(scenario.truth.blocked_lines == std::vector<std::string>{"p1", "p1r"});

    TransitNetwork net = load_network_file("synth_paper/network.json");
    CHECK(net == scenario.network);
    IncidentSpec incident = load_incident_file("synth_paper/incident.json");
    CHECK(incident == scenario.incident);
    auto ods = load_od_file("synth_paper/ods.csv", &net);
    REQUIRE(ods.size() == 1);

    ThroughputReport report = throughput_report(net, incident, ods, scenario.filter);
    CHECK_FALSE(report.redundancy.vacuous);
    CHECK(report.redundancy.value == 0.75);
    REQUIRE(report.ods.size() == 1);
    CHECK(report.ods[0].before == 400.0);
    CHECK(report.ods[0].after == 300.0);
}

TEST_CASE("every emitted file parses through its ingestion operation") {
    ScenarioConfig config = small_parallel_config();
    config.extra_log_entries = 2;
    fs::remove_all("synth_parse");
    Scenario scenario = generate(config);
    write_scenario(scenario, "synth_parse");

    TransitNetwork net = load_network_file("synth_parse/network.json");
    CHECK(net == scenario.network);
    IncidentSpec incident = load_incident_file("synth_parse/incident.json");
    validate_incident(net, incident);

    auto log = load_incident_log("synth_parse/incident_log.csv", &net);
    CHECK(log.size() == scenario.log.size());

    auto avl = load_avl("synth_parse/avl.csv", &net);
    CHECK(avl.size() == scenario.avl.size());

    std::vector<Day> days = scenario.truth.normal_days;
    days.push_back(day_of(incident.start_time));
    auto taps = load_afc_days("synth_parse/afc", days, &net);
    CHECK(taps.size() == all_taps(scenario).size());

    auto sales = load_sales("synth_parse/sales.csv");
    CHECK(sales.size() == scenario.sales.size());

    auto ods = load_od_file("synth_parse/ods.csv", &net);
    CHECK(ods.size() == scenario.ods.size());

    ScenarioConfig reloaded = load_scenario_config("synth_parse/scenario.json");
    CHECK(reloaded.seed == config.seed);
    CHECK(reloaded.cards == config.cards);
    CHECK(reloaded.network_template == config.network_template);
    CHECK(reloaded.fast.headway == config.fast.headway);

    GroundTruth truth = load_ground_truth("synth_parse/ground_truth.json");
    CHECK(truth.normal_days == scenario.truth.normal_days);
    CHECK(truth.blocked_lines == scenario.truth.blocked_lines);
    CHECK(truth.cards.size() == scenario.truth.cards.size());
    for (const auto& [card, entry] : truth.cards) {
        const CardTruth& expect = scenario.truth.cards.at(card);
        CHECK(entry.regular == expect.regular);
        CHECK(entry.label == expect.label);
        CHECK(entry.scheduled_minutes == expect.scheduled_minutes);
    }

    // the normal-day calendar the generator assumed is what the selector picks
    NormalDaySet selected = select_normal_days(net, incident, log, config.window_weeks, 60.0);
    CHECK(selected.days == scenario.truth.normal_days);
    CHECK(selected.excluded.empty());
}

TEST_CASE("generated cohorts replay to their intended regularity and labels") {
    for (int weeks : {8, 5}) {
        CAPTURE(weeks);
        ScenarioConfig config = small_parallel_config();
        config.window_weeks = weeks;
        config.seed = 100 + weeks;
        Scenario scenario = generate(config);

        int regular = 0, transit = 0, other = 0, unaffected = 0;
        for (const auto& [card, entry] : scenario.truth.cards) {
            (void)card;
            if (!entry.regular) continue;
            ++regular;
            if (entry.label == "Transit") ++transit;  // both transit rules land here
            if (entry.label == "Other") ++other;
            if (entry.label == "Unlabeled") ++unaffected;
        }
        CHECK(regular == 20);
        CHECK(transit == 10);
        CHECK(other == 5);
        CHECK(unaffected == 5);

        auto panels = build_panels(all_taps(scenario), scenario.truth.normal_days,
                                   day_of(scenario.incident.start_time));
        auto regulars = find_regular_passengers(panels, scenario.truth.normal_days);
        std::set<std::string> expected;
        for (const auto& [card, entry] : scenario.truth.cards)
            if (entry.regular) expected.insert(card);
        CHECK(regulars == expected);

        for (const std::string& card : regulars) {
            CAPTURE(card);
            ChoiceLabel label = label_choice(panel_of(panels, card), scenario.incident);
            CHECK(label_name(label) == scenario.truth.cards.at(card).label);
        }
    }
}

TEST_CASE("scenario panels feed the full choice model without degeneracy") {
    ScenarioConfig config = small_parallel_config();
    config.cards = 240;
    config.seed = 55;
    Scenario scenario = generate(config);
    Day incident_day = day_of(scenario.incident.start_time);

    auto panels = build_panels(all_taps(scenario), scenario.truth.normal_days, incident_day);
    FeatureConfig feature_config;
    feature_config.filter = scenario.filter;
    ObservationSet set = build_observations(panels, scenario.truth.normal_days, scenario.sales,
                                            scenario.network, scenario.incident, feature_config);
    // 120 regulars, a quarter each: both transit slices and "other" are labeled
    REQUIRE(set.observations.size() == 90);
    int transit = 0;
    for (const ChoiceObservation& obs : set.observations)
        if (obs.label == ChoiceLabel::transit) ++transit;
    CHECK(transit == 60);
    int unlabeled_drops = 0;
    for (const DroppedCard& drop : set.dropped)
        if (drop.reason == "unlabeled") ++unlabeled_drops;
    CHECK(unlabeled_drops == 30);

    // destination and redundancy spread keeps the nine-column design full rank
    FitResult result = fit(default_logit_spec(), set.observations);
    CHECK(result.converged);
    CHECK(result.observations == 90);
}

TEST_CASE("blocked lines run at a doubled interval inside the window") {
    ScenarioConfig config = small_parallel_config();
    config.cards = 0;
    config.regular_share = 0.0;
    config.mixture = {0.0, 0.0, 0.0, 1.0};
    config.demand_rate = 0.5;
    Scenario scenario = generate(config);
    Day incident_day = day_of(scenario.incident.start_time);

    std::vector<VehicleEvent> incident_events, normal_events;
    for (const VehicleEvent& event : scenario.avl) {
        (day_of(event.arrival) == incident_day ? incident_events : normal_events)
            .push_back(event);
    }
    auto incident_headways = station_headways(incident_events, "O", "p1");
    auto normal_headways = station_headways(normal_events, "O", "p1");
    CHECK(*std::max_element(incident_headways.begin(), incident_headways.end()) == 20.0);
    CHECK(*std::max_element(normal_headways.begin(), normal_headways.end()) == 10.0);
    // the untouched parallel line keeps its schedule on the incident day
    auto spared = station_headways(incident_events, "O", "p2");
    CHECK(*std::max_element(spared.begin(), spared.end()) == 10.0);
}

TEST_CASE("injected demand leaves a visible footprint at its station") {
    ScenarioConfig config = small_parallel_config();
    config.cards = 0;
    config.regular_share = 0.0;
    config.mixture = {0.0, 0.0, 0.0, 1.0};
    config.demand_rate = 4.0;
    config.injection = InjectionConfig{"B", 480.0, 540.0, 3.0};
    Scenario scenario = generate(config);
    REQUIRE(scenario.truth.injection.has_value());

    DemandSeries series =
        demand_series(all_taps(scenario), scenario.network, parse_scope("station:B"),
                      day_of(scenario.incident.start_time), scenario.truth.normal_days,
                      config.interval_minutes);
    double injected = 0.0, baseline = 0.0;
    for (const DemandCell& cell : series.cells) {
        double minute = cell.interval_index * config.interval_minutes;
        if (minute >= 480.0 && minute < 540.0) {
            injected += cell.incident_count;
            baseline += cell.baseline_mean.value_or(0.0);
        }
    }
    CHECK(injected > 2.0 * baseline);  // tripled rate, Poisson noise notwithstanding
}

TEST_CASE("high-redundancy and low-redundancy parameterizations order as expected") {
    ScenarioConfig high = small_parallel_config();  // slow route only 1.5x slower

    ScenarioConfig low = small_parallel_config();
    low.fast = {20.0, 5.0, 1000.0};
    low.slow = {50.0, 30.0, 200.0};

    double values[2];
    int i = 0;
    for (const ScenarioConfig& config : {high, low}) {
        Scenario scenario = generate(config);
        REQUIRE(scenario.truth.analytic_nrui.has_value());
        ThroughputReport report = throughput_report(scenario.network, scenario.incident,
                                                    scenario.ods, scenario.filter);
        // the generator's closed form and the engine agree on the same scenario
        CHECK(report.redundancy.value ==
              doctest::Approx(*scenario.truth.analytic_nrui).epsilon(1e-12));
        values[i++] = report.redundancy.value;
    }
    CHECK(values[0] > values[1]);
}

TEST_CASE("grid template blocks a central segment and stays analyzable") {
    ScenarioConfig config;
    config.network_template = Template::grid;
    config.grid_size = 3;
    config.cards = 8;
    config.regular_share = 0.5;
    config.mixture = {0.25, 0.25, 0.25, 0.25};
    config.demand_rate = 1.0;
    Scenario scenario = generate(config);
    CHECK(scenario.network.stations.size() == 9);
    CHECK(scenario.network.lines.size() == 12);  // both directions of each route
    CHECK(scenario.truth.blocked_lines == std::vector<std::string>{"H1", "H1r"});
    CHECK_FALSE(scenario.truth.analytic_nrui.has_value());
    CHECK(scenario.ods.size() == 9 * 8);

    ThroughputReport report = throughput_report(scenario.network, scenario.incident,
                                                scenario.ods, scenario.filter);
    CHECK_FALSE(report.redundancy.vacuous);
    CHECK(report.redundancy.value >= 0.0);
    CHECK(report.redundancy.value <= 1.0);
}

TEST_CASE("logit-cohort observations carry their published coefficients") {
    ScenarioConfig config;
    config.network_template = Template::logit_cohort;
    config.seed = 31;
    config.observations = 4000;
    config.coefficients = {{"asc_transit", -1.0}, {"od_redundancy", 1.2}, {"pass", 1.1}};
    fs::remove_all("synth_logit");
    Scenario scenario = generate(config);
    write_scenario(scenario, "synth_logit");
    CHECK(scenario.truth.coefficients == config.coefficients);
    REQUIRE(static_cast<int>(scenario.observations.size()) == config.observations);

    auto observations = load_observations("synth_logit/observations.csv");
    REQUIRE(observations.size() == scenario.observations.size());
    for (size_t i = 0; i < observations.size(); ++i)
        CHECK(observations[i] == scenario.observations[i]);

    LogitSpec spec;
    spec.features = {"pass", "od_redundancy"};
    FitResult result = fit(spec, observations);
    REQUIRE(result.converged);
    const double truth[] = {-1.0, 1.1, 1.2};
    for (size_t j = 0; j < result.coefficients.size(); ++j) {
        CAPTURE(j);
        CHECK(std::abs(result.coefficients[j].value - truth[j]) <=
              3.0 * result.coefficients[j].std_error);
    }

    // no files beyond the cohort triple
    auto files = dir_contents("synth_logit");
    CHECK(files.size() == 3);
    CHECK(files.count("observations.csv") == 1);
    CHECK(files.count("ground_truth.json") == 1);
    CHECK(files.count("scenario.json") == 1);
}

TEST_CASE("infeasible configurations are rejected") {
    SUBCASE("regular cards cannot hide in zero demand") {
        ScenarioConfig config = small_parallel_config();
        config.demand_rate = 0.0;
        CHECK_THROWS_AS(validate_config(config), Error);
    }
    SUBCASE("mixture fractions must sum to one") {
        ScenarioConfig config = small_parallel_config();
        config.mixture = {0.5, 0.25, 0.25, 0.25};
        CHECK_THROWS_AS(validate_config(config), Error);
    }
    SUBCASE("fractions must cut whole cards") {
        ScenarioConfig config = small_parallel_config();
        config.cards = 10;  // 5 regulars, quarters of 5 are not whole
        CHECK_THROWS_AS(generate(config), Error);
    }
    SUBCASE("the fast route must be faster") {
        ScenarioConfig config = small_parallel_config();
        config.fast.travel_minutes = 50.0;
        config.slow.travel_minutes = 30.0;
        CHECK_THROWS_AS(validate_config(config), Error);
    }
    SUBCASE("lookback must hold at least two normal days") {
        ScenarioConfig config = small_parallel_config();
        config.window_weeks = 1;
        CHECK_THROWS_AS(validate_config(config), Error);
    }
    SUBCASE("the incident window must fit the rule-1 script") {
        ScenarioConfig config = small_parallel_config();
        config.incident.end = "08:30";
        CHECK_THROWS_AS(validate_config(config), Error);
    }
    SUBCASE("unknown template names and coefficients") {
        CHECK_THROWS_AS(parse_template("hexagon"), Error);
        ScenarioConfig config;
        config.network_template = Template::logit_cohort;
        config.coefficients = {{"wingspan", 1.0}};
        CHECK_THROWS_AS(validate_config(config), Error);
    }
}

TEST_CASE("od file loading validates references and duplicates") {
    TransitNetwork net = generate(small_parallel_config()).network;
    write_csv_file("ods_dup.csv", CsvTable{{"origin", "destination"},
                                           {{"O", "D"}, {"O", "D"}}});
    CHECK_THROWS_AS(load_od_file("ods_dup.csv", &net), Error);
    write_csv_file("ods_bad.csv", CsvTable{{"origin", "destination"}, {{"O", "Z"}}});
    CHECK_THROWS_AS(load_od_file("ods_bad.csv", &net), Error);
    CHECK(load_od_file("ods_bad.csv", nullptr).size() == 1);  // unchecked without a network
}
