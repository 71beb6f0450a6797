#include "tia/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <tuple>

#include "tia/errors.hpp"
#include "tia/logit.hpp"

namespace tia {

namespace {

constexpr double kServiceStart = 360.0;   // 06:00
constexpr double kServiceEnd = 1320.0;    // 22:00
constexpr double kDispatchFactor = 2.0;   // incident-window headway multiplier

using Rng = std::mt19937_64;

// Quarter-minute grid: every emitted timestamp is a whole number of seconds,
// so format_timestamp round-trips exactly and interval buckets never shift.
double quarter_uniform(Rng& rng, double lo, double span_minutes) {
    auto steps = static_cast<unsigned long long>(span_minutes * 4.0);
    if (steps == 0) return lo;
    return lo + static_cast<double>(rng() % steps) / 4.0;
}

int poisson(Rng& rng, double rate) {
    if (rate <= 0.0) return 0;
    std::poisson_distribution<int> dist(rate);
    return dist(rng);
}

std::string card_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%05d", index);
    return buf;
}

json station_entry(const std::string& id, const std::string& name, double lat, double lon) {
    return {{"id", id}, {"name", name}, {"lat", lat}, {"lon", lon}};
}

/// Appends a service line and its reverse direction (id + "r"): stations,
/// segment ids, and travel times mirrored, attributes shared.
void append_line_pair(json& lines, const std::string& id, std::vector<std::string> stations,
                      std::vector<std::string> segments, std::vector<double> times,
                      double headway, double capacity) {
    lines.push_back({{"id", id},
                     {"mode", "rail"},
                     {"stations", stations},
                     {"segments", segments},
                     {"headway", headway},
                     {"capacity", capacity},
                     {"travel_times", times}});
    std::reverse(stations.begin(), stations.end());
    std::reverse(segments.begin(), segments.end());
    std::reverse(times.begin(), times.end());
    lines.push_back({{"id", id + "r"},
                     {"mode", "rail"},
                     {"stations", stations},
                     {"segments", segments},
                     {"headway", headway},
                     {"capacity", capacity},
                     {"travel_times", times}});
}

/// paper-example and two-parallel-lines share this shape: a fast route
/// O-A-D and a slow route O-B-D with no common segment, both run in both
/// directions.
json parallel_doc(const RouteParams& fast, const RouteParams& slow) {
    json doc;
    doc["stations"] = {station_entry("O", "Origin", 41.88, -87.66),
                       station_entry("A", "Mid fast", 41.89, -87.64),
                       station_entry("B", "Mid slow", 41.87, -87.64),
                       station_entry("D", "Destination", 41.88, -87.62)};
    doc["segments"] = {{{"id", "s-oa"}, {"from", "O"}, {"to", "A"}},
                       {{"id", "s-ad"}, {"from", "A"}, {"to", "D"}},
                       {{"id", "s-ob"}, {"from", "O"}, {"to", "B"}},
                       {{"id", "s-bd"}, {"from", "B"}, {"to", "D"}}};
    doc["lines"] = json::array();
    append_line_pair(doc["lines"], "p1", {"O", "A", "D"}, {"s-oa", "s-ad"},
                     {fast.travel_minutes / 2.0, fast.travel_minutes / 2.0}, fast.headway,
                     fast.capacity);
    append_line_pair(doc["lines"], "p2", {"O", "B", "D"}, {"s-ob", "s-bd"},
                     {slow.travel_minutes / 2.0, slow.travel_minutes / 2.0}, slow.headway,
                     slow.capacity);
    doc["downtown"] = {"D"};
    doc["income"] = {{"O", 130000.0}, {"A", 60000.0}, {"B", 20000.0}, {"D", 80000.0}};
    return doc;
}

json grid_doc(int n) {
    const double incomes[4] = {130000.0, 60000.0, 20000.0, 80000.0};
    json doc;
    doc["stations"] = json::array();
    doc["segments"] = json::array();
    doc["lines"] = json::array();
    doc["income"] = json::object();
    auto sid = [](int r, int c) { return "G" + std::to_string(r) + "-" + std::to_string(c); };
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            doc["stations"].push_back(station_entry(
                sid(r, c), "Grid " + std::to_string(r) + "/" + std::to_string(c),
                41.80 + 0.02 * r, -87.70 + 0.02 * c));
            doc["income"][sid(r, c)] = incomes[(r * n + c) % 4];
        }
    for (int r = 0; r < n; ++r)
        for (int c = 0; c + 1 < n; ++c)
            doc["segments"].push_back({{"id", "h-" + std::to_string(r) + "-" + std::to_string(c)},
                                       {"from", sid(r, c)},
                                       {"to", sid(r, c + 1)}});
    for (int r = 0; r + 1 < n; ++r)
        for (int c = 0; c < n; ++c)
            doc["segments"].push_back({{"id", "v-" + std::to_string(r) + "-" + std::to_string(c)},
                                       {"from", sid(r, c)},
                                       {"to", sid(r + 1, c)}});
    for (int r = 0; r < n; ++r) {
        std::vector<std::string> stations, segments;
        std::vector<double> times;
        for (int c = 0; c < n; ++c) stations.push_back(sid(r, c));
        for (int c = 0; c + 1 < n; ++c) {
            segments.push_back("h-" + std::to_string(r) + "-" + std::to_string(c));
            times.push_back(4.0);
        }
        append_line_pair(doc["lines"], "H" + std::to_string(r), stations, segments, times,
                         6.0, 500.0);
    }
    for (int c = 0; c < n; ++c) {
        std::vector<std::string> stations, segments;
        std::vector<double> times;
        for (int r = 0; r < n; ++r) stations.push_back(sid(r, c));
        for (int r = 0; r + 1 < n; ++r) {
            segments.push_back("v-" + std::to_string(r) + "-" + std::to_string(c));
            times.push_back(4.0);
        }
        append_line_pair(doc["lines"], "V" + std::to_string(c), stations, segments, times,
                         8.0, 400.0);
    }
    doc["downtown"] = {sid(n / 2, n / 2)};
    return doc;
}

/// Eq. 1 in closed form for a single route, written independently of the
/// redundancy module so generated ground truth is not self-certifying.
double route_throughput(const RouteParams& route, double duration) {
    double total = 0.0;
    for (int k = 1; (k - 1) * route.headway < duration; ++k) {
        double window = duration - (k - 1) * route.headway;
        total += std::min(window, route.travel_minutes) / route.travel_minutes * route.capacity;
    }
    return total * 60.0 / duration;
}

struct CardPlan {
    std::string card;
    bool regular = false;
    std::string label;  ///< intended label, regulars only
    std::string home;
    std::string work;     ///< evening boarding station, home's trip destination
    std::string reroute;  ///< alternative boarding station for rule-2 days
    std::vector<double> scheduled;  ///< minute of day per ordinal
    bool pass = false;
    bool reduced = false;
    /// [ordinal][normal-day index] time deviation, quarter-minute grid,
    /// balanced so the mean is the schedule and sigma bounds every entry.
    std::vector<std::vector<double>> jitter;
};

std::vector<double> balanced_jitter(Rng& rng, int days, double bound) {
    std::vector<double> devs(static_cast<size_t>(days), 0.0);
    if (bound <= 0.0 || days < 2) return devs;
    auto steps = static_cast<unsigned long long>(bound * 4.0);
    double magnitude = steps == 0 ? 0.0 : static_cast<double>(1 + rng() % steps) / 4.0;
    for (int i = 0; i + 1 < days; i += 2) {
        devs[static_cast<size_t>(i)] = magnitude;
        devs[static_cast<size_t>(i) + 1] = -magnitude;
    }
    std::shuffle(devs.begin(), devs.end(), rng);
    return devs;
}

TapEvent make_tap(const std::string& card, Minutes time, const std::string& station,
                  bool pass, bool reduced) {
    TapEvent tap;
    tap.card = card;
    tap.time = time;
    tap.location = station;
    tap.mode = Mode::rail;
    tap.fare_type = pass ? "pass" : "pay-as-you-go";
    tap.reduced = reduced;
    return tap;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw bad_argument_error(message);
}

long long exact_count(double cards, double share, const std::string& what) {
    double ideal = cards * share;
    long long count = std::llround(ideal);
    if (std::abs(ideal - static_cast<double>(count)) > 1e-9)
        throw bad_argument_error("infeasible config: " + what + " (" + format_double(share) +
                                 " of " + format_double(cards) + ") is not a whole number of cards");
    return count;
}

} // namespace

Template parse_template(const std::string& text) {
    if (text == "paper-example") return Template::paper_example;
    if (text == "two-parallel-lines") return Template::two_parallel_lines;
    if (text == "grid") return Template::grid;
    if (text == "logit-cohort") return Template::logit_cohort;
    throw bad_argument_error("unknown scenario template '" + text + "'");
}

std::string template_name(Template value) {
    switch (value) {
        case Template::paper_example: return "paper-example";
        case Template::two_parallel_lines: return "two-parallel-lines";
        case Template::grid: return "grid";
        case Template::logit_cohort: return "logit-cohort";
    }
    throw Error(ErrorCode::internal, "unhandled template");
}

ScenarioConfig load_scenario_config(const std::string& path) {
    json doc = read_json_file(path);
    ScenarioConfig config;
    try {
        if (doc.contains("template"))
            config.network_template = parse_template(doc.at("template").get<std::string>());
        if (doc.contains("seed")) config.seed = doc.at("seed").get<unsigned long long>();
        if (doc.contains("cards")) config.cards = doc.at("cards").get<int>();
        if (doc.contains("regular_share"))
            config.regular_share = doc.at("regular_share").get<double>();
        if (doc.contains("mixture")) {
            const json& m = doc.at("mixture");
            config.mixture.transit_rule1 = m.value("transit_rule1", 0.0);
            config.mixture.transit_rule2 = m.value("transit_rule2", 0.0);
            config.mixture.other = m.value("other", 0.0);
            config.mixture.unaffected = m.value("unaffected", 0.0);
        }
        if (doc.contains("demand_rate")) config.demand_rate = doc.at("demand_rate").get<double>();
        if (doc.contains("interval_minutes"))
            config.interval_minutes = doc.at("interval_minutes").get<double>();
        if (doc.contains("window_weeks")) config.window_weeks = doc.at("window_weeks").get<int>();
        if (doc.contains("jitter_minutes"))
            config.jitter_minutes = doc.at("jitter_minutes").get<double>();
        if (doc.contains("incident")) {
            const json& inc = doc.at("incident");
            config.incident.date = inc.value("date", config.incident.date);
            config.incident.start = inc.value("start", config.incident.start);
            config.incident.end = inc.value("end", config.incident.end);
            if (inc.contains("blocked_segments"))
                config.incident.blocked_segments =
                    inc.at("blocked_segments").get<std::vector<std::string>>();
        }
        if (doc.contains("injection")) {
            const json& inj = doc.at("injection");
            InjectionConfig injection;
            injection.station = inj.at("station").get<std::string>();
            injection.start_minute = parse_time_of_day(inj.at("start").get<std::string>());
            injection.end_minute = parse_time_of_day(inj.at("end").get<std::string>());
            injection.factor = inj.at("factor").get<double>();
            config.injection = injection;
        }
        if (doc.contains("extra_log_entries"))
            config.extra_log_entries = doc.at("extra_log_entries").get<int>();
        if (doc.contains("grid_size")) config.grid_size = doc.at("grid_size").get<int>();
        auto route = [&](const char* key, RouteParams& params) {
            if (!doc.contains(key)) return;
            const json& r = doc.at(key);
            params.travel_minutes = r.value("travel_minutes", params.travel_minutes);
            params.headway = r.value("headway", params.headway);
            params.capacity = r.value("capacity", params.capacity);
        };
        route("fast", config.fast);
        route("slow", config.slow);
        if (doc.contains("coefficients"))
            config.coefficients =
                doc.at("coefficients").get<std::map<std::string, double>>();
        if (doc.contains("observations"))
            config.observations = doc.at("observations").get<int>();
    } catch (const json::exception& e) {
        throw schema_error(path + ": " + e.what());
    }
    validate_config(config);
    return config;
}

json scenario_config_to_json(const ScenarioConfig& config) {
    json doc{{"template", template_name(config.network_template)},
             {"seed", config.seed},
             {"cards", config.cards},
             {"regular_share", config.regular_share},
             {"mixture",
              {{"transit_rule1", config.mixture.transit_rule1},
               {"transit_rule2", config.mixture.transit_rule2},
               {"other", config.mixture.other},
               {"unaffected", config.mixture.unaffected}}},
             {"demand_rate", config.demand_rate},
             {"interval_minutes", config.interval_minutes},
             {"window_weeks", config.window_weeks},
             {"jitter_minutes", config.jitter_minutes},
             {"incident",
              {{"date", config.incident.date},
               {"start", config.incident.start},
               {"end", config.incident.end},
               {"blocked_segments", config.incident.blocked_segments}}},
             {"extra_log_entries", config.extra_log_entries}};
    if (config.injection) {
        char start[16], end[16];
        std::snprintf(start, sizeof start, "%02d:%02d",
                      static_cast<int>(config.injection->start_minute) / 60,
                      static_cast<int>(config.injection->start_minute) % 60);
        std::snprintf(end, sizeof end, "%02d:%02d",
                      static_cast<int>(config.injection->end_minute) / 60,
                      static_cast<int>(config.injection->end_minute) % 60);
        doc["injection"] = {{"station", config.injection->station},
                            {"start", start},
                            {"end", end},
                            {"factor", config.injection->factor}};
    }
    switch (config.network_template) {
        case Template::grid:
            doc["grid_size"] = config.grid_size;
            break;
        case Template::two_parallel_lines:
            for (auto [key, params] : {std::pair<const char*, const RouteParams*>{"fast", &config.fast},
                                       {"slow", &config.slow}})
                doc[key] = {{"travel_minutes", params->travel_minutes},
                            {"headway", params->headway},
                            {"capacity", params->capacity}};
            break;
        case Template::logit_cohort:
            doc["coefficients"] = config.coefficients;
            doc["observations"] = config.observations;
            break;
        case Template::paper_example:
            break;
    }
    return doc;
}

void validate_config(const ScenarioConfig& config) {
    require(config.cards >= 0, "cards must be >= 0");
    require(config.regular_share >= 0.0 && config.regular_share <= 1.0,
            "regular_share must lie in [0, 1]");
    require(config.demand_rate >= 0.0, "demand_rate must be >= 0");
    require(!(config.demand_rate == 0.0 && config.regular_share > 0.0 && config.cards > 0),
            "infeasible config: demand rate 0 with regular share > 0");
    const MixtureConfig& m = config.mixture;
    for (double f : {m.transit_rule1, m.transit_rule2, m.other, m.unaffected})
        require(f >= 0.0, "mixture fractions must be >= 0");
    require(std::abs(m.transit_rule1 + m.transit_rule2 + m.other + m.unaffected - 1.0) <= 1e-9,
            "mixture fractions must sum to 1");
    require(config.interval_minutes >= 1.0 &&
                config.interval_minutes == std::floor(config.interval_minutes),
            "interval_minutes must be a whole number of minutes >= 1");
    require(config.window_weeks >= 2, "window_weeks must be >= 2 (regularity needs two days)");
    require(config.jitter_minutes >= 0.0 && config.jitter_minutes <= 30.0,
            "jitter_minutes must lie in [0, 30]");
    require(config.extra_log_entries >= 0, "extra_log_entries must be >= 0");

    Minutes start = parse_time_of_day(config.incident.start);
    Minutes end = parse_time_of_day(config.incident.end);
    require(end > start, "incident end must be after its start");
    parse_date(config.incident.date);  // throws on malformed dates

    switch (config.network_template) {
        case Template::grid:
            require(config.grid_size >= 2, "grid_size must be >= 2");
            break;
        case Template::paper_example:
        case Template::two_parallel_lines:
            for (const RouteParams* r : {&config.fast, &config.slow}) {
                require(r->travel_minutes > 0.0, "route travel time must be > 0");
                require(r->headway > 0.0, "route headway must be > 0");
                require(r->capacity > 0.0, "route capacity must be > 0");
            }
            require(config.fast.travel_minutes < config.slow.travel_minutes,
                    "the fast route must be strictly faster than the slow one");
            break;
        case Template::logit_cohort:
            require(config.observations >= 1, "observations must be >= 1");
            for (const auto& [name, value] : config.coefficients) {
                (void)value;
                if (name == "asc_transit") continue;
                bool known = false;
                for (const std::string& f : default_logit_spec().features)
                    known = known || f == name;
                require(known, "unknown logit coefficient '" + name + "'");
            }
            break;
    }
    if (config.injection) {
        require(!config.injection->station.empty(), "injection station must be named");
        require(config.injection->factor > 0.0, "injection factor must be > 0");
        require(config.injection->end_minute > config.injection->start_minute,
                "injection window must have positive length");
    }
    if (config.network_template != Template::logit_cohort) {
        // rule-1 cards re-tap 20 minutes after their scheduled trip and both
        // taps must land inside the incident window
        require(end - start >= 40.0, "incident window must span at least 40 minutes");
    }
}

namespace {

std::vector<ChoiceObservation> simulate_cohort(Rng& rng, const ScenarioConfig& config,
                                               std::map<std::string, double>& truth_out) {
    std::map<std::string, double> truth = config.coefficients;
    if (truth.empty()) truth = {{"asc_transit", -1.0}, {"od_redundancy", 1.2}};
    truth_out = truth;

    std::vector<std::string> features;
    for (const std::string& f : default_logit_spec().features)
        if (truth.count(f)) features.push_back(f);

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<ChoiceObservation> out;
    out.reserve(static_cast<size_t>(config.observations));
    for (int i = 0; i < config.observations; ++i) {
        ChoiceObservation o;
        o.card = card_name(i);
        o.incident_ordinal = 1;
        o.total_added = std::floor(2000.0 * uni(rng) * 4.0) / 4.0;
        o.add_frequency = std::floor(300.0 * uni(rng));
        o.max_added = std::floor(200.0 * uni(rng) * 4.0) / 4.0;
        o.high_income = uni(rng) < 0.3;
        o.low_income = !o.high_income && uni(rng) < 0.3;
        o.pass = uni(rng) < 0.5;
        o.reduced_fare = uni(rng) < 0.2;
        o.downtown_destination = uni(rng) < 0.4;
        o.od_redundancy = std::floor(uni(rng) * 1000.0) / 1000.0;

        // design-space utility: monetary features per $1000, frequency per 100
        double u = truth.count("asc_transit") ? truth.at("asc_transit") : 0.0;
        for (const std::string& f : features) {
            double raw = 0.0, scale = 1.0;
            if (f == "total_added_value") raw = o.total_added, scale = 1e-3;
            else if (f == "add_value_frequency") raw = o.add_frequency, scale = 1e-2;
            else if (f == "max_added_value") raw = o.max_added, scale = 1e-3;
            else if (f == "high_income") raw = o.high_income ? 1.0 : 0.0;
            else if (f == "low_income") raw = o.low_income ? 1.0 : 0.0;
            else if (f == "pass") raw = o.pass ? 1.0 : 0.0;
            else if (f == "reduced_fare") raw = o.reduced_fare ? 1.0 : 0.0;
            else if (f == "od_redundancy") raw = o.od_redundancy;
            else if (f == "downtown_destination") raw = o.downtown_destination ? 1.0 : 0.0;
            u += truth.at(f) * raw * scale;
        }
        double p = 1.0 / (1.0 + std::exp(-u));
        o.label = uni(rng) < p ? ChoiceLabel::transit : ChoiceLabel::other;
        out.push_back(std::move(o));
    }
    return out;
}

} // namespace

Scenario generate(const ScenarioConfig& config) {
    validate_config(config);
    Scenario scenario;
    scenario.config = config;
    Rng rng(config.seed);

    if (config.network_template == Template::logit_cohort) {
        scenario.observations = simulate_cohort(rng, config, scenario.truth.coefficients);
        return scenario;
    }

    // network and incident
    RouteParams fast = config.fast, slow = config.slow;
    if (config.network_template == Template::paper_example) {
        fast = {20.0, 30.0, 200.0};  // the worked example's attribute tuple
        slow = {60.0, 30.0, 200.0};
    }
    json doc = config.network_template == Template::grid ? grid_doc(config.grid_size)
                                                         : parallel_doc(fast, slow);
    scenario.network = load_network(doc);

    scenario.incident.blocked_segments = config.incident.blocked_segments;
    if (scenario.incident.blocked_segments.empty()) {
        if (config.network_template == Template::grid) {
            int mid = config.grid_size / 2;
            scenario.incident.blocked_segments = {"h-" + std::to_string(mid) + "-" +
                                                  std::to_string(std::max(0, mid - 1))};
        } else {
            scenario.incident.blocked_segments = {"s-oa"};
        }
    }
    std::sort(scenario.incident.blocked_segments.begin(), scenario.incident.blocked_segments.end());
    Day incident_day = parse_date(config.incident.date);
    Minutes window_start = parse_time_of_day(config.incident.start);
    Minutes window_end = parse_time_of_day(config.incident.end);
    scenario.incident.start_time = day_start(incident_day) + window_start;
    scenario.incident.end_time = day_start(incident_day) + window_end;
    validate_incident(scenario.network, scenario.incident);

    scenario.filter = PathFilter{};
    if (config.network_template != Template::grid) scenario.filter.k = 1;

    // ground truth scaffolding
    scenario.truth.dispatch_factor = kDispatchFactor;
    scenario.truth.blocked_lines = blocked_line_directions(scenario.network, scenario.incident);
    scenario.truth.injection = config.injection;
    for (int w = config.window_weeks; w >= 1; --w)
        scenario.truth.normal_days.push_back(incident_day - 7 * w);
    if (config.network_template != Template::grid) {
        // closed form holds when the single baseline path (k = 1) is the fast
        // route and the block severs it, leaving the slow route
        bool fast_blocked = false;
        for (const std::string& seg : scenario.incident.blocked_segments)
            fast_blocked = fast_blocked || seg == "s-oa" || seg == "s-ad";
        if (fast_blocked) {
            double before = route_throughput(fast, scenario.incident.duration());
            double after = route_throughput(slow, scenario.incident.duration());
            bool slow_blocked = false;
            for (const std::string& seg : scenario.incident.blocked_segments)
                slow_blocked = slow_blocked || seg == "s-ob" || seg == "s-bd";
            if (slow_blocked) after = 0.0;
            scenario.truth.analytic_nrui = std::min(after, before) / before;
        }
    }

    // incident log: the event itself, plus optional history well before the
    // lookback window so it can never evict a normal-day candidate
    int log_seq = 0;
    for (const std::string& line : scenario.truth.blocked_lines) {
        IncidentLogEntry entry;
        entry.id = "inc-" + std::to_string(log_seq++);
        entry.station = scenario.network.segment(scenario.incident.blocked_segments.front()).from;
        entry.line = line;
        entry.start = scenario.incident.start_time;
        entry.end = scenario.incident.end_time;
        scenario.log.push_back(entry);
    }
    {
        std::vector<std::string> line_ids;
        for (const auto& [id, line] : scenario.network.lines) {
            (void)line;
            line_ids.push_back(id);
        }
        for (int i = 0; i < config.extra_log_entries; ++i) {
            const LineDirection& line = scenario.network.line(line_ids[i % line_ids.size()]);
            IncidentLogEntry entry;
            entry.id = "hist-" + std::to_string(i);
            entry.station = line.station_sequence.front();
            entry.line = line.id;
            Day day = incident_day - 7 * (config.window_weeks + 1) - i;
            entry.start = day_start(day) + 600.0;
            entry.end = entry.start + 30.0 + static_cast<double>(rng() % 60);
            scenario.log.push_back(entry);
        }
    }

    // cards: who is regular, what they intend to do on the incident day.
    // The slices index the behavior scripts below: 0/1 transit, 2 other, 3 none.
    long long regulars = exact_count(config.cards, config.regular_share, "regular share");
    std::vector<int> behavior;
    for (int slice = 0; slice < 4; ++slice) {
        double share = slice == 0   ? config.mixture.transit_rule1
                       : slice == 1 ? config.mixture.transit_rule2
                       : slice == 2 ? config.mixture.other
                                    : config.mixture.unaffected;
        long long count = exact_count(static_cast<double>(regulars), share, "mixture slice");
        for (long long i = 0; i < count; ++i) behavior.push_back(slice);
    }
    require(static_cast<long long>(behavior.size()) == regulars,
            "mixture fractions must cover every regular card");
    std::shuffle(behavior.begin(), behavior.end(), rng);

    std::vector<std::string> residential, all_stations;
    std::string downtown;
    for (const auto& [id, station] : scenario.network.stations) {
        all_stations.push_back(id);
        if (station.is_downtown)
            downtown = id;
        else
            residential.push_back(id);
    }
    const int K = config.window_weeks;

    // Work stations: mostly downtown, with enough spread that destination and
    // redundancy columns are not determined by the home station alone. The
    // parallel shapes only reach A/B from O, so the spread lives on O homes.
    int o_works = 0;
    auto pick_work = [&](const std::string& home) -> std::string {
        if (config.network_template == Template::grid) {
            if (rng() % 100 < 60) return downtown;
            std::string work;
            do {
                work = all_stations[rng() % all_stations.size()];
            } while (work == home);
            return work;
        }
        if (home == "O") {
            const char* works[] = {"D", "A", "B"};
            return works[o_works++ % 3];
        }
        return "D";
    };

    std::vector<CardPlan> plans;
    for (int i = 0; i < config.cards; ++i) {
        CardPlan plan;
        plan.card = card_name(i);
        plan.regular = i < regulars;
        plan.pass = rng() % 100 < 40;
        plan.reduced = rng() % 100 < 15;
        if (plan.regular) {
            int slice = behavior[static_cast<size_t>(i)];
            plan.label = slice <= 1 ? "Transit" : slice == 2 ? "Other" : "Unlabeled";
            plan.home = residential[static_cast<size_t>(i) % residential.size()];
            plan.work = pick_work(plan.home);
            plan.reroute = residential[(static_cast<size_t>(i) + 1) % residential.size()];
            double half = std::floor((window_end - window_start) / 2.0);
            plan.scheduled = {window_start + static_cast<double>(rng() % static_cast<unsigned long long>(half + 1)),
                              1020.0 + static_cast<double>(rng() % 41)};
            for (size_t n = 0; n < plan.scheduled.size(); ++n)
                plan.jitter.push_back(balanced_jitter(rng, K, config.jitter_minutes));
            CardTruth truth;
            truth.regular = true;
            truth.label = plan.label;
            truth.home = plan.home;
            truth.work = plan.work;
            truth.scheduled_minutes = plan.scheduled;
            scenario.truth.cards[plan.card] = truth;
        } else {
            CardTruth truth;
            truth.regular = false;
            scenario.truth.cards[plan.card] = truth;
        }
        plans.push_back(std::move(plan));
    }

    // AFC, one file's worth of taps per day
    std::vector<Day> days = scenario.truth.normal_days;
    days.push_back(incident_day);
    double rate = config.demand_rate;
    for (size_t di = 0; di < days.size(); ++di) {
        Day day = days[di];
        bool is_incident = day == incident_day;
        std::vector<TapEvent>& taps = scenario.afc[day];
        for (const auto& [sid, station] : scenario.network.stations) {
            (void)station;
            for (double t = kServiceStart; t < kServiceEnd; t += config.interval_minutes) {
                double cell_rate = rate;
                if (is_incident && config.injection && config.injection->station == sid &&
                    t >= config.injection->start_minute && t < config.injection->end_minute)
                    cell_rate *= config.injection->factor;
                int count = poisson(rng, cell_rate);
                for (int i = 0; i < count; ++i) {
                    std::string card = "bg-" + format_date(day) + "-" + sid + "-" +
                                       std::to_string(static_cast<int>(t)) + "-" + std::to_string(i);
                    taps.push_back(make_tap(card, day_start(day) + quarter_uniform(rng, t, config.interval_minutes),
                                            sid, false, false));
                }
            }
        }
        for (CardPlan& plan : plans) {
            if (plan.regular) {
                if (!is_incident) {
                    for (size_t n = 0; n < plan.scheduled.size(); ++n) {
                        double minute = plan.scheduled[n] + plan.jitter[n][di];
                        taps.push_back(make_tap(plan.card, day_start(day) + minute,
                                                n == 0 ? plan.home : plan.work, plan.pass,
                                                plan.reduced));
                    }
                } else {
                    int slice = behavior[static_cast<size_t>(&plan - plans.data())];
                    double m1 = plan.scheduled[0], m2 = plan.scheduled[1];
                    Minutes base = day_start(day);
                    if (slice == 0) {  // extra trip inside the window
                        taps.push_back(make_tap(plan.card, base + m1, plan.home, plan.pass, plan.reduced));
                        taps.push_back(make_tap(plan.card, base + m1 + 20.0, plan.reroute, plan.pass, plan.reduced));
                    } else if (slice == 1) {  // same trip from a different origin
                        taps.push_back(make_tap(plan.card, base + m1, plan.reroute, plan.pass, plan.reduced));
                    } else if (slice == 3) {  // unaffected
                        taps.push_back(make_tap(plan.card, base + m1, plan.home, plan.pass, plan.reduced));
                    }  // slice 2 skips the window trip entirely
                    taps.push_back(make_tap(plan.card, base + m2, plan.work, plan.pass, plan.reduced));
                }
            } else {
                // varying daily trip count defeats the regularity rule outright
                int count = is_incident ? 1 : 1 + static_cast<int>(di % 2);
                for (int n = 0; n < count; ++n) {
                    double minute = quarter_uniform(rng, kServiceStart, kServiceEnd - kServiceStart - 1.0);
                    const std::string& where =
                        residential[rng() % residential.size()];
                    taps.push_back(make_tap(plan.card, day_start(day) + minute, where,
                                            plan.pass, plan.reduced));
                }
            }
        }
        std::sort(taps.begin(), taps.end(), [](const TapEvent& a, const TapEvent& b) {
            return std::tie(a.time, a.card, a.location) < std::tie(b.time, b.card, b.location);
        });
    }

    // AVL: fixed dispatch per line, doubled inside the incident window on
    // blocked lines
    for (const auto& [line_id, line] : scenario.network.lines) {
        bool disrupted = std::find(scenario.truth.blocked_lines.begin(),
                                   scenario.truth.blocked_lines.end(),
                                   line_id) != scenario.truth.blocked_lines.end();
        for (Day day : days) {
            bool degrade = disrupted && day == incident_day;
            int seq = 0;
            for (double t = kServiceStart; t < kServiceEnd;) {
                std::string trip = "t-" + line_id + "-" + format_date(day) + "-" + std::to_string(seq++);
                double offset = 0.0;
                for (size_t s = 0; s < line.station_sequence.size(); ++s) {
                    if (s > 0) offset += line.segment_travel_times[s - 1];
                    VehicleEvent event;
                    event.trip = trip;
                    event.line = line_id;
                    event.station = line.station_sequence[s];
                    event.arrival = day_start(day) + t + offset;
                    scenario.avl.push_back(event);
                }
                double step = line.scheduled_headway;
                if (degrade && t >= window_start && t < window_end) step *= kDispatchFactor;
                t += step;
            }
        }
    }

    // sales: a modest add-value history per card in the incident year
    {
        Day jan = parse_date(std::to_string(year_of(incident_day)) + "-01-10");
        for (const CardPlan& plan : plans) {
            int transactions = 4 + static_cast<int>(rng() % 9);
            for (int i = 0; i < transactions; ++i) {
                SaleTransaction sale;
                sale.card = plan.card;
                sale.time = day_start(jan + 28 * i) + 600.0 + static_cast<double>(rng() % 480);
                sale.amount = 10.0 + 5.0 * static_cast<double>(rng() % 9);
                scenario.sales.push_back(sale);
            }
        }
    }

    // OD universe for the redundancy commands
    if (config.network_template == Template::grid) {
        auto stations = scenario.network.rail_stations();
        for (const std::string& from : stations)
            for (const std::string& to : stations)
                if (from != to) scenario.ods.push_back({from, to});
    } else {
        scenario.ods.push_back({"O", "D"});
    }
    return scenario;
}

json ground_truth_to_json(const GroundTruth& truth) {
    json cards = json::object();
    for (const auto& [card, entry] : truth.cards) {
        json row{{"regular", entry.regular}};
        if (entry.regular) {
            row["label"] = entry.label;
            row["home"] = entry.home;
            row["work"] = entry.work;
            row["scheduled_minutes"] = entry.scheduled_minutes;
        }
        cards[card] = std::move(row);
    }
    json doc{{"normal_days", json::array()},
             {"blocked_lines", truth.blocked_lines},
             {"dispatch_factor", truth.dispatch_factor},
             {"analytic_nrui", nullptr},
             {"injection", nullptr},
             {"coefficients", truth.coefficients},
             {"cards", std::move(cards)}};
    for (Day day : truth.normal_days) doc["normal_days"].push_back(format_date(day));
    if (truth.analytic_nrui) doc["analytic_nrui"] = *truth.analytic_nrui;
    if (truth.injection) {
        doc["injection"] = {{"station", truth.injection->station},
                            {"start_minute", truth.injection->start_minute},
                            {"end_minute", truth.injection->end_minute},
                            {"factor", truth.injection->factor}};
    }
    return doc;
}

GroundTruth load_ground_truth(const std::string& path) {
    json doc = read_json_file(path);
    GroundTruth truth;
    try {
        for (const auto& day : doc.at("normal_days"))
            truth.normal_days.push_back(parse_date(day.get<std::string>()));
        truth.blocked_lines = doc.at("blocked_lines").get<std::vector<std::string>>();
        truth.dispatch_factor = doc.at("dispatch_factor").get<double>();
        if (!doc.at("analytic_nrui").is_null())
            truth.analytic_nrui = doc.at("analytic_nrui").get<double>();
        if (!doc.at("injection").is_null()) {
            const json& inj = doc.at("injection");
            InjectionConfig injection;
            injection.station = inj.at("station").get<std::string>();
            injection.start_minute = inj.at("start_minute").get<double>();
            injection.end_minute = inj.at("end_minute").get<double>();
            injection.factor = inj.at("factor").get<double>();
            truth.injection = injection;
        }
        truth.coefficients = doc.at("coefficients").get<std::map<std::string, double>>();
        for (const auto& [card, row] : doc.at("cards").items()) {
            CardTruth entry;
            entry.regular = row.at("regular").get<bool>();
            if (entry.regular) {
                entry.label = row.at("label").get<std::string>();
                entry.home = row.at("home").get<std::string>();
                entry.work = row.at("work").get<std::string>();
                entry.scheduled_minutes = row.at("scheduled_minutes").get<std::vector<double>>();
            }
            truth.cards[card] = std::move(entry);
        }
    } catch (const json::exception& e) {
        throw schema_error(path + ": " + e.what());
    }
    return truth;
}

void write_scenario(const Scenario& scenario, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw missing_input_error("cannot create output directory '" + out_dir + "'");

    json scenario_doc = scenario_config_to_json(scenario.config);
    scenario_doc["filter"] = {{"k", scenario.filter.k},
                              {"max_transfers", scenario.filter.max_transfers},
                              {"max_detour_ratio", scenario.filter.max_detour_ratio}};
    write_json_file(out_dir + "/scenario.json", scenario_doc);
    write_json_file(out_dir + "/ground_truth.json", ground_truth_to_json(scenario.truth));

    if (scenario.config.network_template == Template::logit_cohort) {
        write_csv_file(out_dir + "/observations.csv", observations_to_csv(scenario.observations));
        return;
    }

    save_network_file(out_dir + "/network.json", scenario.network);
    write_json_file(out_dir + "/incident.json", incident_to_json(scenario.incident));

    CsvTable log_table;
    log_table.header = {"incident_id", "station_id", "line_id", "start_time", "end_time"};
    for (const IncidentLogEntry& entry : scenario.log)
        log_table.rows.push_back({entry.id, entry.station, entry.line,
                                  format_timestamp(entry.start), format_timestamp(entry.end)});
    write_csv_file(out_dir + "/incident_log.csv", log_table);

    CsvTable avl_table;
    avl_table.header = {"trip_id", "line_direction_id", "station_id", "arrival_iso8601"};
    for (const VehicleEvent& event : scenario.avl)
        avl_table.rows.push_back(
            {event.trip, event.line, event.station, format_timestamp(event.arrival)});
    write_csv_file(out_dir + "/avl.csv", avl_table);

    fs::create_directories(out_dir + "/afc", ec);
    if (ec) throw missing_input_error("cannot create output directory '" + out_dir + "/afc'");
    for (const auto& [day, taps] : scenario.afc) {
        CsvTable table;
        table.header = {"card_id", "timestamp_iso8601", "location_id",
                        "mode", "fare_type", "reduced_fare"};
        for (const TapEvent& tap : taps)
            table.rows.push_back({tap.card, format_timestamp(tap.time), tap.location,
                                  mode_name(tap.mode), tap.fare_type, tap.reduced ? "1" : "0"});
        write_csv_file(out_dir + "/afc/" + format_date(day) + ".csv", table);
    }

    CsvTable sales_table;
    sales_table.header = {"card_id", "timestamp_iso8601", "amount"};
    for (const SaleTransaction& sale : scenario.sales)
        sales_table.rows.push_back(
            {sale.card, format_timestamp(sale.time), format_double(sale.amount)});
    write_csv_file(out_dir + "/sales.csv", sales_table);

    CsvTable od_table;
    od_table.header = {"origin", "destination"};
    for (const Od& od : scenario.ods) od_table.rows.push_back({od.origin, od.destination});
    write_csv_file(out_dir + "/ods.csv", od_table);
}

std::vector<Od> load_od_file(const std::string& path, const TransitNetwork* net) {
    CsvTable table = read_csv_file(path, {"origin", "destination"});
    int c_from = table.col("origin"), c_to = table.col("destination");
    std::set<Od> seen;
    std::vector<Od> out;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const std::string where = path + " row " + std::to_string(i + 2);
        Od od{table.rows[i][static_cast<size_t>(c_from)],
              table.rows[i][static_cast<size_t>(c_to)]};
        if (od.origin.empty() || od.destination.empty())
            throw schema_error(where + ": origin and destination must be non-empty");
        if (net) {
            for (const std::string& st : {od.origin, od.destination})
                if (!net->has_station(st))
                    throw integrity_error(where + ": unknown station '" + st + "'");
        }
        if (!seen.insert(od).second)
            throw schema_error(where + ": duplicate OD pair " + od.origin + " -> " + od.destination);
        out.push_back(std::move(od));
    }
    return out;
}

} // namespace tia
