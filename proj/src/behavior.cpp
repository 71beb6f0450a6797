#include "tia/behavior.hpp"

#include <algorithm>
#include <cmath>

#include "tia/errors.hpp"
#include "tia/io.hpp"
#include "tia/redundancy.hpp"

namespace tia {

namespace {

// Per-ordinal start-time statistics, or nothing when the card misses a day or
// changes its trip count. Minute-of-day, so days are directly comparable.
struct OrdinalStats {
    std::vector<double> mean;
    std::vector<double> sigma;
};

std::optional<OrdinalStats> ordinal_stats(const PassengerPanel& panel,
                                          const std::vector<Day>& days) {
    size_t count = 0;
    bool first = true;
    for (Day d : days) {
        auto it = panel.normal_trips.find(d);
        if (it == panel.normal_trips.end() || it->second.empty()) return std::nullopt;
        if (first) {
            count = it->second.size();
            first = false;
        } else if (it->second.size() != count) {
            return std::nullopt;
        }
    }
    if (first || count == 0) return std::nullopt;

    OrdinalStats stats;
    stats.mean.resize(count, 0.0);
    stats.sigma.resize(count, 0.0);
    for (size_t n = 0; n < count; ++n) {
        double sum = 0.0;
        for (Day d : days) sum += minute_of_day(panel.normal_trips.at(d)[n].time);
        double mean = sum / static_cast<double>(days.size());
        stats.mean[n] = mean;
        if (days.size() >= 2) {
            double ss = 0.0;
            for (Day d : days) {
                double dev = minute_of_day(panel.normal_trips.at(d)[n].time) - mean;
                ss += dev * dev;
            }
            stats.sigma[n] = std::sqrt(ss / static_cast<double>(days.size() - 1));
        }
    }
    return stats;
}

std::vector<Day> unique_days(const std::vector<Day>& days) {
    std::vector<Day> out = days;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<TripRecord> taps_to_trips(std::vector<const TapEvent*>& taps) {
    std::sort(taps.begin(), taps.end(), [](const TapEvent* a, const TapEvent* b) {
        if (a->time != b->time) return a->time < b->time;
        return a->location < b->location;
    });
    std::vector<TripRecord> trips;
    trips.reserve(taps.size());
    for (size_t j = 0; j < taps.size(); ++j) {
        TripRecord trip;
        trip.origin = taps[j]->location;
        trip.time = taps[j]->time;
        trip.ordinal = static_cast<int>(j) + 1;
        if (taps[j]->destination) {
            trip.destination = taps[j]->destination;
        } else if (j + 1 < taps.size()) {
            trip.destination = taps[j + 1]->location;
            trip.heuristic_destination = true;
        }
        trips.push_back(std::move(trip));
    }
    return trips;
}

} // namespace

std::vector<PassengerPanel> build_panels(const std::vector<TapEvent>& taps,
                                         const std::vector<Day>& normal_days,
                                         Day incident_day) {
    std::vector<Day> days = unique_days(normal_days);
    std::set<Day> normal_set(days.begin(), days.end());

    std::map<std::string, std::map<Day, std::vector<const TapEvent*>>> grouped;
    for (const TapEvent& tap : taps) {
        Day d = day_of(tap.time);
        if (d != incident_day && !normal_set.count(d)) continue;
        grouped[tap.card][d].push_back(&tap);
    }

    std::vector<PassengerPanel> panels;
    panels.reserve(grouped.size());
    for (auto& [card, by_day] : grouped) {
        PassengerPanel panel;
        panel.card = card;
        for (auto& [d, day_taps] : by_day) {
            for (const TapEvent* tap : day_taps) {
                if (tap->fare_type == "pass") panel.pass = true;
                if (tap->reduced) panel.reduced_fare = true;
            }
            std::vector<TripRecord> trips = taps_to_trips(day_taps);
            if (d == incident_day) panel.incident_trips = std::move(trips);
            else panel.normal_trips[d] = std::move(trips);
        }
        if (auto stats = ordinal_stats(panel, days)) {
            panel.ordinal_mean = std::move(stats->mean);
            panel.ordinal_sigma = std::move(stats->sigma);
        }
        panels.push_back(std::move(panel));
    }
    return panels;
}

std::set<std::string> find_regular_passengers(const std::vector<PassengerPanel>& panels,
                                              const std::vector<Day>& normal_days) {
    std::vector<Day> days = unique_days(normal_days);
    if (days.size() < 2)
        throw bad_argument_error("regularity needs at least 2 normal days, got " +
                                 std::to_string(days.size()));

    std::set<std::string> regular;
    for (const PassengerPanel& panel : panels) {
        auto stats = ordinal_stats(panel, days);
        if (!stats) continue;  // missing day or varying trip count

        const std::vector<TripRecord>& ref = panel.normal_trips.at(days.front());
        bool ok = true;
        for (Day d : days) {
            const std::vector<TripRecord>& trips = panel.normal_trips.at(d);
            for (size_t n = 0; n < ref.size() && ok; ++n) {
                if (trips[n].origin != ref[n].origin) ok = false;
                if (trips[n].destination != ref[n].destination) ok = false;
                double minute = minute_of_day(trips[n].time);
                if (minute < stats->mean[n] - stats->sigma[n] ||
                    minute > stats->mean[n] + stats->sigma[n])
                    ok = false;
            }
            if (!ok) break;
        }
        if (ok) regular.insert(panel.card);
    }
    return regular;
}

std::string label_name(ChoiceLabel label) {
    switch (label) {
        case ChoiceLabel::transit: return "Transit";
        case ChoiceLabel::other: return "Other";
        case ChoiceLabel::unlabeled: break;
    }
    return "Unlabeled";
}

namespace {

// Ordinals (0-based) whose mean start time, anchored to the incident day,
// falls inside the closed incident window.
std::vector<size_t> window_ordinals(const PassengerPanel& panel, const IncidentSpec& incident) {
    std::vector<size_t> out;
    double base = day_start(day_of(incident.start_time));
    for (size_t n = 0; n < panel.ordinal_mean.size(); ++n) {
        double t = base + panel.ordinal_mean[n];
        if (t >= incident.start_time && t <= incident.end_time) out.push_back(n);
    }
    return out;
}

} // namespace

ChoiceLabel label_choice(const PassengerPanel& panel, const IncidentSpec& incident) {
    std::vector<size_t> normal_window = window_ordinals(panel, incident);
    std::vector<const TripRecord*> incident_window;
    for (const TripRecord& trip : panel.incident_trips)
        if (trip.time >= incident.start_time && trip.time <= incident.end_time)
            incident_window.push_back(&trip);

    if (incident_window.size() > normal_window.size()) return ChoiceLabel::transit;

    if (!panel.normal_trips.empty()) {
        const std::vector<TripRecord>& ref = panel.normal_trips.begin()->second;
        size_t common = std::min(normal_window.size(), incident_window.size());
        for (size_t j = 0; j < common; ++j)
            if (ref[normal_window[j]].origin != incident_window[j]->origin)
                return ChoiceLabel::transit;
    }

    if (incident_window.size() < normal_window.size()) return ChoiceLabel::other;
    return ChoiceLabel::unlabeled;
}

std::vector<SaleTransaction> load_sales(const std::string& path) {
    CsvTable table = read_csv_file(path, {"card_id", "timestamp_iso8601", "amount"});
    int c_card = table.col("card_id");
    int c_time = table.col("timestamp_iso8601");
    int c_amount = table.col("amount");

    std::vector<SaleTransaction> sales;
    sales.reserve(table.rows.size());
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const std::vector<std::string>& row = table.rows[i];
        const std::string where = path + " row " + std::to_string(i + 2);
        SaleTransaction sale;
        sale.card = row[c_card];
        if (sale.card.empty()) throw schema_error(where + ": empty card_id");
        sale.time = parse_timestamp(row[c_time]);
        sale.amount = parse_double_cell(row[c_amount], where + ", amount");
        if (sale.amount <= 0.0)
            throw data_error(where + ": add-value amount must be > 0");
        sales.push_back(std::move(sale));
    }
    return sales;
}

OdRedundancyCache::OdRedundancyCache(const TransitNetwork& net, const IncidentSpec& incident,
                                     const FeatureConfig& config)
    : net_(net),
      incident_(incident),
      filter_(config.filter),
      duration_(config.duration_minutes > 0.0 ? config.duration_minutes
                                              : incident.duration()) {}

std::optional<double> OdRedundancyCache::value(const std::string& origin,
                                               const std::string& destination) {
    Od od{origin, destination};
    auto it = cache_.find(od);
    if (it != cache_.end()) return it->second;

    std::optional<double> out;
    try {
        auto sets = incident_path_sets(net_, incident_, std::vector<Od>{od}, filter_);
        out = od_redundancy(sets.at(od), duration_);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::internal) throw;
        out = std::nullopt;  // degenerate OD (self-loop, unknown stop, no service)
    }
    cache_.emplace(std::move(od), out);
    return out;
}

ExtractOutcome extract_features(const PassengerPanel& panel,
                                const std::vector<SaleTransaction>& sales,
                                const TransitNetwork& net, const IncidentSpec& incident,
                                OdRedundancyCache& rod, const FeatureConfig& config) {
    ExtractOutcome out;
    if (panel.ordinal_mean.empty() || panel.normal_trips.empty()) {
        out.drop_reason = "not_regular";
        return out;
    }

    ChoiceLabel label = label_choice(panel, incident);
    if (label == ChoiceLabel::unlabeled) {
        out.drop_reason = "unlabeled";
        return out;
    }

    std::vector<size_t> ordinals = window_ordinals(panel, incident);
    if (ordinals.empty()) {
        out.drop_reason = "no_trip_in_window";
        return out;
    }
    size_t nstar = ordinals.front();

    const std::vector<TripRecord>& ref = panel.normal_trips.begin()->second;
    const TripRecord& star = ref[nstar];
    if (!star.destination) {
        out.drop_reason = "missing_destination";
        return out;
    }

    const std::string& home = ref.front().origin;
    auto income = net.income.find(home);
    if (income == net.income.end()) {
        out.drop_reason = "missing_income";
        return out;
    }

    std::optional<double> rod_value = rod.value(star.origin, *star.destination);
    if (!rod_value) {
        out.drop_reason = "no_baseline_service";
        return out;
    }

    ChoiceObservation obs;
    obs.card = panel.card;
    obs.label = label;
    int year = config.sales_year != 0 ? config.sales_year
                                      : year_of(day_of(incident.start_time));
    for (const SaleTransaction& sale : sales) {
        if (sale.card != panel.card) continue;
        if (year_of(day_of(sale.time)) != year) continue;
        obs.total_added += sale.amount;
        obs.add_frequency += 1.0;
        obs.max_added = std::max(obs.max_added, sale.amount);
    }
    obs.high_income = income->second > config.high_income_threshold;
    obs.low_income = income->second < config.low_income_threshold;
    obs.pass = panel.pass;
    obs.reduced_fare = panel.reduced_fare;
    obs.downtown_destination = net.station(*star.destination).is_downtown;
    obs.od_redundancy = *rod_value;
    obs.incident_ordinal = static_cast<int>(nstar) + 1;
    obs.heuristic_destination = star.heuristic_destination;
    out.observation = std::move(obs);
    return out;
}

ObservationSet build_observations(const std::vector<PassengerPanel>& panels,
                                  const std::vector<Day>& normal_days,
                                  const std::vector<SaleTransaction>& sales,
                                  const TransitNetwork& net, const IncidentSpec& incident,
                                  const FeatureConfig& config) {
    ObservationSet out;
    out.panel_count = static_cast<int>(panels.size());

    std::set<std::string> regular = find_regular_passengers(panels, normal_days);
    out.regular_count = static_cast<int>(regular.size());

    std::map<std::string, std::vector<SaleTransaction>> by_card;
    for (const SaleTransaction& sale : sales) by_card[sale.card].push_back(sale);
    static const std::vector<SaleTransaction> kNoSales;

    OdRedundancyCache rod(net, incident, config);
    for (const PassengerPanel& panel : panels) {
        if (!regular.count(panel.card)) continue;
        auto it = by_card.find(panel.card);
        const std::vector<SaleTransaction>& card_sales =
            it == by_card.end() ? kNoSales : it->second;
        ExtractOutcome result = extract_features(panel, card_sales, net, incident, rod, config);
        if (result.observation) out.observations.push_back(std::move(*result.observation));
        else out.dropped.push_back({panel.card, result.drop_reason});
    }
    return out;
}

namespace {

const std::vector<std::string> kObservationColumns = {
    "card_id",       "label",       "total_added_value",
    "add_value_frequency", "max_added_value", "high_income",
    "low_income",    "pass",        "reduced_fare",
    "downtown_destination", "od_redundancy", "incident_ordinal",
    "heuristic_destination"};

std::string flag_cell(bool value) { return value ? "1" : "0"; }

bool parse_flag_cell(const std::string& cell, const std::string& context) {
    if (cell == "1") return true;
    if (cell == "0") return false;
    throw schema_error(context + ": flag must be 0 or 1, got '" + cell + "'");
}

} // namespace

CsvTable observations_to_csv(const std::vector<ChoiceObservation>& observations) {
    CsvTable table;
    table.header = kObservationColumns;
    for (const ChoiceObservation& obs : observations) {
        table.rows.push_back({obs.card, label_name(obs.label), format_double(obs.total_added),
                              format_double(obs.add_frequency), format_double(obs.max_added),
                              flag_cell(obs.high_income), flag_cell(obs.low_income),
                              flag_cell(obs.pass), flag_cell(obs.reduced_fare),
                              flag_cell(obs.downtown_destination),
                              format_double(obs.od_redundancy),
                              std::to_string(obs.incident_ordinal),
                              flag_cell(obs.heuristic_destination)});
    }
    return table;
}

std::vector<ChoiceObservation> load_observations(const std::string& path) {
    CsvTable table = read_csv_file(path, kObservationColumns);
    std::vector<int> cols;
    for (const std::string& name : kObservationColumns) cols.push_back(table.col(name));

    std::vector<ChoiceObservation> observations;
    observations.reserve(table.rows.size());
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const std::vector<std::string>& row = table.rows[i];
        const std::string where = path + " row " + std::to_string(i + 2);
        int c = 0;
        auto cell = [&]() -> const std::string& { return row[cols[c++]]; };

        ChoiceObservation obs;
        obs.card = cell();
        const std::string& label = cell();
        if (label == "Transit") obs.label = ChoiceLabel::transit;
        else if (label == "Other") obs.label = ChoiceLabel::other;
        else
            throw schema_error(where + ": label must be Transit or Other, got '" + label + "'");
        obs.total_added = parse_double_cell(cell(), where + ", total_added_value");
        obs.add_frequency = parse_double_cell(cell(), where + ", add_value_frequency");
        obs.max_added = parse_double_cell(cell(), where + ", max_added_value");
        if (obs.total_added < 0.0 || obs.add_frequency < 0.0 || obs.max_added < 0.0)
            throw data_error(where + ": monetary features must be >= 0");
        obs.high_income = parse_flag_cell(cell(), where + ", high_income");
        obs.low_income = parse_flag_cell(cell(), where + ", low_income");
        obs.pass = parse_flag_cell(cell(), where + ", pass");
        obs.reduced_fare = parse_flag_cell(cell(), where + ", reduced_fare");
        obs.downtown_destination = parse_flag_cell(cell(), where + ", downtown_destination");
        obs.od_redundancy = parse_double_cell(cell(), where + ", od_redundancy");
        if (obs.od_redundancy < 0.0 || obs.od_redundancy > 1.0)
            throw data_error(where + ": od_redundancy must lie in [0, 1]");
        obs.incident_ordinal =
            static_cast<int>(parse_long_cell(cell(), where + ", incident_ordinal"));
        obs.heuristic_destination = parse_flag_cell(cell(), where + ", heuristic_destination");
        observations.push_back(std::move(obs));
    }
    return observations;
}

} // namespace tia
