#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tia/flows.hpp"
#include "tia/paths.hpp"

namespace tia {

struct TripRecord {
    std::string origin;
    /// Exit station. Taken from the feed's destination column when present,
    /// otherwise from the next-tap heuristic; absent for a day's last trip
    /// when nothing supplies it.
    std::optional<std::string> destination;
    Minutes time = 0.0;
    int ordinal = 0;  ///< 1-based position within the day
    bool heuristic_destination = false;
};

/// One card's trips over the study days, grouped by service day, plus the
/// per-ordinal start-time statistics used by the regularity test. The
/// statistics are only filled when the card shows up on every normal day with
/// the same trip count; otherwise regularity already failed.
struct PassengerPanel {
    std::string card;
    bool pass = false;          ///< any tap with fare_type "pass"
    bool reduced_fare = false;  ///< any tap flagged reduced
    std::map<Day, std::vector<TripRecord>> normal_trips;
    std::vector<TripRecord> incident_trips;
    std::vector<double> ordinal_mean;   ///< mean start minute-of-day per ordinal
    std::vector<double> ordinal_sigma;  ///< sample std dev, 0 for a single day
};

/// Groups taps into per-card panels. Taps outside the normal days and the
/// incident day are ignored; trips within a day are ordered by tap time.
std::vector<PassengerPanel> build_panels(const std::vector<TapEvent>& taps,
                                         const std::vector<Day>& normal_days,
                                         Day incident_day);

/// Cards that travel every normal day with an identical trajectory: same trip
/// count, same origin (and destination, where carried) per ordinal, and every
/// start time inside the closed band [mean - sigma, mean + sigma]. Sigma 0
/// therefore demands exact repetition. Requires at least two normal days.
std::set<std::string> find_regular_passengers(const std::vector<PassengerPanel>& panels,
                                              const std::vector<Day>& normal_days);

enum class ChoiceLabel { transit, other, unlabeled };
std::string label_name(ChoiceLabel label);

/// Incident-day choice of a regular passenger. Compares the trips falling in
/// the incident period: more trips than usual or a changed tap-in station
/// means the passenger stayed with transit; fewer trips means they left the
/// system; an unchanged trajectory is unlabeled. The station comparison runs
/// ordinal-by-ordinal over the shorter of the two windows and outranks the
/// fewer-trips rule.
ChoiceLabel label_choice(const PassengerPanel& panel, const IncidentSpec& incident);

struct SaleTransaction {
    std::string card;
    Minutes time = 0.0;
    double amount = 0.0;  ///< currency added, > 0
};

/// CSV columns: card_id, timestamp_iso8601, amount.
std::vector<SaleTransaction> load_sales(const std::string& path);

struct FeatureConfig {
    /// Calendar year for the add-value aggregates; 0 means the incident's year.
    int sales_year = 0;
    double high_income_threshold = 120000.0;
    double low_income_threshold = 25000.0;
    PathFilter filter;              ///< path rules behind the OD redundancy term
    double duration_minutes = 0.0;  ///< throughput window; 0 means incident duration
};

struct ChoiceObservation {
    std::string card;
    ChoiceLabel label = ChoiceLabel::unlabeled;
    // X_i: card-history and neighborhood proxies
    double total_added = 0.0;    ///< $ added over the sales year
    double add_frequency = 0.0;  ///< add-value transactions over the sales year
    double max_added = 0.0;      ///< largest single add-value amount
    bool high_income = false;
    bool low_income = false;
    bool pass = false;
    bool reduced_fare = false;
    // Z_i: trip context of the incident-related trip
    bool downtown_destination = false;
    double od_redundancy = 1.0;
    int incident_ordinal = 0;  ///< n*, first ordinal whose mean start falls in the window
    bool heuristic_destination = false;

    bool operator==(const ChoiceObservation&) const = default;
};

/// Memoizes the OD-level redundancy ratio behind Z_i so a cohort sharing an OD
/// pays for one path search. Returns nothing when the OD has no usable
/// baseline throughput.
class OdRedundancyCache {
  public:
    OdRedundancyCache(const TransitNetwork& net, const IncidentSpec& incident,
                      const FeatureConfig& config);
    std::optional<double> value(const std::string& origin, const std::string& destination);

  private:
    const TransitNetwork& net_;
    const IncidentSpec& incident_;
    PathFilter filter_;
    double duration_ = 0.0;
    std::map<Od, std::optional<double>> cache_;
};

struct ExtractOutcome {
    std::optional<ChoiceObservation> observation;
    std::string drop_reason;  ///< set when observation is absent
};

/// Labels the panel and assembles the feature vector. Drops (with a reason)
/// when no rule fires, no regular trip falls in the incident window, the
/// incident-related trip lacks a destination, the home station has no income
/// entry, or the OD supports no baseline service.
ExtractOutcome extract_features(const PassengerPanel& panel,
                                const std::vector<SaleTransaction>& sales,
                                const TransitNetwork& net, const IncidentSpec& incident,
                                OdRedundancyCache& rod, const FeatureConfig& config);

struct DroppedCard {
    std::string card;
    std::string reason;
};

struct ObservationSet {
    std::vector<ChoiceObservation> observations;
    std::vector<DroppedCard> dropped;  ///< regular cards that produced no row
    int panel_count = 0;
    int regular_count = 0;
};

/// Full cohort pass: regularity filter, labeling, features. Sales may cover
/// every card; they are partitioned internally.
ObservationSet build_observations(const std::vector<PassengerPanel>& panels,
                                  const std::vector<Day>& normal_days,
                                  const std::vector<SaleTransaction>& sales,
                                  const TransitNetwork& net, const IncidentSpec& incident,
                                  const FeatureConfig& config);

/// Columns: card_id, label, total_added_value, add_value_frequency,
/// max_added_value, high_income, low_income, pass, reduced_fare,
/// downtown_destination, od_redundancy, incident_ordinal,
/// heuristic_destination.
CsvTable observations_to_csv(const std::vector<ChoiceObservation>& observations);
std::vector<ChoiceObservation> load_observations(const std::string& path);

} // namespace tia
