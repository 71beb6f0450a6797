#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tia/network.hpp"
#include "tia/paths.hpp"

namespace tia {

/// Equivalent passenger trips per hour a path can move during a block of
/// `duration_minutes`. Vehicles depart every H_p minutes; a vehicle departing
/// at (k-1)H_p completes min(D - (k-1)H_p, L_p)/L_p of its run within the
/// window and contributes that fraction of C_p.
double path_throughput(const Path& path, double duration_minutes);

struct OdThroughput {
    Od od;
    bool affected = false;  ///< OD ∈ W_I
    double before = 0.0;    ///< T_w, passengers/hour
    double after = 0.0;     ///< T̃_w, clamped so after <= before
};

OdThroughput od_throughputs(const PathSet& set, double duration_minutes);

struct NruiValue {
    double value = 1.0;
    /// True when no OD was affected or every affected T_w is zero: there is
    /// nothing to degrade, so 1.0 is reported but should not be read as a
    /// measured ratio.
    bool vacuous = true;
};

/// R_I = Σ T̃_w / Σ T_w over the rows flagged affected. Other rows are ignored.
NruiValue nrui(const std::vector<OdThroughput>& rows);

/// T̃_w / T_w for one OD. Unlike nrui this is defined for unaffected ODs (it
/// is then 1); T_w = 0 is an error.
double od_redundancy(const PathSet& set, double duration_minutes);

struct PathThroughputRow {
    Path path;
    double throughput = 0.0;  ///< A_p, passengers/hour
};

struct OdReport {
    Od od;
    bool affected = false;
    double before = 0.0;
    double after = 0.0;
    std::optional<double> ratio;  ///< T̃_w/T_w, absent when T_w = 0
    std::vector<PathThroughputRow> baseline;
    std::vector<PathThroughputRow> incident;
};

struct ThroughputReport {
    double duration = 0.0;  ///< D_I actually used, minutes
    NruiValue redundancy;
    std::vector<std::string> blocked_lines;
    std::vector<OdReport> ods;  ///< every requested OD, sorted by (origin, destination)
};

/// Full Eq. 1-4 evaluation for one incident over an OD universe.
/// duration_minutes <= 0 means "use the incident's own duration".
ThroughputReport throughput_report(const TransitNetwork& net, const IncidentSpec& incident,
                                   const std::vector<Od>& ods, const PathFilter& filter,
                                   double duration_minutes = 0.0);

json report_to_json(const ThroughputReport& report);

struct StationSweepRow {
    std::string station;
    std::string track;                        ///< representative (smallest) segment id
    std::vector<std::string> blocked_segments;  ///< the whole group blocked for this case
    double redundancy = 1.0;
    bool vacuous = false;
    double incidents_per_year = 0.0;
    std::string quadrant;
};

struct SweepOptions {
    double duration = 60.0;   ///< minutes each hypothetical block lasts
    double log_years = 1.0;   ///< time span the incident log covers
    /// Quadrant cuts; unset means "median of this sweep's rows".
    std::optional<double> redundancy_threshold;
    std::optional<double> rate_threshold;
    int threads = 0;          ///< 0 = hardware concurrency
};

/// Blocks every station's track groups one at a time and scores the result.
/// A track group at a station is the set of its incident segments connected by
/// shared rail service; crossing lines at a transfer station form separate
/// groups and are blocked independently. OD universe: all ordered rail pairs.
std::vector<StationSweepRow> station_sweep(const TransitNetwork& net,
                                           const std::vector<IncidentLogEntry>& log,
                                           const PathFilter& filter,
                                           const SweepOptions& options);

} // namespace tia
