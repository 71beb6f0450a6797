#pragma once

#include <string>

#include "tia/errors.hpp"
#include "tia/io.hpp"

namespace tia {

/// Environment variable naming a JSON file of default flag values shared by
/// every subcommand: k, max_transfers, max_detour_ratio, interval_minutes,
/// window_weeks, buffer_minutes, duration_minutes, log_years, threads.
/// Explicit flags always win over the file.
inline constexpr const char* kConfigEnvVar = "TIA_CONFIG";

/// Process exit code for an error class (sysexits-flavored; the full table is
/// in the README). Usage errors from flag parsing share the bad_argument code.
int exit_code_for(ErrorCode code);

/// Composes the full incident dossier over a scenario directory in the layout
/// `synth` writes: network redundancy, blocked-line headway series, tap-in
/// demand deltas, the labeled regular-passenger cohort, and the fitted choice
/// model, in that order. Writes report.json / report.txt plus the per-section
/// tables under out_dir and returns the dossier document. Every input is read
/// and every section computed before anything is written, so a failure leaves
/// no partial output behind.
json report_scenario(const std::string& scenario_dir, const std::string& out_dir);

/// `tia` entry point: parses argv, runs one subcommand, maps thrown errors to
/// exit codes. Never throws; failures print "error: ..." on stderr.
int run_cli(int argc, const char* const* argv);

} // namespace tia
