#pragma once

#include <map>
#include <string>
#include <vector>

#include "tia/behavior.hpp"

namespace tia {

/// Binary logit specification. The base alternative's ASC is fixed to 0, so
/// the model estimates one ASC plus one coefficient per listed feature.
struct LogitSpec {
    std::vector<std::string> alternatives = {"Transit", "Other"};
    std::string base = "Other";
    /// Feature columns, in reporting order. Monetary features are rescaled
    /// internally (per $1000, per 100 transactions) so coefficients land in
    /// readable magnitudes.
    std::vector<std::string> features;
};

/// The full nine-variable specification: add-value history, income-area and
/// fare-status flags, OD redundancy, downtown destination.
LogitSpec default_logit_spec();

/// JSON document with keys `alternatives`, `base`, `features`.
LogitSpec load_logit_spec(const std::string& path);
void validate_spec(const LogitSpec& spec);

/// Modeled (non-base) alternative.
std::string chosen_alternative(const LogitSpec& spec);

/// Coefficient names: "asc_<chosen>" followed by the feature names.
std::vector<std::string> coefficient_names(const LogitSpec& spec);

struct ChoiceProbability {
    double chosen = 0.5;  ///< P(modeled alternative)
    double base = 0.5;
};

ChoiceProbability choice_probability(const LogitSpec& spec,
                                     const std::vector<double>& coefficients,
                                     const ChoiceObservation& obs);

struct LogLikelihood {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Σ log P(Y_i) with its analytic gradient. The sum is a fixed midpoint-split
/// pairwise reduction, so it is deterministic and concatenating a dataset
/// with itself exactly doubles both outputs.
LogLikelihood log_likelihood(const LogitSpec& spec, const std::vector<double>& coefficients,
                             const std::vector<ChoiceObservation>& observations);

struct FitOptions {
    double gradient_tolerance = 1e-6;       ///< stop when ||grad||_inf drops below
    double relative_ll_tolerance = 1e-10;   ///< or when LL stops moving
    int max_iterations = 500;
};

struct Coefficient {
    std::string name;
    std::string label;  ///< Table-style row label, e.g. "Transit: ASC"
    double value = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    std::string stars;  ///< *** p<0.01, ** p<0.05, * p<0.1, . p<0.15
};

struct FitResult {
    LogitSpec spec;
    std::vector<Coefficient> coefficients;
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;  ///< n ln(1/2): every choice a coin flip
    double adjusted_rho_squared = 0.0;
    int observations = 0;
    int iterations = 0;
    bool converged = false;
    /// Design-space feature means, keyed by feature name (for sensitivity).
    std::map<std::string, double> sample_means;
};

/// Maximum-likelihood fit by BFGS ascent with Armijo backtracking. Standard
/// errors come from the inverse observed information at the optimum.
/// Collinear feature columns are rejected up front, by name.
FitResult fit(const LogitSpec& spec, const std::vector<ChoiceObservation>& observations,
              const FitOptions& options = {});

json fit_to_json(const FitResult& result);
FitResult fit_from_json(const json& doc);
FitResult load_fit(const std::string& path);

/// Table 3 style text block: one row per coefficient with value, standard
/// error, and significance stars, then the fixed base ASC and fit statistics.
std::string fit_table(const FitResult& result);

struct SensitivityPoint {
    double value = 0.0;        ///< swept OD redundancy
    double probability = 0.0;  ///< P(chosen) with other features at their means
    double elasticity = 0.0;   ///< beta_R * R * (1 - P)
};

struct SensitivityCurve {
    std::string variable;
    std::vector<SensitivityPoint> points;
};

/// P(chosen) across an OD-redundancy grid with every other feature held at its
/// sample mean. `overrides` pins features to raw-unit values instead (the
/// paper's high- vs low-income curves set one flag to 1). Grid values must lie
/// in [0, 1].
SensitivityCurve sensitivity_curve(const FitResult& fit, const std::vector<double>& grid,
                                   const std::map<std::string, double>& overrides = {});

double point_elasticity(const FitResult& fit, double r,
                        const std::map<std::string, double>& overrides = {});

/// Columns: od_redundancy, probability, elasticity.
CsvTable sensitivity_to_csv(const SensitivityCurve& curve);

/// "start:stop:step" inclusive of both ends (within half a step).
std::vector<double> parse_grid(const std::string& text);

} // namespace tia
