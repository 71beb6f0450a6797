#include "tia/logit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <future>
#include <set>

#include <Eigen/Dense>

#include "tia/errors.hpp"
#include "tia/io.hpp"

namespace tia {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FeatureDef {
    const char* name;
    const char* label_suffix;
    double scale;  ///< raw unit -> design unit
    double (*raw)(const ChoiceObservation&);
};

const FeatureDef kFeatureDefs[] = {
    {"total_added_value", "Total added value ($1000/year)", 1e-3,
     [](const ChoiceObservation& o) { return o.total_added; }},
    {"add_value_frequency", "Add-value frequency (100 times/year)", 1e-2,
     [](const ChoiceObservation& o) { return o.add_frequency; }},
    {"max_added_value", "Max single added value ($1000)", 1e-3,
     [](const ChoiceObservation& o) { return o.max_added; }},
    {"high_income", "Living in high household income area (Yes = 1)", 1.0,
     [](const ChoiceObservation& o) { return o.high_income ? 1.0 : 0.0; }},
    {"low_income", "Living in low household income area (Yes = 1)", 1.0,
     [](const ChoiceObservation& o) { return o.low_income ? 1.0 : 0.0; }},
    {"pass", "Using pass (Yes = 1)", 1.0,
     [](const ChoiceObservation& o) { return o.pass ? 1.0 : 0.0; }},
    {"reduced_fare", "Reduced fare status (Yes = 1)", 1.0,
     [](const ChoiceObservation& o) { return o.reduced_fare ? 1.0 : 0.0; }},
    {"od_redundancy", "OD-based redundancy", 1.0,
     [](const ChoiceObservation& o) { return o.od_redundancy; }},
    {"downtown_destination", "Downtown destination (Yes = 1)", 1.0,
     [](const ChoiceObservation& o) { return o.downtown_destination ? 1.0 : 0.0; }},
};

const FeatureDef& feature_def(const std::string& name) {
    for (const FeatureDef& def : kFeatureDefs)
        if (name == def.name) return def;
    throw bad_argument_error("unknown logit feature '" + name + "'");
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double softplus(double u) {
    return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

// Design matrix: leading intercept column, then the spec's features in order.
MatrixXd design_matrix(const LogitSpec& spec, const std::vector<ChoiceObservation>& obs) {
    MatrixXd x(obs.size(), spec.features.size() + 1);
    for (size_t i = 0; i < obs.size(); ++i) {
        x(i, 0) = 1.0;
        for (size_t j = 0; j < spec.features.size(); ++j) {
            const FeatureDef& def = feature_def(spec.features[j]);
            x(i, j + 1) = def.raw(obs[i]) * def.scale;
        }
    }
    return x;
}

VectorXd response(const LogitSpec& spec, const std::vector<ChoiceObservation>& obs) {
    bool transit_chosen = chosen_alternative(spec) == "Transit";
    VectorXd y(obs.size());
    for (size_t i = 0; i < obs.size(); ++i) {
        bool is_transit = obs[i].label == ChoiceLabel::transit;
        y(i) = (is_transit == transit_chosen) ? 1.0 : 0.0;
    }
    return y;
}

struct LlAccum {
    double ll = 0.0;
    VectorXd grad;
};

constexpr size_t kAsyncSpan = 4096;
constexpr int kAsyncDepth = 3;

// Midpoint-split pairwise reduction. The tree depends only on the row count,
// so results are bit-stable across thread counts and a dataset concatenated
// with itself reduces to exactly twice the half.
LlAccum ll_reduce(const MatrixXd& x, const VectorXd& y, const VectorXd& theta, size_t lo,
                  size_t hi, int depth) {
    if (hi - lo == 1) {
        double u = x.row(lo).dot(theta);
        if (!std::isfinite(u)) throw data_error("non-finite utility in log-likelihood");
        LlAccum a;
        a.ll = y(lo) * u - softplus(u);
        a.grad = (y(lo) - logistic(u)) * x.row(lo).transpose();
        return a;
    }
    size_t mid = lo + (hi - lo) / 2;
    LlAccum left, right;
    if (hi - lo >= kAsyncSpan && depth < kAsyncDepth) {
        auto fut = std::async(std::launch::async, ll_reduce, std::cref(x), std::cref(y),
                              std::cref(theta), lo, mid, depth + 1);
        right = ll_reduce(x, y, theta, mid, hi, depth + 1);
        left = fut.get();
    } else {
        left = ll_reduce(x, y, theta, lo, mid, depth + 1);
        right = ll_reduce(x, y, theta, mid, hi, depth + 1);
    }
    left.ll += right.ll;
    left.grad += right.grad;
    return left;
}

MatrixXd information_reduce(const MatrixXd& x, const VectorXd& theta, size_t lo, size_t hi) {
    if (hi - lo == 1) {
        double p = logistic(x.row(lo).dot(theta));
        return p * (1.0 - p) * x.row(lo).transpose() * x.row(lo);
    }
    size_t mid = lo + (hi - lo) / 2;
    return information_reduce(x, theta, lo, mid) + information_reduce(x, theta, mid, hi);
}

void check_collinearity(const MatrixXd& x, const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    long rank = qr.rank();
    if (rank >= x.cols()) return;
    const auto& perm = qr.colsPermutation().indices();
    std::string culprits;
    for (long k = rank; k < x.cols(); ++k) {
        if (!culprits.empty()) culprits += ", ";
        culprits += names[static_cast<size_t>(perm(k))];
    }
    throw estimation_error("collinear features: " + culprits);
}

std::string stars_for(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    if (p < 0.15) return ".";
    return "";
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

} // namespace

LogitSpec default_logit_spec() {
    LogitSpec spec;
    for (const FeatureDef& def : kFeatureDefs) spec.features.push_back(def.name);
    return spec;
}

void validate_spec(const LogitSpec& spec) {
    if (spec.alternatives.size() != 2 || spec.alternatives[0] == spec.alternatives[1])
        throw bad_argument_error("binary logit needs exactly two distinct alternatives");
    if (spec.base != spec.alternatives[0] && spec.base != spec.alternatives[1])
        throw bad_argument_error("base alternative '" + spec.base +
                                 "' is not one of the alternatives");
    std::set<std::string> seen;
    for (const std::string& f : spec.features) {
        feature_def(f);  // throws on unknown names
        if (!seen.insert(f).second)
            throw bad_argument_error("duplicate logit feature '" + f + "'");
    }
}

LogitSpec load_logit_spec(const std::string& path) {
    json doc = read_json_file(path);
    LogitSpec spec;
    try {
        if (doc.contains("alternatives"))
            spec.alternatives = doc.at("alternatives").get<std::vector<std::string>>();
        if (doc.contains("base")) spec.base = doc.at("base").get<std::string>();
        if (doc.contains("features"))
            spec.features = doc.at("features").get<std::vector<std::string>>();
        else
            spec.features = default_logit_spec().features;
    } catch (const json::exception& e) {
        throw schema_error(path + ": " + e.what());
    }
    validate_spec(spec);
    return spec;
}

std::string chosen_alternative(const LogitSpec& spec) {
    return spec.alternatives[0] == spec.base ? spec.alternatives[1] : spec.alternatives[0];
}

std::vector<std::string> coefficient_names(const LogitSpec& spec) {
    std::string asc = "asc_" + chosen_alternative(spec);
    std::transform(asc.begin(), asc.end(), asc.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    std::vector<std::string> names = {asc};
    names.insert(names.end(), spec.features.begin(), spec.features.end());
    return names;
}

ChoiceProbability choice_probability(const LogitSpec& spec,
                                     const std::vector<double>& coefficients,
                                     const ChoiceObservation& obs) {
    validate_spec(spec);
    if (coefficients.size() != spec.features.size() + 1)
        throw bad_argument_error("expected " + std::to_string(spec.features.size() + 1) +
                                 " coefficients, got " + std::to_string(coefficients.size()));
    double u = coefficients[0];
    for (size_t j = 0; j < spec.features.size(); ++j) {
        const FeatureDef& def = feature_def(spec.features[j]);
        u += coefficients[j + 1] * def.raw(obs) * def.scale;
    }
    if (!std::isfinite(u)) throw data_error("non-finite utility");
    ChoiceProbability out;
    out.chosen = logistic(u);
    out.base = logistic(-u);
    return out;
}

LogLikelihood log_likelihood(const LogitSpec& spec, const std::vector<double>& coefficients,
                             const std::vector<ChoiceObservation>& observations) {
    validate_spec(spec);
    if (observations.empty()) throw bad_argument_error("log-likelihood over empty data");
    if (coefficients.size() != spec.features.size() + 1)
        throw bad_argument_error("coefficient count does not match the spec");

    MatrixXd x = design_matrix(spec, observations);
    VectorXd y = response(spec, observations);
    VectorXd theta = Eigen::Map<const VectorXd>(coefficients.data(),
                                                static_cast<long>(coefficients.size()));
    LlAccum acc = ll_reduce(x, y, theta, 0, observations.size(), 0);
    LogLikelihood out;
    out.value = acc.ll;
    out.gradient.assign(acc.grad.data(), acc.grad.data() + acc.grad.size());
    return out;
}

FitResult fit(const LogitSpec& spec, const std::vector<ChoiceObservation>& observations,
              const FitOptions& options) {
    validate_spec(spec);
    if (observations.empty()) throw bad_argument_error("cannot fit on empty data");
    if (options.max_iterations <= 0) throw bad_argument_error("max_iterations must be > 0");

    const size_t n = observations.size();
    const long k = static_cast<long>(spec.features.size()) + 1;
    MatrixXd x = design_matrix(spec, observations);
    VectorXd y = response(spec, observations);
    std::vector<std::string> names = coefficient_names(spec);
    check_collinearity(x, names);

    VectorXd theta = VectorXd::Zero(k);
    MatrixXd h = MatrixXd::Identity(k, k);  // inverse-Hessian approximation of -LL

    LlAccum cur = ll_reduce(x, y, theta, 0, n, 0);
    bool converged = false;
    int iterations = 0;
    while (iterations < options.max_iterations) {
        ++iterations;
        VectorXd g = -cur.grad;  // gradient of f = -LL
        if (cur.grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
            converged = true;
            break;
        }

        VectorXd d = -h * g;
        double slope = g.dot(d);
        if (slope >= 0.0) {  // stale curvature, fall back to steepest descent
            h = MatrixXd::Identity(k, k);
            d = -g;
            slope = g.dot(d);
        }

        double f0 = -cur.ll;
        double t = 1.0;
        LlAccum next;
        bool stepped = false;
        while (t >= 1e-14) {
            VectorXd cand = theta + t * d;
            next = ll_reduce(x, y, cand, 0, n, 0);
            if (std::isfinite(next.ll) && -next.ll <= f0 + 1e-4 * t * slope) {
                theta = cand;
                stepped = true;
                break;
            }
            t *= 0.5;
        }
        if (!stepped)
            throw estimation_error("line search failed to make progress at iteration " +
                                   std::to_string(iterations));

        VectorXd s = t * d;
        VectorXd yv = -next.grad - g;
        double sy = s.dot(yv);
        if (sy > 1e-12) {
            MatrixXd eye = MatrixXd::Identity(k, k);
            double rho = 1.0 / sy;
            h = (eye - rho * s * yv.transpose()) * h * (eye - rho * yv * s.transpose()) +
                rho * s * s.transpose();
        }

        double change = std::abs(next.ll - cur.ll);
        cur = next;
        if (change <= options.relative_ll_tolerance * (std::abs(cur.ll) + 1.0)) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw estimation_error("no convergence in " + std::to_string(iterations) +
                               " iterations (|grad| = " +
                               format_double(cur.grad.lpNorm<Eigen::Infinity>()) + ")");

    MatrixXd info = information_reduce(x, theta, 0, n);
    Eigen::FullPivLU<MatrixXd> lu(info);
    if (!lu.isInvertible())
        throw estimation_error("singular information matrix; features carry no signal");
    MatrixXd cov = lu.inverse();

    FitResult result;
    result.spec = spec;
    result.observations = static_cast<int>(n);
    result.iterations = iterations;
    result.converged = true;
    result.log_likelihood = cur.ll;
    result.null_log_likelihood = static_cast<double>(n) * std::log(0.5);
    result.adjusted_rho_squared =
        1.0 - (cur.ll - static_cast<double>(k)) / result.null_log_likelihood;

    std::string chosen = chosen_alternative(spec);
    for (long j = 0; j < k; ++j) {
        Coefficient c;
        c.name = names[static_cast<size_t>(j)];
        c.label = j == 0 ? chosen + ": ASC"
                         : chosen + ": " + feature_def(spec.features[static_cast<size_t>(j - 1)])
                                               .label_suffix;
        c.value = theta(j);
        double var = cov(j, j);
        if (!std::isfinite(var) || var < 0.0)
            throw estimation_error("information matrix not positive definite at '" + c.name +
                                   "'");
        c.std_error = std::sqrt(var);
        c.z = c.std_error > 0.0 ? c.value / c.std_error : 0.0;
        c.p_value = two_sided_p(c.z);
        c.stars = stars_for(c.p_value);
        result.coefficients.push_back(std::move(c));
    }

    for (size_t j = 0; j < spec.features.size(); ++j)
        result.sample_means[spec.features[j]] = x.col(static_cast<long>(j) + 1).mean();
    return result;
}

json fit_to_json(const FitResult& result) {
    json coeffs = json::array();
    for (const Coefficient& c : result.coefficients)
        coeffs.push_back({{"name", c.name},
                          {"label", c.label},
                          {"value", c.value},
                          {"std_error", c.std_error},
                          {"z", c.z},
                          {"p_value", c.p_value},
                          {"stars", c.stars}});
    json means = json::object();
    for (const auto& [name, mean] : result.sample_means) means[name] = mean;
    return json{{"alternatives", result.spec.alternatives},
                {"base", result.spec.base},
                {"features", result.spec.features},
                {"coefficients", coeffs},
                {"log_likelihood", result.log_likelihood},
                {"null_log_likelihood", result.null_log_likelihood},
                {"adjusted_rho_squared", result.adjusted_rho_squared},
                {"observations", result.observations},
                {"iterations", result.iterations},
                {"converged", result.converged},
                {"sample_means", means}};
}

FitResult fit_from_json(const json& doc) {
    FitResult result;
    try {
        result.spec.alternatives = doc.at("alternatives").get<std::vector<std::string>>();
        result.spec.base = doc.at("base").get<std::string>();
        result.spec.features = doc.at("features").get<std::vector<std::string>>();
        for (const json& c : doc.at("coefficients")) {
            Coefficient coef;
            coef.name = c.at("name").get<std::string>();
            coef.label = c.at("label").get<std::string>();
            coef.value = c.at("value").get<double>();
            coef.std_error = c.at("std_error").get<double>();
            coef.z = c.at("z").get<double>();
            coef.p_value = c.at("p_value").get<double>();
            coef.stars = c.at("stars").get<std::string>();
            result.coefficients.push_back(std::move(coef));
        }
        result.log_likelihood = doc.at("log_likelihood").get<double>();
        result.null_log_likelihood = doc.at("null_log_likelihood").get<double>();
        result.adjusted_rho_squared = doc.at("adjusted_rho_squared").get<double>();
        result.observations = doc.at("observations").get<int>();
        result.iterations = doc.at("iterations").get<int>();
        result.converged = doc.at("converged").get<bool>();
        for (const auto& [name, mean] : doc.at("sample_means").items())
            result.sample_means[name] = mean.get<double>();
    } catch (const json::exception& e) {
        throw schema_error(std::string("bad fit document: ") + e.what());
    }
    validate_spec(result.spec);
    if (result.coefficients.size() != result.spec.features.size() + 1)
        throw schema_error("fit document coefficient count does not match its features");
    return result;
}

FitResult load_fit(const std::string& path) { return fit_from_json(read_json_file(path)); }

std::string fit_table(const FitResult& result) {
    size_t width = std::string("Parameters").size();
    for (const Coefficient& c : result.coefficients) width = std::max(width, c.label.size());
    std::string base_row = result.spec.base + ": ASC";
    width = std::max(width, base_row.size()) + 2;

    auto pad = [width](const std::string& s) {
        return s + std::string(width - s.size(), ' ');
    };

    std::string out = pad("Parameters") + "Value (standard error)\n";
    char buf[64];
    for (const Coefficient& c : result.coefficients) {
        std::snprintf(buf, sizeof(buf), "%.4g (%.4g)", c.value, c.std_error);
        out += pad(c.label) + buf;
        if (!c.stars.empty()) out += "  " + c.stars;
        out += "\n";
    }
    out += pad(base_row) + "0 (fixed)\n";
    std::snprintf(buf, sizeof(buf), "%.3f", result.adjusted_rho_squared);
    out += "Number of individuals: " + std::to_string(result.observations) +
           ". Adjusted rho^2 = " + buf + "\n";
    out += "***: p<0.01; **: p<0.05; *: p<0.1; .: p<0.15\n";
    return out;
}

namespace {

// Utility at the sample means with `overrides` (raw units) pinned, minus the
// swept od_redundancy term; returns (offset, beta_R).
std::pair<double, double> curve_base(const FitResult& fit,
                                     const std::map<std::string, double>& overrides) {
    const std::vector<std::string>& features = fit.spec.features;
    auto it = std::find(features.begin(), features.end(), "od_redundancy");
    if (it == features.end())
        throw bad_argument_error("fit has no od_redundancy term to sweep");
    if (overrides.count("od_redundancy"))
        throw bad_argument_error("cannot override the swept variable");
    for (const auto& [name, value] : overrides) {
        (void)value;
        if (std::find(features.begin(), features.end(), name) == features.end())
            throw bad_argument_error("override '" + name + "' is not a fitted feature");
    }

    double offset = fit.coefficients.at(0).value;  // ASC
    double beta_r = 0.0;
    for (size_t j = 0; j < features.size(); ++j) {
        double coef = fit.coefficients.at(j + 1).value;
        if (features[j] == "od_redundancy") {
            beta_r = coef;
            continue;
        }
        auto ov = overrides.find(features[j]);
        double design_value = ov != overrides.end()
                                  ? ov->second * feature_def(features[j]).scale
                                  : fit.sample_means.at(features[j]);
        offset += coef * design_value;
    }
    return {offset, beta_r};
}

} // namespace

SensitivityCurve sensitivity_curve(const FitResult& fit, const std::vector<double>& grid,
                                   const std::map<std::string, double>& overrides) {
    if (grid.empty()) throw bad_argument_error("empty sensitivity grid");
    auto [offset, beta_r] = curve_base(fit, overrides);
    SensitivityCurve curve;
    curve.variable = "od_redundancy";
    for (double r : grid) {
        if (r < 0.0 || r > 1.0)
            throw bad_argument_error("od_redundancy grid value " + format_double(r) +
                                     " outside [0, 1]");
        SensitivityPoint point;
        point.value = r;
        point.probability = logistic(offset + beta_r * r);
        point.elasticity = beta_r * r * (1.0 - point.probability);
        curve.points.push_back(point);
    }
    return curve;
}

double point_elasticity(const FitResult& fit, double r,
                        const std::map<std::string, double>& overrides) {
    if (r < 0.0 || r > 1.0) throw bad_argument_error("od_redundancy must lie in [0, 1]");
    auto [offset, beta_r] = curve_base(fit, overrides);
    double p = logistic(offset + beta_r * r);
    return beta_r * r * (1.0 - p);
}

CsvTable sensitivity_to_csv(const SensitivityCurve& curve) {
    CsvTable table;
    table.header = {"od_redundancy", "probability", "elasticity"};
    for (const SensitivityPoint& point : curve.points)
        table.rows.push_back({format_double(point.value), format_double(point.probability),
                              format_double(point.elasticity)});
    return table;
}

std::vector<double> parse_grid(const std::string& text) {
    double start = 0.0, stop = 0.0, step = 0.0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3)
        throw bad_argument_error("grid must look like start:stop:step, got '" + text + "'");
    if (step <= 0.0) throw bad_argument_error("grid step must be > 0");
    if (stop < start) throw bad_argument_error("grid stop must be >= start");
    std::vector<double> grid;
    int count = static_cast<int>(std::floor((stop - start) / step + 0.5)) + 1;
    for (int i = 0; i < count; ++i) grid.push_back(start + i * step);
    return grid;
}

} // namespace tia
