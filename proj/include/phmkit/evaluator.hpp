#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phmkit/types.hpp"

namespace phmkit {

/// One scored prediction: (prediction, truth) plus the owning unit.
struct ScoredPair {
    double prediction = 0.0;
    double truth = 0.0;
    std::string unit_id;
};

/// Classification pair: a score per class (index = class code) and the true
/// class. A hard prediction is a one-hot score vector.
struct ClassPair {
    std::vector<double> scores;
    std::int64_t truth = 0;
    std::string unit_id;
};

struct RegressionMetrics {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
};

/// mae/mse/rmse over pooled pairs. Throws on empty input.
RegressionMetrics regression_metrics(const std::vector<ScoredPair>& pairs);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double auroc = 0.0;
};

/// Accuracy, macro-F1 over the declared class set (absent classes contribute
/// an F1 of 0), and AUROC: Mann-Whitney with half tie credit for binary,
/// macro one-vs-rest for multiclass.
ClassificationMetrics classification_metrics(const std::vector<ClassPair>& pairs,
                                             const std::vector<std::int64_t>& class_set);

/// Asymmetric score over the percentage error e = 100 (y - yhat) / (y + eps):
/// exp(-ln(0.5) e / 5) for e <= 0, exp(ln(0.5) e / 20) for e > 0, averaged.
double phm_score(const std::vector<ScoredPair>& pairs, double epsilon = 1e-8);

/// Asymmetric exponential score over the raw error d = yhat - y with scale
/// lengths (a_early, a_late); late predictions are penalized more.
double nasa_score(const std::vector<ScoredPair>& pairs, double a_early = 13.0,
                  double a_late = 10.0);

enum class UnitMetric { mae, mse, rmse, phm };

/// Pools all pairs, then applies the metric.
double aggregate_window_level(const std::vector<ScoredPair>& pairs, UnitMetric metric,
                              double phm_epsilon = 1e-8);

/// Per-unit metric values plus their unweighted mean across units.
struct PerUnitResult {
    double mean_over_units = 0.0;
    std::map<std::string, double> per_unit;
    std::map<std::string, std::int64_t> counts;
};

PerUnitResult aggregate_per_unit(const std::vector<ScoredPair>& pairs, UnitMetric metric,
                                 double phm_epsilon = 1e-8);

/// A chain of affine maps y -> scale * y + shift applied in order; built by
/// the runner from the invertible target-side transform states.
struct TargetDescaler {
    struct AffineStep {
        // per-unit scale/shift when the map is unit-specific (health index)
        std::map<std::string, double> scale;
        std::map<std::string, double> shift;
        double default_scale = 1.0;
        double default_shift = 0.0;

        double apply(double v, const std::string& unit) const;
    };
    std::vector<AffineStep> inverse_steps;   // applied front to back

    bool empty() const { return inverse_steps.empty(); }
    double descale(double v, const std::string& unit) const;
};

/// Applies the stored inverse to both predictions and truths, returning
/// pairs in original units.
std::vector<ScoredPair> descale_predictions(const std::vector<ScoredPair>& pairs,
                                            const TargetDescaler& descaler);

/// Full evaluation report: normalized metrics, optional denormalized
/// metrics, optional per-unit breakdown with counts.
struct MetricReport {
    std::map<std::string, double> metrics;
    std::map<std::string, double> metrics_denormalized;
    std::map<std::string, std::map<std::string, double>> per_unit;
    std::map<std::string, std::int64_t> counts;
};

/// Canonical JSON bytes of a report (sorted keys, shortest round-trip
/// floats). The runner hashes exactly these bytes into the manifest.
std::string report_to_json(const MetricReport& report);

} // namespace phmkit
