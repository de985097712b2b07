#include "phmkit/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace phmkit {

RegressionMetrics regression_metrics(const std::vector<ScoredPair>& pairs) {
    if (pairs.empty()) {
        throw IntegrityError("metric error: no prediction pairs");
    }
    RegressionMetrics m;
    for (const auto& pair : pairs) {
        double d = pair.prediction - pair.truth;
        m.mae += std::fabs(d);
        m.mse += d * d;
    }
    m.mae /= double(pairs.size());
    m.mse /= double(pairs.size());
    m.rmse = std::sqrt(m.mse);
    return m;
}

namespace {

/// Mann-Whitney AUROC with half credit for score ties: the fraction of
/// (positive, negative) pairs ranked correctly.
double binary_auroc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    std::size_t n_pos = 0;
    for (bool p : positive) n_pos += p ? 1 : 0;
    std::size_t n_neg = positive.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        return 0.5;   // undefined ranking; neutral value
    }

    // Average ranks with tie handling.
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        double avg_rank = (double(i + 1) + double(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            rank[order[k]] = avg_rank;
        }
        i = j + 1;
    }

    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (positive[k]) {
            rank_sum_pos += rank[k];
        }
    }
    double u = rank_sum_pos - double(n_pos) * double(n_pos + 1) / 2.0;
    return u / (double(n_pos) * double(n_neg));
}

} // namespace

ClassificationMetrics classification_metrics(const std::vector<ClassPair>& pairs,
                                             const std::vector<std::int64_t>& class_set) {
    if (pairs.empty()) {
        throw IntegrityError("metric error: no prediction pairs");
    }
    if (class_set.empty()) {
        throw IntegrityError("metric error: empty class set");
    }
    for (const auto& pair : pairs) {
        if (pair.scores.size() != class_set.size()) {
            throw IntegrityError("metric error: score vector length " +
                                 std::to_string(pair.scores.size()) + " != class set size " +
                                 std::to_string(class_set.size()));
        }
    }

    auto predicted_class = [&](const ClassPair& pair) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < pair.scores.size(); ++c) {
            if (pair.scores[c] > pair.scores[best]) {
                best = c;
            }
        }
        return class_set[best];
    };

    ClassificationMetrics out;

    std::size_t correct = 0;
    for (const auto& pair : pairs) {
        correct += predicted_class(pair) == pair.truth ? 1 : 0;
    }
    out.accuracy = double(correct) / double(pairs.size());

    // Macro F1 over the declared class set; absent classes contribute 0.
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < class_set.size(); ++c) {
        std::int64_t cls = class_set[c];
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& pair : pairs) {
            bool predicted = predicted_class(pair) == cls;
            bool actual = pair.truth == cls;
            tp += (predicted && actual) ? 1 : 0;
            fp += (predicted && !actual) ? 1 : 0;
            fn += (!predicted && actual) ? 1 : 0;
        }
        double precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        double recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall /
                                                          (precision + recall);
        f1_sum += f1;
    }
    out.macro_f1 = f1_sum / double(class_set.size());

    // AUROC: positive-class ranking for binary, macro one-vs-rest otherwise.
    if (class_set.size() == 2) {
        std::vector<double> scores;
        std::vector<bool> positive;
        for (const auto& pair : pairs) {
            scores.push_back(pair.scores[1]);
            positive.push_back(pair.truth == class_set[1]);
        }
        out.auroc = binary_auroc(scores, positive);
    } else {
        double sum = 0.0;
        for (std::size_t c = 0; c < class_set.size(); ++c) {
            std::vector<double> scores;
            std::vector<bool> positive;
            for (const auto& pair : pairs) {
                scores.push_back(pair.scores[c]);
                positive.push_back(pair.truth == class_set[c]);
            }
            sum += binary_auroc(scores, positive);
        }
        out.auroc = sum / double(class_set.size());
    }

    return out;
}

namespace {

double phm_a(double e) {
    const double ln_half = std::log(0.5);
    return e <= 0.0 ? std::exp(-ln_half * e / 5.0) : std::exp(ln_half * e / 20.0);
}

} // namespace

double phm_score(const std::vector<ScoredPair>& pairs, double epsilon) {
    if (pairs.empty()) {
        throw IntegrityError("metric error: no prediction pairs");
    }
    if (epsilon <= 0.0) {
        throw SpecError("phm score: epsilon must be > 0");
    }
    double sum = 0.0;
    for (const auto& pair : pairs) {
        double e = 100.0 * (pair.truth - pair.prediction) / (pair.truth + epsilon);
        sum += phm_a(e);
    }
    return sum / double(pairs.size());
}

double nasa_score(const std::vector<ScoredPair>& pairs, double a_early, double a_late) {
    if (pairs.empty()) {
        throw IntegrityError("metric error: no prediction pairs");
    }
    if (a_early <= 0.0 || a_late <= 0.0) {
        throw SpecError("nasa score: scale lengths must be > 0");
    }
    double sum = 0.0;
    for (const auto& pair : pairs) {
        double d = pair.prediction - pair.truth;
        sum += d < 0.0 ? std::exp(-d / a_early) - 1.0 : std::exp(d / a_late) - 1.0;
    }
    return sum / double(pairs.size());
}

namespace {

double unit_metric(const std::vector<ScoredPair>& pairs, UnitMetric metric, double phm_epsilon) {
    switch (metric) {
    case UnitMetric::mae:
        return regression_metrics(pairs).mae;
    case UnitMetric::mse:
        return regression_metrics(pairs).mse;
    case UnitMetric::rmse:
        return regression_metrics(pairs).rmse;
    case UnitMetric::phm:
        return phm_score(pairs, phm_epsilon);
    }
    return 0.0;
}

} // namespace

double aggregate_window_level(const std::vector<ScoredPair>& pairs, UnitMetric metric,
                              double phm_epsilon) {
    if (pairs.empty()) {
        throw IntegrityError("metric error: no prediction pairs");
    }
    return unit_metric(pairs, metric, phm_epsilon);
}

PerUnitResult aggregate_per_unit(const std::vector<ScoredPair>& pairs, UnitMetric metric,
                                 double phm_epsilon) {
    if (pairs.empty()) {
        throw IntegrityError("metric error: no prediction pairs");
    }
    std::map<std::string, std::vector<ScoredPair>> by_unit;
    for (const auto& pair : pairs) {
        by_unit[pair.unit_id].push_back(pair);
    }
    PerUnitResult result;
    double sum = 0.0;
    for (const auto& [unit, unit_pairs] : by_unit) {
        double value = unit_metric(unit_pairs, metric, phm_epsilon);
        result.per_unit[unit] = value;
        result.counts[unit] = std::int64_t(unit_pairs.size());
        sum += value;
    }
    result.mean_over_units = sum / double(by_unit.size());
    return result;
}

double TargetDescaler::AffineStep::apply(double v, const std::string& unit) const {
    double s = default_scale;
    double b = default_shift;
    auto sit = scale.find(unit);
    if (sit != scale.end()) {
        s = sit->second;
    }
    auto bit = shift.find(unit);
    if (bit != shift.end()) {
        b = bit->second;
    }
    return s * v + b;
}

double TargetDescaler::descale(double v, const std::string& unit) const {
    for (const auto& step : inverse_steps) {
        v = step.apply(v, unit);
    }
    return v;
}

std::vector<ScoredPair> descale_predictions(const std::vector<ScoredPair>& pairs,
                                            const TargetDescaler& descaler) {
    std::vector<ScoredPair> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs) {
        ScoredPair d = pair;
        d.prediction = descaler.descale(pair.prediction, pair.unit_id);
        d.truth = descaler.descale(pair.truth, pair.unit_id);
        out.push_back(d);
    }
    return out;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["metrics"] = report.metrics;
    j["metrics_denormalized"] = report.metrics_denormalized;
    j["per_unit"] = report.per_unit;
    j["counts"] = report.counts;
    return j.dump();
}

} // namespace phmkit
