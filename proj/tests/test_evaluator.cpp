#include <doctest.h>

#include <cmath>

#include "phmkit/evaluator.hpp"
#include "phmkit/rng.hpp"

using namespace phmkit;

namespace {

std::vector<ScoredPair> pairs_of(std::vector<std::pair<double, double>> values,
                                 const std::string& unit = "u") {
    std::vector<ScoredPair> out;
    for (auto [prediction, truth] : values) {
        out.push_back({prediction, truth, unit});
    }
    return out;
}

} // namespace

TEST_CASE("regression metrics") {
    SUBCASE("perfect predictions score zero") {
        auto m = regression_metrics(pairs_of({{1, 1}, {2, 2}, {-3, -3}}));
        CHECK(m.mae == 0.0);
        CHECK(m.mse == 0.0);
        CHECK(m.rmse == 0.0);
    }
    SUBCASE("errors {1,1,3} by hand") {
        auto m = regression_metrics(pairs_of({{1, 0}, {1, 0}, {3, 0}}));
        CHECK(m.mae == doctest::Approx(5.0 / 3).epsilon(1e-15));
        CHECK(m.mse == doctest::Approx(11.0 / 3).epsilon(1e-15));
        CHECK(m.rmse == doctest::Approx(std::sqrt(11.0 / 3)).epsilon(1e-15));
    }
    SUBCASE("single pair") {
        auto m = regression_metrics(pairs_of({{2, 5}}));
        CHECK(m.mae == 3.0);
        CHECK(m.mse == 9.0);
        CHECK(m.rmse == 3.0);
    }
    SUBCASE("empty input is a metric error") {
        CHECK_THROWS_AS(regression_metrics({}), IntegrityError);
    }
}

namespace {

ClassPair class_pair(std::vector<double> scores, std::int64_t truth) {
    ClassPair p;
    p.scores = std::move(scores);
    p.truth = truth;
    return p;
}

/// Independent oracle: fraction of (positive, negative) pairs ranked
/// correctly, half credit for ties.
double brute_force_auroc(const std::vector<double>& scores, const std::vector<bool>& pos) {
    double credit = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!pos[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (pos[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                credit += 1.0;
            } else if (scores[i] == scores[j]) {
                credit += 0.5;
            }
        }
    }
    return credit / double(pairs);
}

} // namespace

TEST_CASE("classification metrics") {
    std::vector<std::int64_t> binary = {0, 1};

    SUBCASE("perfect ranking gives AUROC one") {
        std::vector<ClassPair> data = {class_pair({0.1, 0.9}, 1), class_pair({0.2, 0.8}, 1),
                                       class_pair({0.8, 0.2}, 0), class_pair({0.9, 0.1}, 0)};
        auto m = classification_metrics(data, binary);
        CHECK(m.auroc == 1.0);
        CHECK(m.accuracy == 1.0);
        CHECK(m.macro_f1 == 1.0);
    }
    SUBCASE("the four-pair worked case gives 3/4") {
        std::vector<ClassPair> data = {class_pair({0.1, 0.9}, 1), class_pair({0.6, 0.4}, 1),
                                       class_pair({0.5, 0.5}, 0), class_pair({0.9, 0.1}, 0)};
        auto m = classification_metrics(data, binary);
        CHECK(m.auroc == doctest::Approx(0.75).epsilon(1e-15));
    }
    SUBCASE("identity predictions over three classes") {
        std::vector<std::int64_t> classes = {0, 1, 2};
        std::vector<ClassPair> data;
        for (std::int64_t c : classes) {
            std::vector<double> scores(3, 0.0);
            scores[std::size_t(c)] = 1.0;
            data.push_back(class_pair(scores, c));
            data.push_back(class_pair(scores, c));
        }
        auto m = classification_metrics(data, classes);
        CHECK(m.accuracy == 1.0);
        CHECK(m.macro_f1 == 1.0);
        CHECK(m.auroc == 1.0);
    }
    SUBCASE("absent classes drag macro F1 down") {
        std::vector<std::int64_t> classes = {0, 1, 2};
        std::vector<ClassPair> data = {class_pair({1, 0, 0}, 0), class_pair({0, 1, 0}, 1)};
        auto m = classification_metrics(data, classes);
        CHECK(m.accuracy == 1.0);
        CHECK(m.macro_f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
    }
    SUBCASE("score vector length must match the class set") {
        std::vector<ClassPair> data = {class_pair({1, 0, 0}, 0)};
        CHECK_THROWS_AS(classification_metrics(data, binary), IntegrityError);
    }
}

TEST_CASE("multiclass AUROC is the macro mean of one-vs-rest ranks") {
    Rng rng(555);
    std::vector<std::int64_t> classes = {0, 1, 2};
    std::vector<ClassPair> data;
    for (int i = 0; i < 60; ++i) {
        ClassPair p;
        p.truth = std::int64_t(rng.uniform_int(3));
        p.scores = {rng.uniform(), rng.uniform(), rng.uniform()};
        data.push_back(std::move(p));
    }
    double macro = classification_metrics(data, classes).auroc;

    double expected = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<double> scores;
        std::vector<bool> pos;
        for (const auto& p : data) {
            scores.push_back(p.scores[c]);
            pos.push_back(p.truth == classes[c]);
        }
        expected += brute_force_auroc(scores, pos);
    }
    expected /= double(classes.size());
    CHECK(macro == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("rank AUROC equals the brute-force pair fraction") {
    Rng rng(2718);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + rng.uniform_int(49);
        std::vector<double> scores;
        std::vector<bool> positive;
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            // ties are common on a small discrete grid
            scores.push_back(double(rng.uniform_int(10)) / 10.0);
            bool p = rng.uniform() < 0.5;
            positive.push_back(p);
            n_pos += p ? 1 : 0;
        }
        if (n_pos == 0 || n_pos == n) {
            continue;
        }
        std::vector<ClassPair> data;
        for (std::size_t i = 0; i < n; ++i) {
            data.push_back(class_pair({1.0 - scores[i], scores[i]}, positive[i] ? 1 : 0));
        }
        auto m = classification_metrics(data, {0, 1});
        CHECK(m.auroc ==
              doctest::Approx(brute_force_auroc(scores, positive)).epsilon(1e-12));
    }
}

TEST_CASE("phm score anchors") {
    CHECK(phm_score(pairs_of({{100, 100}})) == doctest::Approx(1.0).epsilon(1e-12));

    // e = -5: prediction 5% above the truth
    double y = 100.0;
    double yhat_late = y - (-5.0) * (y + 1e-8) / 100.0;
    CHECK(phm_score(pairs_of({{yhat_late, y}})) == doctest::Approx(0.5).epsilon(1e-9));

    // e = +20: prediction 20% below the truth
    double yhat_early = y - 20.0 * (y + 1e-8) / 100.0;
    CHECK(phm_score(pairs_of({{yhat_early, y}})) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("phm score is continuous at zero and decreasing in |e|") {
    double y = 50.0;
    double near = phm_score(pairs_of({{y - 1e-9, y}}));
    CHECK(near == doctest::Approx(1.0).epsilon(1e-6));

    double prev_late = 1.0;
    double prev_early = 1.0;
    for (double e = 1.0; e <= 60.0; e += 1.0) {
        double late = phm_score(pairs_of({{y + e * y / 100.0, y}}));
        double early = phm_score(pairs_of({{y - e * y / 100.0, y}}));
        CHECK(late < prev_late);
        CHECK(early < prev_early);
        // late predictions are penalized harder at the same |e|
        CHECK(late < early);
        prev_late = late;
        prev_early = early;
    }
}

TEST_CASE("nasa score evaluates the asymmetric exponential") {
    CHECK(nasa_score(pairs_of({{7, 7}})) == 0.0);
    CHECK(nasa_score(pairs_of({{20, 10}})) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    CHECK(nasa_score(pairs_of({{10 - 13, 10}})) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    // late is worse than early at matching absolute error
    CHECK(nasa_score(pairs_of({{23, 10}})) > nasa_score(pairs_of({{-3, 10}})));
}

TEST_CASE("window-level vs per-unit aggregation") {
    std::vector<ScoredPair> pairs = {{1, 0, "A"}, {1, 0, "A"}, {3, 0, "B"}};

    CHECK(aggregate_window_level(pairs, UnitMetric::mae) ==
          doctest::Approx(5.0 / 3).epsilon(1e-15));

    PerUnitResult per_unit = aggregate_per_unit(pairs, UnitMetric::mae);
    CHECK(per_unit.per_unit.at("A") == 1.0);
    CHECK(per_unit.per_unit.at("B") == 3.0);
    CHECK(per_unit.mean_over_units == 2.0);
    CHECK(per_unit.counts.at("A") == 2);
    CHECK(per_unit.counts.at("B") == 1);

    SUBCASE("single unit collapses both views") {
        std::vector<ScoredPair> one = {{1, 0, "A"}, {2, 0, "A"}};
        CHECK(aggregate_window_level(one, UnitMetric::mae) ==
              aggregate_per_unit(one, UnitMetric::mae).mean_over_units);
    }
    SUBCASE("all-zero errors") {
        std::vector<ScoredPair> zero = {{4, 4, "A"}, {5, 5, "B"}};
        CHECK(aggregate_window_level(zero, UnitMetric::mae) == 0.0);
    }
}

TEST_CASE("pooled linear metrics equal the count-weighted unit means") {
    Rng rng(31415);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ScoredPair> pairs;
        std::size_t units = 1 + rng.uniform_int(6);
        for (std::size_t u = 0; u < units; ++u) {
            std::size_t n = 1 + rng.uniform_int(20);
            for (std::size_t i = 0; i < n; ++i) {
                pairs.push_back({rng.normal(), rng.normal(), "unit" + std::to_string(u)});
            }
        }
        for (UnitMetric metric : {UnitMetric::mae, UnitMetric::mse}) {
            double pooled = aggregate_window_level(pairs, metric);
            PerUnitResult per_unit = aggregate_per_unit(pairs, metric);
            double weighted = 0.0;
            double total = 0.0;
            for (const auto& [unit, value] : per_unit.per_unit) {
                weighted += double(per_unit.counts.at(unit)) * value;
                total += double(per_unit.counts.at(unit));
            }
            CHECK(pooled == doctest::Approx(weighted / total).epsilon(1e-12));
        }
    }
}

TEST_CASE("descaling predictions") {
    TargetDescaler descaler;
    TargetDescaler::AffineStep step;
    step.default_scale = 10.0;   // minmax state {0, 10}
    step.default_shift = 0.0;
    descaler.inverse_steps.push_back(step);

    auto out = descale_predictions({{0.5, 0.7, "u"}}, descaler);
    CHECK(out[0].prediction == doctest::Approx(5.0));
    CHECK(out[0].truth == doctest::Approx(7.0));

    SUBCASE("identity descaler leaves pairs unchanged") {
        TargetDescaler identity;
        auto same = descale_predictions({{0.5, 0.7, "u"}}, identity);
        CHECK(same[0].prediction == 0.5);
        CHECK(same[0].truth == 0.7);
    }
    SUBCASE("affine error scaling: mae 0.02 under span 400 becomes 8") {
        TargetDescaler wide;
        TargetDescaler::AffineStep span;
        span.default_scale = 400.0;
        span.default_shift = -55.0;
        wide.inverse_steps.push_back(span);

        std::vector<ScoredPair> pairs = {{0.51, 0.50, "u"}, {0.12, 0.15, "u"}};
        double normalized = aggregate_window_level(pairs, UnitMetric::mae);
        double denormalized =
            aggregate_window_level(descale_predictions(pairs, wide), UnitMetric::mae);
        CHECK(denormalized == doctest::Approx(400.0 * normalized).epsilon(1e-9));
        CHECK(normalized == doctest::Approx(0.02).epsilon(1e-9));
        CHECK(denormalized == doctest::Approx(8.0).epsilon(1e-7));
    }
    SUBCASE("per-unit steps pick the unit's coefficients") {
        TargetDescaler per_unit;
        TargetDescaler::AffineStep unit_step;
        unit_step.scale = {{"a", -100.0}, {"b", -200.0}};
        unit_step.shift = {{"a", 100.0}, {"b", 200.0}};
        per_unit.inverse_steps.push_back(unit_step);
        auto pairs = descale_predictions({{0.25, 0.5, "a"}, {0.25, 0.5, "b"}}, per_unit);
        CHECK(pairs[0].prediction == doctest::Approx(75.0));
        CHECK(pairs[1].prediction == doctest::Approx(150.0));
    }
}

TEST_CASE("metric reports serialize with sorted keys") {
    MetricReport report;
    report.metrics["rmse"] = 1.5;
    report.metrics["mae"] = 1.0;
    report.counts["u2"] = 3;
    report.counts["u1"] = 4;
    std::string json = report_to_json(report);
    CHECK(json.find("\"mae\"") < json.find("\"rmse\""));
    CHECK(json.find("\"u1\"") < json.find("\"u2\""));
    CHECK(report_to_json(report) == json);   // stable bytes
}
