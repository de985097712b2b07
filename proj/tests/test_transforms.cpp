#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "phmkit/rng.hpp"
#include "phmkit/transforms.hpp"

using namespace phmkit;

namespace {

Matrix column(std::vector<double> values) {
    Matrix m(values.size(), 1);
    m.data() = std::move(values);
    return m;
}

Series series_of(std::vector<double> values) {
    Series s;
    s.values = column(std::move(values));
    s.support = SupportMap::identity(s.values.rows());
    return s;
}

FitInput train_input(const std::vector<const Series*>& series) {
    FitInput input;
    input.tag = Split::train;
    for (std::size_t i = 0; i < series.size(); ++i) {
        FitInput::UnitSlice slice;
        slice.unit_id = "u" + std::to_string(i + 1);
        slice.series = series[i];
        input.units.push_back(slice);
    }
    return input;
}

TransformStageSpec stage_of(TransformKind kind, const std::string& name = "stage") {
    TransformStageSpec spec;
    spec.stage_name = name;
    spec.kind = kind;
    spec.apply_to = {"features"};
    return spec;
}

} // namespace

TEST_CASE("minmax fit reduces to the train extrema") {
    Series data = series_of({2, 4, 10});
    auto state = fit_stage(stage_of(TransformKind::minmax), train_input({&data}));
    CHECK(state.fitted_on == "train");
    CHECK(state.params.at("min") == std::vector<double>{2});
    CHECK(state.params.at("max") == std::vector<double>{10});
}

TEST_CASE("fitting on non-train data is a hard leakage fault") {
    Series data = series_of({1, 2, 3});
    FitInput input = train_input({&data});
    input.tag = Split::val;
    CHECK_THROWS_AS(fit_stage(stage_of(TransformKind::minmax), input), LeakageFault);
    input.tag = Split::test;
    CHECK_THROWS_AS(fit_stage(stage_of(TransformKind::minmax), input), LeakageFault);
}

TEST_CASE("stateless kinds return an empty state with a stable fingerprint") {
    auto a = fit_stage(stage_of(TransformKind::identity), FitInput{});
    auto b = fit_stage(stage_of(TransformKind::identity), FitInput{});
    CHECK(a.empty());
    CHECK(a.fitted_on == "none");
    CHECK(a.fingerprint == b.fingerprint);
}

TEST_CASE("standard fit uses the population convention") {
    Series data = series_of({1, 2, 3, 4});
    auto spec = stage_of(TransformKind::standard);
    auto state = fit_stage(spec, train_input({&data}));

    // independent oracle: direct summation
    double mu = (1 + 2 + 3 + 4) / 4.0;
    double acc = 0;
    for (double v : {1.0, 2.0, 3.0, 4.0}) acc += (v - mu) * (v - mu);
    double sigma = std::sqrt(acc / 4.0);

    CHECK(state.params.at("mean")[0] == doctest::Approx(mu).epsilon(1e-15));
    CHECK(state.params.at("std")[0] == doctest::Approx(sigma).epsilon(1e-15));

    auto again = fit_stage(spec, train_input({&data}));
    CHECK(state.fingerprint == again.fingerprint);
}

TEST_CASE("fit reductions are independent of unit order") {
    Series a = series_of({1, 2});
    Series b = series_of({3, 4});
    FitInput fwd = train_input({&a, &b});
    FitInput rev;
    rev.tag = Split::train;
    rev.units = {fwd.units[1], fwd.units[0]};
    auto spec = stage_of(TransformKind::standard);
    CHECK(fit_stage(spec, fwd).fingerprint == fit_stage(spec, rev).fingerprint);
}

TEST_CASE("empty train partition is a fit error") {
    auto spec = stage_of(TransformKind::minmax);
    CHECK_THROWS_AS(fit_stage(spec, FitInput{}), IntegrityError);
}

TEST_CASE("minmax forward and inverse") {
    FittedTransformState state;
    state.params["min"] = {2};
    state.params["max"] = {10};

    Matrix x = column({6});
    Matrix z = apply_pointwise_scale(TransformKind::minmax, state, x, Direction::forward);
    CHECK(z(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    Matrix samples = column({2, 3, 5, 7, 9, 10});
    Matrix fwd = apply_pointwise_scale(TransformKind::minmax, state, samples, Direction::forward);
    Matrix back = apply_pointwise_scale(TransformKind::minmax, state, fwd, Direction::inverse);
    for (std::size_t i = 0; i < samples.data().size(); ++i) {
        CHECK(back.data()[i] == doctest::Approx(samples.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("standard forward matches independent arithmetic") {
    FittedTransformState state;
    state.params["mean"] = {2.5};
    state.params["std"] = {std::sqrt(1.25)};
    Matrix z = apply_pointwise_scale(TransformKind::standard, state, column({4}),
                                     Direction::forward);
    CHECK(z(0, 0) == doctest::Approx((4 - 2.5) / std::sqrt(1.25)).epsilon(1e-12));
    CHECK(z(0, 0) == doctest::Approx(1.3416407865).epsilon(1e-9));
}

TEST_CASE("scalers reject inputs with the wrong channel count") {
    FittedTransformState state;
    state.params["min"] = {0.0, 1.0};
    state.params["max"] = {1.0, 2.0};
    Matrix narrow(3, 1, 0.5);
    CHECK_THROWS_AS(
        apply_pointwise_scale(TransformKind::minmax, state, narrow, Direction::forward),
        IntegrityError);
}

TEST_CASE("degenerate channels map to zero and invert to the fitted point") {
    FittedTransformState state;
    state.params["min"] = {5};
    state.params["max"] = {5};
    Matrix z = apply_pointwise_scale(TransformKind::minmax, state, column({5}),
                                     Direction::forward);
    CHECK(z(0, 0) == 0.0);
    Matrix back = apply_pointwise_scale(TransformKind::minmax, state, z, Direction::inverse);
    CHECK(back(0, 0) == 5.0);

    FittedTransformState flat;
    flat.params["mean"] = {3};
    flat.params["std"] = {0};
    Matrix zs = apply_pointwise_scale(TransformKind::standard, flat, column({3}),
                                      Direction::forward);
    CHECK(zs(0, 0) == 0.0);
    Matrix backs = apply_pointwise_scale(TransformKind::standard, flat, zs, Direction::inverse);
    CHECK(backs(0, 0) == 3.0);
}

TEST_CASE("constant scaler is exactly invertible and rejects zero") {
    FittedTransformState state;
    state.params["constant"] = {2.5};
    Matrix x = column({1, -4, 0.3});
    Matrix z = apply_pointwise_scale(TransformKind::constant_scale, state, x,
                                     Direction::forward);
    CHECK(z(1, 0) == -10.0);
    Matrix back = apply_pointwise_scale(TransformKind::constant_scale, state, z,
                                        Direction::inverse);
    for (std::size_t i = 0; i < x.data().size(); ++i) {
        CHECK(back.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-12));
    }

    auto spec = stage_of(TransformKind::constant_scale);
    spec.constant = 0.0;
    CHECK_THROWS_AS(spec.check(), SpecError);
}

TEST_CASE("windowed aggregation reproduces the worked support grid") {
    Matrix x(15, 1);
    for (std::size_t t = 0; t < 15; ++t) x(t, 0) = double(t + 1);

    auto [values, support] = apply_windowed_aggregation(AggRule::mean, 4, 3, x);
    REQUIRE(values.rows() == 4);
    CHECK(support.entries[0] == SupportEntry::interval(1, 4));
    CHECK(support.entries[1] == SupportEntry::interval(4, 7));
    CHECK(support.entries[2] == SupportEntry::interval(7, 10));
    CHECK(support.entries[3] == SupportEntry::interval(10, 13));

    CHECK(values(0, 0) == doctest::Approx(2.5));
    CHECK(values(1, 0) == doctest::Approx(5.5));
    CHECK(values(2, 0) == doctest::Approx(8.5));
    CHECK(values(3, 0) == doctest::Approx(11.5));
}

TEST_CASE("too-short input yields an empty aggregation") {
    Matrix x(3, 2, 1.0);
    auto [values, support] = apply_windowed_aggregation(AggRule::mean, 4, 1, x);
    CHECK(values.rows() == 0);
    CHECK(support.entries.empty());
}

TEST_CASE("aggregation rules match direct window enumeration") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t t = 5 + rng.uniform_int(30);
        std::int64_t w = 1 + std::int64_t(rng.uniform_int(5));
        std::int64_t hop = 1 + std::int64_t(rng.uniform_int(4));
        Matrix x(t, 2);
        for (auto& v : x.data()) v = rng.normal();

        for (AggRule rule : {AggRule::mean, AggRule::sum, AggRule::min, AggRule::max,
                             AggRule::median, AggRule::std_dev, AggRule::first, AggRule::last}) {
            auto [values, support] = apply_windowed_aggregation(rule, w, hop, x);
            for (std::size_t j = 0; j < values.rows(); ++j) {
                auto lo = std::size_t(support.entries[j].lo - 1);
                auto hi = std::size_t(support.entries[j].hi);
                for (std::size_t c = 0; c < 2; ++c) {
                    std::vector<double> window;
                    for (std::size_t i = lo; i < hi; ++i) window.push_back(x(i, c));
                    double expected = 0;
                    switch (rule) {
                    case AggRule::mean: {
                        for (double v : window) expected += v;
                        expected /= double(window.size());
                        break;
                    }
                    case AggRule::sum:
                        for (double v : window) expected += v;
                        break;
                    case AggRule::min:
                        expected = *std::min_element(window.begin(), window.end());
                        break;
                    case AggRule::max:
                        expected = *std::max_element(window.begin(), window.end());
                        break;
                    case AggRule::median: {
                        std::sort(window.begin(), window.end());
                        std::size_t mid = window.size() / 2;
                        expected = window.size() % 2 ? window[mid]
                                                     : (window[mid - 1] + window[mid]) / 2;
                        break;
                    }
                    case AggRule::std_dev: {
                        double mu = 0;
                        for (double v : window) mu += v;
                        mu /= double(window.size());
                        double acc = 0;
                        for (double v : window) acc += (v - mu) * (v - mu);
                        expected = std::sqrt(acc / double(window.size()));
                        break;
                    }
                    case AggRule::first:
                        expected = window.front();
                        break;
                    case AggRule::last:
                        expected = window.back();
                        break;
                    }
                    CHECK(values(j, c) == doctest::Approx(expected).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("stft of a constant concentrates at bin zero") {
    double c = 1.7;
    Matrix x(4, 1, c);
    auto [values, support] = apply_stft(4, 4, 4, StftPostMap::magnitude, x);
    REQUIRE(values.rows() == 1);
    REQUIRE(values.cols() == 3);   // one-sided bins 0..2
    CHECK(values(0, 0) == doctest::Approx(4 * c).epsilon(1e-12));
    CHECK(values(0, 1) == doctest::Approx(0).epsilon(1e-9));
    CHECK(values(0, 2) == doctest::Approx(0).epsilon(1e-9));
    CHECK(support.entries[0] == SupportEntry::interval(1, 4));
}

TEST_CASE("stft of the Nyquist alternation concentrates at the top bin") {
    Matrix x = column({1, -1, 1, -1});
    auto [values, support] = apply_stft(4, 4, 4, StftPostMap::magnitude, x);
    REQUIRE(values.rows() == 1);
    CHECK(values(0, 0) == doctest::Approx(0).epsilon(1e-9));
    CHECK(values(0, 1) == doctest::Approx(0).epsilon(1e-9));
    CHECK(values(0, 2) == doctest::Approx(4).epsilon(1e-12));
}

TEST_CASE("stft frame grid matches windowed aggregation") {
    Matrix x(10, 1);
    for (std::size_t t = 0; t < 10; ++t) x(t, 0) = std::sin(double(t));
    auto [values, support] = apply_stft(4, 3, 4, StftPostMap::power, x);
    REQUIRE(values.rows() == 3);
    CHECK(support.entries[0] == SupportEntry::interval(1, 4));
    CHECK(support.entries[1] == SupportEntry::interval(4, 7));
    CHECK(support.entries[2] == SupportEntry::interval(7, 10));
}

TEST_CASE("stft post maps agree with the magnitude route") {
    Matrix x(6, 1);
    for (std::size_t t = 0; t < 6; ++t) x(t, 0) = std::cos(0.7 * double(t)) + 0.2;

    auto [mag, s1] = apply_stft(4, 2, 4, StftPostMap::magnitude, x);
    auto [power, s2] = apply_stft(4, 2, 4, StftPostMap::power, x);
    auto [logp, s3] = apply_stft(4, 2, 4, StftPostMap::log_power, x);
    REQUIRE(mag.rows() == power.rows());
    for (std::size_t i = 0; i < mag.data().size(); ++i) {
        CHECK(power.data()[i] == doctest::Approx(mag.data()[i] * mag.data()[i]).epsilon(1e-12));
        CHECK(logp.data()[i] ==
              doctest::Approx(std::log(1e-12 + power.data()[i])).epsilon(1e-12));
    }
}

TEST_CASE("stft rejects window larger than n_fft") {
    Matrix x(8, 1, 0.0);
    CHECK_THROWS_AS(apply_stft(8, 1, 4, StftPostMap::magnitude, x), SpecError);
    auto spec = stage_of(TransformKind::stft);
    spec.window = 8;
    spec.n_fft = 4;
    CHECK_THROWS_AS(spec.check(), SpecError);
}

TEST_CASE("time stats of a constant signal") {
    Matrix x(6, 1, 3.25);
    auto [values, support] =
        apply_segment_stats(StatsDomain::time,
                            {StatKind::mean, StatKind::std_dev, StatKind::range}, x);
    REQUIRE(values.rows() == 1);
    REQUIRE(values.cols() == 3);
    CHECK(values(0, 0) == 3.25);
    CHECK(values(0, 1) == 0.0);
    CHECK(values(0, 2) == 0.0);
    REQUIRE(support.entries.size() == 1);
    CHECK(support.entries[0] == SupportEntry::interval(1, 6));
}

TEST_CASE("time stats match direct moment computation") {
    Matrix x = column({1, 2, 3, 4});
    auto [values, support] =
        apply_segment_stats(StatsDomain::time, {StatKind::mean, StatKind::std_dev}, x);
    CHECK(values(0, 0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(values(0, 1) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
}

TEST_CASE("spectral stats of a constant signal give max = c") {
    double c = 2.5;
    Matrix x(8, 1, c);
    auto [values, support] = apply_segment_stats(StatsDomain::frequency, {StatKind::max}, x);
    CHECK(values(0, 0) == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("segment stats channel-major ordering and degenerate moments") {
    Matrix x(4, 2);
    for (std::size_t t = 0; t < 4; ++t) {
        x(t, 0) = double(t);
        x(t, 1) = 7.0;   // constant channel
    }
    auto [values, support] = apply_segment_stats(
        StatsDomain::time, {StatKind::skewness, StatKind::kurtosis, StatKind::peak_factor}, x);
    REQUIRE(values.cols() == 6);
    // constant channel: sigma = 0 -> skew/kurt emit 0
    CHECK(values(0, 3) == 0.0);
    CHECK(values(0, 4) == 0.0);
    CHECK(values(0, 5) == doctest::Approx(1.0));   // |7|/rms(7) = 1
}

TEST_CASE("cumulative squared sum") {
    Matrix x = column({1, 2, 3});
    Matrix z = apply_cumsum_squared(x);
    CHECK(z.data() == std::vector<double>{1, 5, 14});

    Matrix zeros(4, 2, 0.0);
    CHECK(apply_cumsum_squared(zeros).data() == std::vector<double>(8, 0.0));

    Matrix single = column({-3});
    CHECK(apply_cumsum_squared(single)(0, 0) == 9.0);
}

TEST_CASE("subsample keeps every r-th entry with timestamp supports") {
    Matrix x = column({10, 20, 30, 40, 50});
    auto [values, support] = apply_subsample(2, x);
    CHECK(values.data() == std::vector<double>{10, 30, 50});
    REQUIRE(support.entries.size() == 3);
    CHECK(support.entries[0] == SupportEntry::timestamp(1));
    CHECK(support.entries[1] == SupportEntry::timestamp(3));
    CHECK(support.entries[2] == SupportEntry::timestamp(5));

    // formula vs enumeration
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t t = 1 + rng.uniform_int(40);
        std::int64_t r = 1 + std::int64_t(rng.uniform_int(6));
        Matrix data(t, 1, 0.0);
        auto [v, s] = apply_subsample(r, data);
        std::int64_t expected = 0;
        for (std::int64_t idx = 1; idx <= std::int64_t(t); idx += r) ++expected;
        CHECK(std::int64_t(v.rows()) == expected);
        CHECK(std::int64_t(v.rows()) == (std::int64_t(t) - 1) / r + 1);
    }
}

TEST_CASE("channel concatenation preserves the first input's support") {
    Series a = series_of({1, 2, 3, 4});
    Series b = series_of({5, 6, 7, 8});
    Series out = apply_concatenate({&a, &b});
    CHECK(out.width() == 2);
    CHECK(out.length() == 4);
    CHECK(out.support == a.support);
    CHECK(out.values(2, 0) == 3);
    CHECK(out.values(2, 1) == 7);
}

TEST_CASE("concatenation with mismatched supports is an alignment error") {
    Series a = series_of({1, 2, 3, 4});
    Series b = series_of({5, 6, 7, 8});
    b.support.entries[2] = SupportEntry::interval(2, 3);
    CHECK_THROWS_AS(apply_concatenate({&a, &b}), IntegrityError);
}

TEST_CASE("pad_to_length appends the pad value with artificial supports") {
    Matrix x = column({1, 2, 3});
    auto [values, support] = apply_pad_to_length(5, -7.0, x);
    CHECK(values.data() == std::vector<double>{1, 2, 3, -7, -7});
    CHECK(support.entries[2] == SupportEntry::timestamp(3));
    CHECK(support.entries[3].artificial);
    CHECK(support.entries[4].artificial);
    CHECK_THROWS_AS(apply_pad_to_length(2, 0.0, x), SpecError);
}

TEST_CASE("repair modes") {
    double nan = std::numeric_limits<double>::quiet_NaN();
    FittedTransformState none;

    SUBCASE("linear interpolation at the midpoint") {
        Matrix fixed = apply_repair(RepairMode::linear, none, column({1, nan, 3}));
        CHECK(fixed.data() == std::vector<double>{1, 2, 3});
    }
    SUBCASE("locf leading gap falls back to the first observed value") {
        Matrix fixed = apply_repair(RepairMode::locf, none, column({nan, 5}));
        CHECK(fixed.data() == std::vector<double>{5, 5});
    }
    SUBCASE("mean substitution uses the fitted train mean") {
        FittedTransformState state;
        state.params["mean"] = {2.5};
        Matrix fixed = apply_repair(RepairMode::mean, state, column({nan}));
        CHECK(fixed.data() == std::vector<double>{2.5});
    }
    SUBCASE("zero fill") {
        Matrix fixed = apply_repair(RepairMode::zero, none, column({nan, 4, nan}));
        CHECK(fixed.data() == std::vector<double>{0, 4, 0});
    }
    SUBCASE("observed entries are bit-unchanged") {
        Matrix input = column({1.25, nan, -0.75, nan, 9});
        Matrix fixed = apply_repair(RepairMode::linear, none, input);
        CHECK(fixed(0, 0) == 1.25);
        CHECK(fixed(2, 0) == -0.75);
        CHECK(fixed(4, 0) == 9.0);
    }
    SUBCASE("entirely missing channel is a repair error naming the channel") {
        Matrix all_nan = column({nan, nan});
        CHECK_THROWS_WITH_AS(apply_repair(RepairMode::locf, none, all_nan),
                             doctest::Contains("channel 1"), IntegrityError);
        CHECK_THROWS_AS(apply_repair(RepairMode::linear, none, all_nan), IntegrityError);
    }
    SUBCASE("linear edge gaps extend flat") {
        Matrix fixed = apply_repair(RepairMode::linear, none, column({nan, 2, 4, nan}));
        CHECK(fixed.data() == std::vector<double>{2, 2, 4, 4});
    }
}

TEST_CASE("corruption rates") {
    TransformStageSpec spec = stage_of(TransformKind::corrupt);

    SUBCASE("rate zero is bit-identical") {
        spec.corrupt_rate = 0.0;
        Matrix x = column({1, 2, 3, 4});
        CorruptResult out = apply_corrupt(spec, 9, x);
        CHECK(out.values == x);
        CHECK(out.realized_ratio == 0.0);
    }
    SUBCASE("point rate one masks everything") {
        spec.corrupt_rate = 1.0;
        Matrix x(10, 2, 1.0);
        CorruptResult out = apply_corrupt(spec, 9, x);
        for (double v : out.values.data()) {
            CHECK(std::isnan(v));
        }
        CHECK(out.realized_ratio == 1.0);
    }
    SUBCASE("block mode hits the documented ratio window") {
        spec.corrupt_mode = CorruptMode::block;
        spec.corrupt_rate = 0.3;
        spec.block_min = 3;
        spec.block_max = 3;
        Matrix x(20, 1, 1.0);
        CorruptResult out = apply_corrupt(spec, 5, x);
        // target 6 masked samples; blocks of 3 -> exactly 6, ratio 0.30
        std::size_t masked = 0;
        for (double v : out.values.data()) masked += std::isnan(v) ? 1 : 0;
        CHECK(masked == 6);
        CHECK(out.realized_ratio == doctest::Approx(0.30));
    }
    SUBCASE("block ratio bound over random cases") {
        Rng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            spec.corrupt_mode = CorruptMode::block;
            spec.corrupt_rate = 0.1 + 0.2 * rng.uniform();
            spec.block_min = 1 + std::int64_t(rng.uniform_int(3));
            spec.block_max = spec.block_min + std::int64_t(rng.uniform_int(3));
            std::size_t t = 50 + rng.uniform_int(100);
            Matrix x(t, 1, 1.0);
            CorruptResult out = apply_corrupt(spec, rng.next_u64(), x);
            double upper = spec.corrupt_rate + double(spec.block_max - 1) / double(t) +
                           1.0 / double(t);   // +1/T for the ceil of the target count
            CHECK(out.realized_ratio >= spec.corrupt_rate - 1e-12);
            CHECK(out.realized_ratio <= upper + 1e-12);
        }
    }
    SUBCASE("deterministic in the seed") {
        spec.corrupt_rate = 0.5;
        Matrix x(30, 2, 1.0);
        CorruptResult a = apply_corrupt(spec, 77, x);
        CorruptResult b = apply_corrupt(spec, 77, x);
        CorruptResult c = apply_corrupt(spec, 78, x);
        // NaN != NaN, so compare mask layouts instead of values
        bool same = true, diff = false;
        for (std::size_t i = 0; i < x.data().size(); ++i) {
            same = same && std::isnan(a.values.data()[i]) == std::isnan(b.values.data()[i]);
            diff = diff || std::isnan(a.values.data()[i]) != std::isnan(c.values.data()[i]);
        }
        CHECK(same);
        CHECK(diff);
    }
}

TEST_CASE("health index endpoints and inverse") {
    CHECK(apply_health_index(100, column({0}), Direction::forward)(0, 0) == 1.0);
    CHECK(apply_health_index(123, column({123}), Direction::forward)(0, 0) == 0.0);

    Matrix hi = apply_health_index(100, column({25}), Direction::forward);
    CHECK(hi(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
    Matrix back = apply_health_index(100, hi, Direction::inverse);
    CHECK(back(0, 0) == doctest::Approx(25).epsilon(1e-12));

    CHECK_THROWS_AS(apply_health_index(100, column({101}), Direction::forward),
                    IntegrityError);
    CHECK_THROWS_AS(apply_health_index(100, column({-1}), Direction::forward), IntegrityError);
    CHECK_THROWS_AS(apply_health_index(0, column({0}), Direction::forward), SpecError);
}

TEST_CASE("concept class encoding") {
    auto lookup = fit_concept_lookup({"ds07", "ds01", "ds07"});
    REQUIRE(lookup == std::vector<std::string>{"ds01", "ds07"});

    // lambda(ds07) = 2 with d_c = 3 concepts: worked example gives 5
    CHECK(encode_concept_class(lookup, {0, 1, 0}, "ds07") == 5);
    CHECK(encode_concept_class(lookup, {1, 0, 0}, "ds01") == 1);

    // full 2 x 3 enumeration yields 6 distinct codes
    std::set<std::int64_t> codes;
    for (const std::string& id : {"ds01", "ds07"}) {
        for (int m = 0; m < 3; ++m) {
            std::vector<double> concept_vec(3, 0.0);
            concept_vec[std::size_t(m)] = 1.0;
            codes.insert(encode_concept_class(lookup, concept_vec, id));
        }
    }
    CHECK(codes.size() == 6);
    CHECK(*codes.begin() == 1);
    CHECK(*codes.rbegin() == 6);

    CHECK_THROWS_AS(encode_concept_class(lookup, {1, 1, 0}, "ds01"), IntegrityError);
    CHECK_THROWS_AS(encode_concept_class(lookup, {1, 0, 0}, "ds99"), IntegrityError);
}

TEST_CASE("target alignment rules") {
    std::vector<double> y = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

    SupportMap interval;
    interval.entries = {SupportEntry::interval(7, 10)};
    CHECK(align_target(y, interval, AlignRule::last) == std::vector<double>{100});
    CHECK(align_target(y, interval, AlignRule::mean) == std::vector<double>{85});
    CHECK(align_target(y, interval, AlignRule::max) == std::vector<double>{100});

    SupportMap singleton;
    singleton.entries = {SupportEntry::timestamp(5)};
    for (AlignRule rule : {AlignRule::last, AlignRule::mean, AlignRule::max,
                           AlignRule::majority}) {
        CHECK(align_target(y, singleton, rule) == std::vector<double>{50});
    }

    std::vector<double> classes = {1, 1, 2};
    SupportMap all;
    all.entries = {SupportEntry::interval(1, 3)};
    CHECK(align_target(classes, all, AlignRule::majority) == std::vector<double>{1});
    SupportMap pair;
    pair.entries = {SupportEntry::interval(1, 2)};
    CHECK(align_target({1, 2}, pair, AlignRule::majority) == std::vector<double>{1});

    SupportMap artificial;
    artificial.entries = {SupportEntry::artificial_entry()};
    CHECK_THROWS_AS(align_target(y, artificial, AlignRule::last), IntegrityError);

    SupportMap out_of_range;
    out_of_range.entries = {SupportEntry::interval(8, 12)};
    CHECK_THROWS_AS(align_target(y, out_of_range, AlignRule::last), IntegrityError);
}

TEST_CASE("support composition takes the union span") {
    SupportMap first;
    first.entries = {SupportEntry::interval(1, 4), SupportEntry::interval(4, 7),
                     SupportEntry::interval(7, 10), SupportEntry::interval(10, 13)};
    SupportMap local;
    local.entries = {SupportEntry::interval(2, 3), SupportEntry::timestamp(1)};

    SupportMap composed = compose_support(first, local);
    REQUIRE(composed.entries.size() == 2);
    CHECK(composed.entries[0] == SupportEntry::interval(4, 10));
    CHECK(composed.entries[1] == SupportEntry::interval(1, 4));

    // composed supports stay sorted
    CHECK(composed.validate(13).size() == 1);   // entry 2 is before entry 1 by lo: unsorted
    SupportMap ordered;
    ordered.entries = {SupportEntry::timestamp(1), SupportEntry::interval(2, 3)};
    SupportMap composed2 = compose_support(first, ordered);
    CHECK(composed2.validate(13).empty());
}
