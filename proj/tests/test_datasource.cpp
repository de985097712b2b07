#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "phmkit/datasource.hpp"
#include "phmkit/rng.hpp"

using namespace phmkit;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_csv(const std::string& name, const std::string& content) {
    fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

} // namespace

TEST_CASE("load_csv groups rows per unit and sorts by time") {
    auto path = write_temp_csv("phmkit_two_units.csv",
                               "unit_id,t,f_a,f_b,y\n"
                               "A,2,1.5,2.5,9\n"
                               "A,1,1.0,2.0,10\n"
                               "B,1,3.0,4.0,5\n"
                               "A,3,2.0,3.0,8\n"
                               "B,2,3.5,4.5,4\n");
    auto units = load_csv(path);
    REQUIRE(units.size() == 2);
    CHECK(units[0].unit_id == "A");
    CHECK(units[0].length() == 3);
    CHECK(units[1].unit_id == "B");
    CHECK(units[1].length() == 2);
    CHECK(units[0].x(0, 0) == 1.0);
    CHECK(units[0].x(2, 1) == 3.0);
    CHECK(units[0].y == std::vector<double>{10, 9, 8});
    CHECK(units[0].channel_names == std::vector<std::string>{"f_a", "f_b"});
}

TEST_CASE("load_csv rejects non-contiguous time naming the unit") {
    auto path = write_temp_csv("phmkit_gap.csv",
                               "unit_id,t,f_a,y\nA,1,1.0,2\nA,3,1.5,1\n");
    CHECK_THROWS_WITH_AS(load_csv(path),
                         doctest::Contains("non-contiguous"), IntegrityError);
    try {
        load_csv(path);
    } catch (const IntegrityError& e) {
        CHECK(std::string(e.what()).find("A") != std::string::npos);
    }
}

TEST_CASE("load_csv rejects duplicate time stamps") {
    auto path = write_temp_csv("phmkit_dup.csv",
                               "unit_id,t,f_a,y\nA,1,1.0,2\nA,1,1.5,1\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("duplicate"), IntegrityError);
}

TEST_CASE("load_csv turns the NaN literal into quiet NaN") {
    auto path = write_temp_csv("phmkit_nan.csv",
                               "unit_id,t,f_a,y\nA,1,NaN,2\nA,2,1.5,1\n");
    auto units = load_csv(path);
    REQUIRE(units.size() == 1);
    CHECK(std::isnan(units[0].x(0, 0)));
    CHECK(units[0].x(1, 0) == 1.5);
}

TEST_CASE("load_csv reports missing schema columns") {
    auto path = write_temp_csv("phmkit_missing.csv", "unit_id,t,f_a\nA,1,1.0\n");
    CHECK_THROWS_AS(load_csv(path), SchemaError);
}

TEST_CASE("csv writing then loading is the identity on values") {
    SyntheticSpec spec;
    spec.n_units = 3;
    spec.t_min = 5;
    spec.t_max = 9;
    spec.channels = 2;
    spec.seed = 11;
    spec.noise_std = 0.3;
    auto units = generate_synthetic(spec);

    fs::path path = fs::temp_directory_path() / "phmkit_roundtrip.csv";
    write_csv(path, units);
    auto reloaded = load_csv(path);

    REQUIRE(reloaded.size() == units.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
        CHECK(reloaded[u].unit_id == units[u].unit_id);
        REQUIRE(reloaded[u].length() == units[u].length());
        for (std::size_t t = 0; t < units[u].length(); ++t) {
            CHECK(reloaded[u].y[t] == units[u].y[t]);
            for (std::size_t c = 0; c < units[u].x.cols(); ++c) {
                CHECK(reloaded[u].x(t, c) == units[u].x(t, c));
            }
        }
    }
}

TEST_CASE("synthetic linear targets are RUL = T - t") {
    SyntheticSpec spec;
    spec.n_units = 1;
    spec.t_min = 5;
    spec.t_max = 5;
    spec.channels = 1;
    spec.noise_std = 0.0;
    auto units = generate_synthetic(spec);
    REQUIRE(units.size() == 1);
    CHECK(units[0].y == std::vector<double>{4, 3, 2, 1, 0});
}

TEST_CASE("synthetic generation is deterministic in its parameters") {
    SyntheticSpec spec;
    spec.n_units = 4;
    spec.t_min = 10;
    spec.t_max = 20;
    spec.noise_std = 0.5;
    spec.seed = 99;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t u = 0; u < a.size(); ++u) {
        CHECK(a[u].unit_id == b[u].unit_id);
        CHECK(a[u].x == b[u].x);
        CHECK(a[u].y == b[u].y);
    }
}

TEST_CASE("neighboring seeds produce different datasets") {
    SyntheticSpec spec;
    spec.n_units = 2;
    spec.t_min = 10;
    spec.t_max = 20;
    spec.noise_std = 0.1;
    int collisions = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        spec.seed = seed;
        auto a = generate_synthetic(spec);
        spec.seed = seed + 1;
        auto b = generate_synthetic(spec);
        bool equal = a.size() == b.size();
        for (std::size_t u = 0; equal && u < a.size(); ++u) {
            equal = a[u].x == b[u].x && a[u].y == b[u].y;
        }
        collisions += equal ? 1 : 0;
    }
    CHECK(collisions == 0);
}

TEST_CASE("synthetic diagnostics targets are class codes") {
    SyntheticSpec spec;
    spec.n_units = 2;
    spec.t_min = 12;
    spec.t_max = 12;
    spec.task = TaskKind::diagnostics;
    spec.class_count = 3;
    auto units = generate_synthetic(spec);
    for (const auto& unit : units) {
        for (std::size_t t = 0; t < unit.length(); ++t) {
            double cls = unit.y[t];
            CHECK(cls == std::floor(cls));
            CHECK(cls >= 0);
            CHECK(cls <= 2);
        }
        CHECK(unit.y.front() == 0);
        CHECK(unit.y.back() == 2);
    }
}

TEST_CASE("ah-RUL constant-current case matches hand integration") {
    // Four unit-duration cycles of 1 A: each trapezoid integral is 1 Ah,
    // Q_nom = 2 so Q_acc = 0.5, 1.0, 1.5, 2.0 and Q_rul(1) = 2.0 - 0.5.
    std::vector<std::vector<double>> cycles(4, std::vector<double>{1.0, 1.0});
    AhRulSpec spec;
    spec.q_nom = 2.0;
    auto rul = construct_ah_rul(cycles, spec);
    REQUIRE(rul.size() == 4);
    CHECK(rul[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(rul[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rul[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rul[3] == 0.0);
}

TEST_CASE("ah-RUL is zero at and after end of life") {
    std::vector<std::vector<double>> cycles(6, std::vector<double>{2.0, 2.0, 2.0});
    std::vector<double> capacity = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
    AhRulSpec spec;
    spec.q_nom = 1.0;
    spec.eol = EolRule::threshold;
    spec.capacity_channel = "capacity";
    spec.eol_threshold = 0.75;   // first crossing at cycle 4
    auto rul = construct_ah_rul(cycles, spec, capacity);
    CHECK(rul[3] == 0.0);
    CHECK(rul[4] == 0.0);
    CHECK(rul[5] == 0.0);
    CHECK(rul[2] > 0.0);
}

TEST_CASE("ah-RUL threshold never crossed is a resolution error") {
    std::vector<std::vector<double>> cycles(3, std::vector<double>{1.0});
    std::vector<double> capacity = {1.0, 1.0, 1.0};
    AhRulSpec spec;
    spec.eol = EolRule::threshold;
    spec.capacity_channel = "capacity";
    spec.eol_threshold = 0.5;
    CHECK_THROWS_AS(construct_ah_rul(cycles, spec, capacity), IntegrityError);
}

TEST_CASE("ah-RUL of zero current is identically zero") {
    std::vector<std::vector<double>> cycles(5, std::vector<double>{0.0, 0.0});
    AhRulSpec spec;
    auto rul = construct_ah_rul(cycles, spec);
    for (double v : rul) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("ah-RUL is nonincreasing for nonnegative discharge") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n_cycles = 2 + rng.uniform_int(10);
        std::vector<std::vector<double>> cycles(n_cycles);
        for (auto& cycle : cycles) {
            std::size_t n = 1 + rng.uniform_int(6);
            for (std::size_t i = 0; i < n; ++i) {
                cycle.push_back(rng.uniform() * 3.0);
            }
        }
        AhRulSpec spec;
        spec.q_nom = 0.5 + rng.uniform();
        auto rul = construct_ah_rul(cycles, spec);
        for (std::size_t i = 1; i < rul.size(); ++i) {
            CHECK(rul[i] <= rul[i - 1] + 1e-12);
        }
        CHECK(rul.back() == 0.0);
    }
}

TEST_CASE("negative-discharge convention flips the sign before integrating") {
    std::vector<std::vector<double>> positive(4, std::vector<double>{1.0, 1.0});
    std::vector<std::vector<double>> negative(4, std::vector<double>{-1.0, -1.0});
    AhRulSpec spec;
    spec.q_nom = 2.0;
    auto a = construct_ah_rul(positive, spec);
    spec.sign = SignConvention::negative_discharge;
    auto b = construct_ah_rul(negative, spec);
    CHECK(a == b);
}

TEST_CASE("ah-RUL raw-unit adapter groups rows by cycle") {
    RawUnit unit;
    unit.unit_id = "cell";
    unit.channel_names = {"cycle", "current"};
    unit.x = Matrix(8, 2);
    // four cycles, two samples each, constant 1 A
    for (std::size_t t = 0; t < 8; ++t) {
        unit.x(t, 0) = double(t / 2 + 1);
        unit.x(t, 1) = 1.0;
    }
    unit.y = std::vector<double>(8, 0.0);

    AhRulSpec spec;
    spec.q_nom = 2.0;
    auto rul = construct_ah_rul(unit, spec);
    REQUIRE(rul.size() == 8);
    CHECK(rul[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(rul[1] == doctest::Approx(1.5).epsilon(1e-12));   // same cycle, same value
    CHECK(rul[6] == 0.0);
    CHECK(rul[7] == 0.0);
}

TEST_CASE("ah-RUL spec validation") {
    AhRulSpec spec;
    spec.q_nom = 0.0;
    CHECK_THROWS_AS(spec.check(), SpecError);
    spec.q_nom = 1.0;
    spec.eol = EolRule::threshold;
    CHECK_THROWS_AS(spec.check(), SpecError);   // no capacity channel
}
