#include <doctest.h>

#include <algorithm>
#include <set>

#include "phmkit/partition.hpp"
#include "phmkit/rng.hpp"
#include "phmkit/windowing.hpp"

using namespace phmkit;

namespace {

WindowSample sample_of(const std::string& unit, std::int64_t k, std::int64_t j_sup) {
    WindowSample s;
    s.unit_id = unit;
    s.k = k;
    s.j_sup = j_sup;
    s.w = Matrix(1, 1, 0.0);
    s.y = {0.0};
    return s;
}

AlignedSeries ramp_series(const std::string& id, std::int64_t t_prime) {
    AlignedSeries s;
    s.unit_id = id;
    s.z = Matrix(std::size_t(t_prime), 1);
    s.y.resize(std::size_t(t_prime));
    for (std::int64_t j = 1; j <= t_prime; ++j) {
        s.z(std::size_t(j - 1), 0) = double(j);
        s.y[std::size_t(j - 1)] = double(t_prime - j);
    }
    s.support = SupportMap::identity(std::size_t(t_prime));
    return s;
}

TabularSample tab_of(const std::string& unit, std::int64_t k, std::int64_t j_sup,
                     std::vector<double> x, double y = 0.0) {
    TabularSample t;
    t.unit_id = unit;
    t.k = k;
    t.j_sup = j_sup;
    t.x = std::move(x);
    t.y = y;
    t.split = Split::train;
    return t;
}

SplitAssignment assignment_of() {
    SplitAssignment a;
    a.mode = SplitMode::inter_unit;
    return a;
}

} // namespace

TEST_CASE("inter-unit routing follows the unit assignment") {
    SplitAssignment assignment;
    assignment.mode = SplitMode::inter_unit;
    assignment.inter = {{"A", Split::train}, {"B", Split::test}};

    std::vector<WindowSample> samples = {sample_of("A", 1, 3), sample_of("B", 1, 3),
                                         sample_of("A", 2, 4)};
    RoutedWindows routed = route_windows(samples, assignment);
    CHECK(routed.train.size() == 2);
    CHECK(routed.test.size() == 1);
    CHECK(routed.val.empty());
    CHECK(routed.test[0].unit_id == "B");
    for (const auto& s : routed.train) {
        CHECK(s.split == Split::train);
    }
}

TEST_CASE("intra-unit routing by supervision index: the derived fixture") {
    // T' = 20, tau = (10, 15), L_seq 3, stride 1: K = 1..17 with j_sup = k+2.
    WindowSpec spec;
    spec.l_seq = 3;
    spec.stride = 1;
    auto samples = slice_unit(ramp_series("u", 20), spec, Split::train);
    REQUIRE(samples.size() == 17);

    SplitAssignment assignment;
    assignment.mode = SplitMode::intra_unit;
    assignment.intra = {{"u", {10, 15}}};
    RoutedWindows routed = route_windows(samples, assignment);

    auto starts = [](const std::vector<WindowSample>& list) {
        std::vector<std::int64_t> ks;
        for (const auto& s : list) ks.push_back(s.k);
        std::sort(ks.begin(), ks.end());
        return ks;
    };
    CHECK(starts(routed.train) == std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(starts(routed.val) == std::vector<std::int64_t>{9, 10, 11, 12, 13});
    CHECK(starts(routed.test) == std::vector<std::int64_t>{14, 15, 16, 17});

    CHECK(routed.train.size() + routed.val.size() + routed.test.size() == samples.size());
}

TEST_CASE("collapsed boundaries route everything to train") {
    SplitAssignment assignment;
    assignment.mode = SplitMode::intra_unit;
    assignment.intra = {{"u", {20, 20}}};
    WindowSpec spec;
    spec.l_seq = 3;
    auto samples = slice_unit(ramp_series("u", 20), spec, Split::train);
    RoutedWindows routed = route_windows(samples, assignment);
    CHECK(routed.train.size() == samples.size());
    CHECK(routed.val.empty());
    CHECK(routed.test.empty());
}

TEST_CASE("routing an unknown unit is an error") {
    SplitAssignment assignment;
    assignment.mode = SplitMode::inter_unit;
    assignment.inter = {{"A", Split::train}};
    CHECK_THROWS_AS(route_windows({sample_of("Z", 1, 1)}, assignment), IntegrityError);

    assignment.mode = SplitMode::intra_unit;
    assignment.intra = {};
    CHECK_THROWS_AS(route_windows({sample_of("Z", 1, 1)}, assignment), IntegrityError);
}

TEST_CASE("routing partitions the input multiset") {
    Rng rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        std::int64_t t_prime = 10 + std::int64_t(rng.uniform_int(40));
        std::int64_t tau_train = std::int64_t(rng.uniform_int(std::uint64_t(t_prime + 1)));
        std::int64_t tau_val =
            tau_train + std::int64_t(rng.uniform_int(std::uint64_t(t_prime - tau_train + 1)));
        WindowSpec spec;
        spec.l_seq = 1 + std::int64_t(rng.uniform_int(5));
        spec.stride = 1 + std::int64_t(rng.uniform_int(3));
        spec.offset = std::int64_t(rng.uniform_int(3));
        auto samples = slice_unit(ramp_series("u", t_prime), spec, Split::train);

        SplitAssignment assignment;
        assignment.mode = SplitMode::intra_unit;
        assignment.intra = {{"u", {tau_train, tau_val}}};
        RoutedWindows routed = route_windows(samples, assignment);

        std::set<std::int64_t> seen;
        for (const auto* list : {&routed.train, &routed.val, &routed.test}) {
            for (const auto& s : *list) {
                CHECK(seen.insert(s.k).second);   // disjoint
            }
        }
        CHECK(seen.size() == samples.size());   // exhaustive

        // membership depends only on j_sup
        for (const auto& s : routed.train) CHECK(s.j_sup <= tau_train);
        for (const auto& s : routed.val) {
            CHECK(s.j_sup > tau_train);
            CHECK(s.j_sup <= tau_val);
        }
        for (const auto& s : routed.test) CHECK(s.j_sup > tau_val);
    }
}

TEST_CASE("shifting the offset across a boundary moves the sample") {
    SplitAssignment assignment;
    assignment.mode = SplitMode::intra_unit;
    assignment.intra = {{"u", {10, 15}}};

    WindowSpec spec;
    spec.l_seq = 3;
    spec.stride = 1;
    auto base = slice_unit(ramp_series("u", 20), spec, Split::train);
    spec.offset = 1;
    auto shifted = slice_unit(ramp_series("u", 20), spec, Split::train);

    RoutedWindows routed_base = route_windows(base, assignment);
    RoutedWindows routed_shifted = route_windows(shifted, assignment);
    // k = 8 has j_sup 10 (train) without offset and j_sup 11 (val) with it
    auto in = [](const std::vector<WindowSample>& list, std::int64_t k) {
        return std::any_of(list.begin(), list.end(),
                           [&](const WindowSample& s) { return s.k == k; });
    };
    CHECK(in(routed_base.train, 8));
    CHECK(in(routed_shifted.val, 8));
}

TEST_CASE("leakage audit") {
    SUBCASE("a clean record produces an empty report") {
        RunAuditRecord record;
        record.mode = SplitMode::inter_unit;
        record.stages.push_back({"scaler", "train", {{"a", 20}}});
        record.split_members["train"] = {{"a", 1}, {"a", 2}};
        record.split_members["test"] = {{"b", 1}};
        CHECK(leakage_audit(record).empty());
    }
    SUBCASE("fitting on pooled train+test is flagged") {
        RunAuditRecord record;
        record.stages.push_back({"scaler", "train+test", {}});
        auto violations = leakage_audit(record);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].find("train+test") != std::string::npos);
    }
    SUBCASE("intra-unit fit past the boundary is flagged") {
        RunAuditRecord record;
        record.mode = SplitMode::intra_unit;
        record.stages.push_back({"scaler", "train", {{"u", 15}}});
        record.train_boundary_raw_max = {{"u", 10}};
        auto violations = leakage_audit(record);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].find("past the training boundary") != std::string::npos);

        record.stages[0].consumed_raw_max["u"] = 10;
        CHECK(leakage_audit(record).empty());
    }
    SUBCASE("split intersections are flagged") {
        RunAuditRecord record;
        record.split_members["train"] = {{"a", 3}};
        record.split_members["test"] = {{"a", 3}};
        auto violations = leakage_audit(record);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].find("appears in splits") != std::string::npos);
    }
}

TEST_CASE("context selection excludes the query") {
    std::vector<TabularSample> pool;
    for (int i = 0; i < 5; ++i) {
        pool.push_back(tab_of("A", i + 1, i + 1, {double(i)}));
    }
    SplitAssignment assignment;
    assignment.mode = SplitMode::inter_unit;

    ContextSpec spec;
    spec.size = 4;
    auto context = select_context(pool[2], pool, spec, assignment);
    REQUIRE(context.size() == 4);
    for (const auto* member : context) {
        CHECK(!(member->unit_id == "A" && member->k == 3));
    }
}

TEST_CASE("intra-unit context members respect the training boundary") {
    SplitAssignment assignment;
    assignment.mode = SplitMode::intra_unit;
    assignment.intra = {{"A", {10, 15}}, {"B", {20, 25}}};

    std::vector<TabularSample> pool = {tab_of("A", 1, 8, {0.0}), tab_of("A", 2, 12, {1.0}),
                                       tab_of("B", 1, 12, {2.0})};
    TabularSample query = tab_of("A", 9, 11, {0.5});

    ContextSpec spec;
    spec.size = 2;
    auto context = select_context(query, pool, spec, assignment);
    REQUIRE(context.size() == 2);
    for (const auto* member : context) {
        // (A, j_sup=12) must be filtered; (B, j_sup=12) stays
        CHECK(!(member->unit_id == "A" && member->j_sup == 12));
    }
    bool has_b = std::any_of(context.begin(), context.end(),
                             [](const TabularSample* s) { return s->unit_id == "B"; });
    CHECK(has_b);
}

TEST_CASE("random context selection is deterministic in the seed") {
    std::vector<TabularSample> pool;
    for (int i = 0; i < 20; ++i) {
        pool.push_back(tab_of("U", i + 1, i + 1, {double(i), double(i % 3)}));
    }
    SplitAssignment assignment;
    assignment.mode = SplitMode::inter_unit;

    ContextSpec spec;
    spec.size = 7;
    spec.selection = ContextSelection::uniform_random;
    spec.seed = 99;

    TabularSample query = tab_of("Q", 1, 1, {0.0, 0.0});
    auto a = select_context(query, pool, spec, assignment);
    auto b = select_context(query, pool, spec, assignment);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
    }

    spec.seed = 100;
    auto c = select_context(query, pool, spec, assignment);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        differs = differs || a[i] != c[i];
    }
    CHECK(differs);
}

TEST_CASE("nearest context selection matches brute-force ranking") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<TabularSample> pool;
        for (int i = 0; i < 30; ++i) {
            pool.push_back(tab_of("U", i + 1, i + 1, {rng.normal(), rng.normal()}));
        }
        TabularSample query = tab_of("Q", 1, 1, {rng.normal(), rng.normal()});

        ContextSpec spec;
        spec.size = 5;
        auto context = select_context(query, pool, spec, assignment_of());

        // oracle: sort all members by (distance, unit_id, k)
        std::vector<std::pair<double, const TabularSample*>> ranked;
        for (const auto& member : pool) {
            double d = 0;
            for (std::size_t i = 0; i < 2; ++i) {
                d += (member.x[i] - query.x[i]) * (member.x[i] - query.x[i]);
            }
            ranked.emplace_back(d, &member);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return std::tie(a.first, a.second->unit_id, a.second->k) <
                   std::tie(b.first, b.second->unit_id, b.second->k);
        });
        for (std::size_t i = 0; i < spec.size; ++i) {
            CHECK(context[i] == ranked[i].second);
        }
    }
}

TEST_CASE("context errors") {
    std::vector<TabularSample> pool = {tab_of("A", 1, 1, {0.0}), tab_of("A", 2, 2, {1.0})};
    ContextSpec spec;
    spec.size = 2;
    // query is in the pool: only 1 eligible member remains
    CHECK_THROWS_AS(select_context(pool[0], pool, spec, assignment_of()), IntegrityError);

    std::vector<TabularSample> tainted = pool;
    tainted[1].split = Split::test;
    spec.size = 1;
    CHECK_THROWS_AS(select_context(tab_of("Q", 1, 1, {0.0}), tainted, spec, assignment_of()),
                    LeakageFault);
}
