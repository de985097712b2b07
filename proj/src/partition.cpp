#include "phmkit/partition.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "phmkit/rng.hpp"

namespace phmkit {

std::vector<WindowSample>& RoutedWindows::of(Split s) {
    switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
    }
    return train;
}

const std::vector<WindowSample>& RoutedWindows::of(Split s) const {
    return const_cast<RoutedWindows*>(this)->of(s);
}

RoutedWindows route_windows(const std::vector<WindowSample>& samples,
                            const SplitAssignment& assignment) {
    RoutedWindows routed;
    for (const WindowSample& sample : samples) {
        Split destination;
        if (assignment.mode == SplitMode::inter_unit) {
            auto it = assignment.inter.find(sample.unit_id);
            if (it == assignment.inter.end()) {
                throw IntegrityError("routing error: unit '" + sample.unit_id +
                                     "' is not in the split assignment");
            }
            destination = it->second;
        } else {
            auto it = assignment.intra.find(sample.unit_id);
            if (it == assignment.intra.end()) {
                throw IntegrityError("routing error: unit '" + sample.unit_id +
                                     "' has no intra-unit boundaries");
            }
            const IntraBoundaries& b = it->second;
            if (sample.j_sup <= b.tau_train) {
                destination = Split::train;
            } else if (sample.j_sup <= b.tau_val) {
                destination = Split::val;
            } else {
                destination = Split::test;
            }
        }
        WindowSample copy = sample;
        copy.split = destination;
        routed.of(destination).push_back(std::move(copy));
    }
    return routed;
}

std::vector<std::string> leakage_audit(const RunAuditRecord& record) {
    std::vector<std::string> violations;

    for (const auto& stage : record.stages) {
        if (stage.fitted_on != "train" && stage.fitted_on != "none") {
            violations.push_back("stage '" + stage.stage_name + "' was fitted on '" +
                                 stage.fitted_on + "' instead of train");
        }
    }

    if (record.mode == SplitMode::intra_unit) {
        for (const auto& stage : record.stages) {
            if (stage.fitted_on != "train") {
                continue;
            }
            for (const auto& [unit, consumed] : stage.consumed_raw_max) {
                auto boundary = record.train_boundary_raw_max.find(unit);
                if (boundary == record.train_boundary_raw_max.end()) {
                    violations.push_back("stage '" + stage.stage_name + "': no training boundary "
                                         "recorded for unit '" + unit + "'");
                    continue;
                }
                if (consumed > boundary->second) {
                    violations.push_back(
                        "stage '" + stage.stage_name + "': fit consumed raw index " +
                        std::to_string(consumed) + " of unit '" + unit +
                        "', past the training boundary (raw index " +
                        std::to_string(boundary->second) + ")");
                }
            }
        }
    }

    std::map<std::pair<std::string, std::int64_t>, std::vector<std::string>> memberships;
    for (const auto& [split, members] : record.split_members) {
        for (const auto& member : members) {
            memberships[member].push_back(split);
        }
    }
    for (const auto& [member, splits] : memberships) {
        if (splits.size() > 1) {
            std::string joined;
            for (const auto& s : splits) {
                joined += joined.empty() ? s : "+" + s;
            }
            violations.push_back("sample (" + member.first + ", k=" +
                                 std::to_string(member.second) + ") appears in splits " + joined);
        }
    }

    return violations;
}

void ContextSpec::check() const {
    if (size < 1) {
        throw SpecError("context: size must be >= 1");
    }
}

std::vector<const TabularSample*> select_context(const TabularSample& query,
                                                 const std::vector<TabularSample>& pool,
                                                 const ContextSpec& spec,
                                                 const SplitAssignment& assignment) {
    spec.check();
    for (const TabularSample& member : pool) {
        if (member.split != Split::train) {
            throw LeakageFault("context pool contains a sample tagged '" +
                               std::string(split_name(member.split)) +
                               "' - contexts draw from the training partition only");
        }
    }

    // Eligibility: never the query itself; under intra-unit enforcement,
    // same-unit members must have their supervision index at or before the
    // unit's training boundary.
    std::vector<const TabularSample*> eligible;
    eligible.reserve(pool.size());
    for (const TabularSample& member : pool) {
        if (member.unit_id == query.unit_id && member.k == query.k) {
            continue;
        }
        if (spec.enforce_intra_boundary && assignment.mode == SplitMode::intra_unit &&
            member.unit_id == query.unit_id) {
            auto it = assignment.intra.find(member.unit_id);
            if (it != assignment.intra.end() && member.j_sup > it->second.tau_train) {
                continue;
            }
        }
        eligible.push_back(&member);
    }

    // Total deterministic base order.
    std::sort(eligible.begin(), eligible.end(), [](const TabularSample* a, const TabularSample* b) {
        return std::tie(a->unit_id, a->k) < std::tie(b->unit_id, b->k);
    });

    if (eligible.size() < spec.size) {
        throw IntegrityError("context error: only " + std::to_string(eligible.size()) +
                             " eligible pool members for a requested context of " +
                             std::to_string(spec.size));
    }

    if (spec.selection == ContextSelection::uniform_random) {
        Rng rng(spec.seed);
        // Fisher-Yates prefix of length `size` over the sorted eligible list.
        std::vector<const TabularSample*> shuffled = eligible;
        for (std::size_t i = 0; i < spec.size; ++i) {
            std::size_t j = i + std::size_t(rng.uniform_int(shuffled.size() - i));
            std::swap(shuffled[i], shuffled[j]);
        }
        shuffled.resize(spec.size);
        return shuffled;
    }

    // Nearest by Euclidean distance on the tabular vector, ties broken by
    // the (unit_id, k) base order.
    std::vector<std::pair<double, const TabularSample*>> ranked;
    ranked.reserve(eligible.size());
    for (const TabularSample* member : eligible) {
        if (member->x.size() != query.x.size()) {
            throw IntegrityError("context error: pool member dimension " +
                                 std::to_string(member->x.size()) + " != query dimension " +
                                 std::to_string(query.x.size()));
        }
        double dist2 = 0.0;
        for (std::size_t i = 0; i < query.x.size(); ++i) {
            double d = member->x[i] - query.x[i];
            dist2 += d * d;
        }
        ranked.emplace_back(dist2, member);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<const TabularSample*> context;
    context.reserve(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) {
        context.push_back(ranked[i].second);
    }
    return context;
}

} // namespace phmkit
