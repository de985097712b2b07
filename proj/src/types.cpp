#include "phmkit/types.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <sstream>

#include "phmkit/sha256.hpp"

namespace phmkit {

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw SchemaError("unknown split name '" + name + "'");
}

std::vector<std::string> SupportMap::validate(std::int64_t raw_len) const {
    std::vector<std::string> violations;
    std::int64_t prev_lo = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const SupportEntry& e = entries[i];
        if (e.artificial) {
            continue;
        }
        if (e.lo > e.hi) {
            violations.push_back("support entry " + std::to_string(i + 1) + " has lo > hi");
        }
        if (e.lo < 1 || e.hi > raw_len) {
            violations.push_back("support entry " + std::to_string(i + 1) +
                                 " references raw index outside [1, " +
                                 std::to_string(raw_len) + "]");
        }
        if (e.lo < prev_lo) {
            violations.push_back("support entries not sorted at position " +
                                 std::to_string(i + 1));
        }
        prev_lo = e.lo;
    }
    return violations;
}

void RawUnit::check() const {
    if (y.empty()) {
        throw IntegrityError("unit '" + unit_id + "': T must be >= 1");
    }
    if (x.rows() != y.size()) {
        throw IntegrityError("unit '" + unit_id + "': rows(X)=" + std::to_string(x.rows()) +
                             " != len(Y)=" + std::to_string(y.size()));
    }
    if (!channel_names.empty() && channel_names.size() != x.cols()) {
        throw IntegrityError("unit '" + unit_id + "': channel name count mismatch");
    }
}

void AlignedSeries::check() const {
    if (z.rows() != y.size() || y.size() != support.size()) {
        throw IntegrityError("unit '" + unit_id + "': rows(Z)=" + std::to_string(z.rows()) +
                             ", len(Y')=" + std::to_string(y.size()) + ", len(support)=" +
                             std::to_string(support.size()) + " must all be equal");
    }
    if (!y.empty() && z.cols() == 0) {
        throw IntegrityError("unit '" + unit_id + "': F must be >= 1 when T' > 0");
    }
}

const std::vector<UnitData>& SplitContainer::units(Split s) const {
    static const std::vector<UnitData> kEmpty;
    auto it = splits.find(s);
    return it == splits.end() ? kEmpty : it->second;
}

std::vector<UnitData>& SplitContainer::units(Split s) {
    return splits[s];
}

AlignedSeries SplitContainer::aligned_view(const UnitData& unit) const {
    auto fit = unit.keys.find(feature_key);
    auto tit = unit.keys.find(target_key);
    if (fit == unit.keys.end()) {
        throw IntegrityError("unit '" + unit.unit_id + "': missing key '" + feature_key + "'");
    }
    if (tit == unit.keys.end()) {
        throw IntegrityError("unit '" + unit.unit_id + "': missing key '" + target_key + "'");
    }
    const Series& f = fit->second;
    const Series& t = tit->second;
    if (f.length() != t.length()) {
        throw IntegrityError("unit '" + unit.unit_id + "': feature grid T'=" +
                             std::to_string(f.length()) + " does not match target grid T'=" +
                             std::to_string(t.length()));
    }
    if (t.width() != 1) {
        throw IntegrityError("unit '" + unit.unit_id + "': target key '" + target_key +
                             "' must have exactly one channel");
    }
    AlignedSeries out;
    out.unit_id = unit.unit_id;
    out.z = f.values;
    out.y.assign(t.values.data().begin(), t.values.data().end());
    out.support = f.support;
    out.check();
    return out;
}

void WindowSpec::check() const {
    if (l_seq < 1) throw SpecError("window: L_seq must be >= 1");
    if (stride < 1) throw SpecError("window: stride must be >= 1");
    if (warm_start < 0) throw SpecError("window: warm_start must be >= 0");
    if (offset < 0) throw SpecError("window: offset must be >= 0");
    if (pred_len < 1) throw SpecError("window: pred_len must be >= 1");
    if (lbl_len < 0) throw SpecError("window: lbl_len must be >= 0");
    if (multi_step()) {
        if (lbl_len > l_seq) {
            throw SpecError("window: lbl_len must be <= L_seq");
        }
        if (warm_start > l_seq - lbl_len + offset) {
            throw SpecError("window: warm_start must satisfy rho <= L_seq - lbl_len + offset");
        }
    } else if (warm_start > l_seq - 1 + offset) {
        throw SpecError("window: warm_start must satisfy rho <= L_seq - 1 + offset");
    }
}

namespace {

void hash_doubles(Sha256& h, const std::vector<double>& v) {
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        unsigned char le[8];
        for (int i = 0; i < 8; ++i) le[i] = (unsigned char)(bits >> (8 * i));
        h.update(le, 8);
    }
}

} // namespace

std::string FittedTransformState::compute_fingerprint() const {
    Sha256 h;
    h.update(stage_name);
    h.update("\x1f");
    h.update(kind);
    h.update("\x1f");
    h.update(fitted_on);
    h.update("\x1f");
    for (const auto& [name, values] : params) {
        h.update(name);
        h.update("\x1e");
        std::uint64_t n = values.size();
        h.update(&n, sizeof(n));
        hash_doubles(h, values);
    }
    for (const auto& [name, items] : lookups) {
        h.update(name);
        h.update("\x1e");
        for (const auto& s : items) {
            h.update(s);
            h.update("\x1f");
        }
    }
    return to_hex(h.finish());
}

namespace {

void validate_unit_keys(const UnitData& unit, const char* split_tag,
                        std::vector<std::string>& out) {
    for (const auto& [key, series] : unit.keys) {
        if (series.values.rows() != series.support.size()) {
            out.push_back("unit '" + unit.unit_id + "' key '" + key + "' in " + split_tag +
                          ": length mismatch (values " + std::to_string(series.values.rows()) +
                          " vs support " + std::to_string(series.support.size()) + ")");
        }
        for (auto& v : series.support.validate(unit.raw_length)) {
            out.push_back("unit '" + unit.unit_id + "' key '" + key + "': " + v);
        }
    }
}

} // namespace

std::vector<std::string> validate_container(const SplitContainer& container) {
    std::vector<std::string> violations;

    // Per-key structural checks plus sortedness by unit_id.
    for (Split s : kAllSplits) {
        const auto& units = container.units(s);
        for (std::size_t i = 0; i < units.size(); ++i) {
            validate_unit_keys(units[i], split_name(s), violations);
            if (i > 0 && !(units[i - 1].unit_id < units[i].unit_id)) {
                violations.push_back(std::string("units not strictly sorted by unit_id in ") +
                                     split_name(s));
            }
        }
    }

    // Membership rules depend on the split mode.
    if (container.assignment.mode == SplitMode::inter_unit) {
        std::map<std::string, int> seen;
        for (Split s : kAllSplits) {
            for (const auto& unit : container.units(s)) {
                seen[unit.unit_id] += 1;
            }
        }
        for (const auto& [id, count] : seen) {
            if (count > 1) {
                violations.push_back("unit '" + id + "' in multiple splits");
            }
        }
        for (const auto& [id, split] : container.assignment.inter) {
            bool found = false;
            for (const auto& unit : container.units(split)) {
                found = found || unit.unit_id == id;
            }
            if (!found) {
                violations.push_back("unit '" + id + "' assigned to " + split_name(split) +
                                     " but not stored there");
            }
        }
    } else {
        std::set<std::string> train_ids;
        for (const auto& unit : container.units(Split::train)) {
            train_ids.insert(unit.unit_id);
        }
        for (Split s : {Split::val, Split::test}) {
            std::set<std::string> ids;
            for (const auto& unit : container.units(s)) {
                ids.insert(unit.unit_id);
            }
            if (ids != train_ids) {
                violations.push_back(std::string("intra-unit container: unit set in ") +
                                     split_name(s) + " differs from train");
            }
        }
        for (const auto& [id, b] : container.assignment.intra) {
            if (b.tau_train < 0 || b.tau_train > b.tau_val) {
                violations.push_back("unit '" + id +
                                     "': boundaries must satisfy 0 <= tau_train <= tau_val");
            }
        }
    }

    // Stage history must be identical across splits.
    const auto& train_hist = container.stage_history.count(Split::train)
                                 ? container.stage_history.at(Split::train)
                                 : std::vector<std::string>{};
    for (Split s : {Split::val, Split::test}) {
        const auto it = container.stage_history.find(s);
        const auto& hist = it == container.stage_history.end() ? std::vector<std::string>{}
                                                               : it->second;
        if (hist != train_hist) {
            violations.push_back(std::string("stage history in ") + split_name(s) +
                                 " diverges from train");
        }
    }

    return violations;
}

} // namespace phmkit
