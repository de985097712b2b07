#include "phmkit/datasource.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "phmkit/rng.hpp"

namespace phmkit {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& context) {
    if (s == "NaN" || s == "nan" || s == "NAN") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw IntegrityError("cannot parse decimal value '" + s + "' in " + context);
    }
    return value;
}

std::int64_t parse_int(const std::string& s, const std::string& context) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw IntegrityError("cannot parse integer '" + s + "' in " + context);
    }
    return value;
}

struct CsvRow {
    std::int64_t t;
    std::vector<double> features;
    double y;
};

} // namespace

std::vector<RawUnit> load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw IntegrityError("cannot open CSV file '" + path.string() + "'");
    }

    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw SchemaError("CSV file '" + path.string() + "' is empty (header row required)");
    }
    std::vector<std::string> header = split_line(header_line);

    auto column_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw SchemaError("CSV file '" + path.string() + "': missing column '" + name + "'");
        }
        return std::size_t(it - header.begin());
    };

    std::size_t unit_idx = column_index(schema.unit_col);
    std::size_t time_idx = column_index(schema.time_col);
    std::size_t target_idx = column_index(schema.target_col);

    std::vector<std::string> feature_names = schema.feature_cols;
    if (feature_names.empty()) {
        for (const auto& name : header) {
            if (name.rfind("f_", 0) == 0) {
                feature_names.push_back(name);
            }
        }
    }
    if (feature_names.empty()) {
        throw SchemaError("CSV file '" + path.string() + "': no feature columns (f_*)");
    }
    std::vector<std::size_t> feature_idx;
    feature_idx.reserve(feature_names.size());
    for (const auto& name : feature_names) {
        feature_idx.push_back(column_index(name));
    }

    std::map<std::string, std::vector<CsvRow>> rows_by_unit;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size()) {
            throw IntegrityError("CSV line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        }
        const std::string context = "line " + std::to_string(line_no);
        CsvRow row;
        row.t = parse_int(fields[time_idx], context);
        if (row.t < 1) {
            throw IntegrityError("CSV " + context + ": time index must be positive");
        }
        row.features.reserve(feature_idx.size());
        for (std::size_t idx : feature_idx) {
            row.features.push_back(parse_double(fields[idx], context));
        }
        row.y = parse_double(fields[target_idx], context);
        rows_by_unit[fields[unit_idx]].push_back(std::move(row));
    }

    std::vector<RawUnit> units;
    units.reserve(rows_by_unit.size());
    for (auto& [unit_id, rows] : rows_by_unit) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const CsvRow& a, const CsvRow& b) { return a.t < b.t; });
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::int64_t expected = std::int64_t(i) + 1;
            if (rows[i].t != expected) {
                if (i > 0 && rows[i].t == rows[i - 1].t) {
                    throw IntegrityError("unit '" + unit_id + "': duplicate time index t=" +
                                         std::to_string(rows[i].t));
                }
                throw IntegrityError("unit '" + unit_id + "': non-contiguous time (expected t=" +
                                     std::to_string(expected) + ", found t=" +
                                     std::to_string(rows[i].t) + ")");
            }
        }

        RawUnit unit;
        unit.unit_id = unit_id;
        unit.channel_names = feature_names;
        unit.x = Matrix(rows.size(), feature_names.size());
        unit.y.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t c = 0; c < feature_names.size(); ++c) {
                unit.x(i, c) = rows[i].features[c];
            }
            unit.y[i] = rows[i].y;
        }
        unit.check();
        units.push_back(std::move(unit));
    }
    return units;
}

namespace {

void append_double(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "NaN";
        return;
    }
    char buf[64];
    int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    out.append(buf, std::size_t(n));
}

} // namespace

void write_csv(const std::filesystem::path& path, const std::vector<RawUnit>& units) {
    std::ofstream out(path);
    if (!out) {
        throw IntegrityError("cannot open '" + path.string() + "' for writing");
    }
    std::vector<std::string> feature_names;
    if (!units.empty()) {
        feature_names = units.front().channel_names;
        if (feature_names.empty()) {
            for (std::size_t c = 0; c < units.front().x.cols(); ++c) {
                feature_names.push_back("f_c" + std::to_string(c + 1));
            }
        }
    }
    std::string line = "unit_id,t";
    for (const auto& name : feature_names) {
        line += ",";
        line += name;
    }
    line += ",y\n";
    out << line;
    for (const auto& unit : units) {
        for (std::size_t t = 0; t < unit.length(); ++t) {
            line = unit.unit_id + "," + std::to_string(t + 1);
            for (std::size_t c = 0; c < unit.x.cols(); ++c) {
                line += ",";
                append_double(line, unit.x(t, c));
            }
            line += ",";
            append_double(line, unit.y[t]);
            line += "\n";
            out << line;
        }
    }
}

void SyntheticSpec::check() const {
    if (n_units < 1) throw SpecError("synthetic: n_units must be >= 1");
    if (t_min < 2) throw SpecError("synthetic: t_min must be >= 2");
    if (t_max < t_min) throw SpecError("synthetic: t_max must be >= t_min");
    if (channels < 1) throw SpecError("synthetic: channels must be >= 1");
    if (noise_std < 0) throw SpecError("synthetic: noise_std must be >= 0");
    if (task == TaskKind::diagnostics && class_count < 1) {
        throw SpecError("synthetic: class_count must be >= 1");
    }
}

std::vector<RawUnit> generate_synthetic(const SyntheticSpec& spec) {
    spec.check();

    // One shared degradation curve per channel; units differ only in length
    // and noise. This keeps noiseless linear data exactly affine in the
    // target, which the end-to-end fixtures rely on.
    Rng param_rng(mix_seed(spec.seed, "channel-params"));
    std::vector<double> chan_offset(std::size_t(spec.channels));
    std::vector<double> chan_scale(std::size_t(spec.channels));
    for (std::int64_t c = 0; c < spec.channels; ++c) {
        chan_offset[std::size_t(c)] = -1.0 + 2.0 * param_rng.uniform();
        chan_scale[std::size_t(c)] = 0.5 + param_rng.uniform();
    }

    std::vector<RawUnit> units;
    units.reserve(std::size_t(spec.n_units));
    for (std::int64_t u = 0; u < spec.n_units; ++u) {
        std::string unit_id = "u";
        // Zero-padded so bytewise ordering equals numeric ordering.
        std::string number = std::to_string(u + 1);
        unit_id += std::string(4 - std::min<std::size_t>(4, number.size()), '0') + number;

        Rng rng(mix_seed(spec.seed, unit_id));
        std::int64_t t_len =
            spec.t_min + std::int64_t(rng.uniform_int(std::uint64_t(spec.t_max - spec.t_min + 1)));

        RawUnit unit;
        unit.unit_id = unit_id;
        unit.x = Matrix(std::size_t(t_len), std::size_t(spec.channels));
        unit.y.resize(std::size_t(t_len));
        for (std::int64_t c = 0; c < spec.channels; ++c) {
            unit.channel_names.push_back("f_c" + std::to_string(c + 1));
        }

        for (std::int64_t t = 1; t <= t_len; ++t) {
            double rul = double(t_len - t);
            double level = 0.0;
            switch (spec.shape) {
            case DegradationShape::linear:
                level = rul;
                break;
            case DegradationShape::exponential:
                level = std::exp(-3.0 * double(t) / double(t_len));
                break;
            case DegradationShape::piecewise:
                // Healthy plateau over the first half, linear decay after.
                level = (t <= t_len / 2) ? double(t_len - t_len / 2)
                                         : double(t_len - t);
                break;
            }
            for (std::int64_t c = 0; c < spec.channels; ++c) {
                double value = chan_offset[std::size_t(c)] + chan_scale[std::size_t(c)] * level;
                if (spec.noise_std > 0) {
                    value += spec.noise_std * rng.normal();
                }
                unit.x(std::size_t(t - 1), std::size_t(c)) = value;
            }
            if (spec.task == TaskKind::prognostics) {
                double target = rul;
                if (spec.noise_std > 0) {
                    target += spec.noise_std * rng.normal();
                }
                unit.y[std::size_t(t - 1)] = target;
            } else {
                std::int64_t cls = (t - 1) * spec.class_count / t_len;
                unit.y[std::size_t(t - 1)] = double(std::min(cls, spec.class_count - 1));
            }
        }
        unit.metadata["lifetime"] = std::to_string(t_len);
        unit.check();
        units.push_back(std::move(unit));
    }
    return units;
}

void AhRulSpec::check() const {
    if (q_nom <= 0) throw SpecError("ah_rul: Q_nom must be > 0");
    if (sample_dt <= 0) throw SpecError("ah_rul: sample_dt must be > 0");
    if (eol == EolRule::threshold && capacity_channel.empty()) {
        throw SpecError("ah_rul: threshold mode requires a capacity channel");
    }
}

std::vector<double> construct_ah_rul(const std::vector<std::vector<double>>& cycle_currents,
                                     const AhRulSpec& spec,
                                     const std::vector<double>& cycle_capacity) {
    spec.check();
    const std::size_t n_cycles = cycle_currents.size();
    if (n_cycles == 0) {
        throw IntegrityError("ah_rul: no cycles");
    }

    double sign = spec.sign == SignConvention::negative_discharge ? -1.0 : 1.0;

    // Trapezoidal integral per cycle; a single-sample cycle degenerates to a
    // rectangle of one sample spacing.
    std::vector<double> q_acc(n_cycles);
    double acc = 0.0;
    for (std::size_t n = 0; n < n_cycles; ++n) {
        const auto& samples = cycle_currents[n];
        if (samples.empty()) {
            throw IntegrityError("ah_rul: cycle " + std::to_string(n + 1) + " has no samples");
        }
        double integral = 0.0;
        if (samples.size() == 1) {
            integral = sign * samples[0] * spec.sample_dt;
        } else {
            for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
                integral += spec.sample_dt * (sign * samples[i] + sign * samples[i + 1]) / 2.0;
            }
        }
        acc += integral / spec.q_nom;
        q_acc[n] = acc;
    }

    std::size_t eol_cycle = n_cycles;   // 1-based
    if (spec.eol == EolRule::threshold) {
        if (cycle_capacity.size() != n_cycles) {
            throw IntegrityError("ah_rul: capacity series length does not match cycle count");
        }
        bool found = false;
        for (std::size_t n = 0; n < n_cycles; ++n) {
            if (cycle_capacity[n] < spec.eol_threshold) {
                eol_cycle = n + 1;
                found = true;
                break;
            }
        }
        if (!found) {
            throw IntegrityError("ah_rul: end-of-life threshold never crossed");
        }
    }

    std::vector<double> q_rul(n_cycles);
    double q_eol = q_acc[eol_cycle - 1];
    for (std::size_t n = 0; n < n_cycles; ++n) {
        q_rul[n] = (n + 1 >= eol_cycle) ? 0.0 : q_eol - q_acc[n];
    }
    return q_rul;
}

std::vector<double> construct_ah_rul(const RawUnit& unit, const AhRulSpec& spec) {
    spec.check();
    auto channel = [&](const std::string& name) -> std::size_t {
        auto it = std::find(unit.channel_names.begin(), unit.channel_names.end(), name);
        if (it == unit.channel_names.end()) {
            throw SchemaError("unit '" + unit.unit_id + "': missing channel '" + name + "'");
        }
        return std::size_t(it - unit.channel_names.begin());
    };

    std::size_t current_idx = channel(spec.current_channel);
    std::size_t cycle_idx = channel(spec.cycle_channel);

    std::vector<std::vector<double>> cycles;
    std::vector<double> capacity;
    std::size_t cap_idx = 0;
    if (spec.eol == EolRule::threshold) {
        cap_idx = channel(spec.capacity_channel);
    }

    std::int64_t current_cycle = 0;
    std::vector<std::size_t> row_cycle(unit.length());
    for (std::size_t t = 0; t < unit.length(); ++t) {
        auto cycle = std::int64_t(unit.x(t, cycle_idx));
        if (cycle == current_cycle + 1) {
            cycles.emplace_back();
            capacity.push_back(0.0);
            current_cycle = cycle;
        } else if (cycle != current_cycle) {
            throw IntegrityError("unit '" + unit.unit_id +
                                 "': cycle numbers must be contiguous and nondecreasing");
        }
        cycles.back().push_back(unit.x(t, current_idx));
        if (spec.eol == EolRule::threshold) {
            capacity.back() = unit.x(t, cap_idx);   // last within-cycle sample wins
        }
        row_cycle[t] = std::size_t(current_cycle);
    }

    std::vector<double> per_cycle = construct_ah_rul(cycles, spec, capacity);
    std::vector<double> per_row(unit.length());
    for (std::size_t t = 0; t < unit.length(); ++t) {
        per_row[t] = per_cycle[row_cycle[t] - 1];
    }
    return per_row;
}

} // namespace phmkit
