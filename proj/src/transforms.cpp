#include "phmkit/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

#include "phmkit/rng.hpp"

namespace phmkit {

namespace {

constexpr double kLogEps = 1e-12;

[[noreturn]] void bad_name(const char* what, const std::string& name) {
    throw SchemaError(std::string("unknown ") + what + " '" + name + "'");
}

} // namespace

TransformKind transform_kind_from_name(const std::string& name) {
    if (name == "identity") return TransformKind::identity;
    if (name == "minmax") return TransformKind::minmax;
    if (name == "standard") return TransformKind::standard;
    if (name == "constant") return TransformKind::constant_scale;
    if (name == "windowed_aggregation") return TransformKind::windowed_aggregation;
    if (name == "stft") return TransformKind::stft;
    if (name == "segment_stats") return TransformKind::segment_stats;
    if (name == "cumsum_squared") return TransformKind::cumsum_squared;
    if (name == "subsample") return TransformKind::subsample;
    if (name == "concatenate") return TransformKind::concatenate;
    if (name == "pad_to_length") return TransformKind::pad_to_length;
    if (name == "repair") return TransformKind::repair;
    if (name == "corrupt") return TransformKind::corrupt;
    if (name == "health_index") return TransformKind::health_index;
    if (name == "concept_classes") return TransformKind::concept_classes;
    bad_name("transform kind", name);
}

const char* transform_kind_name(TransformKind kind) {
    switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::minmax: return "minmax";
    case TransformKind::standard: return "standard";
    case TransformKind::constant_scale: return "constant";
    case TransformKind::windowed_aggregation: return "windowed_aggregation";
    case TransformKind::stft: return "stft";
    case TransformKind::segment_stats: return "segment_stats";
    case TransformKind::cumsum_squared: return "cumsum_squared";
    case TransformKind::subsample: return "subsample";
    case TransformKind::concatenate: return "concatenate";
    case TransformKind::pad_to_length: return "pad_to_length";
    case TransformKind::repair: return "repair";
    case TransformKind::corrupt: return "corrupt";
    case TransformKind::health_index: return "health_index";
    case TransformKind::concept_classes: return "concept_classes";
    }
    return "?";
}

bool kind_is_grid_changing(TransformKind kind) {
    switch (kind) {
    case TransformKind::windowed_aggregation:
    case TransformKind::stft:
    case TransformKind::segment_stats:
    case TransformKind::subsample:
    case TransformKind::pad_to_length:
        return true;
    default:
        return false;
    }
}

AggRule agg_rule_from_name(const std::string& name) {
    if (name == "mean") return AggRule::mean;
    if (name == "sum") return AggRule::sum;
    if (name == "min") return AggRule::min;
    if (name == "max") return AggRule::max;
    if (name == "median") return AggRule::median;
    if (name == "std") return AggRule::std_dev;
    if (name == "first") return AggRule::first;
    if (name == "last") return AggRule::last;
    bad_name("aggregation rule", name);
}

StatKind stat_from_name(const std::string& name) {
    if (name == "mean") return StatKind::mean;
    if (name == "max") return StatKind::max;
    if (name == "min") return StatKind::min;
    if (name == "rms") return StatKind::rms;
    if (name == "var") return StatKind::var;
    if (name == "std") return StatKind::std_dev;
    if (name == "skewness") return StatKind::skewness;
    if (name == "kurtosis") return StatKind::kurtosis;
    if (name == "energy") return StatKind::energy;
    if (name == "peak_factor") return StatKind::peak_factor;
    if (name == "range") return StatKind::range;
    bad_name("statistic", name);
}

const char* stat_name(StatKind s) {
    switch (s) {
    case StatKind::mean: return "mean";
    case StatKind::max: return "max";
    case StatKind::min: return "min";
    case StatKind::rms: return "rms";
    case StatKind::var: return "var";
    case StatKind::std_dev: return "std";
    case StatKind::skewness: return "skewness";
    case StatKind::kurtosis: return "kurtosis";
    case StatKind::energy: return "energy";
    case StatKind::peak_factor: return "peak_factor";
    case StatKind::range: return "range";
    }
    return "?";
}

AlignRule align_rule_from_name(const std::string& name) {
    if (name == "last") return AlignRule::last;
    if (name == "mean") return AlignRule::mean;
    if (name == "max") return AlignRule::max;
    if (name == "majority") return AlignRule::majority;
    if (name == "none") return AlignRule::none;
    bad_name("alignment rule", name);
}

const char* align_rule_name(AlignRule rule) {
    switch (rule) {
    case AlignRule::last: return "last";
    case AlignRule::mean: return "mean";
    case AlignRule::max: return "max";
    case AlignRule::majority: return "majority";
    case AlignRule::none: return "none";
    }
    return "?";
}

bool TransformStageSpec::stateful() const {
    switch (kind) {
    case TransformKind::minmax:
    case TransformKind::standard:
    case TransformKind::concept_classes:
        return true;
    case TransformKind::repair:
        return repair_mode == RepairMode::mean;
    default:
        return false;
    }
}

void TransformStageSpec::check() const {
    if (stage_name.empty()) throw SpecError("transform stage without a name");
    if (apply_to.empty()) throw SpecError("stage '" + stage_name + "': apply_to must be non-empty");
    if (kind != TransformKind::concatenate && apply_to.size() != 1) {
        throw SpecError("stage '" + stage_name + "': kind '" + transform_kind_name(kind) +
                        "' takes exactly one input key");
    }
    if (kind_is_grid_changing(kind) && align == AlignRule::none) {
        throw SpecError("stage '" + stage_name +
                        "': grid-changing stage requires a target-alignment rule");
    }
    switch (kind) {
    case TransformKind::constant_scale:
        if (constant == 0.0) throw SpecError("stage '" + stage_name + "': constant must be nonzero");
        break;
    case TransformKind::windowed_aggregation:
        if (window < 1 || hop < 1) {
            throw SpecError("stage '" + stage_name + "': window and hop must be >= 1");
        }
        break;
    case TransformKind::stft:
        if (window < 1 || hop < 1) {
            throw SpecError("stage '" + stage_name + "': window and hop must be >= 1");
        }
        if (n_fft < window) {
            throw SpecError("stage '" + stage_name + "': window must not exceed n_fft");
        }
        break;
    case TransformKind::segment_stats:
        if (stats.empty()) throw SpecError("stage '" + stage_name + "': stats must be non-empty");
        break;
    case TransformKind::subsample:
        if (subsample_rate < 1) throw SpecError("stage '" + stage_name + "': rate must be >= 1");
        break;
    case TransformKind::pad_to_length:
        if (pad_length < 1) throw SpecError("stage '" + stage_name + "': length must be >= 1");
        break;
    case TransformKind::corrupt:
        if (corrupt_rate < 0.0 || corrupt_rate > 1.0) {
            throw SpecError("stage '" + stage_name + "': rate must lie in [0, 1]");
        }
        if (corrupt_mode == CorruptMode::block && (block_min < 1 || block_min > block_max)) {
            throw SpecError("stage '" + stage_name + "': block lengths must satisfy 1 <= min <= max");
        }
        break;
    default:
        break;
    }
}

// ---------------------------------------------------------------------------
// Pointwise scalers

namespace {

const std::vector<double>& state_param(const FittedTransformState& state, const std::string& name) {
    auto it = state.params.find(name);
    if (it == state.params.end()) {
        throw IntegrityError("fitted state '" + state.stage_name + "' is missing param '" + name +
                             "'");
    }
    return it->second;
}

} // namespace

Matrix apply_pointwise_scale(TransformKind kind, const FittedTransformState& state,
                             const Matrix& x, Direction direction, const std::string& unit_id) {
    Matrix out(x.rows(), x.cols());
    auto per_unit = [&](const std::string& name) -> const std::vector<double>& {
        auto it = state.params.find(name + "/" + unit_id);
        if (it != state.params.end()) {
            return it->second;
        }
        return state_param(state, name);
    };

    if (kind == TransformKind::constant_scale) {
        double c = state_param(state, "constant").at(0);
        for (std::size_t i = 0; i < x.data().size(); ++i) {
            out.data()[i] = direction == Direction::forward ? c * x.data()[i] : x.data()[i] / c;
        }
        return out;
    }

    if (kind == TransformKind::minmax) {
        const auto& lo = per_unit("min");
        const auto& hi = per_unit("max");
        if (lo.size() != x.cols()) {
            throw IntegrityError("minmax state has " + std::to_string(lo.size()) +
                                 " channels, input has " + std::to_string(x.cols()));
        }
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                double range = hi[c] - lo[c];
                double v = x(r, c);
                if (direction == Direction::forward) {
                    // Degenerate channel (min == max) maps to 0; the inverse
                    // returns the fitted point.
                    out(r, c) = range == 0.0 ? 0.0 : (v - lo[c]) / range;
                } else {
                    out(r, c) = range == 0.0 ? lo[c] : v * range + lo[c];
                }
            }
        }
        return out;
    }

    if (kind == TransformKind::standard) {
        const auto& mu = per_unit("mean");
        const auto& sigma = per_unit("std");
        if (mu.size() != x.cols()) {
            throw IntegrityError("standard state has " + std::to_string(mu.size()) +
                                 " channels, input has " + std::to_string(x.cols()));
        }
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                double v = x(r, c);
                if (direction == Direction::forward) {
                    out(r, c) = sigma[c] == 0.0 ? 0.0 : (v - mu[c]) / sigma[c];
                } else {
                    out(r, c) = sigma[c] * v + mu[c];
                }
            }
        }
        return out;
    }

    throw SpecError(std::string("'") + transform_kind_name(kind) + "' is not a pointwise scaler");
}

// ---------------------------------------------------------------------------
// Grid-changing operations

namespace {

std::int64_t interior_frames(std::int64_t t, std::int64_t window, std::int64_t hop) {
    if (t < window) {
        return 0;
    }
    return (t - window) / hop + 1;
}

SupportMap interior_supports(std::int64_t frames, std::int64_t window, std::int64_t hop) {
    SupportMap m;
    m.entries.reserve(std::size_t(frames));
    for (std::int64_t j = 1; j <= frames; ++j) {
        std::int64_t lo = (j - 1) * hop + 1;
        m.entries.push_back(SupportEntry::interval(lo, lo + window - 1));
    }
    return m;
}

double population_std(const double* p, std::size_t n) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p[i];
    mean /= double(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (p[i] - mean) * (p[i] - mean);
    return std::sqrt(acc / double(n));
}

} // namespace

std::pair<Matrix, SupportMap> apply_windowed_aggregation(AggRule rule, std::int64_t window,
                                                         std::int64_t hop, const Matrix& x) {
    if (window < 1 || hop < 1) {
        throw SpecError("windowed aggregation: window and hop must be >= 1");
    }
    std::int64_t frames = interior_frames(std::int64_t(x.rows()), window, hop);
    Matrix out(std::size_t(frames), x.cols());
    std::vector<double> scratch(static_cast<std::size_t>(window), 0.0);

    for (std::int64_t j = 0; j < frames; ++j) {
        std::size_t start = std::size_t(j) * std::size_t(hop);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            for (std::int64_t i = 0; i < window; ++i) {
                scratch[std::size_t(i)] = x(start + std::size_t(i), c);
            }
            double value = 0.0;
            switch (rule) {
            case AggRule::mean: {
                double s = 0.0;
                for (double v : scratch) s += v;
                value = s / double(window);
                break;
            }
            case AggRule::sum: {
                double s = 0.0;
                for (double v : scratch) s += v;
                value = s;
                break;
            }
            case AggRule::min:
                value = *std::min_element(scratch.begin(), scratch.end());
                break;
            case AggRule::max:
                value = *std::max_element(scratch.begin(), scratch.end());
                break;
            case AggRule::median: {
                std::vector<double> sorted = scratch;
                std::sort(sorted.begin(), sorted.end());
                std::size_t mid = sorted.size() / 2;
                value = sorted.size() % 2 == 1 ? sorted[mid]
                                               : (sorted[mid - 1] + sorted[mid]) / 2.0;
                break;
            }
            case AggRule::std_dev:
                value = population_std(scratch.data(), scratch.size());
                break;
            case AggRule::first:
                value = scratch.front();
                break;
            case AggRule::last:
                value = scratch.back();
                break;
            }
            out(std::size_t(j), c) = value;
        }
    }
    return {std::move(out), interior_supports(frames, window, hop)};
}

std::pair<Matrix, SupportMap> apply_stft(std::int64_t window, std::int64_t hop,
                                         std::int64_t n_fft, StftPostMap post_map,
                                         const Matrix& x) {
    if (window > n_fft) {
        throw SpecError("stft: window must not exceed n_fft");
    }
    if (window < 1 || hop < 1) {
        throw SpecError("stft: window and hop must be >= 1");
    }
    std::int64_t frames = interior_frames(std::int64_t(x.rows()), window, hop);
    std::int64_t bins = n_fft / 2 + 1;   // one-sided for real input
    Matrix out(std::size_t(frames), x.cols() * std::size_t(bins));

    const double two_pi = 2.0 * 3.14159265358979323846;
    for (std::int64_t j = 0; j < frames; ++j) {
        std::int64_t t0 = j * hop + 1;   // raw 1-based index of the frame start
        for (std::size_t c = 0; c < x.cols(); ++c) {
            for (std::int64_t k = 0; k < bins; ++k) {
                // Rectangular analysis window, absolute-time phase: the
                // exponent is indexed by the raw sample position t.
                std::complex<double> acc(0.0, 0.0);
                for (std::int64_t i = 0; i < window; ++i) {
                    std::int64_t t = t0 + i;
                    double angle = -two_pi * double(k) * double(t) / double(n_fft);
                    acc += x(std::size_t(t - 1), c) *
                           std::complex<double>(std::cos(angle), std::sin(angle));
                }
                double mag2 = std::norm(acc);
                double value = 0.0;
                switch (post_map) {
                case StftPostMap::magnitude:
                    value = std::sqrt(mag2);
                    break;
                case StftPostMap::power:
                    value = mag2;
                    break;
                case StftPostMap::log_power:
                    value = std::log(kLogEps + mag2);
                    break;
                }
                out(std::size_t(j), c * std::size_t(bins) + std::size_t(k)) = value;
            }
        }
    }
    return {std::move(out), interior_supports(frames, window, hop)};
}

namespace {

double column_stat(StatKind stat, const std::vector<double>& v) {
    const std::size_t n = v.size();
    auto mean_of = [&]() {
        double s = 0.0;
        for (double x : v) s += x;
        return s / double(n);
    };
    switch (stat) {
    case StatKind::mean:
        return mean_of();
    case StatKind::max:
        return *std::max_element(v.begin(), v.end());
    case StatKind::min:
        return *std::min_element(v.begin(), v.end());
    case StatKind::rms: {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s / double(n));
    }
    case StatKind::var:
    case StatKind::std_dev: {
        double m = mean_of();
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        double var = s / double(n);
        return stat == StatKind::var ? var : std::sqrt(var);
    }
    case StatKind::skewness:
    case StatKind::kurtosis: {
        double m = mean_of();
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double x : v) {
            double d = x - m;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= double(n);
        m3 /= double(n);
        m4 /= double(n);
        if (m2 == 0.0) {
            return 0.0;   // degenerate constant signal
        }
        return stat == StatKind::skewness ? m3 / std::pow(m2, 1.5) : m4 / (m2 * m2);
    }
    case StatKind::energy: {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    }
    case StatKind::peak_factor: {
        double rms = column_stat(StatKind::rms, v);
        if (rms == 0.0) {
            return 0.0;
        }
        double peak = 0.0;
        for (double x : v) peak = std::max(peak, std::fabs(x));
        return peak / rms;
    }
    case StatKind::range:
        return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    }
    return 0.0;
}

/// One-sided amplitude spectrum |DFT(x)| / T.
std::vector<double> amplitude_spectrum(const std::vector<double>& x) {
    const std::size_t t = x.size();
    const std::size_t bins = t / 2 + 1;
    const double two_pi = 2.0 * 3.14159265358979323846;
    std::vector<double> amp(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t i = 0; i < t; ++i) {
            double angle = -two_pi * double(k) * double(i) / double(t);
            acc += x[i] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        amp[k] = std::abs(acc) / double(t);
    }
    return amp;
}

} // namespace

std::pair<Matrix, SupportMap> apply_segment_stats(StatsDomain domain,
                                                  const std::vector<StatKind>& stats,
                                                  const Matrix& x) {
    if (stats.empty()) {
        throw SpecError("segment stats: stats must be non-empty");
    }
    if (x.rows() == 0) {
        throw SpecError("segment stats: T must be >= 1");
    }
    Matrix out(1, x.cols() * stats.size());
    std::vector<double> column(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t r = 0; r < x.rows(); ++r) {
            column[r] = x(r, c);
        }
        // Frequency domain applies the same functionals to the one-sided
        // amplitude spectrum instead of the raw samples.
        const std::vector<double> values =
            domain == StatsDomain::time ? column : amplitude_spectrum(column);
        for (std::size_t s = 0; s < stats.size(); ++s) {
            out(0, c * stats.size() + s) = column_stat(stats[s], values);
        }
    }
    SupportMap support;
    support.entries.push_back(SupportEntry::interval(1, std::int64_t(x.rows())));
    return {std::move(out), std::move(support)};
}

Matrix apply_cumsum_squared(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            acc += x(r, c) * x(r, c);
            out(r, c) = acc;
        }
    }
    return out;
}

std::pair<Matrix, SupportMap> apply_subsample(std::int64_t rate, const Matrix& x) {
    if (rate < 1) {
        throw SpecError("subsample: rate must be >= 1");
    }
    std::int64_t t = std::int64_t(x.rows());
    std::int64_t kept = t == 0 ? 0 : (t - 1) / rate + 1;
    Matrix out(std::size_t(kept), x.cols());
    SupportMap support;
    support.entries.reserve(std::size_t(kept));
    for (std::int64_t j = 0; j < kept; ++j) {
        std::int64_t src = 1 + j * rate;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            out(std::size_t(j), c) = x(std::size_t(src - 1), c);
        }
        support.entries.push_back(SupportEntry::timestamp(src));
    }
    return {std::move(out), std::move(support)};
}

Series apply_concatenate(const std::vector<const Series*>& inputs) {
    if (inputs.empty()) {
        throw SpecError("concatenate: needs at least one input");
    }
    const Series& first = *inputs.front();
    std::size_t width = 0;
    for (const Series* s : inputs) {
        if (s->length() != first.length()) {
            throw IntegrityError("concatenate: inputs have different lengths");
        }
        if (!(s->support == first.support)) {
            throw IntegrityError("concatenate: inputs have mismatched supports");
        }
        width += s->width();
    }
    Series out;
    out.values = Matrix(first.length(), width);
    out.support = first.support;
    for (std::size_t r = 0; r < first.length(); ++r) {
        std::size_t col = 0;
        for (const Series* s : inputs) {
            for (std::size_t c = 0; c < s->width(); ++c) {
                out.values(r, col++) = s->values(r, c);
            }
        }
    }
    for (const Series* s : inputs) {
        out.channel_names.insert(out.channel_names.end(), s->channel_names.begin(),
                                 s->channel_names.end());
    }
    return out;
}

std::pair<Matrix, SupportMap> apply_pad_to_length(std::int64_t pad_length, double pad_value,
                                                  const Matrix& x) {
    std::int64_t t = std::int64_t(x.rows());
    if (pad_length < t) {
        throw SpecError("pad_to_length: target length " + std::to_string(pad_length) +
                        " is shorter than input length " + std::to_string(t));
    }
    Matrix out(std::size_t(pad_length), x.cols(), pad_value);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            out(r, c) = x(r, c);
        }
    }
    SupportMap support;
    support.entries.reserve(std::size_t(pad_length));
    for (std::int64_t j = 1; j <= t; ++j) {
        support.entries.push_back(SupportEntry::timestamp(j));
    }
    for (std::int64_t j = t; j < pad_length; ++j) {
        support.entries.push_back(SupportEntry::artificial_entry());
    }
    return {std::move(out), std::move(support)};
}

Matrix apply_repair(RepairMode mode, const FittedTransformState& state, const Matrix& x) {
    Matrix out = x;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        bool any_missing = false;
        bool any_observed = false;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            if (std::isnan(x(r, c))) {
                any_missing = true;
            } else {
                any_observed = true;
            }
        }
        if (!any_missing) {
            continue;
        }
        switch (mode) {
        case RepairMode::zero:
            for (std::size_t r = 0; r < x.rows(); ++r) {
                if (std::isnan(out(r, c))) out(r, c) = 0.0;
            }
            break;
        case RepairMode::mean: {
            const auto& means = state_param(state, "mean");
            if (means.size() != x.cols()) {
                throw IntegrityError("repair: fitted mean has wrong channel count");
            }
            for (std::size_t r = 0; r < x.rows(); ++r) {
                if (std::isnan(out(r, c))) out(r, c) = means[c];
            }
            break;
        }
        case RepairMode::locf: {
            if (!any_observed) {
                throw IntegrityError("repair: channel " + std::to_string(c + 1) +
                                     " is entirely missing");
            }
            // Leading gap falls back to the first observed value.
            double first_observed = 0.0;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                if (!std::isnan(x(r, c))) {
                    first_observed = x(r, c);
                    break;
                }
            }
            double last = first_observed;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                if (std::isnan(out(r, c))) {
                    out(r, c) = last;
                } else {
                    last = out(r, c);
                }
            }
            break;
        }
        case RepairMode::linear: {
            if (!any_observed) {
                throw IntegrityError("repair: channel " + std::to_string(c + 1) +
                                     " is entirely missing");
            }
            std::vector<std::size_t> observed;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                if (!std::isnan(x(r, c))) observed.push_back(r);
            }
            for (std::size_t r = 0; r < x.rows(); ++r) {
                if (!std::isnan(out(r, c))) continue;
                auto next = std::lower_bound(observed.begin(), observed.end(), r);
                if (next == observed.begin()) {
                    out(r, c) = x(observed.front(), c);   // flat left extension
                } else if (next == observed.end()) {
                    out(r, c) = x(observed.back(), c);    // flat right extension
                } else {
                    std::size_t hi = *next;
                    std::size_t lo = *(next - 1);
                    double w = double(r - lo) / double(hi - lo);
                    out(r, c) = (1.0 - w) * x(lo, c) + w * x(hi, c);
                }
            }
            break;
        }
        }
    }
    return out;
}

CorruptResult apply_corrupt(const TransformStageSpec& spec, std::uint64_t seed, const Matrix& x) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CorruptResult result;
    result.values = x;
    const std::int64_t t = std::int64_t(x.rows());
    if (t == 0 || x.cols() == 0) {
        return result;
    }
    Rng rng(seed);
    std::int64_t masked_total = 0;

    if (spec.corrupt_mode == CorruptMode::point) {
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                if (rng.uniform() < spec.corrupt_rate) {
                    result.values(r, c) = nan;
                    ++masked_total;
                }
            }
        }
        result.realized_ratio = double(masked_total) / double(t * std::int64_t(x.cols()));
        return result;
    }

    // Block mode: per channel, place non-overlapping outages of uniform
    // length until the masked count first reaches rate * T. If no further
    // block fits, accept the shortfall.
    std::int64_t target = std::int64_t(std::ceil(spec.corrupt_rate * double(t)));
    for (std::size_t c = 0; c < x.cols(); ++c) {
        std::vector<bool> masked(std::size_t(t), false);
        std::int64_t count = 0;
        while (count < target) {
            std::int64_t len =
                spec.block_min +
                std::int64_t(rng.uniform_int(std::uint64_t(spec.block_max - spec.block_min + 1)));
            len = std::min(len, t);
            // Collect feasible starts so that placement always terminates.
            std::vector<std::int64_t> feasible;
            for (std::int64_t s = 0; s + len <= t; ++s) {
                bool free = true;
                for (std::int64_t i = s; i < s + len && free; ++i) {
                    free = !masked[std::size_t(i)];
                }
                if (free) feasible.push_back(s);
            }
            if (feasible.empty()) {
                break;   // documented shortfall
            }
            std::int64_t s = feasible[rng.uniform_int(feasible.size())];
            for (std::int64_t i = s; i < s + len; ++i) {
                masked[std::size_t(i)] = true;
            }
            count += len;
        }
        for (std::int64_t i = 0; i < t; ++i) {
            if (masked[std::size_t(i)]) {
                result.values(std::size_t(i), c) = nan;
            }
        }
        masked_total += count;
    }
    result.realized_ratio = double(masked_total) / double(t * std::int64_t(x.cols()));
    return result;
}

Matrix apply_health_index(double lifetime, const Matrix& runtime, Direction direction) {
    if (lifetime <= 0.0) {
        throw SpecError("health index: lifetime must be > 0");
    }
    Matrix out(runtime.rows(), runtime.cols());
    for (std::size_t i = 0; i < runtime.data().size(); ++i) {
        double v = runtime.data()[i];
        if (direction == Direction::forward) {
            if (v < 0.0 || v > lifetime) {
                throw IntegrityError("health index: runtime " + std::to_string(v) +
                                     " outside [0, " + std::to_string(lifetime) + "]");
            }
            out.data()[i] = 1.0 - v / lifetime;
        } else {
            out.data()[i] = lifetime * (1.0 - v);
        }
    }
    return out;
}

std::vector<std::string> fit_concept_lookup(std::vector<std::string> train_dataset_ids) {
    std::sort(train_dataset_ids.begin(), train_dataset_ids.end());
    train_dataset_ids.erase(std::unique(train_dataset_ids.begin(), train_dataset_ids.end()),
                            train_dataset_ids.end());
    if (train_dataset_ids.empty()) {
        throw IntegrityError("concept classes: no training dataset ids to fit on");
    }
    return train_dataset_ids;
}

std::int64_t encode_concept_class(const std::vector<std::string>& lookup,
                                  const std::vector<double>& concept_vector,
                                  const std::string& dataset_id) {
    auto it = std::find(lookup.begin(), lookup.end(), dataset_id);
    if (it == lookup.end()) {
        throw IntegrityError("concept classes: dataset id '" + dataset_id +
                             "' not seen during fitting");
    }
    std::int64_t lambda = std::int64_t(it - lookup.begin()) + 1;
    std::int64_t d_c = std::int64_t(concept_vector.size());

    std::int64_t active = 0;
    std::int64_t c_tilde = 0;
    for (std::int64_t m = 1; m <= d_c; ++m) {
        auto rounded = std::llround(concept_vector[std::size_t(m - 1)]);
        if (rounded != 0) {
            ++active;
            c_tilde = m;
        }
    }
    if (active > 1) {
        throw IntegrityError("concept classes: multiple active concepts in one row");
    }
    if (active == 0) {
        throw IntegrityError("concept classes: no active concept in row");
    }
    return (lambda - 1) * d_c + c_tilde;
}

std::vector<double> align_target(const std::vector<double>& targets, const SupportMap& support,
                                 AlignRule rule) {
    if (rule == AlignRule::none) {
        throw SpecError("align_target: rule 'none' cannot align");
    }
    std::vector<double> aligned;
    aligned.reserve(support.size());
    for (const SupportEntry& e : support.entries) {
        if (e.artificial) {
            throw IntegrityError("align_target: cannot align over an artificial support entry");
        }
        if (e.lo < 1 || e.hi > std::int64_t(targets.size()) || e.lo > e.hi) {
            throw IntegrityError("align_target: support entry [" + std::to_string(e.lo) + ", " +
                                 std::to_string(e.hi) + "] outside the target range");
        }
        if (e.is_timestamp()) {
            aligned.push_back(targets[std::size_t(e.lo - 1)]);
            continue;
        }
        switch (rule) {
        case AlignRule::last:
            aligned.push_back(targets[std::size_t(e.hi - 1)]);
            break;
        case AlignRule::mean: {
            double s = 0.0;
            for (std::int64_t i = e.lo; i <= e.hi; ++i) s += targets[std::size_t(i - 1)];
            aligned.push_back(s / double(e.hi - e.lo + 1));
            break;
        }
        case AlignRule::max: {
            double m = targets[std::size_t(e.lo - 1)];
            for (std::int64_t i = e.lo; i <= e.hi; ++i) {
                m = std::max(m, targets[std::size_t(i - 1)]);
            }
            aligned.push_back(m);
            break;
        }
        case AlignRule::majority: {
            // Counting over integer class codes; ties break toward the
            // smallest code.
            std::map<std::int64_t, std::int64_t> counts;
            for (std::int64_t i = e.lo; i <= e.hi; ++i) {
                counts[std::llround(targets[std::size_t(i - 1)])] += 1;
            }
            std::int64_t best_class = counts.begin()->first;
            std::int64_t best_count = counts.begin()->second;
            for (const auto& [cls, count] : counts) {
                if (count > best_count) {
                    best_class = cls;
                    best_count = count;
                }
            }
            aligned.push_back(double(best_class));
            break;
        }
        case AlignRule::none:
            break;
        }
    }
    return aligned;
}

SupportMap compose_support(const SupportMap& previous, const SupportMap& local) {
    SupportMap out;
    out.entries.reserve(local.size());
    for (const SupportEntry& e : local.entries) {
        if (e.artificial) {
            out.entries.push_back(SupportEntry::artificial_entry());
            continue;
        }
        if (e.lo < 1 || e.hi > std::int64_t(previous.size())) {
            throw IntegrityError("compose_support: local entry outside the previous grid");
        }
        if (e.is_timestamp()) {
            out.entries.push_back(previous.entries[std::size_t(e.lo - 1)]);
            continue;
        }
        // Conservative union span over the referenced previous entries.
        bool any_real = false;
        std::int64_t lo = 0;
        std::int64_t hi = 0;
        for (std::int64_t i = e.lo; i <= e.hi; ++i) {
            const SupportEntry& prev = previous.entries[std::size_t(i - 1)];
            if (prev.artificial) {
                continue;
            }
            if (!any_real) {
                lo = prev.lo;
                hi = prev.hi;
                any_real = true;
            } else {
                lo = std::min(lo, prev.lo);
                hi = std::max(hi, prev.hi);
            }
        }
        out.entries.push_back(any_real ? SupportEntry::interval(lo, hi)
                                       : SupportEntry::artificial_entry());
    }
    return out;
}

} // namespace phmkit
