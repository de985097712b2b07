#include "phmkit/windowing.hpp"

#include <algorithm>

namespace phmkit {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

} // namespace

std::int64_t n_slices(std::int64_t t_prime, const WindowSpec& spec) {
    spec.check();
    std::int64_t n = floor_div(t_prime - spec.coverage() + spec.warm_start, spec.stride) + 1;
    return std::max<std::int64_t>(0, n);
}

std::vector<std::int64_t> admissible_starts(std::int64_t t_prime, const WindowSpec& spec) {
    std::int64_t n = n_slices(t_prime, spec);
    std::vector<std::int64_t> starts;
    starts.reserve(std::size_t(n));
    for (std::int64_t m = 1; m <= n; ++m) {
        starts.push_back(1 - spec.warm_start + (m - 1) * spec.stride);
    }
    return starts;
}

PaddedSeries::PaddedSeries(const Matrix& z, std::int64_t warm_start, PadPolicy policy)
    : z_(&z), warm_start_(warm_start), policy_(policy) {}

std::vector<double> PaddedSeries::at(std::int64_t j) const {
    if (j < 1 - warm_start_ || j > length()) {
        throw SpecError("padded access at j=" + std::to_string(j) + " outside [" +
                        std::to_string(1 - warm_start_) + ", " + std::to_string(length()) + "]");
    }
    std::vector<double> row(width());
    if (j >= 1) {
        const double* p = z_->row_ptr(std::size_t(j - 1));
        std::copy(p, p + width(), row.begin());
    } else if (policy_ == PadPolicy::replicate_edge) {
        const double* p = z_->row_ptr(0);
        std::copy(p, p + width(), row.begin());
    }
    // zeros policy: row already zero-initialized
    return row;
}

Matrix extract_window(const PaddedSeries& series, std::int64_t k, const WindowSpec& spec) {
    Matrix w(std::size_t(spec.l_seq), series.width());
    for (std::int64_t i = 0; i < spec.l_seq; ++i) {
        std::vector<double> row = series.at(k + i);
        std::copy(row.begin(), row.end(), w.row_ptr(std::size_t(i)));
    }
    return w;
}

double window_label(const std::vector<double>& aligned_targets, std::int64_t k,
                    const WindowSpec& spec) {
    std::int64_t j = spec.supervision_index(k);
    if (j < 1 || j > std::int64_t(aligned_targets.size())) {
        throw SpecError("supervision index j_sup=" + std::to_string(j) +
                        " outside [1, T'] - start k=" + std::to_string(k) + " is inadmissible");
    }
    return aligned_targets[std::size_t(j - 1)];
}

std::vector<double> multistep_segment(const std::vector<double>& aligned_targets,
                                      std::int64_t k, const WindowSpec& spec) {
    if (!spec.multi_step()) {
        throw SpecError("multistep_segment requires lbl_len >= 1");
    }
    spec.check();
    std::int64_t first = k + spec.l_seq - spec.lbl_len + spec.offset;
    std::int64_t last = k + spec.l_seq + spec.offset + spec.pred_len - 1;
    if (first < 1 || last > std::int64_t(aligned_targets.size())) {
        throw SpecError("multi-step segment [" + std::to_string(first) + ", " +
                        std::to_string(last) + "] outside [1, T']");
    }
    std::vector<double> segment;
    segment.reserve(std::size_t(last - first + 1));
    for (std::int64_t j = first; j <= last; ++j) {
        segment.push_back(aligned_targets[std::size_t(j - 1)]);
    }
    return segment;
}

std::vector<WindowSample> slice_unit(const AlignedSeries& series, const WindowSpec& spec,
                                     Split split) {
    series.check();
    std::vector<std::int64_t> starts = admissible_starts(std::int64_t(series.y.size()), spec);
    PaddedSeries padded(series.z, spec.warm_start, spec.pad_policy);

    std::vector<WindowSample> samples;
    samples.reserve(starts.size());
    for (std::int64_t k : starts) {
        WindowSample sample;
        sample.unit_id = series.unit_id;
        sample.k = k;
        sample.j_sup = spec.supervision_index(k);
        sample.w = extract_window(padded, k, spec);
        if (spec.multi_step()) {
            sample.y = multistep_segment(series.y, k, spec);
        } else {
            sample.y = {window_label(series.y, k, spec)};
        }
        sample.split = split;
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<double> tabularize(const Matrix& window) {
    // Row-major storage already is time-major order.
    return window.data();
}

Matrix untabularize(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
    if (rows * cols != flat.size()) {
        throw SpecError("untabularize: vector of length " + std::to_string(flat.size()) +
                        " does not factor into " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    }
    Matrix w(rows, cols);
    w.data() = flat;
    return w;
}

TabularSample to_tabular(const WindowSample& sample, const WindowSpec& spec) {
    TabularSample tab;
    tab.unit_id = sample.unit_id;
    tab.k = sample.k;
    tab.j_sup = sample.j_sup;
    tab.x = tabularize(sample.w);
    std::size_t label_pos = spec.multi_step() ? std::size_t(spec.lbl_len - 1) : 0;
    tab.y = sample.y.at(label_pos);
    tab.split = sample.split;
    return tab;
}

} // namespace phmkit
