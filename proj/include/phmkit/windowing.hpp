#pragma once

#include <cstdint>
#include <vector>

#include "phmkit/types.hpp"

namespace phmkit {

/// Closed-form enumeration of admissible window starts on a transformed
/// grid of length t_prime. Candidates are k_m = 1 - rho + (m-1)*stride,
/// admissible while k_m + coverage - 1 <= t_prime.
std::vector<std::int64_t> admissible_starts(std::int64_t t_prime, const WindowSpec& spec);

/// Number of admissible windows without materializing the start list.
std::int64_t n_slices(std::int64_t t_prime, const WindowSpec& spec);

/// Feature accessor defined for indices j >= 1 - rho: real rows for j >= 1,
/// padded rows (edge replication or zeros) for j <= 0.
class PaddedSeries {
public:
    PaddedSeries(const Matrix& z, std::int64_t warm_start, PadPolicy policy);

    /// Row j of the padded series, 1-based. Throws SpecError below 1 - rho
    /// or above T'.
    std::vector<double> at(std::int64_t j) const;

    std::size_t width() const { return z_->cols(); }
    std::int64_t length() const { return std::int64_t(z_->rows()); }

private:
    const Matrix* z_;
    std::int64_t warm_start_;
    PadPolicy policy_;
};

/// Extracts the l_seq x F window starting at admissible index k.
Matrix extract_window(const PaddedSeries& series, std::int64_t k, const WindowSpec& spec);

/// Single-step label: y_k = z_y(j_sup(k)) with j_sup(k) = k + l_seq - 1 + offset.
double window_label(const std::vector<double>& aligned_targets, std::int64_t k,
                    const WindowSpec& spec);

/// Multi-step supervision segment, indices
/// k + l_seq - lbl_len + offset .. k + l_seq + offset + pred_len - 1 inclusive.
std::vector<double> multistep_segment(const std::vector<double>& aligned_targets,
                                      std::int64_t k, const WindowSpec& spec);

/// Applies the windowing operator to one unit: one sample per admissible
/// start, tagged with the unit identity and the given split.
std::vector<WindowSample> slice_unit(const AlignedSeries& series, const WindowSpec& spec,
                                     Split split);

/// Lossless time-major flattening of a window into a length l_seq*F vector.
std::vector<double> tabularize(const Matrix& window);

/// Inverse of tabularize: restores the (rows, cols) window. Throws on
/// inconsistent dimensions.
Matrix untabularize(const std::vector<double>& flat, std::size_t rows, std::size_t cols);

/// Window sample -> tabular sample, preserving identity and split tags. The
/// scalar label is the aligned target at the supervision index (for
/// multi-step samples that is entry lbl_len - 1 of the segment).
TabularSample to_tabular(const WindowSample& sample, const WindowSpec& spec);

} // namespace phmkit
