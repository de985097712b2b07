#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phmkit/partition.hpp"
#include "phmkit/types.hpp"

namespace phmkit {

enum class ModelKind { mean, majority, linear_ls, exponential, knn };
enum class ModelTask { regression, classification };

ModelKind model_kind_from_name(const std::string& name);
const char* model_kind_name(ModelKind kind);

/// A baseline fitted in a single non-iterative pass. All kinds consume the
/// same tabular sample stream; regression and classification variants differ
/// only in output space.
struct FittedModel {
    ModelKind kind = ModelKind::mean;
    ModelTask task = ModelTask::regression;
    std::size_t input_dim = 0;

    // kind-specific parameters
    double mean_value = 0.0;                 // mean
    std::int64_t majority_class = 0;         // majority
    std::vector<double> coefficients;        // linear_ls: [intercept, w_1..w_D]
    double exp_a = 0.0;                      // exponential: y = a * exp(b * mean(x)) - offset
    double exp_b = 0.0;
    double exp_offset = 0.0;
    std::size_t knn_k = 1;                   // knn
    ContextSpec context_spec;                // knn
};

/// Fits the baseline on the training tabular set. Throws on an empty train
/// set; the normal-equation solve carries a small ridge jitter so constant
/// columns never fault.
FittedModel fit_baseline(ModelKind kind, const std::vector<TabularSample>& train,
                         ModelTask task, std::size_t knn_k = 1,
                         const ContextSpec& context_spec = {});

/// Deterministic prediction for one sample. knn requires the caller-built
/// context (see select_context); all other kinds ignore it.
double predict(const FittedModel& model, const TabularSample& sample,
               const std::vector<const TabularSample*>& context = {});

} // namespace phmkit
