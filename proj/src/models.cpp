#include "phmkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

namespace phmkit {

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "mean") return ModelKind::mean;
    if (name == "majority") return ModelKind::majority;
    if (name == "linear_ls") return ModelKind::linear_ls;
    if (name == "exponential") return ModelKind::exponential;
    if (name == "knn") return ModelKind::knn;
    throw SchemaError("unknown model kind '" + name + "'");
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::mean: return "mean";
    case ModelKind::majority: return "majority";
    case ModelKind::linear_ls: return "linear_ls";
    case ModelKind::exponential: return "exponential";
    case ModelKind::knn: return "knn";
    }
    return "?";
}

namespace {

constexpr double kRidgeJitter = 1e-10;
constexpr double kExpOffset = 1e-9;

double sample_summary(const TabularSample& sample) {
    double s = 0.0;
    for (double v : sample.x) s += v;
    return s / double(sample.x.size());
}

std::int64_t majority_vote(const std::vector<std::pair<std::int64_t, double>>& votes) {
    // votes: (class, weight); ties break toward the smallest code.
    std::map<std::int64_t, double> counts;
    for (const auto& [cls, w] : votes) counts[cls] += w;
    std::int64_t best = counts.begin()->first;
    double best_count = counts.begin()->second;
    for (const auto& [cls, count] : counts) {
        if (count > best_count) {
            best = cls;
            best_count = count;
        }
    }
    return best;
}

void fit_linear(const std::vector<TabularSample>& train, FittedModel& model) {
    const std::size_t n = train.size();
    const std::size_t d = model.input_dim;
    Eigen::MatrixXd a(n, d + 1);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        a(Eigen::Index(i), 0) = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            a(Eigen::Index(i), Eigen::Index(j + 1)) = train[i].x[j];
        }
        y(Eigen::Index(i)) = train[i].y;
    }
    // Normal equations with a ridge jitter on the Gram diagonal; constant
    // columns therefore never make the solve fault.
    Eigen::MatrixXd gram = a.transpose() * a;
    gram.diagonal().array() += kRidgeJitter;
    Eigen::VectorXd rhs = a.transpose() * y;
    Eigen::VectorXd beta = gram.ldlt().solve(rhs);
    model.coefficients.assign(beta.data(), beta.data() + beta.size());
}

void fit_exponential(const std::vector<TabularSample>& train, FittedModel& model) {
    // y = a * exp(b * s) on the scalar summary s = mean(x), fitted by
    // log-linear least squares. When any target is nonpositive, a small
    // offset shifts all targets before the log and is subtracted back at
    // prediction time.
    bool needs_offset = false;
    for (const auto& sample : train) {
        if (sample.y <= 0.0) {
            needs_offset = true;
            break;
        }
    }
    double offset = needs_offset ? kExpOffset : 0.0;

    double sum_s = 0.0, sum_l = 0.0, sum_ss = 0.0, sum_sl = 0.0;
    std::size_t n = 0;
    for (const auto& sample : train) {
        double shifted = sample.y + offset;
        if (shifted <= 0.0) {
            continue;
        }
        double s = sample_summary(sample);
        double l = std::log(shifted);
        sum_s += s;
        sum_l += l;
        sum_ss += s * s;
        sum_sl += s * l;
        ++n;
    }
    if (n == 0) {
        throw IntegrityError("exponential fit error: no positive targets");
    }
    double denom = double(n) * sum_ss - sum_s * sum_s;
    double b = denom == 0.0 ? 0.0 : (double(n) * sum_sl - sum_s * sum_l) / denom;
    double log_a = (sum_l - b * sum_s) / double(n);
    model.exp_a = std::exp(log_a);
    model.exp_b = b;
    model.exp_offset = offset;
}

} // namespace

FittedModel fit_baseline(ModelKind kind, const std::vector<TabularSample>& train,
                         ModelTask task, std::size_t knn_k, const ContextSpec& context_spec) {
    if (train.empty()) {
        throw IntegrityError("fit error: empty training set");
    }
    FittedModel model;
    model.kind = kind;
    model.task = task;
    model.input_dim = train.front().x.size();
    for (const auto& sample : train) {
        if (sample.x.size() != model.input_dim) {
            throw IntegrityError("fit error: inconsistent sample dimensions");
        }
    }

    switch (kind) {
    case ModelKind::mean: {
        double s = 0.0;
        for (const auto& sample : train) s += sample.y;
        model.mean_value = s / double(train.size());
        break;
    }
    case ModelKind::majority: {
        std::vector<std::pair<std::int64_t, double>> votes;
        votes.reserve(train.size());
        for (const auto& sample : train) {
            votes.emplace_back(std::llround(sample.y), 1.0);
        }
        model.majority_class = majority_vote(votes);
        break;
    }
    case ModelKind::linear_ls:
        fit_linear(train, model);
        break;
    case ModelKind::exponential:
        fit_exponential(train, model);
        break;
    case ModelKind::knn:
        if (knn_k < 1) {
            throw SpecError("knn: k must be >= 1");
        }
        model.knn_k = knn_k;
        model.context_spec = context_spec;
        break;
    }
    return model;
}

double predict(const FittedModel& model, const TabularSample& sample,
               const std::vector<const TabularSample*>& context) {
    if (sample.x.size() != model.input_dim) {
        throw IntegrityError("predict: sample dimension " + std::to_string(sample.x.size()) +
                             " != fitted dimension " + std::to_string(model.input_dim));
    }

    switch (model.kind) {
    case ModelKind::mean:
        return model.mean_value;
    case ModelKind::majority:
        return double(model.majority_class);
    case ModelKind::linear_ls: {
        double y = model.coefficients[0];
        for (std::size_t j = 0; j < model.input_dim; ++j) {
            y += model.coefficients[j + 1] * sample.x[j];
        }
        return y;
    }
    case ModelKind::exponential:
        return model.exp_a * std::exp(model.exp_b * sample_summary(sample)) - model.exp_offset;
    case ModelKind::knn: {
        if (context.empty()) {
            throw IntegrityError("knn predict requires a non-empty context");
        }
        // Rank the context by (distance, unit_id, k) so ties are total.
        std::vector<std::pair<double, const TabularSample*>> ranked;
        ranked.reserve(context.size());
        for (const TabularSample* member : context) {
            double dist2 = 0.0;
            for (std::size_t i = 0; i < sample.x.size(); ++i) {
                double d = member->x[i] - sample.x[i];
                dist2 += d * d;
            }
            ranked.emplace_back(dist2, member);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return std::tie(a.first, a.second->unit_id, a.second->k) <
                   std::tie(b.first, b.second->unit_id, b.second->k);
        });
        std::size_t k = std::min(model.knn_k, ranked.size());
        if (model.task == ModelTask::classification) {
            std::vector<std::pair<std::int64_t, double>> votes;
            for (std::size_t i = 0; i < k; ++i) {
                votes.emplace_back(std::llround(ranked[i].second->y), 1.0);
            }
            return double(majority_vote(votes));
        }
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            s += ranked[i].second->y;
        }
        return s / double(k);
    }
    }
    return 0.0;
}

} // namespace phmkit
