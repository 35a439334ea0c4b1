#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "metroflow/error.hpp"
#include "metroflow/models.hpp"
#include "tree_builder.hpp"

namespace metroflow::models {

std::vector<std::size_t> bootstrap_sample(std::size_t n, const EnsembleParams& params, int member) {
    if (n == 0) throw EmptyInput("models", "bootstrap_sample", "no rows");
    SplitMix64 rng(SplitMix64::derive(params.seed, 2 * static_cast<std::uint64_t>(member)));
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.bootstrap_size * static_cast<double>(n))));
    std::vector<std::size_t> out(m);
    for (auto& r : out) r = static_cast<std::size_t>(rng.below(n));
    return out;
}

std::vector<double> Ensemble::predict(MatrixView X) const {
    if (trees_.empty()) throw EmptyInput("models", "predict", "ensemble has no members");
    std::vector<double> out(X.rows, 0.0);
    for (const auto& tree : trees_) {
        const auto p = tree.predict(X);
        for (std::size_t i = 0; i < X.rows; ++i) out[i] += p[i];
    }
    for (auto& v : out) v /= static_cast<double>(trees_.size());
    return out;
}

namespace {

Ensemble fit_ensemble(EnsembleKind kind, MatrixView X, std::span<const double> y, const TreeParams& tree_params,
                      const EnsembleParams& params, int jobs) {
    const char* op = kind == EnsembleKind::Bagging ? "fit_bagging" : "fit_forest";
    if (X.rows == 0 || X.cols == 0) throw EmptyInput("models", op, "no training rows");
    if (y.size() != X.rows) throw LengthMismatch("models", op, "target length differs from row count");
    if (params.n_estimators < 1) throw InvalidArgument("models", op, "n_estimators must be >= 1");
    if (!(params.bootstrap_size > 0.0 && params.bootstrap_size <= 1.0)) {
        throw InvalidArgument("models", op, "bootstrap_size must lie in (0, 1]");
    }
    if (kind == EnsembleKind::RandomForest && !(params.feature_subsample > 0.0 && params.feature_subsample <= 1.0)) {
        throw InvalidArgument("models", op, "feature_subsample must lie in (0, 1]");
    }
    if (tree_params.min_samples_leaf < 1) throw InvalidArgument("models", op, "min_samples_leaf must be >= 1");

    const detail::ColumnStore store(X);
    const std::size_t per_split =
        kind == EnsembleKind::RandomForest
            ? static_cast<std::size_t>(std::ceil(params.feature_subsample * static_cast<double>(X.cols) - 1e-9))
            : X.cols;

    std::vector<RegressionTree> trees(static_cast<std::size_t>(params.n_estimators));
    auto fit_member = [&](int member) {
        const auto sample = bootstrap_sample(X.rows, params, member);
        SplitMix64 feature_rng(SplitMix64::derive(params.seed, 2 * static_cast<std::uint64_t>(member) + 1));
        trees[static_cast<std::size_t>(member)] =
            detail::build_tree(store, y, sample, tree_params, per_split, per_split < X.cols ? &feature_rng : nullptr);
    };

    const int workers = std::clamp(jobs, 1, params.n_estimators);
    if (workers == 1) {
        for (int t = 0; t < params.n_estimators; ++t) fit_member(t);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int t = next++; t < params.n_estimators; t = next++) {
                    try {
                        fit_member(t);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    return Ensemble(kind, std::move(trees), tree_params, params);
}

}  // namespace

Ensemble fit_bagging(MatrixView X, std::span<const double> y, const TreeParams& tree_params,
                     const EnsembleParams& params, int jobs) {
    return fit_ensemble(EnsembleKind::Bagging, X, y, tree_params, params, jobs);
}

Ensemble fit_forest(MatrixView X, std::span<const double> y, const TreeParams& tree_params,
                    const EnsembleParams& params, int jobs) {
    return fit_ensemble(EnsembleKind::RandomForest, X, y, tree_params, params, jobs);
}

}  // namespace metroflow::models
