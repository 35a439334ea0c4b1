#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace metroflow::models {

/// Read-only row-major matrix.
struct MatrixView {
    std::span<const double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    MatrixView() = default;
    MatrixView(std::span<const double> v, std::size_t r, std::size_t c) : values(v), rows(r), cols(c) {}
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::span<const double> row(std::size_t i) const { return values.subspan(i * cols, cols); }
};

// ---------------------------------------------------------------------------
// CART regression tree
// ---------------------------------------------------------------------------

struct TreeParams {
    std::optional<int> max_depth;  // unlimited when empty
    int min_samples_leaf = 1;
    /// Minimum of (parent SSE - children SSE) / n_root for a split to be kept.
    double min_impurity_decrease = 0.0;
};

/**
 * Binary regression tree. Internal nodes send x[feature] <= threshold left.
 * Leaves predict the mean target of the training samples that reached them.
 */
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 for leaves
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
        std::size_t samples = 0;

        bool is_leaf() const { return feature < 0; }
        friend bool operator==(const Node&, const Node&) = default;
    };

    RegressionTree() = default;
    RegressionTree(std::vector<Node> nodes, std::size_t n_features)
        : nodes_(std::move(nodes)), n_features_(n_features) {}

    double predict_one(std::span<const double> x) const;
    /// Throws WidthMismatch when the column count differs from training.
    std::vector<double> predict(MatrixView X) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t n_features() const { return n_features_; }
    std::size_t leaf_count() const;
    int depth() const;

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::vector<Node> nodes_;
    std::size_t n_features_ = 0;
};

/**
 * Greedy CART fit: each split minimises the summed squared error of the two
 * children over thresholds at midpoints of consecutive distinct values. Ties go
 * to the lowest feature index, then the lowest threshold.
 */
RegressionTree fit_tree(MatrixView X, std::span<const double> y, const TreeParams& params = {});

// ---------------------------------------------------------------------------
// Bagging and random forest
// ---------------------------------------------------------------------------

enum class EnsembleKind { Bagging, RandomForest };

struct EnsembleParams {
    int n_estimators = 100;
    std::uint64_t seed = 0;
    double feature_subsample = 1.0 / 3.0;  // random forest only
    double bootstrap_size = 1.0;            // fraction of n drawn per member
};

/// Row indices of member `member`'s bootstrap resample: floor(bootstrap_size * n)
/// draws with replacement from SplitMix64(derive(seed, 2 * member)).
std::vector<std::size_t> bootstrap_sample(std::size_t n, const EnsembleParams& params, int member);

/// Unweighted average of member trees.
class Ensemble {
public:
    Ensemble() = default;
    Ensemble(EnsembleKind kind, std::vector<RegressionTree> trees, TreeParams tree_params, EnsembleParams params)
        : kind_(kind), trees_(std::move(trees)), tree_params_(tree_params), params_(params) {}

    std::vector<double> predict(MatrixView X) const;

    EnsembleKind kind() const { return kind_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    const TreeParams& tree_params() const { return tree_params_; }
    const EnsembleParams& params() const { return params_; }

private:
    EnsembleKind kind_ = EnsembleKind::Bagging;
    std::vector<RegressionTree> trees_;
    TreeParams tree_params_;
    EnsembleParams params_;
};

/// Members are independent; `jobs` threads give bit-identical results to a serial fit.
Ensemble fit_bagging(MatrixView X, std::span<const double> y, const TreeParams& tree_params,
                     const EnsembleParams& params, int jobs = 1);

/// Bagging plus a fresh random subset of ceil(feature_subsample * d) features per split.
Ensemble fit_forest(MatrixView X, std::span<const double> y, const TreeParams& tree_params,
                    const EnsembleParams& params, int jobs = 1);

// ---------------------------------------------------------------------------
// Multilayer perceptron
// ---------------------------------------------------------------------------

struct MlpParams {
    std::vector<int> hidden_layers{64};
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

/// ReLU hidden layers, linear scalar output, trained on mean squared error.
class Mlp {
public:
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        std::vector<double> weights;  // out x in, row-major
        std::vector<double> bias;
    };

    Mlp() = default;
    /// Glorot-uniform weights, zero biases.
    Mlp(std::size_t n_inputs, const MlpParams& params);

    double predict_one(std::span<const double> x) const;
    std::vector<double> predict(MatrixView X) const;

    /// Mean squared error over the rows of X and its gradient w.r.t. parameters().
    double loss_and_gradient(MatrixView X, std::span<const double> y, std::vector<double>& gradient) const;
    double loss(MatrixView X, std::span<const double> y) const;

    /// Flattened layer by layer: weights then biases.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);
    std::size_t parameter_count() const;

    std::size_t n_inputs() const { return layers_.empty() ? 0 : layers_.front().in; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    const MlpParams& params() const { return params_; }
    const std::vector<double>& loss_history() const { return loss_history_; }
    std::vector<double>& loss_history() { return loss_history_; }

private:
    std::vector<Layer> layers_;
    MlpParams params_;
    std::vector<double> loss_history_;
};

/// Mini-batch SGD. Throws NonFiniteLoss naming the epoch on divergence.
Mlp fit_mlp(MatrixView X, std::span<const double> y, const MlpParams& params);

// ---------------------------------------------------------------------------
// Fitted models and serialisation
// ---------------------------------------------------------------------------

using FittedModel = std::variant<RegressionTree, Ensemble, Mlp>;

std::vector<double> predict(const FittedModel& model, MatrixView X);
std::string model_kind(const FittedModel& model);

nlohmann::json to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

}  // namespace metroflow::models
