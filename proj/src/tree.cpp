#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "metroflow/error.hpp"
#include "metroflow/models.hpp"
#include "tree_builder.hpp"

namespace metroflow::models {

namespace detail {

ColumnStore::ColumnStore(MatrixView X) : rows(X.rows), cols(X.cols), values(X.rows * X.cols), sorted(X.cols) {
    if (rows > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidArgument("models", "fit_tree", "too many rows");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t f = 0; f < cols; ++f) values[f * rows + i] = X.at(i, f);
    }
    for (std::size_t f = 0; f < cols; ++f) {
        auto& order = sorted[f];
        order.resize(rows);
        std::iota(order.begin(), order.end(), std::uint32_t{0});
        const double* col = column(f);
        std::stable_sort(order.begin(), order.end(), [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
}

namespace {

struct Pending {
    int node;
    std::size_t begin;
    std::size_t end;
    int depth;
};

// Midpoint that never rounds up onto the larger value.
double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid < hi ? mid : lo;
}

}  // namespace

RegressionTree build_tree(const ColumnStore& store, std::span<const double> y, std::span<const std::size_t> sample,
                          const TreeParams& params, std::size_t features_per_split, SplitMix64* rng) {
    const std::size_t m = sample.size();
    const std::size_t d = store.cols;
    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params.min_samples_leaf));

    // Sample positions grouped by source row, so per-feature orders can be expanded
    // from the shared argsort without re-sorting.
    std::vector<std::uint32_t> row_start(store.rows + 1, 0);
    for (const auto r : sample) ++row_start[r + 1];
    for (std::size_t r = 0; r < store.rows; ++r) row_start[r + 1] += row_start[r];
    std::vector<std::uint32_t> by_row(m);
    {
        std::vector<std::uint32_t> fill(row_start.begin(), row_start.end() - 1);
        for (std::size_t p = 0; p < m; ++p) by_row[fill[sample[p]]++] = static_cast<std::uint32_t>(p);
    }

    std::vector<double> yp(m);
    for (std::size_t p = 0; p < m; ++p) yp[p] = y[sample[p]];

    std::vector<std::uint32_t> order(d * m);
    std::vector<double> xs(d * m);
    for (std::size_t f = 0; f < d; ++f) {
        const double* col = store.column(f);
        std::size_t k = f * m;
        for (const auto r : store.sorted[f]) {
            for (auto q = row_start[r]; q < row_start[r + 1]; ++q) {
                order[k] = by_row[q];
                xs[k] = col[r];
                ++k;
            }
        }
    }

    std::vector<std::uint8_t> goes_left(m);
    std::vector<std::uint32_t> tmp_order(m);
    std::vector<double> tmp_x(m);
    std::vector<std::size_t> features(d);
    const bool subsample = rng != nullptr && features_per_split < d;

    std::vector<RegressionTree::Node> nodes;
    nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, m, 0}};

    while (!stack.empty()) {
        const Pending task = stack.back();
        stack.pop_back();
        const std::size_t b = task.begin, e = task.end, n = e - b;

        double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = b; i < e; ++i) {
            const double v = yp[order[i]];
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        auto& node = nodes[static_cast<std::size_t>(task.node)];
        node.samples = n;
        node.value = lo == hi ? lo : sum / static_cast<double>(n);

        const bool depth_limited = params.max_depth && task.depth >= *params.max_depth;
        if (lo == hi || depth_limited || n < 2 * min_leaf) continue;

        // Candidate order: all features ascending, or a random subset (ascending)
        // followed by the remaining features as a fallback.
        std::size_t primary = d;
        std::iota(features.begin(), features.end(), std::size_t{0});
        if (subsample) {
            for (std::size_t i = d - 1; i > 0; --i) {
                std::swap(features[i], features[static_cast<std::size_t>(rng->below(i + 1))]);
            }
            primary = std::max<std::size_t>(1, features_per_split);
            std::sort(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(primary));
        }

        double best_score = -std::numeric_limits<double>::infinity();
        std::size_t best_feature = d, best_pos = 0;
        for (std::size_t c = 0; c < d; ++c) {
            if (c >= primary && best_feature != d) break;
            const std::size_t f = features[c];
            const std::uint32_t* ord = order.data() + f * m;
            const double* xv = xs.data() + f * m;
            double left = 0.0;
            for (std::size_t i = b; i + 1 < e; ++i) {
                left += yp[ord[i]];
                const std::size_t nl = i - b + 1;
                if (nl < min_leaf) continue;
                const std::size_t nr = n - nl;
                if (nr < min_leaf) break;
                if (!(xv[i] < xv[i + 1])) continue;
                const double right = sum - left;
                const double score = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr);
                if (score > best_score) {
                    best_score = score;
                    best_feature = f;
                    best_pos = i;
                }
            }
        }
        if (best_feature == d) continue;
        if (params.min_impurity_decrease > 0.0) {
            const double decrease = (best_score - sum * sum / static_cast<double>(n)) / static_cast<double>(m);
            if (decrease < params.min_impurity_decrease) continue;
        }

        const std::uint32_t* ord = order.data() + best_feature * m;
        const double* xv = xs.data() + best_feature * m;
        node.feature = static_cast<int>(best_feature);
        node.threshold = midpoint(xv[best_pos], xv[best_pos + 1]);
        for (std::size_t i = b; i < e; ++i) goes_left[ord[i]] = i <= best_pos ? 1 : 0;
        const std::size_t n_left = best_pos - b + 1;

        for (std::size_t f = 0; f < d; ++f) {
            std::uint32_t* o = order.data() + f * m;
            double* x = xs.data() + f * m;
            std::size_t l = b, r = 0;
            for (std::size_t i = b; i < e; ++i) {
                if (goes_left[o[i]]) {
                    o[l] = o[i];
                    x[l] = x[i];
                    ++l;
                } else {
                    tmp_order[r] = o[i];
                    tmp_x[r] = x[i];
                    ++r;
                }
            }
            std::copy_n(tmp_order.begin(), r, o + l);
            std::copy_n(tmp_x.begin(), r, x + l);
        }

        const int left_id = static_cast<int>(nodes.size());
        const int right_id = left_id + 1;
        nodes[static_cast<std::size_t>(task.node)].left = left_id;
        nodes[static_cast<std::size_t>(task.node)].right = right_id;
        nodes.emplace_back();
        nodes.emplace_back();
        stack.push_back({right_id, b + n_left, e, task.depth + 1});
        stack.push_back({left_id, b, b + n_left, task.depth + 1});
    }
    return RegressionTree(std::move(nodes), d);
}

}  // namespace detail

double RegressionTree::predict_one(std::span<const double> x) const {
    if (nodes_.empty()) throw EmptyInput("models", "predict", "tree has no nodes");
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
}

std::vector<double> RegressionTree::predict(MatrixView X) const {
    if (X.cols != n_features_) {
        throw WidthMismatch("models", "predict",
                            "expected " + std::to_string(n_features_) + " columns, got " + std::to_string(X.cols));
    }
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_one(X.row(i));
    return out;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

int RegressionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<int> level(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes_[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

RegressionTree fit_tree(MatrixView X, std::span<const double> y, const TreeParams& params) {
    if (X.rows == 0 || X.cols == 0) throw EmptyInput("models", "fit_tree", "no training rows");
    if (y.size() != X.rows) throw LengthMismatch("models", "fit_tree", "target length differs from row count");
    if (params.min_samples_leaf < 1) throw InvalidArgument("models", "fit_tree", "min_samples_leaf must be >= 1");
    const detail::ColumnStore store(X);
    std::vector<std::size_t> sample(X.rows);
    std::iota(sample.begin(), sample.end(), std::size_t{0});
    return detail::build_tree(store, y, sample, params, X.cols, nullptr);
}

}  // namespace metroflow::models
