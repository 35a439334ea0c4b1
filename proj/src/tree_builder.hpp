#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metroflow/models.hpp"
#include "metroflow/rng.hpp"

namespace metroflow::models::detail {

/// Column-major copy of the training matrix plus a stable argsort per feature,
/// shared by every member of an ensemble.
struct ColumnStore {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;                       // cols x rows
    std::vector<std::vector<std::uint32_t>> sorted;  // per feature, rows by ascending value

    explicit ColumnStore(MatrixView X);
    const double* column(std::size_t f) const { return values.data() + f * rows; }
};

/// Grows one tree on `sample` (row indices, repeats allowed). When `rng` is set and
/// `features_per_split` < cols, each split scans a random feature subset first.
RegressionTree build_tree(const ColumnStore& store, std::span<const double> y, std::span<const std::size_t> sample,
                          const TreeParams& params, std::size_t features_per_split, SplitMix64* rng);

}  // namespace metroflow::models::detail
