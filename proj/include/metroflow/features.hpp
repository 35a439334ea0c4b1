#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metroflow/core_model.hpp"
#include "metroflow/stations.hpp"

namespace metroflow::features {

inline constexpr int kLagDays = 7;

/// Which weather variables enter the design matrix.
struct FeatureMask {
    bool temperature = false;
    bool wind = false;
    bool humidity = false;
    bool barometer = false;

    /// Binary counting with temperature as the most significant bit.
    static FeatureMask from_index(unsigned index);
    unsigned index() const;
    static FeatureMask all() { return {true, true, true, true}; }
    static FeatureMask none() { return {}; }
    /// "none" or e.g. "temperature+barometer".
    std::string label() const;
    /// Parses label() output, "all", or a 4-character bit string such as "1001".
    static FeatureMask parse(const std::string& text);

    friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

struct RowKey {
    int station = 0;
    SliceIndex slice;

    friend constexpr auto operator<=>(const RowKey&, const RowKey&) = default;
};

/// Row-major numeric rows with provenance.
struct DesignMatrix {
    std::vector<std::string> column_names;
    std::vector<double> values;  // rows() * cols()
    std::vector<double> targets;
    std::vector<RowKey> keys;
    std::vector<DayType> day_types;

    std::size_t rows() const { return targets.size(); }
    std::size_t cols() const { return column_names.size(); }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
    std::vector<double> column(std::size_t j) const;
    std::optional<std::size_t> column_index(const std::string& name) const;

    DesignMatrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const DesignMatrix&, const DesignMatrix&) = default;
};

/// Per-column z-score parameters fitted on training rows only.
struct ZScaler {
    struct Column {
        std::size_t index = 0;
        double mean = 0.0;
        double stddev = 1.0;
        bool zero_variance = false;  // passed through unscaled
    };
    std::vector<Column> columns;
};

/// Population mean and standard deviation per listed column.
ZScaler fit_scaler(const DesignMatrix& rows, std::span<const std::size_t> columns);
DesignMatrix apply_scaler(const ZScaler& scaler, DesignMatrix rows);

/// Indices of the temperature/wind/humidity/barometer columns present in `matrix`.
std::vector<std::size_t> weather_columns(const DesignMatrix& matrix);

struct AssembleOptions {
    stations::DayFilter day_filter = stations::DayFilter::All;
    /// Empty means every station.
    std::vector<int> stations;
};

struct Assembled {
    DesignMatrix matrix;
    std::size_t dropped_insufficient_history = 0;
    std::size_t filtered_out = 0;
};

/**
 * One row per (station, slice) with seven days of history, in (station, slice) order.
 *
 * Columns: lag1..lag7 (same slot k days earlier), four one-hot class dummies in
 * StationClass order, the masked weather columns (temperature, wind, humidity,
 * barometer; raw values), rain level, slot index. Target: outbound count.
 *
 * Throws InsufficientHistory when no row survives the warm-up.
 */
Assembled assemble(const Dataset& dataset, const std::map<int, stations::StationClass>& classes,
                   const FeatureMask& mask, const AssembleOptions& options = {});

enum class SplitMode { Chronological, SeededRandom };

struct SplitSpec {
    double train_fraction = 0.7;
    SplitMode mode = SplitMode::Chronological;
    std::uint64_t seed = 0;
};

/**
 * Chronological: the first ceil(f * n_dates) distinct dates train, clamped so both
 * sides hold at least one date. SeededRandom: SplitMix64 Fisher-Yates shuffle of
 * rows, ceil(f * n) to train, clamped likewise. Both halves keep canonical order.
 */
std::pair<DesignMatrix, DesignMatrix> split(const DesignMatrix& matrix, const SplitSpec& spec);

}  // namespace metroflow::features
