#include "metroflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "metroflow/error.hpp"
#include "metroflow/rng.hpp"

namespace metroflow::features {

namespace {
constexpr const char* kWeatherNames[4] = {"temperature", "wind", "humidity", "barometer"};
}

FeatureMask FeatureMask::from_index(unsigned index) {
    if (index > 15) throw InvalidArgument("features", "FeatureMask", "mask index out of range");
    return {(index & 8u) != 0, (index & 4u) != 0, (index & 2u) != 0, (index & 1u) != 0};
}

unsigned FeatureMask::index() const {
    return (temperature ? 8u : 0u) | (wind ? 4u : 0u) | (humidity ? 2u : 0u) | (barometer ? 1u : 0u);
}

std::string FeatureMask::label() const {
    const bool flags[4] = {temperature, wind, humidity, barometer};
    std::string out;
    for (int i = 0; i < 4; ++i) {
        if (!flags[i]) continue;
        if (!out.empty()) out += '+';
        out += kWeatherNames[i];
    }
    return out.empty() ? "none" : out;
}

FeatureMask FeatureMask::parse(const std::string& text) {
    if (text == "none" || text.empty()) return none();
    if (text == "all") return all();
    if (text.size() == 4 && text.find_first_not_of("01") == std::string::npos) {
        return {text[0] == '1', text[1] == '1', text[2] == '1', text[3] == '1'};
    }
    FeatureMask mask;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('+', start);
        if (end == std::string::npos) end = text.size();
        const auto part = text.substr(start, end - start);
        if (part == "temperature") mask.temperature = true;
        else if (part == "wind") mask.wind = true;
        else if (part == "humidity") mask.humidity = true;
        else if (part == "barometer") mask.barometer = true;
        else throw InvalidArgument("features", "FeatureMask.parse", "unknown weather variable '" + part + "'");
        start = end + 1;
    }
    return mask;
}

std::vector<double> DesignMatrix::column(std::size_t j) const {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, j);
    return out;
}

std::optional<std::size_t> DesignMatrix::column_index(const std::string& name) const {
    const auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - column_names.begin());
}

DesignMatrix DesignMatrix::select_rows(std::span<const std::size_t> indices) const {
    DesignMatrix out;
    out.column_names = column_names;
    out.values.reserve(indices.size() * cols());
    out.targets.reserve(indices.size());
    out.keys.reserve(indices.size());
    out.day_types.reserve(indices.size());
    for (const auto i : indices) {
        const auto r = row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        out.targets.push_back(targets[i]);
        out.keys.push_back(keys[i]);
        out.day_types.push_back(day_types[i]);
    }
    return out;
}

ZScaler fit_scaler(const DesignMatrix& rows, std::span<const std::size_t> columns) {
    if (rows.rows() == 0) throw EmptyInput("features", "fit_scaler", "no rows to fit on");
    ZScaler scaler;
    const double n = static_cast<double>(rows.rows());
    for (const auto j : columns) {
        if (j >= rows.cols()) throw WidthMismatch("features", "fit_scaler", "column index out of range");
        double mean = 0.0;
        for (std::size_t i = 0; i < rows.rows(); ++i) mean += rows.at(i, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t i = 0; i < rows.rows(); ++i) var += (rows.at(i, j) - mean) * (rows.at(i, j) - mean);
        const double sd = std::sqrt(var / n);
        ZScaler::Column c{j, mean, sd, false};
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            c.zero_variance = true;
            c.stddev = 1.0;
        }
        scaler.columns.push_back(c);
    }
    return scaler;
}

DesignMatrix apply_scaler(const ZScaler& scaler, DesignMatrix rows) {
    for (const auto& c : scaler.columns) {
        if (c.index >= rows.cols()) throw WidthMismatch("features", "apply_scaler", "column index out of range");
        if (c.zero_variance) continue;
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            rows.at(i, c.index) = (rows.at(i, c.index) - c.mean) / c.stddev;
        }
    }
    return rows;
}

std::vector<std::size_t> weather_columns(const DesignMatrix& matrix) {
    std::vector<std::size_t> out;
    for (const auto* name : kWeatherNames) {
        if (const auto j = matrix.column_index(name)) out.push_back(*j);
    }
    return out;
}

Assembled assemble(const Dataset& dataset, const std::map<int, stations::StationClass>& classes,
                   const FeatureMask& mask, const AssembleOptions& options) {
    constexpr const char* op = "assemble";
    Assembled result;
    auto& m = result.matrix;
    for (int k = 1; k <= kLagDays; ++k) m.column_names.push_back("lag" + std::to_string(k));
    for (std::size_t c = 0; c < stations::kStationClassCount; ++c) {
        m.column_names.push_back("class_" + std::string(stations::to_string(static_cast<stations::StationClass>(c))));
    }
    const bool flags[4] = {mask.temperature, mask.wind, mask.humidity, mask.barometer};
    for (int i = 0; i < 4; ++i) {
        if (flags[i]) m.column_names.push_back(kWeatherNames[i]);
    }
    m.column_names.push_back("rain");
    m.column_names.push_back("slot");

    std::vector<std::size_t> station_positions;
    if (options.stations.empty()) {
        station_positions.resize(dataset.n_stations());
        std::iota(station_positions.begin(), station_positions.end(), std::size_t{0});
    } else {
        std::set<int> wanted(options.stations.begin(), options.stations.end());
        for (const int id : wanted) {
            const auto pos = dataset.station_position(id);
            if (!pos) throw MissingKey("features", op, "station " + std::to_string(id) + " not in dataset");
            station_positions.push_back(*pos);
        }
    }

    const int slots = dataset.slots_per_day();
    std::vector<double> row;
    for (const auto s : station_positions) {
        const int station = dataset.stations()[s];
        const auto cls = classes.find(station);
        if (cls == classes.end()) {
            throw MissingKey("features", op, "no class for station " + std::to_string(station));
        }
        for (std::size_t d = 0; d < dataset.n_dates(); ++d) {
            if (!stations::matches(options.day_filter, dataset.day_type(d))) {
                result.filtered_out += static_cast<std::size_t>(slots);
                continue;
            }
            if (d < static_cast<std::size_t>(kLagDays)) {
                result.dropped_insufficient_history += static_cast<std::size_t>(slots);
                continue;
            }
            for (int k = 0; k < slots; ++k) {
                row.clear();
                for (int lag = 1; lag <= kLagDays; ++lag) {
                    row.push_back(static_cast<double>(
                        dataset.flow(s, dataset.slice_position(d - static_cast<std::size_t>(lag), k))));
                }
                for (std::size_t c = 0; c < stations::kStationClassCount; ++c) {
                    row.push_back(static_cast<std::size_t>(cls->second) == c ? 1.0 : 0.0);
                }
                const auto pos = dataset.slice_position(d, k);
                const auto& w = dataset.weather(pos);
                if (mask.temperature) row.push_back(w.temperature);
                if (mask.wind) row.push_back(w.wind_speed);
                if (mask.humidity) row.push_back(w.humidity);
                if (mask.barometer) row.push_back(w.barometer);
                row.push_back(static_cast<double>(static_cast<int>(w.rain)));
                row.push_back(static_cast<double>(k));

                m.values.insert(m.values.end(), row.begin(), row.end());
                m.targets.push_back(static_cast<double>(dataset.flow(s, pos)));
                m.keys.push_back(RowKey{station, SliceIndex{dataset.dates()[d], k}});
                m.day_types.push_back(dataset.day_type(d));
            }
        }
    }
    if (m.rows() == 0) {
        throw InsufficientHistory("features", op,
                                  "no rows with " + std::to_string(kLagDays) + " days of history (dropped " +
                                      std::to_string(result.dropped_insufficient_history) + ")");
    }
    return result;
}

std::pair<DesignMatrix, DesignMatrix> split(const DesignMatrix& matrix, const SplitSpec& spec) {
    constexpr const char* op = "split";
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw InvalidArgument("features", op, "train_fraction must lie in (0, 1)");
    }
    if (matrix.rows() == 0) throw EmptyInput("features", op, "empty matrix");

    auto train_count = [&](std::size_t n) {
        auto k = static_cast<std::size_t>(std::ceil(spec.train_fraction * static_cast<double>(n) - 1e-9));
        return std::clamp<std::size_t>(k, 1, n - 1);
    };

    std::vector<std::size_t> train_rows, test_rows;
    if (spec.mode == SplitMode::Chronological) {
        std::set<Date> dates;
        for (const auto& k : matrix.keys) dates.insert(k.slice.date);
        if (dates.size() < 2) {
            throw DegenerateSplit("features", op, "need at least two distinct dates for a chronological split");
        }
        const auto n_train = train_count(dates.size());
        const Date first_test = *std::next(dates.begin(), static_cast<std::ptrdiff_t>(n_train));
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
            (matrix.keys[i].slice.date < first_test ? train_rows : test_rows).push_back(i);
        }
    } else {
        if (matrix.rows() < 2) throw DegenerateSplit("features", op, "need at least two rows");
        std::vector<std::size_t> order(matrix.rows());
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 rng(spec.seed);
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);
        }
        const auto n_train = train_count(order.size());
        train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(test_rows.begin(), test_rows.end());
    }
    return {matrix.select_rows(train_rows), matrix.select_rows(test_rows)};
}

}  // namespace metroflow::features
