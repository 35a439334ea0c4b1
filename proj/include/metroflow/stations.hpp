#pragma once

#include <map>
#include <string_view>
#include <vector>

#include "metroflow/core_model.hpp"

namespace metroflow::stations {

enum class DayFilter { Workday, Weekend, All };

std::string_view to_string(DayFilter filter);
bool matches(DayFilter filter, DayType type);

struct StationStats {
    int station = 0;
    double mean_flow = 0.0;  // mean over every (day, slot) cell
    double var_flow = 0.0;   // population variance of the average daily profile
};

/// Throws EmptySelection when no date passes the filter.
std::vector<StationStats> station_stats(const Dataset& dataset, DayFilter filter);

/// Order fixes the one-hot dummy layout used by the feature assembler.
enum class StationClass { HighMeanHighVar, HighMeanLowVar, LowMeanHighVar, LowMeanLowVar };

inline constexpr std::size_t kStationClassCount = 4;
std::string_view to_string(StationClass c);

/**
 * How the two cuts (mean, then variance residual within each mean group) are placed.
 *
 * NaturalBreak: optimal two-group split of the sorted values (minimum within-group
 * sum of squares), cuts only between distinct values.
 * Quantile: values strictly above the nearest-rank quantile are High.
 */
enum class ThresholdMode { NaturalBreak, Quantile };

struct ClassThresholds {
    ThresholdMode mode = ThresholdMode::NaturalBreak;
    double mean_quantile = 0.90;
    double var_quantile = 0.70;
};

/// Nearest-rank quantile: sorted[ceil(q * n) - 1], clamped to a valid rank.
double nearest_rank_quantile(std::vector<double> values, double q);

/// Index k such that sorted[0..k) is Low and sorted[k..n) is High for the 1-D two-means cut.
/// Returns n when the values have fewer than two distinct levels.
std::size_t natural_break(const std::vector<double>& sorted);

/**
 * Two-stage quadrant classification: split on mean, then within each mean group
 * split on the residual of variance about the least-squares line var ~ mean
 * fitted over all stations.
 *
 * Throws InvalidArgument for fewer than two stations and DegenerateStats when all
 * means coincide.
 */
std::map<int, StationClass> classify_stations(const std::vector<StationStats>& stats,
                                              const ClassThresholds& thresholds = {});

/// Count minus the station's mean count over the slices of the same date.
double center_flow(const Dataset& dataset, int station, const SliceIndex& slice);

/// Centered counts for every slot of one station-day.
std::vector<double> centered_day(const Dataset& dataset, std::size_t station_pos, std::size_t date_pos);

}  // namespace metroflow::stations
