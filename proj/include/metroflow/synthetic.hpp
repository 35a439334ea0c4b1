#pragma once

#include <array>
#include <cstdint>
#include <map>

#include <json.hpp>

#include "metroflow/core_model.hpp"
#include "metroflow/ingest.hpp"
#include "metroflow/stations.hpp"

namespace metroflow::synthetic {

/// Additive flow change, in passengers, per standard deviation of each weather variable.
struct WeatherEffects {
    double temperature = 0.0;
    double wind = 0.0;
    double humidity = 0.0;
    double barometer = 0.0;
};

/// Daily profile of one planted class: mean level and the share of the flow that
/// follows the peak shape (0 = flat, 1 = all peaks).
struct ClassProfile {
    double level = 0.0;
    double peak_share = 0.0;
};

/// Bounded, mean-reverting random walk for one weather variable, stepped per slice.
struct WalkSpec {
    double lo = 0.0;
    double hi = 1.0;
    double step_sd = 0.0;
    double reversion = 0.05;
};

struct SyntheticConfig {
    int n_stations = 100;
    int n_days = 90;
    Date start_date{2018, 4, 1};
    int slice_minutes = 60;
    /// Stations per class, indexed by StationClass.
    std::array<int, 4> class_counts{6, 5, 2, 87};
    std::array<ClassProfile, 4> profiles{{{2500.0, 0.8}, {2500.0, 0.15}, {450.0, 0.9}, {450.0, 0.15}}};
    double station_jitter = 0.1;  // station level multiplier drawn from 1 +/- jitter
    double weekend_scale = 0.75;
    WalkSpec temperature{15.0, 35.0, 0.6, 0.05};
    WalkSpec wind{0.0, 60.0, 2.5, 0.05};
    WalkSpec humidity{40.0, 100.0, 2.5, 0.05};
    WalkSpec barometer{995.0, 1020.0, 0.6, 0.05};
    WeatherEffects workday_effects;
    WeatherEffects weekend_effects;
    double noise_scale = 20.0;
    ingest::RainRule rain_rule;
    HolidayCalendar calendar = HolidayCalendar::hong_kong_2018();
    std::uint64_t seed = 0;
};

/// Everything the generator planted.
struct GroundTruth {
    std::map<int, stations::StationClass> classes;
    std::map<int, double> station_levels;
    WeatherEffects workday_effects;
    WeatherEffects weekend_effects;
    /// Mean and standard deviation used to standardise each weather variable.
    std::array<double, 4> weather_mean{};
    std::array<double, 4> weather_sd{};
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Dataset dataset;
    GroundTruth truth;
};

/// Throws InvalidConfig for inconsistent settings (n_days < 15, counts not summing
/// to n_stations, non-finite coefficients, bad bounds).
void validate(const SyntheticConfig& config);

/**
 * flow = class profile x day-type factor + sum(effect x standardised weather) + noise,
 * floored at zero and rounded. Station ids are 1..n_stations with classes assigned by
 * a seeded shuffle.
 */
SyntheticData generate_synthetic(const SyntheticConfig& config);

/// Reads the generator keys of a flat JSON config; other keys are ignored.
SyntheticConfig config_from_json(const nlohmann::json& j, SyntheticConfig base = {});
nlohmann::json to_json(const GroundTruth& truth);

}  // namespace metroflow::synthetic
