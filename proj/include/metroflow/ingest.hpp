#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "metroflow/core_model.hpp"

namespace metroflow::ingest {

enum class ParsePolicy { Abort, Skip };

template <class Record>
struct ParseResult {
    std::vector<Record> records;
    std::size_t skipped = 0;
    std::vector<std::string> messages;  // one per skipped row
};

/**
 * Rain level for weather rows without an explicit rain column:
 * Moderate when humidity >= humidity_min and barometer <= barometer_max,
 * Extreme when additionally wind_speed >= extreme_wind_min. A heuristic,
 * not an observation.
 */
struct RainRule {
    double humidity_min = 95.0;
    double barometer_max = 1005.0;
    double extreme_wind_min = 30.0;

    RainLevel derive(double humidity, double barometer, double wind_speed) const;
};

/// Columns: date, origin station, outbound station, outbound time, outbound count.
ParseResult<FlowObservation> parse_flow_csv(std::istream& in, ParsePolicy policy = ParsePolicy::Abort);

/// Columns: date, time, temperature, wind speed, humidity, barometer[, rain 0/1/2].
ParseResult<WeatherObservation> parse_weather_csv(std::istream& in, ParsePolicy policy = ParsePolicy::Abort,
                                                  const RainRule& rain_rule = {});

using WeatherGrid = std::map<SliceIndex, SliceWeather>;

struct AlignOptions {
    int slice_minutes = kDefaultSliceMinutes;
    /// Linearly interpolate runs of at most two missing slices.
    bool gap_fill = false;
};

/**
 * Averages observations into slices over every date from the first to the last
 * observed one. Numeric fields are arithmetic means, rain is the maximum level.
 * Observations outside the service window are ignored.
 */
WeatherGrid align_weather(const std::vector<WeatherObservation>& observations, const AlignOptions& options = {});

/// Sums outbound counts over origins into a zero-filled (station, slice) grid.
Dataset build_dataset(const std::vector<FlowObservation>& flows, const WeatherGrid& weather,
                      const HolidayCalendar& calendar, int slice_minutes = kDefaultSliceMinutes);

/// Canonical on-disk form: flows.csv, weather.csv and dataset.json. `preamble` is
/// prepended to both CSVs; a non-null `provenance` is stored in dataset.json.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir, const std::string& preamble = {},
                   const nlohmann::json& provenance = {});
Dataset read_dataset(const std::filesystem::path& dir);

void write_flow_csv(const Dataset& dataset, std::ostream& out);
void write_weather_csv(const Dataset& dataset, std::ostream& out);

}  // namespace metroflow::ingest
