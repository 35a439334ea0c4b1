#include "metroflow/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "metroflow/error.hpp"
#include "metroflow/text.hpp"

namespace metroflow::ingest {
namespace {

bool is_skippable(std::string_view line) {
    const auto t = text::trim(line);
    return t.empty() || t.front() == '#';
}

// Drives a row parser over a CSV stream, honouring the error policy. The first
// non-comment line is the header.
template <class Record, class RowParser>
ParseResult<Record> parse_rows(std::istream& in, ParsePolicy policy, RowParser&& parse_row) {
    ParseResult<Record> result;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        try {
            result.records.push_back(parse_row(text::split(text::trim(line), ','), line_no));
        } catch (const ParseError& e) {
            if (policy == ParsePolicy::Abort) throw;
            ++result.skipped;
            result.messages.emplace_back(e.what());
        }
    }
    return result;
}

double number_field(std::string_view field, std::size_t line, std::size_t column, const char* op) {
    const auto v = text::to_double(field);
    if (!v) throw ParseError(op, line, column, "not a number: '" + std::string(text::trim(field)) + "'");
    return *v;
}

}  // namespace

RainLevel RainRule::derive(double humidity, double barometer, double wind_speed) const {
    if (humidity >= humidity_min && barometer <= barometer_max) {
        return wind_speed >= extreme_wind_min ? RainLevel::Extreme : RainLevel::Moderate;
    }
    return RainLevel::None;
}

ParseResult<FlowObservation> parse_flow_csv(std::istream& in, ParsePolicy policy) {
    constexpr const char* op = "parse_flow_csv";
    return parse_rows<FlowObservation>(in, policy, [](const std::vector<std::string_view>& f, std::size_t line) {
        if (f.size() != 5) {
            throw ParseError(op, line, 0, "expected 5 columns, got " + std::to_string(f.size()));
        }
        FlowObservation obs;
        const auto date = Date::try_parse(f[0]);
        if (!date) throw ParseError(op, line, 1, "bad date");
        obs.date = *date;
        const auto origin = text::to_int(f[1]);
        const auto outbound = text::to_int(f[2]);
        if (!origin || *origin < 0) throw ParseError(op, line, 2, "bad origin station");
        if (!outbound || *outbound < 0) throw ParseError(op, line, 3, "bad outbound station");
        obs.origin_station = static_cast<int>(*origin);
        obs.outbound_station = static_cast<int>(*outbound);
        const auto time = ClockTime::try_parse(f[3]);
        if (!time) throw ParseError(op, line, 4, "bad time");
        if (time->minutes < kServiceStartMinutes || time->minutes >= kServiceEndMinutes) {
            throw ParseError(op, line, 4, "time outside service window");
        }
        obs.time = *time;
        const auto count = text::to_int(f[4]);
        if (!count) throw ParseError(op, line, 5, "bad count");
        if (*count < 0) throw ParseError(op, line, 5, "negative count");
        obs.count = *count;
        return obs;
    });
}

ParseResult<WeatherObservation> parse_weather_csv(std::istream& in, ParsePolicy policy, const RainRule& rain_rule) {
    constexpr const char* op = "parse_weather_csv";
    return parse_rows<WeatherObservation>(
        in, policy, [&rain_rule](const std::vector<std::string_view>& f, std::size_t line) {
            if (f.size() != 6 && f.size() != 7) {
                throw ParseError(op, line, 0, "expected 6 or 7 columns, got " + std::to_string(f.size()));
            }
            WeatherObservation obs;
            const auto date = Date::try_parse(f[0]);
            if (!date) throw ParseError(op, line, 1, "bad date");
            obs.date = *date;
            const auto time = ClockTime::try_parse(f[1]);
            if (!time) throw ParseError(op, line, 2, "bad time");
            obs.time = *time;
            obs.temperature = number_field(f[2], line, 3, op);
            obs.wind_speed = number_field(f[3], line, 4, op);
            obs.humidity = number_field(f[4], line, 5, op);
            obs.barometer = number_field(f[5], line, 6, op);
            if (obs.wind_speed < 0) throw ParseError(op, line, 4, "negative wind speed");
            if (obs.humidity < 0 || obs.humidity > 100) {
                throw HumidityOutOfRange(op, line, 5, "humidity outside [0, 100]");
            }
            if (obs.barometer <= 0) throw ParseError(op, line, 6, "barometer must be positive");
            if (f.size() == 7) {
                const auto rain = text::to_int(f[6]);
                if (!rain || *rain < 0 || *rain > 2) throw ParseError(op, line, 7, "rain level must be 0, 1 or 2");
                obs.rain = static_cast<RainLevel>(*rain);
            } else {
                obs.rain = rain_rule.derive(obs.humidity, obs.barometer, obs.wind_speed);
            }
            return obs;
        });
}

WeatherGrid align_weather(const std::vector<WeatherObservation>& observations, const AlignOptions& options) {
    const int per_day = slots_per_day(options.slice_minutes);

    struct Acc {
        double temperature = 0, wind = 0, humidity = 0, barometer = 0;
        int rain = 0;
        std::size_t n = 0;
    };
    std::map<SliceIndex, Acc> acc;
    std::optional<Date> first, last;
    for (const auto& obs : observations) {
        if (obs.time.minutes < kServiceStartMinutes || obs.time.minutes >= kServiceEndMinutes) continue;
        const auto key = slice_of(obs.date, obs.time, options.slice_minutes);
        auto& a = acc[key];
        a.temperature += obs.temperature;
        a.wind += obs.wind_speed;
        a.humidity += obs.humidity;
        a.barometer += obs.barometer;
        a.rain = std::max(a.rain, static_cast<int>(obs.rain));
        ++a.n;
        if (!first || obs.date < *first) first = obs.date;
        if (!last || obs.date > *last) last = obs.date;
    }

    WeatherGrid grid;
    if (!first) return grid;

    // Chronological walk over every slice in the covered date range.
    std::vector<SliceIndex> order;
    for (Date d = *first; d <= *last; d = d.plus_days(1)) {
        for (int s = 0; s < per_day; ++s) order.push_back(SliceIndex{d, s});
    }
    std::vector<std::optional<SliceWeather>> cells(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto it = acc.find(order[i]);
        if (it == acc.end()) continue;
        const auto& a = it->second;
        const double n = static_cast<double>(a.n);
        cells[i] = SliceWeather{a.temperature / n, a.wind / n, a.humidity / n, a.barometer / n,
                                static_cast<RainLevel>(a.rain)};
    }

    auto gap_error = [&](std::size_t i) {
        return CoverageGap("ingest", "align_weather",
                           "no weather observations for " + order[i].date.iso() + " slot " +
                               std::to_string(order[i].slot));
    };
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i]) continue;
        if (!options.gap_fill) throw gap_error(i);
        std::size_t j = i;
        while (j < cells.size() && !cells[j]) ++j;
        const std::size_t run = j - i;
        if (i == 0 || j == cells.size() || run > 2) throw gap_error(i);
        const auto& lo = *cells[i - 1];
        const auto& hi = *cells[j];
        for (std::size_t k = i; k < j; ++k) {
            const double t = static_cast<double>(k - i + 1) / static_cast<double>(run + 1);
            auto lerp = [t](double a, double b) { return a + (b - a) * t; };
            cells[k] = SliceWeather{lerp(lo.temperature, hi.temperature), lerp(lo.wind_speed, hi.wind_speed),
                                    lerp(lo.humidity, hi.humidity), lerp(lo.barometer, hi.barometer),
                                    std::max(lo.rain, hi.rain)};
        }
        i = j - 1;
    }
    for (std::size_t i = 0; i < order.size(); ++i) grid.emplace(order[i], *cells[i]);
    return grid;
}

Dataset build_dataset(const std::vector<FlowObservation>& flows, const WeatherGrid& weather,
                      const HolidayCalendar& calendar, int slice_minutes) {
    const int per_day = slots_per_day(slice_minutes);
    if (flows.empty()) throw EmptyInput("ingest", "build_dataset", "no flow records");

    std::set<int> station_set;
    Date first = flows.front().date, last = flows.front().date;
    for (const auto& f : flows) {
        station_set.insert(f.outbound_station);
        first = std::min(first, f.date);
        last = std::max(last, f.date);
    }
    std::vector<int> stations(station_set.begin(), station_set.end());
    const int n_dates = last.days_since(first) + 1;
    const std::size_t n_slices = static_cast<std::size_t>(n_dates) * static_cast<std::size_t>(per_day);

    std::vector<std::int64_t> grid(stations.size() * n_slices, 0);
    for (const auto& f : flows) {
        const auto slice = slice_of(f.date, f.time, slice_minutes);
        const auto s = static_cast<std::size_t>(
            std::lower_bound(stations.begin(), stations.end(), f.outbound_station) - stations.begin());
        const auto pos = static_cast<std::size_t>(slice.date.days_since(first)) * static_cast<std::size_t>(per_day) +
                         static_cast<std::size_t>(slice.slot);
        grid[s * n_slices + pos] += f.count;
    }

    std::vector<SliceWeather> slice_weather;
    slice_weather.reserve(n_slices);
    for (int d = 0; d < n_dates; ++d) {
        for (int s = 0; s < per_day; ++s) {
            const SliceIndex key{first.plus_days(d), s};
            const auto it = weather.find(key);
            if (it == weather.end()) {
                throw CoverageGap("ingest", "build_dataset",
                                  "weather missing for " + key.date.iso() + " slot " + std::to_string(s));
            }
            slice_weather.push_back(it->second);
        }
    }
    return Dataset(slice_minutes, std::move(stations), first, n_dates, std::move(grid), std::move(slice_weather),
                   calendar);
}

void write_flow_csv(const Dataset& dataset, std::ostream& out) {
    out << "station,date,slot,count\n";
    for (std::size_t s = 0; s < dataset.n_stations(); ++s) {
        for (std::size_t t = 0; t < dataset.n_slices(); ++t) {
            const auto slice = dataset.slice(t);
            out << dataset.stations()[s] << ',' << slice.date.iso() << ',' << slice.slot << ','
                << dataset.flow(s, t) << '\n';
        }
    }
}

void write_weather_csv(const Dataset& dataset, std::ostream& out) {
    out << "date,slot,temp,wind,humidity,barometer,rain\n";
    for (std::size_t t = 0; t < dataset.n_slices(); ++t) {
        const auto slice = dataset.slice(t);
        const auto& w = dataset.weather(t);
        out << slice.date.iso() << ',' << slice.slot << ',' << text::format(w.temperature) << ','
            << text::format(w.wind_speed) << ',' << text::format(w.humidity) << ',' << text::format(w.barometer)
            << ',' << static_cast<int>(w.rain) << '\n';
    }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir, const std::string& preamble,
                   const nlohmann::json& provenance) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "flows.csv", std::ios::binary);
        out << preamble;
        write_flow_csv(dataset, out);
    }
    {
        std::ofstream out(dir / "weather.csv", std::ios::binary);
        out << preamble;
        write_weather_csv(dataset, out);
    }
    nlohmann::ordered_json meta;
    meta["slice_minutes"] = dataset.slice_minutes();
    meta["first_date"] = dataset.dates().empty() ? std::string{} : dataset.dates().front().iso();
    meta["n_dates"] = dataset.n_dates();
    meta["stations"] = dataset.stations();
    std::vector<std::string> holidays;
    for (const auto& d : dataset.calendar().dates()) holidays.push_back(d.iso());
    meta["holidays"] = holidays;
    if (!provenance.is_null()) meta["provenance"] = provenance;
    std::ofstream out(dir / "dataset.json", std::ios::binary);
    out << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir) {
    constexpr const char* op = "read_dataset";
    std::ifstream meta_in(dir / "dataset.json");
    if (!meta_in) throw InvalidArgument("ingest", op, "cannot open " + (dir / "dataset.json").string());
    const auto meta = nlohmann::json::parse(meta_in);
    const int slice_minutes = meta.at("slice_minutes").get<int>();
    const int per_day = slots_per_day(slice_minutes);
    const int n_dates = meta.at("n_dates").get<int>();
    const Date first = Date::parse(meta.at("first_date").get<std::string>());
    const auto stations = meta.at("stations").get<std::vector<int>>();
    std::set<Date> holidays;
    for (const auto& h : meta.at("holidays")) holidays.insert(Date::parse(h.get<std::string>()));

    const std::size_t n_slices = static_cast<std::size_t>(n_dates) * static_cast<std::size_t>(per_day);
    auto slice_pos = [&](const Date& d, std::int64_t slot, std::size_t line) {
        const int day = d.days_since(first);
        if (day < 0 || day >= n_dates || slot < 0 || slot >= per_day) {
            throw ParseError(op, line, 2, "slice outside the declared range");
        }
        return static_cast<std::size_t>(day) * static_cast<std::size_t>(per_day) + static_cast<std::size_t>(slot);
    };

    std::vector<std::int64_t> flow(stations.size() * n_slices, 0);
    {
        std::ifstream in(dir / "flows.csv");
        if (!in) throw InvalidArgument("ingest", op, "cannot open " + (dir / "flows.csv").string());
        parse_rows<int>(in, ParsePolicy::Abort, [&](const std::vector<std::string_view>& f, std::size_t line) {
            if (f.size() != 4) throw ParseError(op, line, 0, "expected 4 columns");
            const auto station = text::to_int(f[0]);
            const auto date = Date::try_parse(f[1]);
            const auto slot = text::to_int(f[2]);
            const auto count = text::to_int(f[3]);
            if (!station || !date || !slot || !count || *count < 0) throw ParseError(op, line, 0, "malformed row");
            const auto it = std::lower_bound(stations.begin(), stations.end(), static_cast<int>(*station));
            if (it == stations.end() || *it != *station) throw ParseError(op, line, 1, "undeclared station");
            flow[static_cast<std::size_t>(it - stations.begin()) * n_slices + slice_pos(*date, *slot, line)] = *count;
            return 0;
        });
    }
    std::vector<SliceWeather> weather(n_slices);
    std::vector<bool> seen(n_slices, false);
    {
        std::ifstream in(dir / "weather.csv");
        if (!in) throw InvalidArgument("ingest", op, "cannot open " + (dir / "weather.csv").string());
        parse_rows<int>(in, ParsePolicy::Abort, [&](const std::vector<std::string_view>& f, std::size_t line) {
            if (f.size() != 7) throw ParseError(op, line, 0, "expected 7 columns");
            const auto date = Date::try_parse(f[0]);
            const auto slot = text::to_int(f[1]);
            const auto rain = text::to_int(f[6]);
            if (!date || !slot || !rain || *rain < 0 || *rain > 2) throw ParseError(op, line, 0, "malformed row");
            const auto pos = slice_pos(*date, *slot, line);
            weather[pos] = SliceWeather{number_field(f[2], line, 3, op), number_field(f[3], line, 4, op),
                                        number_field(f[4], line, 5, op), number_field(f[5], line, 6, op),
                                        static_cast<RainLevel>(*rain)};
            seen[pos] = true;
            return 0;
        });
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw CoverageGap("ingest", op, "weather.csv does not cover every slice");
    }
    return Dataset(slice_minutes, stations, first, n_dates, std::move(flow), std::move(weather),
                   HolidayCalendar{std::move(holidays)});
}

}  // namespace metroflow::ingest
