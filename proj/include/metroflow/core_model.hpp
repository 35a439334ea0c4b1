#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace metroflow {

/// Calendar date with day resolution. Accepts `2018-04-01` and `2018/4/1` on input,
/// always prints ISO-8601.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    static Date parse(std::string_view text);
    static std::optional<Date> try_parse(std::string_view text);

    std::chrono::sys_days days() const { return days_; }
    std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
    std::chrono::weekday weekday() const { return std::chrono::weekday{days_}; }
    Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }
    int days_since(Date other) const { return static_cast<int>((days_ - other.days_).count()); }

    std::string iso() const;

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

/// Minutes after midnight. Parses `6:00`, `06:00` and `06:00:00`.
struct ClockTime {
    int minutes = 0;

    static ClockTime parse(std::string_view text);
    static std::optional<ClockTime> try_parse(std::string_view text);
    std::string str() const;

    friend constexpr auto operator<=>(const ClockTime&, const ClockTime&) = default;
};

inline constexpr int kServiceStartMinutes = 6 * 60;
inline constexpr int kServiceEndMinutes = 23 * 60;  // exclusive
inline constexpr int kServiceMinutes = kServiceEndMinutes - kServiceStartMinutes;
inline constexpr int kDefaultSliceMinutes = 60;

/// Throws InvalidArgument unless `slice_minutes` is a positive divisor of 60.
void validate_slice_minutes(int slice_minutes);
int slots_per_day(int slice_minutes);
/// Start of `slot` as clock time.
ClockTime slot_start(int slot, int slice_minutes);

struct SliceIndex {
    Date date;
    int slot = 0;

    friend constexpr auto operator<=>(const SliceIndex&, const SliceIndex&) = default;
};

/// Maps a clock time on `date` into the service-day grid. Half-open window [06:00, 23:00).
SliceIndex slice_of(Date date, ClockTime time, int slice_minutes);

enum class DayType : std::uint8_t { Workday, Weekend };

std::string_view to_string(DayType type);

class HolidayCalendar {
public:
    HolidayCalendar() = default;
    explicit HolidayCalendar(std::set<Date> dates) : dates_(std::move(dates)) {}

    /// One ISO date per line; blank lines and `#` comments ignored.
    static HolidayCalendar parse(std::istream& in);
    /// Hong Kong general holidays falling in April to June 2018.
    static HolidayCalendar hong_kong_2018();

    bool contains(Date date) const { return dates_.contains(date); }
    const std::set<Date>& dates() const { return dates_; }

    friend bool operator==(const HolidayCalendar&, const HolidayCalendar&) = default;

private:
    std::set<Date> dates_;
};

/// Weekend iff Saturday, Sunday or a listed holiday.
DayType day_type(Date date, const HolidayCalendar& calendar);

struct FlowObservation {
    Date date;
    int origin_station = 0;
    int outbound_station = 0;
    ClockTime time;
    std::int64_t count = 0;

    friend bool operator==(const FlowObservation&, const FlowObservation&) = default;
};

enum class RainLevel : std::uint8_t { None = 0, Moderate = 1, Extreme = 2 };

struct WeatherObservation {
    Date date;
    ClockTime time;
    double temperature = 0.0;  // deg C
    double wind_speed = 0.0;   // km/h
    double humidity = 0.0;     // percent
    double barometer = 0.0;    // mbar
    RainLevel rain = RainLevel::None;

    friend bool operator==(const WeatherObservation&, const WeatherObservation&) = default;
};

/// Weather averaged over one slice.
struct SliceWeather {
    double temperature = 0.0;
    double wind_speed = 0.0;
    double humidity = 0.0;
    double barometer = 0.0;
    RainLevel rain = RainLevel::None;

    friend bool operator==(const SliceWeather&, const SliceWeather&) = default;
};

/**
 * Dense per-station, per-slice outbound counts with per-slice weather.
 *
 * Dates form a contiguous range; every date carries the full set of service-day
 * slots, so slice position = date_position * slots_per_day + slot. Flow cells
 * are stored station-major. Immutable after construction.
 */
class Dataset {
public:
    Dataset() = default;
    Dataset(int slice_minutes, std::vector<int> stations, Date first_date, int n_dates,
            std::vector<std::int64_t> flow, std::vector<SliceWeather> weather,
            HolidayCalendar calendar);

    int slice_minutes() const { return slice_minutes_; }
    int slots_per_day() const { return slots_per_day_; }
    const std::vector<int>& stations() const { return stations_; }
    std::size_t n_stations() const { return stations_.size(); }
    const std::vector<Date>& dates() const { return dates_; }
    std::size_t n_dates() const { return dates_.size(); }
    std::size_t n_slices() const { return dates_.size() * static_cast<std::size_t>(slots_per_day_); }
    const HolidayCalendar& calendar() const { return calendar_; }

    SliceIndex slice(std::size_t slice_pos) const;
    std::size_t slice_position(std::size_t date_pos, int slot) const {
        return date_pos * static_cast<std::size_t>(slots_per_day_) + static_cast<std::size_t>(slot);
    }
    std::optional<std::size_t> station_position(int station) const;
    std::optional<std::size_t> date_position(Date date) const;

    std::int64_t flow(std::size_t station_pos, std::size_t slice_pos) const {
        return flow_[station_pos * n_slices() + slice_pos];
    }
    /// Throws MissingKey for unknown station or slice.
    std::int64_t flow_at(int station, const SliceIndex& slice) const;
    const SliceWeather& weather(std::size_t slice_pos) const { return weather_[slice_pos]; }
    const SliceWeather& weather_at(const SliceIndex& slice) const;
    DayType day_type(std::size_t date_pos) const { return day_types_[date_pos]; }

    std::int64_t total_flow() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    int slice_minutes_ = kDefaultSliceMinutes;
    int slots_per_day_ = 0;
    std::vector<int> stations_;
    std::vector<Date> dates_;
    std::vector<std::int64_t> flow_;
    std::vector<SliceWeather> weather_;
    std::vector<DayType> day_types_;
    HolidayCalendar calendar_;
};

}  // namespace metroflow
