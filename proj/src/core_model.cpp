#include "metroflow/core_model.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <string>

#include "metroflow/error.hpp"
#include "metroflow/text.hpp"

namespace metroflow {

Date::Date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        throw InvalidArgument("core_model", "Date", "invalid calendar date");
    }
    days_ = std::chrono::sys_days{ymd};
}

std::optional<Date> Date::try_parse(std::string_view text) {
    text = text::trim(text);
    const char sep = text.find('/') != std::string_view::npos ? '/' : '-';
    const auto parts = text::split(text, sep);
    if (parts.size() != 3) return std::nullopt;
    const auto y = text::to_int(parts[0]);
    const auto m = text::to_int(parts[1]);
    const auto d = text::to_int(parts[2]);
    if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(*y)},
                                          std::chrono::month{static_cast<unsigned>(*m)},
                                          std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{std::chrono::sys_days{ymd}};
}

Date Date::parse(std::string_view text) {
    if (auto d = try_parse(text)) return *d;
    throw InvalidArgument("core_model", "Date.parse", "unparseable date '" + std::string(text) + "'");
}

std::string Date::iso() const {
    const auto v = ymd();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                  static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
    return buf;
}

std::optional<ClockTime> ClockTime::try_parse(std::string_view text) {
    const auto parts = text::split(text::trim(text), ':');
    if (parts.size() != 2 && parts.size() != 3) return std::nullopt;
    const auto h = text::to_int(parts[0]);
    const auto m = text::to_int(parts[1]);
    if (!h || !m || *h < 0 || *h > 23 || *m < 0 || *m > 59) return std::nullopt;
    if (parts.size() == 3) {
        const auto s = text::to_int(parts[2]);
        if (!s || *s < 0 || *s > 59) return std::nullopt;
    }
    return ClockTime{static_cast<int>(*h * 60 + *m)};
}

ClockTime ClockTime::parse(std::string_view text) {
    if (auto t = try_parse(text)) return *t;
    throw InvalidArgument("core_model", "ClockTime.parse", "unparseable time '" + std::string(text) + "'");
}

std::string ClockTime::str() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
    return buf;
}

void validate_slice_minutes(int slice_minutes) {
    if (slice_minutes <= 0 || 60 % slice_minutes != 0) {
        throw InvalidArgument("core_model", "slice_of",
                              "slice_minutes must divide 60, got " + std::to_string(slice_minutes));
    }
}

int slots_per_day(int slice_minutes) {
    validate_slice_minutes(slice_minutes);
    return kServiceMinutes / slice_minutes;
}

ClockTime slot_start(int slot, int slice_minutes) {
    return ClockTime{kServiceStartMinutes + slot * slice_minutes};
}

SliceIndex slice_of(Date date, ClockTime time, int slice_minutes) {
    validate_slice_minutes(slice_minutes);
    if (time.minutes < kServiceStartMinutes || time.minutes >= kServiceEndMinutes) {
        throw OutOfServiceWindow("core_model", "slice_of",
                                 time.str() + " is outside the service window [06:00, 23:00)");
    }
    return SliceIndex{date, (time.minutes - kServiceStartMinutes) / slice_minutes};
}

std::string_view to_string(DayType type) {
    return type == DayType::Workday ? "workday" : "weekend";
}

HolidayCalendar HolidayCalendar::parse(std::istream& in) {
    std::set<Date> dates;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = text::trim(view);
        if (view.empty()) continue;
        const auto date = Date::try_parse(view);
        if (!date) {
            throw InvalidArgument("core_model", "HolidayCalendar.parse",
                                  "line " + std::to_string(line_no) + ": bad date '" + std::string(view) + "'");
        }
        dates.insert(*date);
    }
    return HolidayCalendar{std::move(dates)};
}

HolidayCalendar HolidayCalendar::hong_kong_2018() {
    return HolidayCalendar{{
        Date{2018, 4, 2},   // Easter Monday
        Date{2018, 4, 5},   // Ching Ming Festival
        Date{2018, 5, 1},   // Labour Day
        Date{2018, 5, 22},  // Buddha's Birthday
        Date{2018, 6, 18},  // Tuen Ng Festival
    }};
}

DayType day_type(Date date, const HolidayCalendar& calendar) {
    const auto wd = date.weekday();
    if (wd == std::chrono::Saturday || wd == std::chrono::Sunday || calendar.contains(date)) {
        return DayType::Weekend;
    }
    return DayType::Workday;
}

Dataset::Dataset(int slice_minutes, std::vector<int> stations, Date first_date, int n_dates,
                 std::vector<std::int64_t> flow, std::vector<SliceWeather> weather,
                 HolidayCalendar calendar)
    : slice_minutes_(slice_minutes),
      slots_per_day_(metroflow::slots_per_day(slice_minutes)),
      stations_(std::move(stations)),
      flow_(std::move(flow)),
      weather_(std::move(weather)),
      calendar_(std::move(calendar)) {
    if (n_dates < 0) throw InvalidArgument("core_model", "Dataset", "negative date count");
    if (!std::is_sorted(stations_.begin(), stations_.end()) ||
        std::adjacent_find(stations_.begin(), stations_.end()) != stations_.end()) {
        throw InvalidArgument("core_model", "Dataset", "stations must be sorted and unique");
    }
    dates_.reserve(static_cast<std::size_t>(n_dates));
    day_types_.reserve(static_cast<std::size_t>(n_dates));
    for (int i = 0; i < n_dates; ++i) {
        dates_.push_back(first_date.plus_days(i));
        day_types_.push_back(metroflow::day_type(dates_.back(), calendar_));
    }
    if (flow_.size() != stations_.size() * n_slices()) {
        throw InvalidArgument("core_model", "Dataset", "flow grid size does not match stations x slices");
    }
    if (weather_.size() != n_slices()) {
        throw CoverageGap("core_model", "Dataset", "weather must be defined for every slice");
    }
    for (const auto c : flow_) {
        if (c < 0) throw InvalidArgument("core_model", "Dataset", "negative flow count");
    }
}

SliceIndex Dataset::slice(std::size_t slice_pos) const {
    const auto per_day = static_cast<std::size_t>(slots_per_day_);
    return SliceIndex{dates_[slice_pos / per_day], static_cast<int>(slice_pos % per_day)};
}

std::optional<std::size_t> Dataset::station_position(int station) const {
    const auto it = std::lower_bound(stations_.begin(), stations_.end(), station);
    if (it == stations_.end() || *it != station) return std::nullopt;
    return static_cast<std::size_t>(it - stations_.begin());
}

std::optional<std::size_t> Dataset::date_position(Date date) const {
    if (dates_.empty() || date < dates_.front() || date > dates_.back()) return std::nullopt;
    return static_cast<std::size_t>(date.days_since(dates_.front()));
}

std::int64_t Dataset::flow_at(int station, const SliceIndex& slice) const {
    const auto s = station_position(station);
    const auto d = date_position(slice.date);
    if (!s || !d || slice.slot < 0 || slice.slot >= slots_per_day_) {
        throw MissingKey("core_model", "Dataset.flow_at",
                         "no cell for station " + std::to_string(station) + " at " + slice.date.iso() +
                             " slot " + std::to_string(slice.slot));
    }
    return flow(*s, slice_position(*d, slice.slot));
}

const SliceWeather& Dataset::weather_at(const SliceIndex& slice) const {
    const auto d = date_position(slice.date);
    if (!d || slice.slot < 0 || slice.slot >= slots_per_day_) {
        throw MissingKey("core_model", "Dataset.weather_at", "no weather for " + slice.date.iso());
    }
    return weather_[slice_position(*d, slice.slot)];
}

std::int64_t Dataset::total_flow() const {
    return std::accumulate(flow_.begin(), flow_.end(), std::int64_t{0});
}

}  // namespace metroflow
