#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "metroflow/core_model.hpp"
#include "metroflow/error.hpp"
#include "support.hpp"

using namespace metroflow;

TEST_CASE("dates parse in both separators and print as ISO") {
    CHECK(Date::parse("2018/4/1") == Date(2018, 4, 1));
    CHECK(Date::parse("2018-04-01") == Date(2018, 4, 1));
    CHECK(Date(2018, 4, 1).iso() == "2018-04-01");
    CHECK_FALSE(Date::try_parse("2018-02-30"));
    CHECK_FALSE(Date::try_parse("yesterday"));
    CHECK_THROWS_AS(Date::parse("2018/13/1"), InvalidArgument);
    CHECK(Date(2018, 4, 1).plus_days(30) == Date(2018, 5, 1));
    CHECK(Date(2018, 5, 1).days_since(Date(2018, 4, 1)) == 30);
}

TEST_CASE("clock times") {
    CHECK(ClockTime::parse("6:00").minutes == 360);
    CHECK(ClockTime::parse("22:45").minutes == 22 * 60 + 45);
    CHECK(ClockTime{360}.str() == "06:00");
    CHECK_FALSE(ClockTime::try_parse("24:00"));
    CHECK_FALSE(ClockTime::try_parse("7:60"));
}

TEST_CASE("slice_of examples") {
    const Date d(2018, 4, 1);
    CHECK(slice_of(d, ClockTime::parse("06:00"), 60).slot == 0);
    CHECK(slice_of(d, ClockTime::parse("07:45"), 15).slot == 7);
    CHECK(slice_of(d, ClockTime::parse("22:45"), 60).slot == 16);
    CHECK(slots_per_day(60) == 17);
    CHECK(slots_per_day(15) == 68);
}

TEST_CASE("slice_of rejects times outside the service window and bad widths") {
    const Date d(2018, 4, 1);
    CHECK_THROWS_AS(slice_of(d, ClockTime::parse("05:59"), 60), OutOfServiceWindow);
    CHECK_THROWS_AS(slice_of(d, ClockTime::parse("23:00"), 60), OutOfServiceWindow);
    CHECK_THROWS_AS(slice_of(d, ClockTime::parse("08:00"), 7), InvalidArgument);
    CHECK_THROWS_AS(slice_of(d, ClockTime::parse("08:00"), 0), InvalidArgument);
}

TEST_CASE("slice_of is injective on boundaries and right-continuous inside a slice") {
    for (const int width : {1, 5, 10, 15, 20, 30, 60}) {
        const int slots = slots_per_day(width);
        for (int k = 0; k < slots; ++k) {
            const int start = kServiceStartMinutes + k * width;
            CHECK(slice_of(Date(2018, 4, 1), ClockTime{start}, width).slot == k);
            CHECK(slice_of(Date(2018, 4, 1), ClockTime{start + width - 1}, width).slot == k);
            CHECK(slot_start(k, width).minutes == start);
        }
    }
}

TEST_CASE("day types") {
    const HolidayCalendar none;
    CHECK(day_type(Date(2018, 4, 1), none) == DayType::Weekend);
    CHECK(day_type(Date(2018, 4, 2), none) == DayType::Workday);
    CHECK(day_type(Date(2018, 4, 7), none) == DayType::Weekend);
    std::istringstream in("# holidays\n2018-05-01\n\n");
    const auto cal = HolidayCalendar::parse(in);
    CHECK(day_type(Date(2018, 5, 1), cal) == DayType::Weekend);
    CHECK(day_type(Date(2018, 5, 1), none) == DayType::Workday);
    std::istringstream bad("2018-05-01\nnot a date\n");
    CHECK_THROWS_AS(HolidayCalendar::parse(bad), InvalidArgument);
}

TEST_CASE("the built-in calendar marks the 2018 public holidays") {
    const auto cal = HolidayCalendar::hong_kong_2018();
    CHECK(day_type(Date(2018, 4, 2), cal) == DayType::Weekend);
    CHECK(day_type(Date(2018, 6, 18), cal) == DayType::Weekend);
    CHECK(day_type(Date(2018, 4, 3), cal) == DayType::Workday);
}

TEST_CASE("day types partition any date range") {
    const auto cal = HolidayCalendar::hong_kong_2018();
    int work = 0, weekend = 0;
    for (int i = 0; i < 400; ++i) {
        (day_type(Date(2018, 1, 1).plus_days(i), cal) == DayType::Workday ? work : weekend)++;
    }
    CHECK(work + weekend == 400);
    // 2018-01-01 is a Monday: 57 full weeks plus one extra day give 115 weekend days, plus 5 holidays.
    CHECK(weekend == 57 * 2 + 5);
}

TEST_CASE("dataset indexing and lookups") {
    const auto ds = testing::make_dataset({3, 7}, 2, [](std::size_t s, std::size_t d, int k) {
        return static_cast<std::int64_t>(100 * s + 10 * d + k);
    });
    CHECK(ds.n_slices() == 34);
    CHECK(ds.flow_at(7, SliceIndex{Date(2018, 4, 3), 5}) == 115);
    CHECK(ds.station_position(7) == 1u);
    CHECK_FALSE(ds.station_position(4));
    CHECK(ds.date_position(Date(2018, 4, 3)) == 1u);
    CHECK(ds.slice(18).date == Date(2018, 4, 3));
    CHECK(ds.slice(18).slot == 1);
    CHECK_THROWS_AS(ds.flow_at(4, SliceIndex{Date(2018, 4, 3), 5}), MissingKey);
    CHECK_THROWS_AS(ds.flow_at(3, SliceIndex{Date(2018, 5, 3), 5}), MissingKey);
    CHECK_THROWS_AS(ds.weather_at(SliceIndex{Date(2018, 3, 1), 0}), MissingKey);
    std::int64_t total = 0;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t d = 0; d < 2; ++d)
            for (int k = 0; k < 17; ++k) total += static_cast<std::int64_t>(100 * s + 10 * d + k);
    CHECK(ds.total_flow() == total);
}

TEST_CASE("dataset invariants are enforced") {
    auto flat = [](std::size_t, std::size_t, int) -> std::int64_t { return 1; };
    CHECK_THROWS_AS(testing::make_dataset({2, 1}, 1, flat), InvalidArgument);
    CHECK_THROWS_AS(testing::make_dataset({1, 1}, 1, flat), InvalidArgument);
    CHECK_THROWS_AS(testing::make_dataset({1}, 1, [](std::size_t, std::size_t, int) -> std::int64_t { return -1; }),
                    InvalidArgument);
    CHECK_THROWS_AS(Dataset(60, {1}, Date(2018, 4, 1), 1, std::vector<std::int64_t>(17, 0),
                            std::vector<SliceWeather>(3), {}),
                    CoverageGap);
}

TEST_CASE("error messages name module and operation") {
    try {
        slice_of(Date(2018, 4, 1), ClockTime{0}, 60);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.module() == "core_model");
        CHECK(e.operation() == "slice_of");
        CHECK(std::string(e.what()).rfind("core_model.slice_of: ", 0) == 0);
    }
}
