#include <doctest.h>

#include "tia/errors.hpp"
#include "tia/timeutil.hpp"

using namespace tia;

TEST_CASE("timestamp parse and format round-trip") {
    const char* samples[] = {
        "2019-01-01T00:00:00", "2019-07-15T08:30:00", "2020-02-29T23:59:59",
        "2019-12-31T17:45:30",
    };
    for (const char* s : samples) {
        Minutes t = parse_timestamp(s);
        CHECK(format_timestamp(t) == s);
    }
}

TEST_CASE("timestamp without seconds") {
    CHECK(parse_timestamp("2019-03-04T08:15") == parse_timestamp("2019-03-04T08:15:00"));
}

TEST_CASE("timestamp arithmetic is in minutes") {
    Minutes a = parse_timestamp("2019-03-04T08:00");
    Minutes b = parse_timestamp("2019-03-04T09:30");
    CHECK(b - a == doctest::Approx(90.0));
    Minutes c = parse_timestamp("2019-03-05T08:00");
    CHECK(c - a == doctest::Approx(kMinutesPerDay));
}

TEST_CASE("date helpers") {
    Day d = parse_date("2019-03-04");
    CHECK(format_date(d) == "2019-03-04");
    CHECK(weekday_of(d) == 1);  // a Monday
    CHECK(weekday_of(parse_date("2019-03-10")) == 7);
    CHECK(day_of(parse_timestamp("2019-03-04T23:59:59")) == d);
    CHECK(minute_of_day(parse_timestamp("2019-03-04T06:30")) == doctest::Approx(390.0));
}

TEST_CASE("time of day parser") {
    CHECK(parse_time_of_day("08:30") == doctest::Approx(510.0));
    CHECK(parse_time_of_day("08:30:30") == doctest::Approx(510.5));
    CHECK_THROWS_AS(parse_time_of_day("25:00"), Error);
}

TEST_CASE("malformed inputs are schema errors") {
    for (const char* bad : {"2019-13-01T00:00", "2019-02-30T00:00", "nonsense",
                            "2019-03-04", "2019-03-04T24:00"}) {
        CHECK_THROWS_AS(parse_timestamp(bad), Error);
    }
    CHECK_THROWS_AS(parse_date("2019-99-99"), Error);
    try {
        parse_timestamp("oops");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::schema);
    }
}
