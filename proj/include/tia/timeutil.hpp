#ifndef TIA_TIMEUTIL_HPP
#define TIA_TIMEUTIL_HPP

#include <string>
#include <vector>

namespace tia {

// Timestamps are civil (local) time with an explicit date, carried as minutes
// since 1970-01-01T00:00. Days are integer day counts since the same epoch.
// All analytic arithmetic happens in minutes; a service day starts at midnight.
using Minutes = double;
using Day = int;

constexpr double kMinutesPerDay = 1440.0;

// "YYYY-MM-DDTHH:MM[:SS]" -> minutes since epoch. Throws schema_error on bad input.
Minutes parse_timestamp(const std::string& text);

// "YYYY-MM-DD" -> day index since epoch.
Day parse_date(const std::string& text);

// "HH:MM[:SS]" -> minutes since midnight.
double parse_time_of_day(const std::string& text);

std::string format_timestamp(Minutes t);       // rounds to whole seconds
std::string format_date(Day day);

inline Day day_of(Minutes t) { return static_cast<Day>(t >= 0 ? t / kMinutesPerDay : -((-t + kMinutesPerDay - 1) / kMinutesPerDay)); }
inline double minute_of_day(Minutes t) { return t - day_of(t) * kMinutesPerDay; }
inline Minutes day_start(Day day) { return day * kMinutesPerDay; }

// ISO weekday, Monday=1 .. Sunday=7.
int weekday_of(Day day);

// Calendar year the day falls in.
int year_of(Day day);

} // namespace tia

#endif
