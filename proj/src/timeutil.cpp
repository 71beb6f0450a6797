#include "tia/timeutil.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "tia/errors.hpp"

namespace tia {

namespace {

Day civil_to_day(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw schema_error("invalid calendar date");
    return static_cast<Day>(sys_days{ymd}.time_since_epoch().count());
}

} // namespace

Minutes parse_timestamp(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    int n = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
    if (n < 5) throw schema_error("bad timestamp '" + text + "' (expected YYYY-MM-DDTHH:MM[:SS])");
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59)
        throw schema_error("bad time of day in '" + text + "'");
    Day day = civil_to_day(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return day * kMinutesPerDay + h * 60.0 + mi + s / 60.0;
}

Day parse_date(const std::string& text) {
    int y = 0, mo = 0, d = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%d", &y, &mo, &d) != 3)
        throw schema_error("bad date '" + text + "' (expected YYYY-MM-DD)");
    return civil_to_day(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
}

double parse_time_of_day(const std::string& text) {
    int h = 0, mi = 0, s = 0;
    int n = std::sscanf(text.c_str(), "%d:%d:%d", &h, &mi, &s);
    if (n < 2) throw schema_error("bad time of day '" + text + "' (expected HH:MM[:SS])");
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59)
        throw schema_error("bad time of day '" + text + "'");
    return h * 60.0 + mi + s / 60.0;
}

std::string format_timestamp(Minutes t) {
    Day day = day_of(t);
    double mod = t - day * kMinutesPerDay;
    long total_seconds = std::lround(mod * 60.0);
    if (total_seconds >= 86400) { total_seconds -= 86400; ++day; }
    int h = static_cast<int>(total_seconds / 3600);
    int mi = static_cast<int>((total_seconds / 60) % 60);
    int s = static_cast<int>(total_seconds % 60);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02d", format_date(day).c_str(), h, mi, s);
    return buf;
}

std::string format_date(Day day) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{day}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int weekday_of(Day day) {
    using namespace std::chrono;
    weekday wd{sys_days{days{day}}};
    return static_cast<int>(wd.iso_encoding());
}

int year_of(Day day) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{day}}};
    return static_cast<int>(ymd.year());
}

} // namespace tia
