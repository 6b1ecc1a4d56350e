#include "distflex/types.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace distflex {

std::string_view role_name(Role r) {
    switch (r) {
        case Role::Manufacturer: return "manufacturer";
        case Role::Distributor: return "distributor";
        case Role::FinalBuyer: return "final_buyer";
    }
    return "?";
}

Role parse_role(std::string_view text) {
    if (text == "manufacturer") return Role::Manufacturer;
    if (text == "distributor") return Role::Distributor;
    if (text == "final_buyer" || text == "final-buyer") return Role::FinalBuyer;
    throw ValidationError("unknown entity role: '" + std::string(text) + "'");
}

// Howard Hinnant's civil-date algorithms.
Day day_from_ymd(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return static_cast<Day>(era * 146097 + static_cast<int>(doe) - 719468);
}

void ymd_from_day(Day z, int& year, int& month, int& day) {
    std::int64_t zz = static_cast<std::int64_t>(z) + 719468;
    const std::int64_t era = (zz >= 0 ? zz : zz - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(zz - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

Day parse_iso_date(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw ValidationError("bad date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    auto num = [&](std::size_t off, std::size_t len, int& out) {
        auto [p, ec] = std::from_chars(text.data() + off, text.data() + off + len, out);
        if (ec != std::errc() || p != text.data() + off + len)
            throw ValidationError("bad date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    };
    num(0, 4, y);
    num(5, 2, m);
    num(8, 2, d);
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw ValidationError("bad date '" + std::string(text) + "' (out-of-range month/day)");
    return day_from_ymd(y, m, d);
}

std::string format_iso_date(Day d) {
    int y, m, dd;
    ymd_from_day(d, y, m, dd);
    std::array<char, 16> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02d", y, m, dd);
    return std::string(buf.data());
}

int year_of_day(Day d) {
    int y, m, dd;
    ymd_from_day(d, y, m, dd);
    return y;
}

}  // namespace distflex
