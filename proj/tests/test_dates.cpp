#include <doctest.h>

#include "epifit/dates.hpp"
#include "epifit/errors.hpp"

using epifit::Date;

TEST_CASE("epoch anchor and known day counts")
{
    CHECK(Date::from_civil(1970, 1, 1).days_since_epoch == 0);
    CHECK(Date::from_civil(1970, 1, 2).days_since_epoch == 1);
    CHECK(Date::from_civil(1969, 12, 31).days_since_epoch == -1);
    // 2000-01-01 is 10957 days after the epoch; +31 (Jan) +29 (leap Feb).
    CHECK(Date::from_civil(2000, 1, 1).days_since_epoch == 10957);
    CHECK(Date::from_civil(2000, 3, 1).days_since_epoch == 11017);
}

TEST_CASE("iso round trip")
{
    for (const char* text : {"1970-01-01", "2024-02-29", "1999-12-31", "2026-08-14", "0001-01-01"}) {
        const Date d = Date::parse_iso(text);
        CHECK(d.to_iso() == text);
    }
}

TEST_CASE("leap handling")
{
    CHECK(Date::from_civil(2024, 3, 1) - Date::from_civil(2024, 2, 29) == 1);
    CHECK(Date::from_civil(2024, 2, 29) - Date::from_civil(2024, 2, 28) == 1);
    // 1900 was not a leap year, 2000 was.
    CHECK_THROWS_AS(Date::parse_iso("1900-02-29"), epifit::ParseError);
    CHECK_NOTHROW(Date::parse_iso("2000-02-29"));
}

TEST_CASE("arithmetic and ordering")
{
    const Date a = Date::parse_iso("2024-01-01");
    const Date b = a + 45;
    CHECK(b.to_iso() == "2024-02-15");
    CHECK(b - a == 45);
    CHECK(a < b);
    CHECK(a + 0 == a);
    CHECK(a + (-1) == Date::parse_iso("2023-12-31"));
}

TEST_CASE("strict parsing")
{
    for (const char* bad : {"", "2024-1-1", "24-01-01", "2024/01/01", "2024-13-01", "2024-00-10",
                            "2024-02-30", "2024-04-31", "2024-01-01x", " 2024-01-01",
                            "2024-01-00", "abcd-ef-gh"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(Date::parse_iso(bad), epifit::ParseError);
    }
}
