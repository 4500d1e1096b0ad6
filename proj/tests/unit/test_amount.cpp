#include <doctest.h>

#include <limits>

#include "augur/amount.hpp"

using augur::Amount;

TEST_CASE("amount parses and prints eight decimals")
{
    CHECK(Amount::parse("27.72588722").units() == 2772588722);
    CHECK(Amount::parse("42").to_string() == "42.00000000");
    CHECK(Amount::parse("-1.5").to_string() == "-1.50000000");
    CHECK(Amount::parse("0.00000001").units() == 1);
    CHECK(Amount::coins(3).to_string() == "3.00000000");
    CHECK(Amount::from_units(-5).to_string() == "-0.00000005");
}

TEST_CASE("amount rejects malformed text")
{
    for (const char* bad : {"", "1.000000001", "abc", "1..2", "1e5", "--1", ".", " 1"})
        CHECK_THROWS(Amount::parse(bad));
}

TEST_CASE("from_double rounds half to even on the base-unit grid")
{
    CHECK(Amount::from_double(2.5e-8).units() == 2);
    CHECK(Amount::from_double(5e-9).units() == 0);
    CHECK(Amount::from_double(1.000000005).units() == 100000000);
    CHECK(Amount::from_double(3.5e-8).units() == 4);
    CHECK(Amount::from_double(27.725887222397812).to_string() == "27.72588722");
    CHECK(Amount::from_double(-1.000000005).units() == -100000000);
    CHECK_THROWS(Amount::from_double(std::numeric_limits<double>::infinity()));
}

TEST_CASE("amount arithmetic is checked")
{
    const Amount big = Amount::from_units(std::numeric_limits<int64_t>::max());
    CHECK_THROWS_AS(big + Amount::from_units(1), std::overflow_error);
    CHECK_THROWS_AS(-big - Amount::from_units(2), std::overflow_error);
    CHECK((Amount::coins(2) - Amount::coins(3)).is_negative());
    CHECK(Amount::coins(1) < Amount::coins(2));
}

TEST_CASE("unit kinds round-trip through text")
{
    for (auto u : {augur::UnitKind::Bitcoin, augur::UnitKind::Shares, augur::UnitKind::Reputation})
        CHECK(augur::parse_unit_kind(augur::to_string(u)) == u);
    CHECK_THROWS(augur::parse_unit_kind("dollars"));
}
