#include <doctest.h>

#include <cmath>
#include <random>

#include "augur/amount.hpp"
#include "augur/lmsr.hpp"

using namespace augur::lmsr;

TEST_CASE("cost at the empty book is the loss bound")
{
    for (size_t n = 2; n <= 16; ++n)
        CHECK(cost(LmsrState::empty(n, 3.5)) == doctest::Approx(3.5 * std::log(double(n))).epsilon(1e-15));
    CHECK(augur::Amount::from_double(cost(LmsrState::empty(2, 40))).to_string() == "27.72588722");
    CHECK(cost(LmsrState({10, 0}, 10)) == doctest::Approx(13.132616875182228).epsilon(1e-14));
    CHECK(cost(LmsrState({10, 3, 7}, 5)) == doctest::Approx(12.926163141838814).epsilon(1e-14));
    CHECK(cost(LmsrState({1000, 0}, 1)) == doctest::Approx(1000.0).epsilon(1e-15));
}

TEST_CASE("state construction rejects bad inputs")
{
    CHECK_THROWS(LmsrState({0, 0}, 0.0));
    CHECK_THROWS(LmsrState({0, 0}, -1.0));
    CHECK_THROWS(LmsrState({0}, 1.0));
    CHECK_THROWS(LmsrState({0, -1}, 1.0));
    CHECK_THROWS(LmsrState({0, NAN}, 1.0));
    CHECK_THROWS(LmsrState({0, 0}, INFINITY));
    CHECK_THROWS(LmsrState::empty(2, 1).after_trade(0, -1));
    CHECK_THROWS_AS(price(LmsrState::empty(2, 1), 2), std::out_of_range);
}

TEST_CASE("prices")
{
    const auto half = prices(LmsrState::empty(2, 7));
    CHECK(half[0] == 0.5);
    CHECK(half[1] == 0.5);
    const double ell = 2.5;
    const auto p = prices(LmsrState({ell * std::log(3.0), 0}, ell));
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
    const auto q = prices(LmsrState({10, 3, 7}, 5));
    CHECK(q[0] == doctest::Approx(0.55697627825785914).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(0.13734865920588347).epsilon(1e-14));
    CHECK(q[2] == doctest::Approx(0.30567506253625740).epsilon(1e-14));
}

TEST_CASE("trade cost")
{
    const auto s = LmsrState::empty(2, 10);
    CHECK(trade_cost(s, 1, 0.0) == 0.0);
    CHECK(trade_cost(s, 1, 10) == doctest::Approx(6.2011450695827752).epsilon(1e-14));
    CHECK(trade_cost(LmsrState::empty(2, 40), 1, 30) == doctest::Approx(17.748953022198185).epsilon(1e-14));
    CHECK(trade_cost(LmsrState({0, 30}, 40), 1, -10) == doctest::Approx(-6.5117608773917305).epsilon(1e-14));
    CHECK_THROWS(trade_cost(s, 0, -1));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 200; ++k) {
        const double ell = 0.1 + 50 * u(rng);
        LmsrState st({ell * 3 * u(rng), ell * 3 * u(rng), ell * 3 * u(rng)}, ell);
        const size_t i = rng() % 3;
        const double x = ell * 2 * u(rng);
        const double there = trade_cost(st, i, x);
        const double back = trade_cost(st.after_trade(i, x), i, -x);
        CHECK(std::fabs(there + back) <= 1e-10);
        CHECK(there > 0);
    }
}

TEST_CASE("binary cost specializes the general cost")
{
    CHECK(binary_cost(0, 0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(binary_cost(5, 5, 2) == doctest::Approx(5 + 2 * std::log(2.0)).epsilon(1e-15));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 500; ++k) {
        const double ell = 0.1 + 99.9 * u(rng);
        const double a = 10 * ell * u(rng), b = 10 * ell * u(rng);
        CHECK(std::fabs(binary_cost(a, b, ell) - cost(LmsrState({a, b}, ell))) <= 1e-12 * (1 + std::fabs(a + b)));
    }
}

TEST_CASE("max loss")
{
    CHECK(augur::Amount::from_double(max_loss(40, 2)).to_string() == "27.72588722");
    CHECK(augur::Amount::from_double(max_loss(1.2, 2)).to_string() == "0.83177662");
    CHECK(max_loss(40, 4) == doctest::Approx(55.451774444795625).epsilon(1e-15));
    for (size_t n = 2; n < 20; ++n)
        CHECK(max_loss(1, double(n)) == doctest::Approx(cost(LmsrState::empty(n, 1))).epsilon(1e-15));
}

TEST_CASE("monotonicity and translation invariance")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 200; ++k) {
        const double ell = 0.5 + 20 * u(rng);
        std::vector<double> q(4);
        for (auto& x : q)
            x = 5 * ell * u(rng);
        const LmsrState st(q, ell);
        const size_t i = rng() % 4;
        const auto before = prices(st);
        const auto after = prices(st.after_trade(i, 0.5 * ell));
        for (size_t j = 0; j < 4; ++j) {
            if (j == i)
                CHECK(after[j] > before[j]);
            else
                CHECK(after[j] < before[j]);
        }
        const double c = 3 * ell * u(rng);
        std::vector<double> shifted = q;
        for (auto& x : shifted)
            x += c;
        const LmsrState sh(shifted, ell);
        CHECK(cost(sh) - cost(st) == doctest::Approx(c).epsilon(1e-12));
        const auto ps = prices(sh);
        for (size_t j = 0; j < 4; ++j)
            CHECK(std::fabs(ps[j] - before[j]) <= 1e-12);
    }
}

TEST_CASE("scalar cost")
{
    auto spec = ScalarMarketSpec::uniform(-3, 5, 64);
    for (auto& d : spec.density)
        d = 2.5;
    CHECK(scalar_cost(spec, 0.7) == doctest::Approx(3.9556090791758851).epsilon(1e-14));

    auto unit = ScalarMarketSpec::uniform(0, 1, 8);
    CHECK(std::fabs(scalar_cost(unit, 3.0)) <= 1e-15);

    ScalarMarketSpec step;
    step.lower = 0;
    step.upper = 10;
    step.edges = {0, 4, 10};
    step.density = {1, 3};
    CHECK(scalar_cost(step, 2) == doctest::Approx(7.0221963197127217).epsilon(1e-14));

    const auto fn = [](double x) { return x < 4 ? 1.0 : 3.0; };
    CHECK(scalar_cost(fn, 0, 10, 2) == doctest::Approx(7.0221963197127217).epsilon(1e-9));

    CHECK_THROWS(ScalarMarketSpec::uniform(1, 1, 4));
    ScalarMarketSpec bad = ScalarMarketSpec::uniform(0, 1, 2);
    bad.density[0] = -1;
    CHECK_THROWS(scalar_cost(bad, 1));
    bad.density[0] = NAN;
    CHECK_THROWS(scalar_cost(bad, 1));
    CHECK(unit.bin_of(1.0) == 7);
    CHECK(unit.bin_of(0.0) == 0);
    CHECK(unit.bin_of(0.5) == 4);
}
