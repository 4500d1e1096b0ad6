#include <doctest.h>

#include <random>

#include "augur/consensus.hpp"

using namespace augur;
using namespace augur::consensus;

namespace {

EventScale binary()
{
    return {};
}

EventScale categorical(size_t n)
{
    EventScale s;
    s.kind = EventScale::Kind::Categorical;
    s.categories = n;
    return s;
}

EventScale scalar(double lo, double hi)
{
    EventScale s;
    s.kind = EventScale::Kind::Scalar;
    s.lower = lo;
    s.upper = hi;
    return s;
}

ReportMatrix matrix(std::vector<int64_t> rep, std::vector<EventScale> scales, std::vector<std::vector<Entry>> rows)
{
    ReportMatrix m;
    for (size_t i = 0; i < rep.size(); ++i) {
        m.reporters.push_back("r" + std::to_string(i));
        m.reputation.push_back(Amount::coins(rep[i]));
    }
    m.scales = std::move(scales);
    m.entries = std::move(rows);
    return m;
}

Entry v(double x)
{
    return Entry::of(x);
}

const Entry NR = Entry::no_report();
const Entry INV = Entry::invalid();

std::vector<std::string> texts(const std::vector<Amount>& a)
{
    std::vector<std::string> out;
    for (auto x : a)
        out.push_back(x.to_string());
    return out;
}

Eigen::MatrixXd brute_covariance(const Eigen::MatrixXd& c, const Eigen::VectorXd& w)
{
    const auto n = c.rows(), m = c.cols();
    double R = 0, R2 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        R += w(i);
        R2 += w(i) * w(i);
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            double acc = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                acc += w(i) * c(i, a) * c(i, b);
            s(a, b) = R / (R * R - R2) * acc;
        }
    return s;
}

}  // namespace

TEST_CASE("centering")
{
    auto m = matrix({1, 1}, {binary()}, {{v(1)}, {v(0)}});
    auto c = center(m);
    CHECK(c.values(0, 0) == 0.5);
    CHECK(c.values(1, 0) == -0.5);

    m = matrix({3, 1}, {binary()}, {{v(1)}, {v(0)}});
    c = center(m);
    CHECK(c.column_mean(0) == 0.75);
    CHECK(c.values(0, 0) == 0.25);
    CHECK(c.values(1, 0) == -0.75);

    m = matrix({5, 2, 7}, {binary(), scalar(0, 10)}, {{v(1), v(3)}, {v(1), v(3)}, {v(1), v(3)}});
    CHECK(center(m).values.isZero(0.0));

    m = matrix({2, 2}, {binary(), binary()}, {{v(1), NR}, {v(0), NR}});
    c = center(m);
    CHECK(c.unresolvable[1]);
    CHECK_FALSE(c.unresolvable[0]);

    m = matrix({3, 1}, {binary()}, {{INV}, {v(1)}});
    c = center(m);
    CHECK(c.filled(0, 0) == 0.5);

    CHECK_THROWS_AS(center(matrix({1}, {binary()}, {{v(1)}})), ConsensusError);
    CHECK_THROWS_AS(center(matrix({1, 1}, {}, {{}, {}})), ConsensusError);
    CHECK_THROWS_AS(center(matrix({1, 1}, {binary()}, {{v(2)}, {v(0)}})), ConsensusError);
}

TEST_CASE("weighted covariance")
{
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, 0, 1;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    const Eigen::MatrixXd c = center_dense(x, ones);
    const Eigen::MatrixXd s = weighted_covariance(c, ones);
    CHECK(s(0, 0) == doctest::Approx(0.5));
    CHECK(s(1, 1) == doctest::Approx(0.5));
    CHECK(s(0, 1) == doctest::Approx(-0.5));

    Eigen::MatrixXd same(3, 2);
    same << 0.2, 0.7, 0.2, 0.7, 0.2, 0.7;
    CHECK(weighted_covariance(center_dense(same, Eigen::VectorXd::Ones(3)), Eigen::VectorXd::Ones(3)).isZero(1e-15));

    Eigen::VectorXd single(2);
    single << 4, 0;
    CHECK_THROWS_AS(weighted_covariance(c, single), ConsensusError);

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd r(5, 4);
        Eigen::VectorXd w(5);
        for (Eigen::Index i = 0; i < 5; ++i) {
            w(i) = 0.1 + 10 * u(rng);
            for (Eigen::Index j = 0; j < 4; ++j)
                r(i, j) = u(rng);
        }
        const Eigen::MatrixXd cc = center_dense(r, w);
        CHECK((weighted_covariance(cc, w) - brute_covariance(cc, w)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("decomposition")
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 3;
    const auto dec = decompose(d);
    CHECK(dec.eigenvalues(0) == doctest::Approx(3));
    CHECK(dec.eigenvalues(1) == doctest::Approx(1));
    CHECK(std::fabs(dec.eigenvectors(1, 0)) == doctest::Approx(1));
    CHECK(std::fabs(dec.eigenvectors(0, 1)) == doctest::Approx(1));

    const auto z = decompose(Eigen::MatrixXd::Zero(3, 3));
    CHECK(z.eigenvalues.isZero(0.0));
    CHECK((z.eigenvectors.transpose() * z.eigenvectors - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
          1e-12);

    Eigen::MatrixXd ns(2, 2);
    ns << 1, 2, 0, 1;
    CHECK_THROWS_AS(decompose(ns), ConsensusError);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 30; ++t) {
        Eigen::MatrixXd a(6, 6);
        for (Eigen::Index i = 0; i < 6; ++i)
            for (Eigen::Index j = 0; j < 6; ++j)
                a(i, j) = u(rng);
        const Eigen::MatrixXd s = a + a.transpose();
        const auto e = decompose(s);
        const Eigen::MatrixXd back = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
        CHECK((back - s).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((e.eigenvectors.transpose() * e.eigenvectors - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <=
              1e-10);
        for (Eigen::Index k = 1; k < 6; ++k)
            CHECK(e.eigenvalues(k - 1) >= e.eigenvalues(k));
    }
}

TEST_CASE("component selection")
{
    auto sel = select_components(Eigen::Vector3d(1, 0, 0), 0.9);
    CHECK(sel.count == 1);
    CHECK(sel.cumulative[0] == 1.0);
    sel = select_components(Eigen::Vector3d(2, 1, 1), 0.5);
    CHECK(sel.count == 1);
    CHECK(sel.cumulative[0] == 0.5);
    sel = select_components(Eigen::Vector3d(2, 1, 1), 0.75);
    CHECK(sel.count == 2);
    CHECK(select_components(Eigen::Vector3d(0, 0, 0), 0.9).degenerate);
    CHECK_THROWS(select_components(Eigen::Vector3d(1, 0, 0), 0.0));
    CHECK_THROWS(select_components(Eigen::Vector3d(1, 0, 0), 1.5));
}

TEST_CASE("coordination vector")
{
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
    ComponentSelection one;
    one.count = 1;
    CHECK(coordination_vector(s, one) == Eigen::Vector3d(1, 0, 0));
    ComponentSelection two;
    two.count = 2;
    CHECK(coordination_vector(s, two).squaredNorm() == doctest::Approx(2.0));
    ComponentSelection degenerate;
    degenerate.degenerate = true;
    CHECK_THROWS(coordination_vector(s, degenerate));
}

TEST_CASE("resolution and dead zone")
{
    CHECK(resolve(binary(), 0.66, 0, 0.15).value == 1.0);
    CHECK(resolve(binary(), 0.4, 0, 0.15).invalid);
    CHECK(resolve(binary(), 0.34, 0, 0.15).value == 0.0);
    CHECK(resolve(binary(), 0.35, 0, 0.15).value == 0.0);
    CHECK(resolve(binary(), 0.9, 0.6, 0.15).invalid);
    CHECK(resolve(categorical(3), 0.9027471206423051, 0, 0.15).value == 2.0);
    CHECK(resolve(categorical(3), 0.75, 0, 0.15).invalid);
    CHECK(resolve(scalar(0, 200), 0.6, 0, 0.15).value == doctest::Approx(120.0));
}

TEST_CASE("unanimous reports are a fixed point")
{
    const auto m = matrix({40, 35, 25}, {binary(), categorical(4), scalar(-10, 10)},
        {{v(1), v(2), v(3.5)}, {v(1), v(2), v(3.5)}, {v(1), v(2), v(3.5)}});
    const auto r = run(m);
    CHECK(r.reputation == m.reputation);
    CHECK(r.outcomes[0].value == 1.0);
    CHECK(r.outcomes[1].value == 2.0);
    CHECK(r.outcomes[2].value == 3.5);
    CHECK(r.diagnostics.degenerate);
}

TEST_CASE("an absent reporter loses reputation to those who reported")
{
    const auto m = matrix({50, 30, 20}, {binary()}, {{v(1)}, {v(1)}, {NR}});
    const auto r = run(m);
    CHECK(texts(r.reputation) == std::vector<std::string>{"52.50000000", "31.50000000", "16.00000000"});
    CHECK(r.outcomes[0].value == 1.0);
}

TEST_CASE("a dissenter loses reputation")
{
    auto r = run(matrix({40, 35, 25}, {binary()}, {{v(1)}, {v(1)}, {v(0)}}));
    CHECK(texts(r.reputation) == std::vector<std::string>{"42.66666667", "37.33333333", "20.00000000"});
    CHECK(r.outcomes[0].value == 1.0);

    std::vector<std::vector<Entry>> rows;
    const std::vector<double> truth{1, 0, 1, 1, 0};
    for (int i = 0; i < 3; ++i) {
        std::vector<Entry> row;
        for (double t : truth)
            row.push_back(v(t));
        rows.push_back(row);
    }
    std::vector<Entry> lone;
    for (double t : truth)
        lone.push_back(v(1 - t));
    rows.push_back(lone);
    r = run(matrix({25, 25, 25, 25}, std::vector<EventScale>(5, binary()), rows));
    CHECK(r.reputation[3] < Amount::coins(25));
    for (int i = 0; i < 3; ++i)
        CHECK(r.reputation[i] > Amount::coins(25));
    for (size_t j = 0; j < truth.size(); ++j)
        CHECK(r.outcomes[j].value == truth[j]);
}

TEST_CASE("mixed matrix matches the independent oracle")
{
    const auto m = matrix({30, 25, 20, 15, 10}, {binary(), categorical(3), scalar(0, 200), binary()},
        {{v(1), v(2), v(120), v(0)},
            {v(1), v(2), v(118), v(0)},
            {v(1), v(1), v(130), NR},
            {v(0), v(0), v(40), v(1)},
            {INV, v(2), v(121), v(0)}});
    const auto r = run(m);
    const std::vector<double> eig{0.48123563415665555, 0.04885258402606522, 0.006932761875301692,
        9.342522622606475e-06};
    for (size_t k = 0; k < eig.size(); ++k)
        CHECK(r.diagnostics.eigenvalues[k] == doctest::Approx(eig[k]).epsilon(1e-10));
    CHECK(r.diagnostics.components == 2);
    const std::vector<double> conf{1.0, 0.9978342423062976, 0.7412735461318489, 0.0, 0.6449917164617143};
    for (size_t i = 0; i < conf.size(); ++i)
        CHECK(r.diagnostics.conformity[i] == doctest::Approx(conf[i]).epsilon(1e-10));
    CHECK(texts(r.reputation) ==
          std::vector<std::string>{"31.87182113", "26.54564389", "19.89011517", "12.00000000", "9.69241981"});
    CHECK(r.outcomes[0].unit_mean == doctest::Approx(0.9576895048291616).epsilon(1e-12));
    CHECK(r.outcomes[0].value == 1.0);
    CHECK(r.outcomes[1].unit_mean == doctest::Approx(0.9027471206423051).epsilon(1e-12));
    CHECK(r.outcomes[1].value == 2.0);
    CHECK(r.outcomes[2].unit_mean == doctest::Approx(0.6068755709416395).epsilon(1e-12));
    CHECK(r.outcomes[2].value == doctest::Approx(121.3751141883279).epsilon(1e-12));
    CHECK(r.outcomes[3].value == 0.0);

    const Eigen::MatrixXd sigma = weighted_covariance(r.centered, m.weights());
    const double s00 = 0.17419354838709677, s03 = -0.14516129032258066, s22 = 0.02815935483870968;
    CHECK(sigma(0, 0) == doctest::Approx(s00).epsilon(1e-12));
    CHECK(sigma(0, 3) == doctest::Approx(s03).epsilon(1e-12));
    CHECK(sigma(2, 2) == doctest::Approx(s22).epsilon(1e-12));
}

TEST_CASE("permuting reporters permutes the result")
{
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int t = 0; t < 20; ++t) {
        std::vector<int64_t> rep;
        std::vector<std::vector<Entry>> rows;
        for (int i = 0; i < 5; ++i) {
            rep.push_back(1 + int64_t(rng() % 50));
            std::vector<Entry> row;
            for (int j = 0; j < 3; ++j)
                row.push_back(v(bit(rng)));
            rows.push_back(row);
        }
        const auto a = run(matrix(rep, std::vector<EventScale>(3, binary()), rows));
        std::vector<int64_t> rep2(rep.rbegin(), rep.rend());
        std::vector<std::vector<Entry>> rows2(rows.rbegin(), rows.rend());
        const auto b = run(matrix(rep2, std::vector<EventScale>(3, binary()), rows2));
        for (size_t j = 0; j < 3; ++j) {
            CHECK(a.outcomes[j].invalid == b.outcomes[j].invalid);
            CHECK(a.outcomes[j].unit_mean == doctest::Approx(b.outcomes[j].unit_mean).epsilon(1e-9));
        }
        for (size_t i = 0; i < 5; ++i)
            CHECK(std::llabs(a.reputation[i].units() - b.reputation[4 - i].units()) <= 1);
    }
}

TEST_CASE("reputation is conserved to the base unit")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 100; ++t) {
        const size_t n = 2 + rng() % 5, m = 1 + rng() % 5;
        std::vector<int64_t> rep;
        std::vector<std::vector<Entry>> rows;
        for (size_t i = 0; i < n; ++i) {
            rep.push_back(1 + int64_t(rng() % 1000));
            std::vector<Entry> row;
            for (size_t j = 0; j < m; ++j) {
                const double r = u(rng);
                row.push_back(r < 0.1 ? NR : r < 0.15 ? INV : v(double(rng() % 2)));
            }
            rows.push_back(row);
        }
        const auto res = run(matrix(rep, std::vector<EventScale>(m, binary()), rows));
        Amount before, after;
        for (auto x : rep)
            before += Amount::coins(x);
        for (auto x : res.reputation)
            after += x;
        CHECK(before == after);
    }
}

TEST_CASE("apportion")
{
    CHECK(texts(apportion({1, 1, 1}, Amount::from_units(100))) ==
          std::vector<std::string>{"0.00000034", "0.00000033", "0.00000033"});
    CHECK(texts(apportion({2, 1}, Amount::from_units(1))) == std::vector<std::string>{"0.00000001", "0.00000000"});
    CHECK(apportion({}, Amount::coins(1)).empty());
    CHECK_THROWS(apportion({0, 0}, Amount::coins(1)));
    CHECK_THROWS(apportion({-1, 2}, Amount::coins(1)));
}
