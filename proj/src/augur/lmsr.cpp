#include "augur/lmsr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace augur::lmsr {

namespace {

void check_loss_limit(double loss_limit)
{
    if (!std::isfinite(loss_limit) || loss_limit <= 0.0)
        throw std::invalid_argument("loss limit must be positive and finite");
}

// log(sum_j w_j exp(x_j)) with the max-shift; weights default to 1.
double log_sum_exp(std::span<const double> x, std::span<const double> w = {})
{
    const double m = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (size_t j = 0; j < x.size(); ++j)
        sum += (w.empty() ? 1.0 : w[j]) * std::exp(x[j] - m);
    return m + std::log(sum);
}

struct SimpsonPanel {
    double a, b, fa, fm, fb, whole;
};

double adaptive_simpson(const std::function<double(double)>& f, const SimpsonPanel& p, double tol, int depth)
{
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    const double right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    const double delta = left + right - p.whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth - 1);
}

}  // namespace

LmsrState::LmsrState(std::vector<double> quantities, double loss_limit)
    : q_(std::move(quantities)), loss_limit_(loss_limit)
{
    check_loss_limit(loss_limit_);
    if (q_.size() < 2)
        throw std::invalid_argument("an LMSR book needs at least two outcomes");
    for (double q : q_) {
        if (!std::isfinite(q))
            throw std::invalid_argument("non-finite share quantity");
        if (q < 0.0)
            throw std::invalid_argument("negative share quantity");
    }
}

LmsrState LmsrState::empty(size_t outcomes, double loss_limit)
{
    return LmsrState(std::vector<double>(outcomes, 0.0), loss_limit);
}

LmsrState LmsrState::after_trade(size_t outcome, double delta) const
{
    if (outcome >= q_.size())
        throw std::out_of_range("outcome index out of range");
    std::vector<double> next = q_;
    next[outcome] += delta;
    if (next[outcome] < 0.0)
        throw std::domain_error("sell exceeds outstanding shares");
    return LmsrState(std::move(next), loss_limit_);
}

double cost(const LmsrState& state)
{
    const double l = state.loss_limit();
    std::vector<double> scaled(state.quantities().begin(), state.quantities().end());
    for (double& x : scaled)
        x /= l;
    return l * log_sum_exp(scaled);
}

double price(const LmsrState& state, size_t outcome)
{
    if (outcome >= state.outcomes())
        throw std::out_of_range("outcome index out of range");
    return prices(state)[outcome];
}

std::vector<double> prices(const LmsrState& state)
{
    const double l = state.loss_limit();
    const auto q = state.quantities();
    const double m = *std::max_element(q.begin(), q.end());
    std::vector<double> p(q.size());
    double z = 0.0;
    for (size_t j = 0; j < q.size(); ++j) {
        p[j] = std::exp((q[j] - m) / l);
        z += p[j];
    }
    for (double& v : p)
        v /= z;
    return p;
}

double trade_cost(const LmsrState& state, size_t outcome, double shares)
{
    if (!std::isfinite(shares))
        throw std::invalid_argument("non-finite trade size");
    if (outcome >= state.outcomes())
        throw std::out_of_range("outcome index out of range");
    if (state.quantity(outcome) + shares < 0.0)
        throw std::domain_error("sell exceeds outstanding shares");
    if (shares == 0.0)
        return 0.0;
    // C(q + x e_k) - C(q) = l log(1 + p_k (e^{x/l} - 1)); the log1p/expm1
    // form keeps small trades accurate and avoids subtracting two large costs.
    const double l = state.loss_limit();
    const double p = price(state, outcome);
    const double growth = std::expm1(shares / l);
    if (!std::isfinite(growth))
        return cost(state.after_trade(outcome, shares)) - cost(state);
    return l * std::log1p(p * growth);
}

double binary_cost(double q1, double q2, double loss_limit)
{
    return cost(LmsrState({q1, q2}, loss_limit));
}

double max_loss(double loss_limit, double n_out)
{
    check_loss_limit(loss_limit);
    if (!(n_out >= 2.0))
        throw std::invalid_argument("a market needs at least two outcomes");
    return loss_limit * std::log(n_out);
}

ScalarMarketSpec ScalarMarketSpec::uniform(double lower, double upper, size_t bins)
{
    if (bins == 0)
        throw std::invalid_argument("scalar spec needs at least one bin");
    ScalarMarketSpec spec;
    spec.lower = lower;
    spec.upper = upper;
    spec.edges.resize(bins + 1);
    for (size_t b = 0; b <= bins; ++b)
        spec.edges[b] = lower + (upper - lower) * static_cast<double>(b) / static_cast<double>(bins);
    spec.edges.back() = upper;
    spec.density.assign(bins, 0.0);
    spec.validate();
    return spec;
}

size_t ScalarMarketSpec::bin_of(double x) const
{
    if (!(x >= lower && x <= upper))
        throw std::out_of_range("value outside scalar range");
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const auto idx = static_cast<size_t>(std::distance(edges.begin(), it));
    return std::min(idx == 0 ? 0 : idx - 1, bins() - 1);
}

void ScalarMarketSpec::validate() const
{
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
        throw std::invalid_argument("scalar range requires a < b");
    if (density.empty() || edges.size() != density.size() + 1)
        throw std::invalid_argument("scalar grid must have bins+1 edges");
    if (edges.front() != lower || edges.back() != upper)
        throw std::invalid_argument("scalar grid must cover [a, b] exactly");
    for (size_t b = 0; b + 1 < edges.size(); ++b)
        if (!(edges[b] < edges[b + 1]))
            throw std::invalid_argument("scalar grid edges must increase");
    for (double q : density) {
        if (!std::isfinite(q))
            throw std::invalid_argument("non-finite scalar density");
        if (q < 0.0)
            throw std::invalid_argument("negative scalar density");
    }
}

double scalar_cost(const ScalarMarketSpec& spec, double loss_limit)
{
    check_loss_limit(loss_limit);
    spec.validate();
    std::vector<double> exponents(spec.bins());
    std::vector<double> widths(spec.bins());
    for (size_t b = 0; b < spec.bins(); ++b) {
        exponents[b] = spec.density[b] / loss_limit;
        widths[b] = spec.edges[b + 1] - spec.edges[b];
    }
    return loss_limit * log_sum_exp(exponents, widths);
}

double scalar_cost(const std::function<double(double)>& density, double lower, double upper, double loss_limit,
    double rel_tol)
{
    check_loss_limit(loss_limit);
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
        throw std::invalid_argument("scalar range requires a < b");

    // Shift by the sampled maximum so the integrand stays near O(1).
    constexpr int kProbe = 1024;
    double shift = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kProbe; ++i) {
        const double q = density(lower + (upper - lower) * i / kProbe);
        if (!std::isfinite(q))
            throw std::invalid_argument("non-finite scalar density");
        shift = std::max(shift, q / loss_limit);
    }
    auto f = [&](double x) {
        const double q = density(x);
        if (!std::isfinite(q))
            throw std::invalid_argument("non-finite scalar density");
        return std::exp(q / loss_limit - shift);
    };

    // Refine panel by panel on the probe grid; each panel gets a share of
    // the tolerance proportional to its coarse estimate.
    const double h = (upper - lower) / kProbe;
    std::vector<SimpsonPanel> panels;
    panels.reserve(kProbe);
    double coarse = 0.0;
    for (int i = 0; i < kProbe; ++i) {
        const double a = lower + i * h;
        const double b = (i + 1 == kProbe) ? upper : a + h;
        SimpsonPanel p{a, b, f(a), f(0.5 * (a + b)), f(b), 0.0};
        p.whole = (b - a) / 6.0 * (p.fa + 4.0 * p.fm + p.fb);
        coarse += p.whole;
        panels.push_back(p);
    }
    double integral = 0.0;
    for (const auto& p : panels)
        integral += adaptive_simpson(f, p, rel_tol * std::max(p.whole, coarse / kProbe) * 0.1, 40);
    return loss_limit * (shift + std::log(integral));
}

}  // namespace augur::lmsr
