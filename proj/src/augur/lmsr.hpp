#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace augur::lmsr {

/// Outstanding share quantities for one outcome set plus the loss limit.
///
/// Invariants (checked on construction): loss_limit > 0 and finite, at
/// least two outcomes, every quantity finite and non-negative.
class LmsrState {
public:
    LmsrState(std::vector<double> quantities, double loss_limit);

    /// All-zero state with `outcomes` outcomes.
    static LmsrState empty(size_t outcomes, double loss_limit);

    std::span<const double> quantities() const { return q_; }
    double quantity(size_t i) const { return q_.at(i); }
    double loss_limit() const { return loss_limit_; }
    size_t outcomes() const { return q_.size(); }

    /// New state with q_k += delta. Throws std::domain_error on oversell.
    LmsrState after_trade(size_t outcome, double delta) const;

private:
    std::vector<double> q_;
    double loss_limit_;
};

/// C(q) = l * log(sum_j exp(q_j / l)), evaluated with a max shift.
double cost(const LmsrState& state);

/// exp(q_i/l) / sum_j exp(q_j/l). Throws std::out_of_range for a bad index.
double price(const LmsrState& state, size_t outcome);
std::vector<double> prices(const LmsrState& state);

/// C(q + x e_k) - C(q). Positive for buys, negative for sells; pure quote.
double trade_cost(const LmsrState& state, size_t outcome, double shares);

double binary_cost(double q1, double q2, double loss_limit);

/// Worst-case subsidy l * log(n_out); also the required market funding.
double max_loss(double loss_limit, double n_out);

/// Piecewise-constant share density over [lower, upper].
///
/// `edges` holds bins+1 strictly increasing points with edges.front() ==
/// lower and edges.back() == upper; density[b] applies on [edges[b], edges[b+1]).
struct ScalarMarketSpec {
    double lower = 0.0;
    double upper = 1.0;
    std::vector<double> edges;
    std::vector<double> density;

    static ScalarMarketSpec uniform(double lower, double upper, size_t bins);

    size_t bins() const { return density.size(); }
    double bin_center(size_t b) const { return 0.5 * (edges.at(b) + edges.at(b + 1)); }
    /// Index of the bin containing x (x == upper maps to the last bin).
    size_t bin_of(double x) const;
    void validate() const;
};

/// l * log(integral_a^b exp(q(x)/l) dx) for a binned density. Each bin is
/// integrated exactly, so the sum is the composite quadrature on the grid.
double scalar_cost(const ScalarMarketSpec& spec, double loss_limit);

/// Same functional for an arbitrary density q(x), integrated by adaptive
/// Simpson refinement in shifted-exponent space until the relative error
/// estimate is below `rel_tol`.
double scalar_cost(const std::function<double(double)>& density, double lower, double upper, double loss_limit,
    double rel_tol = 1e-8);

}  // namespace augur::lmsr
