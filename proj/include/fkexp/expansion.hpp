#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/colored_forest.hpp"
#include "fkexp/forest.hpp"
#include "fkexp/model.hpp"
#include "fkexp/tensor.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkexp {

// A refused request (q too small for the closed forms, F not centered, ...).
class ExpansionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// One forest of an expansion: its measure, #(f), and the image sizes
// |f|_k of its maps.
struct ForestTerm {
    std::string code;
    MultiIndex image;
    BigInt count;
    SignedMeasure delta;
};

// The forest sum behind Q^N_{n,q} (uncolored forests) or its path-space
// version (colored forests):
//   exact(N) = sum_f #(f)/(q')_{|f|} prod_k (N)_{|f|_k} N^{-q'_k} Delta^f
// with q'_k the domain size of the k-th map.  Only forests with coalescence
// degree <= max_order are kept; exact() needs the complete sum.
class ForestExpansion {
public:
    static ForestExpansion single(const FKModel& m, int n, int q, int max_order = -1, const Caps& caps = {});
    static ForestExpansion path(const FKModel& m, const MultiIndex& q, int max_order = -1,
                                const Caps& caps = {});

    const Domain& domain() const { return domain_; }
    const std::vector<ForestTerm>& terms() const { return terms_; }
    const MultiIndex& map_sizes() const { return qprime_; }
    int top_order() const { return top_; }
    int max_order() const { return max_order_; }
    long particles() const { return particles_; }

    SignedMeasure derivative(int k) const;
    SignedMeasure exact(long N) const;
    // sum_k N^{-k} derivative(k), over the kept orders
    SignedMeasure polynomial(long N) const;

private:
    Domain domain_;
    MultiIndex qprime_;
    int top_ = 0;
    int max_order_ = 0;
    long particles_ = 0;
    std::vector<ForestTerm> terms_;
    std::vector<std::vector<Rational>> coeffs_;  // per term, per order
};

// ---- single time ------------------------------------------------------------------------

int top_order_Q(int n, int q);  // (q-1)(n+1)

// E((gamma_n^N)^{(x)q}(F)) from the forest sum; F is symmetrized
Rational exact_QN(const FKModel& m, int n, int q, long N, const TensorFunction& F, const Caps& caps = {});
SignedMeasure exact_QN_measure(const FKModel& m, int n, int q, long N, const Caps& caps = {});
SignedMeasure derivative_Q(const FKModel& m, int n, int q, int k, const Caps& caps = {});

// forests of the low-order taxonomy, profile (q,...,q) over n+2 levels
Forest forest_f1(int n, int q, int k);
Forest forest_f2(int n, int q, int k, int variant);          // variant 1, 2
Forest forest_f2(int n, int q, int k, int l, int variant);   // k < l, variant 1..4

struct LowOrders {
    SignedMeasure d0, d1, d2;
};
// Closed forms of the first three coefficients (q >= 4).
LowOrders closed_form_low_orders(const FKModel& m, int n, int q, const Caps& caps = {});

struct WickReport {
    std::vector<std::pair<int, Rational>> low_orders;  // (k, d^k(F)) for the orders that must vanish
    bool vanishing = false;
    std::optional<Rational> leading;     // d^{q/2}(F), generic coefficient
    std::optional<Rational> wick_sum;    // pair-forest sum
    bool matches = false;                // vanishing and (odd, or leading == wick_sum)
};
WickReport wick_Q(const FKModel& m, int n, int q, const TensorFunction& F, const Caps& caps = {});

// the forests f_r of the single-time Wick formula, with q!/(2^{q/2} r!)
std::vector<std::pair<Forest, Rational>> wick_forests(int n, int q, const Caps& caps = {});

// ---- path space ------------------------------------------------------------------------

int top_order_path(const MultiIndex& q);  // ||(q'-1)_+||
Rational path_exact_QN(const FKModel& m, const MultiIndex& q, long N, const TensorFunction& F,
                       const Caps& caps = {});
SignedMeasure path_derivative_Q(const FKModel& m, const MultiIndex& q, int k, const Caps& caps = {});
WickReport path_wick_Q(const FKModel& m, const MultiIndex& q, const TensorFunction& F, const Caps& caps = {});

// ---- reports -----------------------------------------------------------------------------

// Orders with their coefficients (measures, or scalars as arity-0
// measures), optional pairings with F, exact values and residuals.
struct ExpansionReport {
    std::string family;
    SignedMeasure base;
    std::map<int, SignedMeasure> orders;       // k >= 1
    std::map<int, Rational> pairings;          // k >= 0, when F was given
    std::map<long, Rational> exact;            // N -> value by definition (paired with F or scalar)
    std::map<long, Rational> residual;         // N -> exact - (base + sum N^{-k} d^k)
    std::map<long, Rational> oracle_delta;     // N -> exact - particle oracle, when requested
    bool exact_ok() const;                     // every residual and oracle delta is zero
};

ExpansionReport expand_Q(const FKModel& m, int n, int q, const std::vector<long>& Ns,
                         const std::optional<TensorFunction>& F, bool with_oracle, const Caps& caps = {});
ExpansionReport expand_path_Q(const FKModel& m, const MultiIndex& q, const std::vector<long>& Ns,
                              const std::optional<TensorFunction>& F, bool with_oracle, const Caps& caps = {});

// G-bar_k = (eta_k(G_k) - G_k) / gamma_k(G_k)
std::vector<Rational> centered_potential(const FKModel& m, int k);

// E^N_{q,n} = E((1 - gamma_n^N(G_n)/gamma_n(G_n))^q) as sum_k N^{-k} d^k
ExpansionReport centered_moment_expansion(const FKModel& m, int n, int q, const std::vector<long>& Ns,
                                          bool with_oracle, const Caps& caps = {});

// ---- propagation of chaos ----------------------------------------------------------------

// d^k of P^N_{n+1,q}(F) = E((eta_{n+1}^N)^{(.)q}(F)), as a measure on E_{n+1}^q
SignedMeasure derivative_P(const FKModel& m, int n_plus_1, int q, int k, const Caps& caps = {});
// d^k of P~^N_{n+1,q}(F) = E((eta_{n+1}^N)^{(x)q}(F))
SignedMeasure derivative_P_tilde(const FKModel& m, int n_plus_1, int q, int k, const Caps& caps = {});

struct FirstOrderP {
    SignedMeasure generic;        // derivative_P(.., 1)
    SignedMeasure closed;         // the two integral formulas
    SignedMeasure coalescence;    // first piece alone
    bool counterterm_vanishes = false;  // gamma_n^{(x)q} Q^{(x)q}(F-bar) = 0 for every F
    bool matches = false;
};
FirstOrderP first_order_P(const FKModel& m, int n_plus_1, int q, const Caps& caps = {});

// sup |mu(F)| over symmetric eta-centered F with |F| <= 1: a certified lower
// bound from explicit candidates and the total variation as upper bound
struct SeminormInterval {
    Rational lower, upper;
};
SeminormInterval seminorm_interval(const FKModel& m, const SignedMeasure& mu);

struct UstatPoint {
    long N;
    Rational value;   // E((eta_n^N)^{(.)q}(F))
    Rational scaled;  // N^order (value - limit)
};
struct UstatReport {
    bool centered = false;
    int order = 0;          // leading power of 1/N
    Rational limit;         // eta^{(x)q}(F)
    Rational constant;      // coefficient of N^{-order}
    std::vector<UstatPoint> grid;
    bool decay_ok = false;  // |scaled - constant| non-increasing along the grid
};
UstatReport ustat_decay_check(const FKModel& m, int n, int q, const TensorFunction& F,
                              const std::vector<long>& Ns, const Caps& caps = {});

}  // namespace fkexp
