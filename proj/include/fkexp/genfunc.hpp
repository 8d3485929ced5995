#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"

#include <map>
#include <vector>

namespace fkexp {

// Truncated sparse power series with integer coefficients.  Exponents are
// MultiIndex values over a fixed variable list (x_0..x_n, optionally
// followed by y_0..y_{n-1}); terms above the bound are dropped.
class SparseSeries {
public:
    SparseSeries() = default;
    // optionally also drop terms whose first `degree_vars` exponents sum
    // above max_degree (-1: no such limit)
    explicit SparseSeries(MultiIndex bound, std::size_t degree_vars = 0, long max_degree = -1);
    static SparseSeries one(MultiIndex bound);
    SparseSeries with_limits() const { return SparseSeries(bound_, degree_vars_, max_degree_); }
    bool fits(const MultiIndex& e) const;

    const MultiIndex& bound() const { return bound_; }
    const std::map<MultiIndex, BigInt>& terms() const { return terms_; }
    BigInt coefficient(const MultiIndex& e) const;
    void add(const MultiIndex& e, const BigInt& c);

    SparseSeries operator*(const SparseSeries& o) const;
    // (1 - x^m)^{-e}
    static SparseSeries geometric(const MultiIndex& m, const BigInt& e, const SparseSeries& like);
    static SparseSeries geometric(const MultiIndex& m, const BigInt& e, const MultiIndex& bound);
    SparseSeries truncate(const MultiIndex& bound) const;
    // sum out the trailing variables starting at index `from` (sets them to 1)
    SparseSeries marginalize(std::size_t from) const;

private:
    MultiIndex bound_;
    std::size_t degree_vars_ = 0;
    long max_degree_ = -1;
    std::map<MultiIndex, BigInt> terms_;
};

// |F_p| by the recursion over multiplicity functions of lower profiles
BigInt count_forests(const MultiIndex& p);

// H^n truncated at `truncation` (n+1 entries) and, if max_vertices >= 0,
// at total degree max_vertices
SparseSeries hilbert_series(int n, const MultiIndex& truncation, long max_vertices = -1);

// C^n(x, y) truncated at x <= truncation (n+1 entries) and y <= y_bound
// (n entries); exponent vectors are x-part followed by y-part.
SparseSeries coalescence_series(int n, const MultiIndex& truncation, const MultiIndex& y_bound,
                                long max_vertices = -1);

// sum_f #(f) x^{v(f)} over profiles p <= truncation with height exactly n
SparseSeries weighted_forest_series(int n, const MultiIndex& truncation, const Caps& caps = {});

}  // namespace fkexp
