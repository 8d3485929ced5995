#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace fkexp {

using BigInt = mpz_class;
using Rational = mpq_class;

// Finite sequence of nonnegative integers (profiles, coalescence
// sequences, path profiles ...).
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> entries);
    MultiIndex(std::initializer_list<int> entries);

    static MultiIndex constant(std::size_t length, int value);
    static MultiIndex unit(std::size_t length, std::size_t k);
    static MultiIndex zeros(std::size_t length) { return constant(length, 0); }

    std::size_t size() const { return e_.size(); }
    bool empty() const { return e_.empty(); }
    int operator[](std::size_t k) const { return e_[k]; }
    int at(std::size_t k) const;
    void set(std::size_t k, int value);
    const std::vector<int>& entries() const { return e_; }

    long norm() const;
    bool is_zero() const;
    BigInt factorial() const;

    // componentwise order; throws on length mismatch
    bool leq(const MultiIndex& other) const;
    MultiIndex operator+(const MultiIndex& other) const;
    MultiIndex operator-(const MultiIndex& other) const;

    // left shift B(p) = (p_1, p_2, ...) and right extension B^{-1}(p) = (1, p_0, ...)
    MultiIndex shift() const;
    MultiIndex unshift(int head = 1) const;

    std::string to_string() const;

    auto operator<=>(const MultiIndex&) const = default;
    bool operator==(const MultiIndex&) const = default;

private:
    std::vector<int> e_;
};

BigInt factorial(long n);
BigInt binomial(long n, long k);

// Signed Stirling numbers of the first kind, (N)_p = sum_k s(p,k) N^k.
BigInt stirling_first(int p, int k);
// Stirling numbers of the second kind (set partitions of [q] into p blocks).
BigInt stirling_second(int q, int p);

// Largest argument the memo tables accept (default 64).
void set_stirling_cap(int cap);
int stirling_cap();

// N (N-1) ... (N-m+1), any integer N.
BigInt falling_factorial(const BigInt& N, long m);
// (N)_p = prod_k (N)_{p_k}
BigInt falling_factorial(const BigInt& N, const MultiIndex& p);
// (l)_p = prod_k (l_k)_{p_k}
BigInt falling_factorial(const MultiIndex& l, const MultiIndex& p);
// s(l,p) = prod_k s(l_k, p_k)
BigInt stirling_first(const MultiIndex& l, const MultiIndex& p);

// All r with 0 <= r_k <= bound_k and |r| = total, lexicographic.
std::vector<MultiIndex> bounded_compositions(const MultiIndex& bound, long total);

// Exact decimal "num/den" rendering, always with a denominator.
std::string to_string(const Rational& x);
Rational parse_rational(const std::string& text);

}  // namespace fkexp
