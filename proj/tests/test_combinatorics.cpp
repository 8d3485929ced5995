#include <doctest.h>

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"

#include <functional>
#include <vector>

using namespace fkexp;

namespace {

// count set partitions of {0..q-1} into exactly p blocks by brute force
long partitions_into(int q, int p) {
    long count = 0;
    std::vector<int> block(q, 0);
    std::function<void(int, int)> go = [&](int i, int used) {
        if (i == q) {
            if (used == p) ++count;
            return;
        }
        for (int b = 0; b <= used && b < p; ++b) {
            block[i] = b;
            go(i + 1, std::max(used, b + 1));
        }
    };
    go(0, 0);
    return count;
}

// s(p,k) by the recurrence, no memo
BigInt s_rec(int p, int k) {
    if (p == 0 && k == 0) return 1;
    if (p == 0 || k == 0) return 0;
    return s_rec(p - 1, k - 1) - BigInt(p - 1) * s_rec(p - 1, k);
}

}  // namespace

TEST_CASE("stirling first kind") {
    for (int q = 0; q <= 8; ++q) CHECK(stirling_first(q, q) == 1);
    CHECK(stirling_first(4, 3) == -6);
    for (int q = 2; q <= 8; ++q) CHECK(stirling_first(q, q - 1) == BigInt(-q * (q - 1) / 2));
    CHECK(stirling_first(4, 2) == 11);
    CHECK(s_rec(4, 2) == 11);
    CHECK(stirling_first(3, 5) == 0);
    CHECK(stirling_first(3, 0) == 0);
    CHECK(stirling_first(0, 0) == 1);
    for (int p = 0; p <= 8; ++p)
        for (int k = 0; k <= 9; ++k) CHECK(stirling_first(p, k) == s_rec(p, k));
}

TEST_CASE("stirling second kind against set partitions") {
    CHECK(stirling_second(3, 2) == 3);
    CHECK(stirling_second(4, 2) == 7);
    CHECK(stirling_second(0, 0) == 1);
    CHECK(stirling_second(2, 3) == 0);
    for (int q = 1; q <= 7; ++q)
        for (int p = 0; p <= q + 1; ++p) CHECK(stirling_second(q, p) == partitions_into(q, p));
}

TEST_CASE("stirling inversion") {
    for (int q = 0; q <= 8; ++q)
        for (long N = 0; N <= 12; ++N) {
            BigInt lhs = 0, pw = 1;
            for (int k = 0; k <= q; ++k) lhs += stirling_second(q, k) * falling_factorial(BigInt(N), k);
            for (int i = 0; i < q; ++i) pw *= N;
            CHECK(lhs == pw);
            BigInt rhs = 0;
            for (int k = 0; k <= q; ++k) {
                BigInt nk = 1;
                for (int i = 0; i < k; ++i) nk *= N;
                rhs += stirling_first(q, k) * nk;
            }
            CHECK(rhs == falling_factorial(BigInt(N), q));
        }
    for (int i = 0; i <= 8; ++i)
        for (int j = 0; j <= 8; ++j) {
            BigInt acc = 0;
            for (int m = 0; m <= 8; ++m) acc += stirling_first(i, m) * stirling_second(m, j);
            CHECK(acc == (i == j ? 1 : 0));
        }
}

TEST_CASE("stirling cap refuses") {
    CHECK_THROWS_AS(stirling_first(200, 3), CapExceeded);
}

TEST_CASE("falling factorials") {
    CHECK(falling_factorial(BigInt(5), 2) == 20);
    CHECK(falling_factorial(BigInt(7), 0) == 1);
    CHECK(falling_factorial(BigInt(-2), 2) == 6);
    CHECK(falling_factorial(BigInt(3), MultiIndex{2, 1}) == 18);
    for (long N = -3; N <= 8; ++N)
        for (long m = 0; m <= 8; ++m)
            CHECK((falling_factorial(BigInt(N), m) == 0) == (N >= 0 && N < m));
}

TEST_CASE("multi-index algebra") {
    MultiIndex p{2, 1};
    CHECK(p.norm() == 3);
    CHECK(p.factorial() == 2);
    CHECK(stirling_first(MultiIndex{3, 3}, MultiIndex{3, 2}) == -3);
    CHECK(MultiIndex{1, 2}.leq(MultiIndex{2, 2}));
    CHECK_FALSE(MultiIndex{2, 2}.leq(MultiIndex{1, 2}));
    CHECK_THROWS(MultiIndex{1, 2}.leq(MultiIndex{1}));
    CHECK_THROWS(stirling_first(MultiIndex{1, 2}, MultiIndex{1}));
    CHECK((MultiIndex{2, 2} - MultiIndex{1, 2}) == MultiIndex{1, 0});
    CHECK_THROWS(MultiIndex{1, 0} - MultiIndex{0, 1});
    CHECK(MultiIndex{1, 2, 3}.shift() == MultiIndex{2, 3});
    CHECK(MultiIndex{2, 3}.unshift() == MultiIndex{1, 2, 3});
    CHECK_THROWS(MultiIndex({1, -1}));
}

TEST_CASE("rational parsing") {
    CHECK(parse_rational("3/6") == Rational(1, 2));
    CHECK(parse_rational("0.25") == Rational(1, 4));
    CHECK(parse_rational("-1.5e-1") == Rational(-3, 20));
    CHECK(to_string(Rational(4, 2)) == "2/1");
    CHECK_THROWS(parse_rational("abc"));
    CHECK_THROWS(parse_rational("1/0"));
}
