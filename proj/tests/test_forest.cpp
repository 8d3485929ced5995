#include <doctest.h>

#include "fkexp/forest.hpp"
#include "fkexp/genfunc.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace fkexp;

namespace {

// every map sequence with constant profile q over n+2 levels
std::vector<MapSeq> all_mapseqs(int n, int q) {
    std::vector<MapSeq> out;
    const int slots = q * (n + 1);
    std::vector<int> digits(slots, 1);
    while (true) {
        std::vector<std::vector<int>> maps(n + 1, std::vector<int>(q));
        for (int i = 0; i < slots; ++i) maps[i / q][i % q] = digits[i];
        out.emplace_back(MultiIndex::constant(n + 2, q), maps);
        int i = 0;
        while (i < slots && digits[i] == q) digits[i++] = 1;
        if (i == slots) break;
        ++digits[i];
    }
    return out;
}

std::vector<int> random_perm(int q, std::mt19937& rng) {
    std::vector<int> p(q);
    std::iota(p.begin(), p.end(), 1);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

}  // namespace

TEST_CASE("forest_of small cases") {
    CHECK(forest_of(MapSeq::identity(0, 2)) == Forest::parse("(())(())"));
    MapSeq constant(MultiIndex{2, 2}, {{1, 1}});
    Forest f = forest_of(constant);
    CHECK(f == Forest{{Tree::parse("(()())"), Tree::parse("()")}});
    CHECK(f.code() == "(()())()");
}

TEST_CASE("forest_of is constant on orbits") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        int q = 1 + rng() % 4, n = rng() % 4;
        std::vector<std::vector<int>> maps(n + 1, std::vector<int>(q));
        for (auto& m : maps)
            for (auto& v : m) v = 1 + rng() % q;
        MapSeq a(MultiIndex::constant(n + 2, q), maps);
        std::vector<std::vector<int>> perms;
        for (int k = 0; k < n + 2; ++k) perms.push_back(random_perm(q, rng));
        CHECK(forest_of(a.act(perms)) == forest_of(a));
    }
}

TEST_CASE("planar representatives") {
    CHECK(planar_mapseq(Forest::parse("(())(())")).maps() == std::vector<std::vector<int>>{{1, 2}});
    CHECK(planar_mapseq(Forest::parse("(()())()")).maps() == std::vector<std::vector<int>>{{1, 1}});
    for (auto& o : enumerate_orbits(1, 3)) {
        MapSeq a = planar_mapseq(o.forest);
        CHECK(forest_of(a) == o.forest);
        for (auto& m : a.maps()) CHECK(std::is_sorted(m.begin(), m.end()));
    }
}

TEST_CASE("root removal") {
    CHECK(remove_roots(Forest{{Tree::chain(3)}}) == Forest{{Tree::chain(2)}});
    CHECK(remove_roots(Forest{{Tree::chain(0)}}).empty());
    CHECK(remove_roots(Forest::parse("(()())")) == Forest::parse("()()"));
    CHECK(Forest().height() == -1);
    CHECK(Forest().profile().empty());
    for (auto& o : enumerate_orbits(1, 3)) {
        Forest b = remove_roots(o.forest);
        CHECK(b.profile() == o.forest.profile().shift());
        CHECK(b.height() == o.forest.height() - 1);
    }
}

TEST_CASE("symmetry multisets") {
    Forest chains;
    for (int i = 0; i < 3; ++i) chains = chains * Forest{{Tree::chain(2)}};
    CHECK(root_symmetry_multiset(chains) == std::vector<int>{3});
    CHECK(symmetry_multiset(chains) == std::vector<int>{1, 1, 1});
    Forest tt = Forest::parse("(())(())()");
    CHECK(root_symmetry_multiset(tt) == std::vector<int>{1, 2});
}

TEST_CASE("jungle counts") {
    for (int n = 0; n <= 2; ++n)
        for (int q = 1; q <= 4; ++q) {
            Forest chains;
            for (int i = 0; i < q; ++i) chains = chains * Forest{{Tree::chain(n + 1)}};
            BigInt expect = 1;
            for (int k = 0; k <= n; ++k) expect *= factorial(q);
            CHECK(count_jungles(chains) == expect);
        }
    // a single binary coalescence at level k
    for (int n = 0; n <= 2; ++n)
        for (int q = 2; q <= 4; ++q)
            for (int k = 0; k <= n; ++k) {
                std::vector<std::vector<int>> maps(n + 1);
                for (int j = 0; j <= n; ++j) {
                    maps[j].resize(q);
                    std::iota(maps[j].begin(), maps[j].end(), 1);
                }
                maps[k][1] = 1;
                Forest f = forest_of(MapSeq(MultiIndex::constant(n + 2, q), maps));
                BigInt expect = q * (q - 1) / 2;
                for (int j = 0; j <= n; ++j) expect *= factorial(q);
                CHECK(count_jungles(f) == expect);
            }
    CHECK(count_jungles(Forest::parse("(()())()")) == 2);
}

TEST_CASE("brute-force orbits") {
    CHECK(brute_force_orbit_count(MapSeq::identity(0, 2)) == 2);
    BigInt total = 0;
    std::set<Forest> seen;
    for (auto& a : all_mapseqs(0, 3)) {
        if (seen.insert(forest_of(a)).second) total += brute_force_orbit_count(a);
    }
    CHECK(total == 27);
    // every sequence of A_{1,3}: orbit size is #(forest_of(a)); class formula
    std::map<Forest, BigInt> cache;
    for (auto& a : all_mapseqs(1, 3)) {
        Forest f = forest_of(a);
        auto it = cache.find(f);
        if (it == cache.end()) {
            OrbitStats st = brute_force_orbit(a);
            CHECK(st.orbit_size == count_jungles(f));
            CHECK(st.orbit_size * st.stabilizer_size == factorial(3) * factorial(3) * factorial(3));
            cache.emplace(f, st.orbit_size);
        }
    }
    Caps tiny;
    tiny.group = 10;
    CHECK_THROWS_AS(brute_force_orbit(MapSeq::identity(1, 3), tiny), CapExceeded);
}

TEST_CASE("coalescence consistency") {
    for (int n = 0; n <= 2; ++n)
        for (auto& a : all_mapseqs(n, 3)) {
            Forest f = forest_of(a);
            CHECK(a.coalescence_degree() == f.coalescence_degree());
            CHECK(a.image_sizes() == f.image_sizes());
            CHECK(f.profile().shift() - f.coalescence() == a.image_sizes());
        }
}

TEST_CASE("forest enumeration") {
    for (int m = 1; m <= 6; ++m) CHECK(enumerate_forests(MultiIndex{m}).size() == 1);
    CHECK(enumerate_forests(MultiIndex{2, 2}).size() == 2);
    CHECK_THROWS(enumerate_forests(MultiIndex{2, 0, 1}));
    // cross-check against the generating-function recursion
    std::function<void(std::vector<int>&, int)> go = [&](std::vector<int>& p, int left) {
        if (!p.empty() && p.size() <= 4) {
            MultiIndex mp(p);
            auto fs = enumerate_forests(mp);
            CHECK(BigInt(fs.size()) == count_forests(mp));
            std::set<Forest> uniq(fs.begin(), fs.end());
            CHECK(uniq.size() == fs.size());
            for (auto& f : fs) CHECK(f.profile() == mp);
        }
        if (p.size() == 4) return;
        for (int v = 1; v <= left; ++v) {
            p.push_back(v);
            go(p, left - v);
            p.pop_back();
        }
    };
    std::vector<int> p;
    go(p, 8);
    Caps tiny;
    tiny.forests = 3;
    CHECK_THROWS_AS(enumerate_forests(MultiIndex{3, 3, 3}, tiny), CapExceeded);
}

TEST_CASE("orbit enumeration") {
    auto o = enumerate_orbits(0, 2);
    REQUIRE(o.size() == 2);
    CHECK(o[0].count == 2);
    CHECK(o[1].count == 2);
    for (int n = 0; n <= 3; ++n)
        for (int q = 1; q <= 3; ++q) {
            auto triv = enumerate_orbits(n, q, MultiIndex::zeros(n + 1));
            REQUIRE(triv.size() == 1);
            BigInt e = 1;
            for (int k = 0; k <= n; ++k) e *= factorial(q);
            CHECK(triv[0].count == e);
        }
    for (int n = 0; n <= 2; ++n)
        for (int q = 1; q <= 3; ++q) {
            BigInt total = 0;
            for (auto& x : enumerate_orbits(n, q)) total += x.count;
            BigInt e = 1;
            for (int k = 0; k < q * (n + 1); ++k) e *= q;
            CHECK(total == e);
        }
}
