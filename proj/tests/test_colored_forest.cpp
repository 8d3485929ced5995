#include <doctest.h>

#include "fkexp/colored_forest.hpp"

#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace fkexp;

namespace {

std::vector<ColoredMapSeq> all_colored(const ColoredProfile& p) {
    std::vector<int> dom, cod;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        dom.push_back(p[k + 1].white + p[k + 1].black);
        cod.push_back(p[k].black);
    }
    int slots = std::accumulate(dom.begin(), dom.end(), 0);
    std::vector<int> digits(slots, 1);
    std::vector<ColoredMapSeq> out;
    while (true) {
        std::vector<std::vector<int>> maps;
        int at = 0;
        for (std::size_t k = 0; k < dom.size(); ++k) {
            maps.emplace_back(digits.begin() + at, digits.begin() + at + dom[k]);
            at += dom[k];
        }
        out.emplace_back(p, maps);
        int i = 0, lvl = 0, off = 0;
        while (i < slots) {
            while (i >= off + dom[lvl]) off += dom[lvl++];
            if (digits[i] < cod[lvl]) break;
            digits[i++] = 1;
        }
        if (i == slots) break;
        ++digits[i];
    }
    return out;
}

std::vector<int> shuffled(int m, std::mt19937& rng) {
    std::vector<int> v(m);
    std::iota(v.begin(), v.end(), 1);
    std::shuffle(v.begin(), v.end(), rng);
    return v;
}

const std::vector<ColoredProfile> kProfiles = {
    path_profile(MultiIndex{1, 1}),
    path_profile(MultiIndex{2}),
    path_profile(MultiIndex{0, 2}),
    path_profile(MultiIndex{1, 2}),
    path_profile(MultiIndex{2, 1}),
    path_profile(MultiIndex{1, 0, 1}),
    ColoredProfile{{0, 2}, {1, 2}, {1, 1}},
};

}  // namespace

TEST_CASE("path profiles") {
    auto p = path_profile(MultiIndex{1, 2});
    REQUIRE(p.size() == 3);
    CHECK(p[0] == ColorCount{0, 3});
    CHECK(p[1] == ColorCount{1, 2});
    CHECK(p[2] == ColorCount{2, 0});
    auto t = path_tail(MultiIndex{2, 0, 3});
    CHECK(t == MultiIndex{5, 3, 3, 0});
    for (std::size_t m = 0; m + 1 < t.size(); ++m) CHECK(t[m] == MultiIndex{2, 0, 3}[m] + t[m + 1]);
}

TEST_CASE("colored trees") {
    CHECK_THROWS(ColoredTree::parse("(w(b))"));
    CHECK_THROWS(ColoredForest::parse("(x)"));
    auto chain = colored_forest_of(ColoredMapSeq({{0, 1}, {0, 1}, {0, 1}}, {{1}, {1}}));
    CHECK(chain.code() == ColoredTree::black_chain(2).code());
    auto two = colored_forest_of(ColoredMapSeq({{0, 1}, {2, 0}}, {{1, 1}}));
    CHECK(two.code() == "(b(w)(w))");
    CHECK(two.trees().size() == 1);
}

TEST_CASE("colored orbit invariance") {
    std::mt19937 rng(11);
    for (auto& p : kProfiles) {
        auto all = all_colored(p);
        for (int trial = 0; trial < 30; ++trial) {
            const auto& a = all[rng() % all.size()];
            std::vector<std::pair<std::vector<int>, std::vector<int>>> s;
            for (auto& c : p) s.push_back({shuffled(c.white, rng), shuffled(c.black, rng)});
            CHECK(colored_forest_of(a.act(s)) == colored_forest_of(a));
        }
    }
}

TEST_CASE("colored jungle counts against brute force") {
    for (auto& p : kProfiles) {
        std::map<ColoredForest, ColoredMapSeq> reps;
        std::map<ColoredForest, long> sizes;
        auto all = all_colored(p);
        CHECK(BigInt(all.size()) == colored_mapseq_total(p));
        for (auto& a : all) {
            auto f = colored_forest_of(a);
            reps.emplace(f, a);
            ++sizes[f];
        }
        BigInt total = 0;
        auto orbits = enumerate_colored_orbits(p);
        CHECK(orbits.size() == reps.size());
        for (auto& o : orbits) {
            REQUIRE(reps.count(o.forest));
            CHECK(o.count == sizes[o.forest]);
            CHECK(brute_force_colored_orbit_count(reps.at(o.forest)) == o.count);
            CHECK(colored_forest_of(planar_colored_mapseq(o.forest, p)) == o.forest);
            total += o.count;
        }
        CHECK(total == colored_mapseq_total(p));
    }
}

TEST_CASE("colored coalescence filter") {
    for (auto& p : kProfiles) {
        auto triv = enumerate_colored_orbits(p, MultiIndex::zeros(p.size() - 1));
        // q'_k >= q_{k+1} + q'_{k+1} for path profiles: bijections exist only
        // when every level keeps its black count
        for (auto& o : triv) CHECK(o.forest.coalescence(p.size()).is_zero());
    }
    auto p = path_profile(MultiIndex{1, 1});
    auto triv = enumerate_colored_orbits(p, MultiIndex::zeros(p.size() - 1));
    REQUIRE(triv.size() == 1);
    CHECK(triv[0].count == count_colored_jungles(triv[0].forest));
}

TEST_CASE("wick forests") {
    WickFamily t{{{0, 0, 0}, 1}};
    auto f = build_wick_forest(t, 0);
    CHECK(f.code() == "(b(w)(w))(b)");
    CHECK_THROWS(build_wick_forest(WickFamily{{{1, 0, 0}, 1}}, 1));
    for (auto q : {MultiIndex{2}, MultiIndex{1, 1}, MultiIndex{4}, MultiIndex{2, 2}, MultiIndex{1, 2, 1}}) {
        const int n = static_cast<int>(q.size()) - 1;
        const auto p = path_profile(q);
        auto fams = wick_families(q);
        std::set<ColoredForest> built;
        for (auto& fam : fams) {
            CHECK(wick_profile(fam, n) == q);
            auto wf = build_wick_forest(fam, n);
            int whites = 0;
            for (auto& c : wf.profile()) whites += c.white;
            long tot = 0;
            for (auto& [k, c] : fam) tot += c;
            CHECK(whites == 2 * tot);
            auto prof = wf.profile();
            prof.resize(p.size());
            CHECK(prof == p);
            // closed-form orbit count
            BigInt num = 1;
            for (auto& c : p) num *= factorial(c.white) * factorial(c.black);
            BigInt den = 1;
            std::vector<int> r(n + 1, 0);
            for (auto& [key, c] : fam) {
                auto [k, l, m] = key;
                r[k] += c;
                den *= factorial(c);
                if (l == m) den *= BigInt(1) << c;
            }
            for (int x : r) den *= factorial(x);
            CHECK(count_colored_jungles(wf) == num / den);
            built.insert(wf);
        }
        CHECK(built.size() == fams.size());
        // the no-trivial-white subset at maximal coalescence is exactly the Wick family
        const long half = q.norm() / 2;
        std::set<ColoredForest> found;
        for (auto& o : enumerate_colored_orbits(p)) {
            if (o.forest.has_trivial_white_tree()) continue;
            if (o.forest.coalescence(p.size()).norm() > half) continue;
            found.insert(o.forest);
        }
        CHECK(found == built);
    }
}
