#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace fkexp {

struct ColorCount {
    int white = 0;
    int black = 0;
    auto operator<=>(const ColorCount&) const = default;
    bool operator==(const ColorCount&) const = default;
};
// one entry per level
using ColoredProfile = std::vector<ColorCount>;

std::string to_string(const ColoredProfile& p);

// q-bar of a path profile q = (q_0..q_n): level 0 holds |q| blacks, level
// k+1 holds q_k whites and q'_k blacks.
ColoredProfile path_profile(const MultiIndex& q);
// q'_k = sum_{j>k} q_j for k = -1..n (entry k+1 of the result)
MultiIndex path_tail(const MultiIndex& q);

class ColoredForest;

// Vertex code "(b...)" or "(w)"; whites are leaves.
class ColoredTree {
public:
    static ColoredTree parse(std::string_view code);
    static ColoredTree white();
    static ColoredTree black(std::vector<ColoredTree> children = {});
    static ColoredTree black_chain(int height);  // U_k: black vertices on levels 0..k

    const std::string& code() const { return code_; }
    bool is_white() const { return code_ == "(w)"; }
    std::vector<ColoredTree> children() const;
    int height() const;
    ColoredProfile profile() const;

    auto operator<=>(const ColoredTree& o) const { return code_ <=> o.code_; }
    bool operator==(const ColoredTree& o) const { return code_ == o.code_; }

private:
    explicit ColoredTree(std::string c) : code_(std::move(c)) {}
    std::string code_;
};

class ColoredForest {
public:
    ColoredForest() = default;
    explicit ColoredForest(std::vector<ColoredTree> trees);
    static ColoredForest parse(std::string_view code);

    const std::vector<ColoredTree>& trees() const { return trees_; }
    std::vector<std::pair<ColoredTree, int>> normal_form() const;
    std::string code() const;
    bool empty() const { return trees_.empty(); }
    int height() const;
    ColoredProfile profile() const;
    // black vertices with children per level, for levels 0..levels-2
    MultiIndex image_sizes(std::size_t levels) const;
    // (w_{k+1} + b_{k+1}) - |f|_k for k = 0..levels-2
    MultiIndex coalescence(std::size_t levels) const;
    // a tree made of a black chain ending in a white leaf
    bool has_trivial_white_tree() const;

    ColoredForest operator*(const ColoredForest& other) const;
    auto operator<=>(const ColoredForest& o) const { return code() <=> o.code(); }
    bool operator==(const ColoredForest& o) const { return trees_ == o.trees_; }

private:
    std::vector<ColoredTree> trees_;
};

// Per level k a single function on whites(k+1) + blacks(k+1) -> blacks(k),
// whites first, values 1-based.
class ColoredMapSeq {
public:
    ColoredMapSeq() = default;
    ColoredMapSeq(ColoredProfile profile, std::vector<std::vector<int>> maps);

    const ColoredProfile& profile() const { return profile_; }
    const std::vector<std::vector<int>>& maps() const { return maps_; }
    std::vector<int> white_map(std::size_t k) const;
    std::vector<int> black_map(std::size_t k) const;
    MultiIndex image_sizes() const;

    // perms[k] = {white permutation, black permutation} of level k
    ColoredMapSeq act(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& perms) const;

    std::string to_json() const;  // [{"white":[...],"black":[...]}, ...]

    auto operator<=>(const ColoredMapSeq&) const = default;
    bool operator==(const ColoredMapSeq&) const = default;

private:
    ColoredProfile profile_;
    std::vector<std::vector<int>> maps_;
};

ColoredForest colored_forest_of(const ColoredMapSeq& a);
// planar representative over a nominal profile (trailing empty levels allowed)
ColoredMapSeq planar_colored_mapseq(const ColoredForest& f, const ColoredProfile& nominal);
ColoredForest remove_roots(const ColoredForest& f);
std::vector<int> symmetry_multiset(const ColoredForest& f);
std::vector<int> root_symmetry_multiset(const ColoredForest& f);

BigInt count_colored_jungles(const ColoredForest& f);
BigInt colored_mapseq_total(const ColoredProfile& p);  // |A-bar_q-bar|

BigInt brute_force_colored_orbit_count(const ColoredMapSeq& a, const Caps& caps = {});

struct ColoredOrbit {
    ColoredForest forest;
    BigInt count;
};
std::vector<ColoredForest> enumerate_colored_forests(const ColoredProfile& p, const Caps& caps = {});
// max_coal has one entry per map (levels - 1)
std::vector<ColoredOrbit> enumerate_colored_orbits(const ColoredProfile& p,
                                                   const std::optional<MultiIndex>& max_coal = {},
                                                   const Caps& caps = {});

// t_{k,l,m} with 0 <= k <= l <= m <= n
using WickFamily = std::map<std::tuple<int, int, int>, int>;
ColoredTree wick_tree(int k, int l, int m);  // T-bar_{k,l,m}
ColoredForest build_wick_forest(const WickFamily& t, int n);
// path profile q with q_j = sum_t t_{k,l,m}([l=j] + [m=j])
MultiIndex wick_profile(const WickFamily& t, int n);
// all families whose forest has path profile q
std::vector<WickFamily> wick_families(const MultiIndex& q);

}  // namespace fkexp
