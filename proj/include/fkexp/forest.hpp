#pragma once

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fkexp {

class Forest;

// Leveled rooted tree held by its canonical code: "(" + children + ")",
// children sorted ascending by code.  "()" is the single vertex U_0.
class Tree {
public:
    Tree() : code_("()") {}
    static Tree parse(std::string_view code);
    static Tree from_children(std::vector<Tree> children);
    static Tree chain(int height);  // U_h

    const std::string& code() const { return code_; }
    std::vector<Tree> children() const;
    Forest remove_root() const;  // B(T)
    int height() const;
    MultiIndex profile() const;  // v(T)
    bool is_leaf() const { return code_ == "()"; }

    auto operator<=>(const Tree& o) const { return code_ <=> o.code_; }
    bool operator==(const Tree& o) const { return code_ == o.code_; }

private:
    explicit Tree(std::string code) : code_(std::move(code)) {}
    std::string code_;
};

// Multiset of trees, kept sorted ascending by code.
class Forest {
public:
    Forest() = default;
    explicit Forest(std::vector<Tree> trees);
    static Forest parse(std::string_view code);

    const std::vector<Tree>& trees() const { return trees_; }
    std::vector<std::pair<Tree, int>> normal_form() const;
    std::string code() const;
    std::size_t size() const { return trees_.size(); }
    bool empty() const { return trees_.empty(); }

    int height() const;            // -1 for the empty forest
    MultiIndex profile() const;    // v(f), length height+1
    MultiIndex image_sizes() const;  // |f|_k = vertices at level k with children, k < height
    MultiIndex coalescence() const;  // c(f) = B(v(f)) - |f|
    long coalescence_degree() const;

    Forest operator*(const Forest& other) const;  // multiset union

    auto operator<=>(const Forest& o) const { return code() <=> o.code(); }
    bool operator==(const Forest& o) const { return trees_ == o.trees_; }

private:
    std::vector<Tree> trees_;
};

// (a_0, ..., a_n), a_k : [p_{k+1}] -> [p_k], 1-based.
class MapSeq {
public:
    MapSeq() = default;
    MapSeq(MultiIndex profile, std::vector<std::vector<int>> maps);
    static MapSeq identity(int n, int q);

    const MultiIndex& profile() const { return profile_; }
    const std::vector<std::vector<int>>& maps() const { return maps_; }
    std::size_t num_maps() const { return maps_.size(); }

    MultiIndex image_sizes() const;
    long coalescence_degree() const;
    // s(a) = (s_0 a_0 s_1^{-1}, ..., s_n a_n s_{n+1}^{-1}); perms[k] is a
    // 1-based permutation of [p_k]
    MapSeq act(const std::vector<std::vector<int>>& perms) const;

    std::string to_json() const;  // [[...],[...]]

    auto operator<=>(const MapSeq&) const = default;
    bool operator==(const MapSeq&) const = default;

private:
    MultiIndex profile_;
    std::vector<std::vector<int>> maps_;
};

Forest forest_of(const MapSeq& a);
MapSeq planar_mapseq(const Forest& f);
Forest remove_roots(const Forest& f);

// s(f): disjoint union over trees of the multiplicity multiset of B(T),
// sorted ascending
std::vector<int> symmetry_multiset(const Forest& f);
// s(B^{-1}(f)) = (m_1, ..., m_k)
std::vector<int> root_symmetry_multiset(const Forest& f);

BigInt count_jungles(const Forest& f);

struct OrbitStats {
    BigInt orbit_size;
    BigInt stabilizer_size;
};
OrbitStats brute_force_orbit(const MapSeq& a, const Caps& caps = {});
BigInt brute_force_orbit_count(const MapSeq& a, const Caps& caps = {});

// All forests with v(f) = profile, each once, ascending by code.
std::vector<Forest> enumerate_forests(const MultiIndex& profile, const Caps& caps = {});
BigInt predicted_forest_count(const MultiIndex& profile);

struct ForestOrbit {
    Forest forest;
    BigInt count;  // #(f)
};
// Forests of constant profile (q, ..., q) over n+2 levels with
// c(f) <= max_coal componentwise (max_coal has length n+1).
std::vector<ForestOrbit> enumerate_orbits(int n, int q,
                                          const std::optional<MultiIndex>& max_coal = {},
                                          const Caps& caps = {});

}  // namespace fkexp
