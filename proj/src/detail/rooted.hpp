#pragma once

// Canonical leveled rooted trees as strings.  A vertex is "(" + [color] +
// children + ")" with children sorted ascending by their own code; the
// color character ('b' or 'w') is present only for colored trees.  A forest
// is the ascending concatenation of its tree codes.

#include "fkexp/caps.hpp"
#include "fkexp/combinatorics.hpp"

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fkexp::detail {

// counts per level: [white, black]; uncolored vertices count as black
using LevelCounts = std::vector<std::array<int, 2>>;

std::vector<std::string_view> split_top(std::string_view s);
std::string canonical_tree(std::string_view code, bool colored);
std::vector<std::string> canonical_forest(std::string_view code, bool colored);
std::vector<std::string> children(std::string_view tree, bool colored);
char color_of(std::string_view tree, bool colored);
int tree_height(std::string_view tree, bool colored);

void add_level_counts(std::string_view tree, bool colored, std::size_t level, LevelCounts& out);
// vertices with at least one child, per level
void add_parent_counts(std::string_view tree, bool colored, std::size_t level,
                       std::vector<int>& out);

// multiplicities of equal codes in a sorted list
std::vector<int> multiplicities(const std::vector<std::string>& sorted_codes);
// product over the multiset of factorials
BigInt multiset_factorial(const std::vector<int>& m);

// #(f) = prod_k (counts)! / prod_{i >= -1} s(B^i f)!
BigInt orbit_count(const std::vector<std::string>& forest, bool colored);

// Enumerates forests with a prescribed per-level profile.  Profiles are
// flattened: uncolored [v0, v1, ...], colored [w0, b0, w1, b1, ...].
class Enumerator {
public:
    explicit Enumerator(bool colored) : colored_(colored) {}

    BigInt count(std::vector<int> profile);
    // each forest is its sorted list of tree codes
    const std::vector<std::vector<std::string>>& forests(std::vector<int> profile);

    std::vector<int> trim(std::vector<int> p) const;
    bool valid(const std::vector<int>& trimmed) const;

private:
    int stride() const { return colored_ ? 2 : 1; }
    template <class Cb>
    void partitions(const std::vector<int>& total, int parts, Cb&& cb);

    bool colored_;
    std::map<std::vector<int>, BigInt> counts_;
    std::map<std::vector<int>, std::vector<std::vector<std::string>>> lists_;
};

}  // namespace fkexp::detail
