#include "fkexp/forest.hpp"

#include "detail/rooted.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace fkexp {

namespace {

std::vector<std::string> codes_of(const Forest& f) {
    std::vector<std::string> out;
    for (auto& t : f.trees()) out.push_back(t.code());
    return out;
}

Forest forest_from_codes(const std::vector<std::string>& codes) {
    std::vector<Tree> trees;
    for (auto& c : codes) trees.push_back(Tree::parse(c));
    return Forest(std::move(trees));
}

}  // namespace

// ---- Tree -------------------------------------------------------------------

Tree Tree::parse(std::string_view code) { return Tree(detail::canonical_tree(code, false)); }

Tree Tree::from_children(std::vector<Tree> kids) {
    std::sort(kids.begin(), kids.end());
    std::string c = "(";
    for (auto& k : kids) c += k.code_;
    return Tree(c + ")");
}

Tree Tree::chain(int height) {
    if (height < 0) throw std::invalid_argument("chain height must be >= 0");
    std::string c(static_cast<std::size_t>(height) + 1, '(');
    c.append(static_cast<std::size_t>(height) + 1, ')');
    return Tree(std::move(c));
}

std::vector<Tree> Tree::children() const {
    std::vector<Tree> out;
    for (auto& c : detail::children(code_, false)) out.push_back(Tree(c));
    return out;
}

Forest Tree::remove_root() const { return Forest(children()); }

int Tree::height() const { return detail::tree_height(code_, false); }

MultiIndex Tree::profile() const {
    detail::LevelCounts lc;
    detail::add_level_counts(code_, false, 0, lc);
    std::vector<int> v;
    for (auto& c : lc) v.push_back(c[1]);
    return MultiIndex(v);
}

// ---- Forest -----------------------------------------------------------------

Forest::Forest(std::vector<Tree> trees) : trees_(std::move(trees)) {
    std::sort(trees_.begin(), trees_.end());
}

Forest Forest::parse(std::string_view code) {
    return forest_from_codes(detail::canonical_forest(code, false));
}

std::vector<std::pair<Tree, int>> Forest::normal_form() const {
    std::vector<std::pair<Tree, int>> out;
    for (auto& t : trees_) {
        if (!out.empty() && out.back().first == t)
            ++out.back().second;
        else
            out.emplace_back(t, 1);
    }
    return out;
}

std::string Forest::code() const {
    std::string s;
    for (auto& t : trees_) s += t.code();
    return s;
}

int Forest::height() const {
    int h = -1;
    for (auto& t : trees_) h = std::max(h, t.height());
    return h;
}

MultiIndex Forest::profile() const {
    detail::LevelCounts lc;
    for (auto& t : trees_) detail::add_level_counts(t.code(), false, 0, lc);
    std::vector<int> v;
    for (auto& c : lc) v.push_back(c[1]);
    return MultiIndex(v);
}

MultiIndex Forest::image_sizes() const {
    std::vector<int> out;
    for (auto& t : trees_) detail::add_parent_counts(t.code(), false, 0, out);
    const int h = height();
    out.resize(h > 0 ? static_cast<std::size_t>(h) : 0, 0);
    return MultiIndex(out);
}

MultiIndex Forest::coalescence() const {
    return profile().shift() - image_sizes();
}

long Forest::coalescence_degree() const { return coalescence().norm(); }

Forest Forest::operator*(const Forest& other) const {
    std::vector<Tree> all = trees_;
    all.insert(all.end(), other.trees_.begin(), other.trees_.end());
    return Forest(std::move(all));
}

// ---- MapSeq -----------------------------------------------------------------

MapSeq::MapSeq(MultiIndex profile, std::vector<std::vector<int>> maps)
    : profile_(std::move(profile)), maps_(std::move(maps)) {
    if (profile_.size() != maps_.size() + 1)
        throw std::invalid_argument("MapSeq needs one more level than maps");
    for (std::size_t k = 0; k < maps_.size(); ++k) {
        if (maps_[k].size() != static_cast<std::size_t>(profile_[k + 1]))
            throw std::invalid_argument("map a_" + std::to_string(k) + " has wrong domain size");
        for (int v : maps_[k])
            if (v < 1 || v > profile_[k])
                throw std::invalid_argument("map a_" + std::to_string(k) + " value out of range");
    }
}

MapSeq MapSeq::identity(int n, int q) {
    std::vector<int> id(q);
    std::iota(id.begin(), id.end(), 1);
    return MapSeq(MultiIndex::constant(n + 2, q), std::vector<std::vector<int>>(n + 1, id));
}

MultiIndex MapSeq::image_sizes() const {
    std::vector<int> out;
    for (auto& m : maps_) out.push_back(static_cast<int>(std::set<int>(m.begin(), m.end()).size()));
    return MultiIndex(out);
}

long MapSeq::coalescence_degree() const {
    long c = 0;
    for (std::size_t k = 0; k < maps_.size(); ++k)
        c += profile_[k + 1] - image_sizes()[k];
    return c;
}

MapSeq MapSeq::act(const std::vector<std::vector<int>>& perms) const {
    if (perms.size() != profile_.size()) throw std::invalid_argument("one permutation per level");
    std::vector<std::vector<int>> out(maps_.size());
    for (std::size_t k = 0; k < maps_.size(); ++k) {
        const auto& up = perms[k + 1];
        std::vector<int> inv(up.size());
        for (std::size_t i = 0; i < up.size(); ++i) inv[up[i] - 1] = static_cast<int>(i) + 1;
        out[k].resize(maps_[k].size());
        for (std::size_t i = 0; i < maps_[k].size(); ++i)
            out[k][i] = perms[k][maps_[k][inv[i] - 1] - 1];
    }
    return MapSeq(profile_, std::move(out));
}

std::string MapSeq::to_json() const {
    std::string s = "[";
    for (std::size_t k = 0; k < maps_.size(); ++k) {
        if (k) s += ",";
        s += "[";
        for (std::size_t i = 0; i < maps_[k].size(); ++i) {
            if (i) s += ",";
            s += std::to_string(maps_[k][i]);
        }
        s += "]";
    }
    return s + "]";
}

// ---- conversions -------------------------------------------------------------

Forest forest_of(const MapSeq& a) {
    const auto& p = a.profile();
    const std::size_t L = p.size();
    std::vector<std::string> codes(static_cast<std::size_t>(p[L - 1]), "()");
    for (std::size_t k = L - 1; k-- > 0;) {
        std::vector<std::vector<std::string>> kids(static_cast<std::size_t>(p[k]));
        for (std::size_t i = 0; i < codes.size(); ++i)
            kids[a.maps()[k][i] - 1].push_back(std::move(codes[i]));
        std::vector<std::string> next;
        for (auto& ks : kids) {
            std::sort(ks.begin(), ks.end());
            std::string c = "(";
            for (auto& s : ks) c += s;
            next.push_back(c + ")");
        }
        codes = std::move(next);
    }
    std::sort(codes.begin(), codes.end());
    return forest_from_codes(codes);
}

MapSeq planar_mapseq(const Forest& f) {
    // trees in ascending code order, labels assigned breadth first; parents
    // are visited in label order so every a_k is weakly increasing
    std::vector<std::string> level = codes_of(f);
    std::vector<int> prof{static_cast<int>(level.size())};
    std::vector<std::vector<int>> maps;
    while (true) {
        std::vector<std::string> next;
        std::vector<int> parent;
        for (std::size_t i = 0; i < level.size(); ++i)
            for (auto& c : detail::children(level[i], false)) {
                next.push_back(std::move(c));
                parent.push_back(static_cast<int>(i) + 1);
            }
        if (next.empty()) break;
        maps.push_back(std::move(parent));
        prof.push_back(static_cast<int>(next.size()));
        level = std::move(next);
    }
    if (f.empty()) return MapSeq(MultiIndex{0}, {});
    return MapSeq(MultiIndex(prof), std::move(maps));
}

Forest remove_roots(const Forest& f) {
    std::vector<Tree> out;
    for (auto& t : f.trees())
        for (auto& c : t.children()) out.push_back(c);
    return Forest(std::move(out));
}

std::vector<int> symmetry_multiset(const Forest& f) {
    std::vector<int> out;
    for (auto& t : f.trees()) {
        auto m = detail::multiplicities(detail::children(t.code(), false));
        out.insert(out.end(), m.begin(), m.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> root_symmetry_multiset(const Forest& f) {
    auto m = detail::multiplicities(codes_of(f));
    std::sort(m.begin(), m.end());
    return m;
}

BigInt count_jungles(const Forest& f) {
    BigInt num = f.profile().factorial();
    BigInt den = detail::multiset_factorial(root_symmetry_multiset(f));
    for (Forest g = f; !g.empty(); g = remove_roots(g))
        den *= detail::multiset_factorial(symmetry_multiset(g));
    return num / den;
}

// ---- brute force ---------------------------------------------------------------

namespace {

std::vector<std::vector<int>> all_perms(int m) {
    std::vector<int> p(m);
    std::iota(p.begin(), p.end(), 1);
    std::vector<std::vector<int>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

}  // namespace

OrbitStats brute_force_orbit(const MapSeq& a, const Caps& caps) {
    BigInt group = a.profile().factorial();
    if (group > caps.group) throw CapExceeded("group order", group.get_str(), caps.group);
    const auto& p = a.profile();
    std::vector<std::vector<std::vector<int>>> perms;
    for (int v : p.entries()) perms.push_back(all_perms(v));
    std::vector<std::size_t> idx(p.size(), 0);
    std::set<MapSeq> orbit;
    BigInt stab = 0;
    std::vector<std::vector<int>> s(p.size());
    while (true) {
        for (std::size_t k = 0; k < p.size(); ++k) s[k] = perms[k][idx[k]];
        MapSeq b = a.act(s);
        if (b == a) ++stab;
        orbit.insert(std::move(b));
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == perms[k].size()) idx[k++] = 0;
        if (k == idx.size()) break;
    }
    return {BigInt(static_cast<unsigned long>(orbit.size())), stab};
}

BigInt brute_force_orbit_count(const MapSeq& a, const Caps& caps) {
    return brute_force_orbit(a, caps).orbit_size;
}

// ---- enumeration ---------------------------------------------------------------

BigInt predicted_forest_count(const MultiIndex& profile) {
    detail::Enumerator e(false);
    return e.count(profile.entries());
}

std::vector<Forest> enumerate_forests(const MultiIndex& profile, const Caps& caps) {
    detail::Enumerator e(false);
    const auto& v = profile.entries();
    if (!e.valid(e.trim(v)) || e.trim(v).size() != v.size())
        throw std::invalid_argument("profile " + profile.to_string() + " is not in V");
    BigInt predicted = e.count(v);
    if (predicted > caps.forests)
        throw CapExceeded("forest count", predicted.get_str(), caps.forests);
    std::vector<Forest> out;
    for (auto& codes : e.forests(v)) out.push_back(forest_from_codes(codes));
    return out;
}

std::vector<ForestOrbit> enumerate_orbits(int n, int q, const std::optional<MultiIndex>& max_coal,
                                          const Caps& caps) {
    if (q < 1 || n < 0) throw std::invalid_argument("enumerate_orbits needs q >= 1, n >= 0");
    if (max_coal && max_coal->size() != static_cast<std::size_t>(n + 1))
        throw std::invalid_argument("max_coal must have n+1 entries");
    std::vector<ForestOrbit> out;
    for (auto& f : enumerate_forests(MultiIndex::constant(n + 2, q), caps)) {
        if (max_coal && !f.coalescence().leq(*max_coal)) continue;
        BigInt c = count_jungles(f);
        out.push_back({std::move(f), std::move(c)});
    }
    return out;
}

}  // namespace fkexp
