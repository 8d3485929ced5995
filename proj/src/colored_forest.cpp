#include "fkexp/colored_forest.hpp"

#include "detail/rooted.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace fkexp {

std::string to_string(const ColoredProfile& p) {
    std::string s = "(";
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (k) s += ",";
        s += "(" + std::to_string(p[k].white) + "," + std::to_string(p[k].black) + ")";
    }
    return s + ")";
}

MultiIndex path_tail(const MultiIndex& q) {
    std::vector<int> t(q.size() + 1, 0);
    for (std::size_t k = q.size(); k-- > 0;) t[k] = t[k + 1] + q[k];
    // t[k] = sum_{j >= k} q_j = q'_{k-1}
    return MultiIndex(t);
}

ColoredProfile path_profile(const MultiIndex& q) {
    const auto tail = path_tail(q);
    ColoredProfile p;
    p.push_back({0, tail[0]});
    for (std::size_t k = 0; k < q.size(); ++k) p.push_back({q[k], tail[k + 1]});
    return p;
}

namespace {

std::vector<int> flatten(const ColoredProfile& p) {
    std::vector<int> v;
    for (auto& c : p) {
        v.push_back(c.white);
        v.push_back(c.black);
    }
    return v;
}

ColoredProfile from_counts(const detail::LevelCounts& lc) {
    ColoredProfile p;
    for (auto& c : lc) p.push_back({c[0], c[1]});
    return p;
}

std::vector<std::string> codes_of(const ColoredForest& f) {
    std::vector<std::string> out;
    for (auto& t : f.trees()) out.push_back(t.code());
    return out;
}

ColoredForest forest_from_codes(const std::vector<std::string>& codes) {
    std::vector<ColoredTree> trees;
    for (auto& c : codes) trees.push_back(ColoredTree::parse(c));
    return ColoredForest(std::move(trees));
}

bool trivial_white(std::string_view code) {
    if (code == "(w)") return true;
    auto kids = detail::children(code, true);
    return kids.size() == 1 && trivial_white(kids[0]);
}

}  // namespace

// ---- trees / forests ------------------------------------------------------------

ColoredTree ColoredTree::parse(std::string_view code) {
    return ColoredTree(detail::canonical_tree(code, true));
}

ColoredTree ColoredTree::white() { return ColoredTree("(w)"); }

ColoredTree ColoredTree::black(std::vector<ColoredTree> kids) {
    std::sort(kids.begin(), kids.end());
    std::string c = "(b";
    for (auto& k : kids) c += k.code_;
    return ColoredTree(c + ")");
}

ColoredTree ColoredTree::black_chain(int height) {
    if (height < 0) throw std::invalid_argument("chain height must be >= 0");
    ColoredTree t = black();
    for (int i = 0; i < height; ++i) t = black({t});
    return t;
}

std::vector<ColoredTree> ColoredTree::children() const {
    std::vector<ColoredTree> out;
    for (auto& c : detail::children(code_, true)) out.push_back(ColoredTree(c));
    return out;
}

int ColoredTree::height() const { return detail::tree_height(code_, true); }

ColoredProfile ColoredTree::profile() const {
    detail::LevelCounts lc;
    detail::add_level_counts(code_, true, 0, lc);
    return from_counts(lc);
}

ColoredForest::ColoredForest(std::vector<ColoredTree> trees) : trees_(std::move(trees)) {
    std::sort(trees_.begin(), trees_.end());
}

ColoredForest ColoredForest::parse(std::string_view code) {
    return forest_from_codes(detail::canonical_forest(code, true));
}

std::vector<std::pair<ColoredTree, int>> ColoredForest::normal_form() const {
    std::vector<std::pair<ColoredTree, int>> out;
    for (auto& t : trees_) {
        if (!out.empty() && out.back().first == t)
            ++out.back().second;
        else
            out.emplace_back(t, 1);
    }
    return out;
}

std::string ColoredForest::code() const {
    std::string s;
    for (auto& t : trees_) s += t.code();
    return s;
}

int ColoredForest::height() const {
    int h = -1;
    for (auto& t : trees_) h = std::max(h, t.height());
    return h;
}

ColoredProfile ColoredForest::profile() const {
    detail::LevelCounts lc;
    for (auto& t : trees_) detail::add_level_counts(t.code(), true, 0, lc);
    return from_counts(lc);
}

MultiIndex ColoredForest::image_sizes(std::size_t levels) const {
    std::vector<int> out;
    for (auto& t : trees_) detail::add_parent_counts(t.code(), true, 0, out);
    if (levels == 0) return {};
    if (out.size() > levels - 1) throw std::invalid_argument("forest taller than nominal levels");
    out.resize(levels - 1, 0);
    return MultiIndex(out);
}

MultiIndex ColoredForest::coalescence(std::size_t levels) const {
    auto p = profile();
    p.resize(std::max(p.size(), levels));
    const auto img = image_sizes(levels);
    std::vector<int> c;
    for (std::size_t k = 0; k + 1 < levels; ++k)
        c.push_back(p[k + 1].white + p[k + 1].black - img[k]);
    return MultiIndex(c);
}

bool ColoredForest::has_trivial_white_tree() const {
    return std::any_of(trees_.begin(), trees_.end(),
                       [](const ColoredTree& t) { return trivial_white(t.code()); });
}

ColoredForest ColoredForest::operator*(const ColoredForest& other) const {
    auto all = trees_;
    all.insert(all.end(), other.trees_.begin(), other.trees_.end());
    return ColoredForest(std::move(all));
}

// ---- map sequences ------------------------------------------------------------------

ColoredMapSeq::ColoredMapSeq(ColoredProfile profile, std::vector<std::vector<int>> maps)
    : profile_(std::move(profile)), maps_(std::move(maps)) {
    if (profile_.size() != maps_.size() + 1)
        throw std::invalid_argument("ColoredMapSeq needs one more level than maps");
    for (std::size_t k = 0; k < maps_.size(); ++k) {
        const auto& up = profile_[k + 1];
        if (maps_[k].size() != static_cast<std::size_t>(up.white + up.black))
            throw std::invalid_argument("colored map " + std::to_string(k) + " has wrong domain size");
        for (int v : maps_[k])
            if (v < 1 || v > profile_[k].black)
                throw std::invalid_argument("colored map " + std::to_string(k) +
                                            " value outside the black vertices below");
    }
}

std::vector<int> ColoredMapSeq::white_map(std::size_t k) const {
    const int w = profile_.at(k + 1).white;
    return {maps_[k].begin(), maps_[k].begin() + w};
}

std::vector<int> ColoredMapSeq::black_map(std::size_t k) const {
    const int w = profile_.at(k + 1).white;
    return {maps_[k].begin() + w, maps_[k].end()};
}

MultiIndex ColoredMapSeq::image_sizes() const {
    std::vector<int> out;
    for (auto& m : maps_) out.push_back(static_cast<int>(std::set<int>(m.begin(), m.end()).size()));
    return MultiIndex(out);
}

ColoredMapSeq ColoredMapSeq::act(
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& perms) const {
    if (perms.size() != profile_.size()) throw std::invalid_argument("one permutation pair per level");
    std::vector<std::vector<int>> out(maps_.size());
    for (std::size_t k = 0; k < maps_.size(); ++k) {
        // combined permutation of the domain (whites then blacks)
        const auto& [pw, pb] = perms[k + 1];
        const int w = static_cast<int>(pw.size());
        std::vector<int> dom(pw);
        for (int v : pb) dom.push_back(v + w);
        std::vector<int> inv(dom.size());
        for (std::size_t i = 0; i < dom.size(); ++i) inv[dom[i] - 1] = static_cast<int>(i) + 1;
        const auto& below = perms[k].second;
        out[k].resize(maps_[k].size());
        for (std::size_t i = 0; i < maps_[k].size(); ++i)
            out[k][i] = below[maps_[k][inv[i] - 1] - 1];
    }
    return ColoredMapSeq(profile_, std::move(out));
}

std::string ColoredMapSeq::to_json() const {
    auto arr = [](const std::vector<int>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s + "]";
    };
    std::string s = "[";
    for (std::size_t k = 0; k < maps_.size(); ++k) {
        if (k) s += ",";
        s += "{\"white\":" + arr(white_map(k)) + ",\"black\":" + arr(black_map(k)) + "}";
    }
    return s + "]";
}

ColoredForest colored_forest_of(const ColoredMapSeq& a) {
    const auto& p = a.profile();
    const std::size_t L = p.size();
    auto leaves = [](const ColorCount& c) {
        std::vector<std::string> v(static_cast<std::size_t>(c.white), "(w)");
        v.insert(v.end(), static_cast<std::size_t>(c.black), "(b)");
        return v;
    };
    std::vector<std::string> codes = leaves(p[L - 1]);
    for (std::size_t k = L - 1; k-- > 0;) {
        std::vector<std::vector<std::string>> kids(static_cast<std::size_t>(p[k].black));
        for (std::size_t i = 0; i < codes.size(); ++i)
            kids[a.maps()[k][i] - 1].push_back(std::move(codes[i]));
        std::vector<std::string> next(static_cast<std::size_t>(p[k].white), "(w)");
        for (auto& ks : kids) {
            std::sort(ks.begin(), ks.end());
            std::string c = "(b";
            for (auto& s : ks) c += s;
            next.push_back(c + ")");
        }
        codes = std::move(next);
    }
    std::sort(codes.begin(), codes.end());
    return forest_from_codes(codes);
}

ColoredMapSeq planar_colored_mapseq(const ColoredForest& f, const ColoredProfile& nominal) {
    auto prof = f.profile();
    if (prof.size() > nominal.size()) throw std::invalid_argument("forest taller than profile");
    prof.resize(nominal.size());
    if (prof != nominal)
        throw std::invalid_argument("forest profile " + to_string(f.profile()) +
                                    " does not match " + to_string(nominal));
    // whites and blacks are labeled separately in order of appearance
    std::vector<std::string> blacks;
    for (auto& t : f.trees())
        if (!t.is_white()) blacks.push_back(t.code());
    std::vector<std::vector<int>> maps;
    for (std::size_t k = 0; k + 1 < nominal.size(); ++k) {
        std::vector<int> wmap, bmap;
        std::vector<std::string> next;
        for (std::size_t i = 0; i < blacks.size(); ++i)
            for (auto& c : detail::children(blacks[i], true)) {
                if (c == "(w)") {
                    wmap.push_back(static_cast<int>(i) + 1);
                } else {
                    bmap.push_back(static_cast<int>(i) + 1);
                    next.push_back(std::move(c));
                }
            }
        wmap.insert(wmap.end(), bmap.begin(), bmap.end());
        maps.push_back(std::move(wmap));
        blacks = std::move(next);
    }
    return ColoredMapSeq(nominal, std::move(maps));
}

ColoredForest remove_roots(const ColoredForest& f) {
    std::vector<ColoredTree> out;
    for (auto& t : f.trees())
        for (auto& c : t.children()) out.push_back(c);
    return ColoredForest(std::move(out));
}

std::vector<int> symmetry_multiset(const ColoredForest& f) {
    std::vector<int> out;
    for (auto& t : f.trees()) {
        auto m = detail::multiplicities(detail::children(t.code(), true));
        out.insert(out.end(), m.begin(), m.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> root_symmetry_multiset(const ColoredForest& f) {
    auto m = detail::multiplicities(codes_of(f));
    std::sort(m.begin(), m.end());
    return m;
}

BigInt count_colored_jungles(const ColoredForest& f) {
    BigInt num = 1;
    for (auto& c : f.profile()) num *= factorial(c.white) * factorial(c.black);
    BigInt den = detail::multiset_factorial(root_symmetry_multiset(f));
    for (ColoredForest g = f; !g.empty(); g = remove_roots(g))
        den *= detail::multiset_factorial(symmetry_multiset(g));
    return num / den;
}

BigInt colored_mapseq_total(const ColoredProfile& p) {
    BigInt r = 1;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        BigInt b = p[k].black, t;
        mpz_pow_ui(t.get_mpz_t(), b.get_mpz_t(),
                   static_cast<unsigned long>(p[k + 1].white + p[k + 1].black));
        r *= t;
    }
    return r;
}

BigInt brute_force_colored_orbit_count(const ColoredMapSeq& a, const Caps& caps) {
    const auto& p = a.profile();
    BigInt group = 1;
    for (auto& c : p) group *= factorial(c.white) * factorial(c.black);
    if (group > caps.group) throw CapExceeded("group order", group.get_str(), caps.group);
    auto perms_of = [](int m) {
        std::vector<int> v(m);
        std::iota(v.begin(), v.end(), 1);
        std::vector<std::vector<int>> all;
        do all.push_back(v);
        while (std::next_permutation(v.begin(), v.end()));
        return all;
    };
    // factors: white then black per level
    std::vector<std::vector<std::vector<int>>> factors;
    for (auto& c : p) {
        factors.push_back(perms_of(c.white));
        factors.push_back(perms_of(c.black));
    }
    std::vector<std::size_t> idx(factors.size(), 0);
    std::set<ColoredMapSeq> orbit;
    std::vector<std::pair<std::vector<int>, std::vector<int>>> s(p.size());
    while (true) {
        for (std::size_t k = 0; k < p.size(); ++k)
            s[k] = {factors[2 * k][idx[2 * k]], factors[2 * k + 1][idx[2 * k + 1]]};
        orbit.insert(a.act(s));
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == factors[k].size()) idx[k++] = 0;
        if (k == idx.size()) break;
    }
    return BigInt(static_cast<unsigned long>(orbit.size()));
}

std::vector<ColoredForest> enumerate_colored_forests(const ColoredProfile& p, const Caps& caps) {
    detail::Enumerator e(true);
    const auto flat = flatten(p);
    if (!e.valid(e.trim(flat)))
        throw std::invalid_argument("colored profile " + to_string(p) + " admits no forest");
    BigInt predicted = e.count(flat);
    if (predicted > caps.forests)
        throw CapExceeded("colored forest count", predicted.get_str(), caps.forests);
    std::vector<ColoredForest> out;
    for (auto& codes : e.forests(flat)) out.push_back(forest_from_codes(codes));
    return out;
}

std::vector<ColoredOrbit> enumerate_colored_orbits(const ColoredProfile& p,
                                                   const std::optional<MultiIndex>& max_coal,
                                                   const Caps& caps) {
    if (p.empty()) throw std::invalid_argument("empty colored profile");
    if (max_coal && max_coal->size() + 1 != p.size())
        throw std::invalid_argument("max_coal needs one entry per map");
    std::vector<ColoredOrbit> out;
    for (auto& f : enumerate_colored_forests(p, caps)) {
        if (max_coal && !f.coalescence(p.size()).leq(*max_coal)) continue;
        BigInt c = count_colored_jungles(f);
        out.push_back({std::move(f), std::move(c)});
    }
    return out;
}

// ---- Wick forests ------------------------------------------------------------------

ColoredTree wick_tree(int k, int l, int m) {
    if (!(0 <= k && k <= l && l <= m)) throw std::invalid_argument("wick_tree needs 0 <= k <= l <= m");
    // branch from level k+1 that runs black up to level j and ends white at j+1
    auto branch = [&](int j) {
        ColoredTree t = ColoredTree::white();
        for (int lev = j; lev > k; --lev) t = ColoredTree::black({t});
        return t;
    };
    ColoredTree t = ColoredTree::black({branch(l), branch(m)});
    for (int lev = k; lev > 0; --lev) t = ColoredTree::black({t});
    return t;
}

ColoredForest build_wick_forest(const WickFamily& t, int n) {
    std::vector<ColoredTree> trees;
    std::vector<int> r(static_cast<std::size_t>(n + 1), 0);
    for (auto& [key, count] : t) {
        auto [k, l, m] = key;
        if (count < 0) throw std::invalid_argument("negative Wick multiplicity");
        if (!(0 <= k && k <= l && l <= m && m <= n))
            throw std::invalid_argument("Wick index needs 0 <= k <= l <= m <= n");
        for (int i = 0; i < count; ++i) trees.push_back(wick_tree(k, l, m));
        r[k] += count;
    }
    for (int k = 0; k <= n; ++k)
        for (int i = 0; i < r[k]; ++i) trees.push_back(ColoredTree::black_chain(k));
    return ColoredForest(std::move(trees));
}

MultiIndex wick_profile(const WickFamily& t, int n) {
    std::vector<int> q(static_cast<std::size_t>(n + 1), 0);
    for (auto& [key, count] : t) {
        auto [k, l, m] = key;
        if (m > n || k < 0 || k > l || l > m) throw std::invalid_argument("bad Wick index");
        q[l] += count;
        q[m] += count;
    }
    return MultiIndex(q);
}

std::vector<WickFamily> wick_families(const MultiIndex& q) {
    const int n = static_cast<int>(q.size()) - 1;
    std::vector<std::tuple<int, int, int>> keys;
    for (int k = 0; k <= n; ++k)
        for (int l = k; l <= n; ++l)
            for (int m = l; m <= n; ++m) keys.emplace_back(k, l, m);
    std::vector<WickFamily> out;
    std::vector<int> left(q.entries());
    WickFamily cur;
    auto rec = [&](auto&& self, std::size_t i) -> void {
        if (i == keys.size()) {
            if (std::all_of(left.begin(), left.end(), [](int v) { return v == 0; })) out.push_back(cur);
            return;
        }
        auto [k, l, m] = keys[i];
        (void)k;
        for (int c = 0;; ++c) {
            if (c > 0) {
                left[l] -= 1;
                left[m] -= 1;
                if (left[l] < 0 || left[m] < 0) {
                    left[l] += c;
                    left[m] += c;
                    break;
                }
                cur[keys[i]] = c;
            }
            self(self, i + 1);
        }
        cur.erase(keys[i]);
    };
    rec(rec, 0);
    return out;
}

}  // namespace fkexp
