#include <optional>
#include "detail/rooted.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace fkexp::detail {

std::vector<std::string_view> split_top(std::string_view s) {
    std::vector<std::string_view> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '(') {
            if (depth == 0) start = i;
            ++depth;
        } else if (c == ')') {
            if (--depth < 0) throw std::invalid_argument("unbalanced tree code");
            if (depth == 0) out.push_back(s.substr(start, i - start + 1));
        } else if (depth == 0) {
            throw std::invalid_argument(std::string("stray character '") + c + "' in tree code");
        }
    }
    if (depth != 0) throw std::invalid_argument("unbalanced tree code");
    return out;
}

static std::string_view body(std::string_view tree, bool colored) {
    const std::size_t head = colored ? 2 : 1;
    if (tree.size() < head + 1 || tree.front() != '(' || tree.back() != ')')
        throw std::invalid_argument("malformed tree code");
    return tree.substr(head, tree.size() - head - 1);
}

char color_of(std::string_view tree, bool colored) {
    if (!colored) return 0;
    if (tree.size() < 3) throw std::invalid_argument("malformed colored tree code");
    return tree[1];
}

std::string canonical_tree(std::string_view code, bool colored) {
    const auto top = split_top(code);
    if (top.size() != 1) throw std::invalid_argument("a tree code must hold exactly one tree");
    const char color = color_of(code, colored);
    if (colored && color != 'b' && color != 'w')
        throw std::invalid_argument("colored vertices must be 'b' or 'w'");
    std::vector<std::string> kids;
    for (auto c : split_top(body(code, colored))) kids.push_back(canonical_tree(c, colored));
    if (color == 'w' && !kids.empty())
        throw std::invalid_argument("white vertices cannot have children");
    std::sort(kids.begin(), kids.end());
    std::string out = "(";
    if (colored) out += color;
    for (auto& k : kids) out += k;
    return out + ")";
}

std::vector<std::string> canonical_forest(std::string_view code, bool colored) {
    std::vector<std::string> out;
    for (auto t : split_top(code)) out.push_back(canonical_tree(t, colored));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> children(std::string_view tree, bool colored) {
    std::vector<std::string> out;
    for (auto c : split_top(body(tree, colored))) out.emplace_back(c);
    return out;
}

int tree_height(std::string_view tree, bool colored) {
    int h = 0;
    for (auto c : split_top(body(tree, colored))) h = std::max(h, 1 + tree_height(c, colored));
    return h;
}

void add_level_counts(std::string_view tree, bool colored, std::size_t level, LevelCounts& out) {
    if (out.size() <= level) out.resize(level + 1, {0, 0});
    out[level][color_of(tree, colored) == 'w' ? 0 : 1] += 1;
    for (auto c : split_top(body(tree, colored))) add_level_counts(c, colored, level + 1, out);
}

void add_parent_counts(std::string_view tree, bool colored, std::size_t level,
                       std::vector<int>& out) {
    const auto kids = split_top(body(tree, colored));
    if (kids.empty()) return;
    if (out.size() <= level) out.resize(level + 1, 0);
    out[level] += 1;
    for (auto c : kids) add_parent_counts(c, colored, level + 1, out);
}

std::vector<int> multiplicities(const std::vector<std::string>& sorted) {
    std::vector<int> m;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        m.push_back(static_cast<int>(j - i));
        i = j;
    }
    return m;
}

BigInt multiset_factorial(const std::vector<int>& m) {
    BigInt r = 1;
    for (int v : m) r *= factorial(v);
    return r;
}

BigInt orbit_count(const std::vector<std::string>& forest, bool colored) {
    LevelCounts counts;
    for (auto& t : forest) add_level_counts(t, colored, 0, counts);
    BigInt num = 1;
    for (auto& c : counts) num *= factorial(c[0]) * factorial(c[1]);

    // i = -1: multiplicities of the trees themselves; then walk B^i(f)
    BigInt den = multiset_factorial(multiplicities(forest));
    std::vector<std::string> level = forest;
    while (!level.empty()) {
        std::vector<std::string> next;
        for (auto& t : level) {
            auto kids = children(t, colored);  // already sorted (canonical)
            den *= multiset_factorial(multiplicities(kids));
            next.insert(next.end(), kids.begin(), kids.end());
        }
        std::sort(next.begin(), next.end());
        level = std::move(next);
    }
    return num / den;
}

// ---- enumeration -----------------------------------------------------------

std::vector<int> Enumerator::trim(std::vector<int> p) const {
    const std::size_t s = stride();
    if (p.size() % s != 0) throw std::invalid_argument("colored profile has odd length");
    while (!p.empty()) {
        bool zero = true;
        for (std::size_t i = p.size() - s; i < p.size(); ++i) zero = zero && p[i] == 0;
        if (!zero) break;
        p.resize(p.size() - s);
    }
    return p;
}

bool Enumerator::valid(const std::vector<int>& p) const {
    const std::size_t s = stride();
    const std::size_t L = p.size() / s;
    for (std::size_t j = 0; j < L; ++j) {
        int total = 0;
        for (std::size_t i = 0; i < s; ++i) {
            if (p[j * s + i] < 0) return false;
            total += p[j * s + i];
        }
        if (j == 0) continue;
        const int black_below = p[(j - 1) * s + (s - 1)];
        if (total > 0 && black_below == 0) return false;
        if (!colored_ && total == 0) return false;
    }
    return true;
}

template <class Cb>
void Enumerator::partitions(const std::vector<int>& total, int parts, Cb&& cb) {
    const std::size_t L = total.size();
    std::vector<std::vector<int>> chosen;
    std::function<void(const std::vector<int>&, int)> rec = [&](const std::vector<int>& rem,
                                                               int left) {
        // copy: chosen reallocates below
        const std::optional<std::vector<int>> maxp =
            chosen.empty() ? std::nullopt : std::optional<std::vector<int>>(chosen.back());
        if (left == 0) {
            if (std::all_of(rem.begin(), rem.end(), [](int v) { return v == 0; })) cb(chosen);
            return;
        }
        if (left == 1) {
            if ((!maxp || rem <= *maxp) && valid(trim(rem))) {
                chosen.push_back(rem);
                cb(chosen);
                chosen.pop_back();
            }
            return;
        }
        if (L == 0) {  // only zero parts
            chosen.push_back(rem);
            rec(rem, left - 1);
            chosen.pop_back();
            return;
        }
        std::vector<int> part(L, 0);
        while (true) {
            const bool lex_ok = !maxp || part <= *maxp;
            // every later part has first entry <= part[0]
            const bool room = static_cast<long>(rem[0] - part[0]) <=
                              static_cast<long>(left - 1) * part[0];
            if (lex_ok && room && valid(trim(part))) {
                std::vector<int> rest(L);
                for (std::size_t i = 0; i < L; ++i) rest[i] = rem[i] - part[i];
                chosen.push_back(part);
                rec(rest, left - 1);
                chosen.pop_back();
            }
            std::size_t i = L;
            while (i > 0) {
                --i;
                if (part[i] < rem[i]) {
                    ++part[i];
                    break;
                }
                part[i] = 0;
                if (i == 0) return;
            }
        }
    };
    rec(total, parts);
}

BigInt Enumerator::count(std::vector<int> p) {
    p = trim(std::move(p));
    if (auto it = counts_.find(p); it != counts_.end()) return it->second;
    BigInt result = 0;
    if (p.empty()) {
        result = 1;
    } else if (valid(p)) {
        const int roots = p[stride() - 1];
        std::vector<int> rest(p.begin() + stride(), p.end());
        partitions(rest, roots, [&](const std::vector<std::vector<int>>& parts) {
            BigInt term = 1;
            for (std::size_t i = 0; i < parts.size();) {
                std::size_t j = i;
                while (j < parts.size() && parts[j] == parts[i]) ++j;
                const BigInt kinds = count(parts[i]);
                const long m = static_cast<long>(j - i);
                BigInt c;
                // multisets of size m from `kinds` types
                BigInt top = kinds + m - 1;
                mpz_bin_ui(c.get_mpz_t(), top.get_mpz_t(), static_cast<unsigned long>(m));
                term *= c;
                i = j;
            }
            result += term;
        });
    }
    counts_.emplace(p, result);
    return result;
}

const std::vector<std::vector<std::string>>& Enumerator::forests(std::vector<int> p) {
    p = trim(std::move(p));
    if (auto it = lists_.find(p); it != lists_.end()) return it->second;
    std::vector<std::vector<std::string>> result;
    if (p.empty()) {
        result.push_back({});
    } else if (valid(p)) {
        const int whites = colored_ ? p[0] : 0;
        const int roots = p[stride() - 1];
        std::vector<int> rest(p.begin() + stride(), p.end());
        const std::string open = colored_ ? "(b" : "(";
        partitions(rest, roots, [&](const std::vector<std::vector<int>>& parts) {
            // groups of equal parts; candidate trees per group
            std::vector<std::vector<std::string>> pools;
            std::vector<int> mult;
            for (std::size_t i = 0; i < parts.size();) {
                std::size_t j = i;
                while (j < parts.size() && parts[j] == parts[i]) ++j;
                std::vector<std::string> pool;
                for (auto& g : forests(parts[i])) {
                    std::string t = open;
                    for (auto& c : g) t += c;
                    pool.push_back(t + ")");
                }
                pools.push_back(std::move(pool));
                mult.push_back(static_cast<int>(j - i));
                i = j;
            }
            std::vector<std::string> acc;
            std::function<void(std::size_t)> pick = [&](std::size_t g) {
                if (g == pools.size()) {
                    std::vector<std::string> f = acc;
                    for (int w = 0; w < whites; ++w) f.emplace_back("(w)");
                    std::sort(f.begin(), f.end());
                    result.push_back(std::move(f));
                    return;
                }
                const auto& pool = pools[g];
                std::vector<std::size_t> idx(mult[g], 0);
                if (pool.empty()) return;
                while (true) {
                    for (auto i : idx) acc.push_back(pool[i]);
                    pick(g + 1);
                    acc.resize(acc.size() - idx.size());
                    // next nondecreasing index tuple
                    int k = static_cast<int>(idx.size()) - 1;
                    while (k >= 0 && idx[k] + 1 == pool.size()) --k;
                    if (k < 0) break;
                    ++idx[k];
                    for (std::size_t t = k + 1; t < idx.size(); ++t) idx[t] = idx[k];
                }
            };
            pick(0);
        });
        std::sort(result.begin(), result.end(), [](const auto& a, const auto& b) {
            std::string ca, cb;
            for (auto& t : a) ca += t;
            for (auto& t : b) cb += t;
            return ca < cb;
        });
    }
    return lists_.emplace(p, std::move(result)).first->second;
}

}  // namespace fkexp::detail
