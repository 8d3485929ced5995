#include "fkexp/genfunc.hpp"

#include "fkexp/forest.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace fkexp {

SparseSeries::SparseSeries(MultiIndex bound, std::size_t degree_vars, long max_degree)
    : bound_(std::move(bound)), degree_vars_(degree_vars), max_degree_(max_degree) {}

bool SparseSeries::fits(const MultiIndex& e) const {
    if (!e.leq(bound_)) return false;
    if (max_degree_ < 0) return true;
    long d = 0;
    for (std::size_t i = 0; i < degree_vars_ && i < e.size(); ++i) d += e[i];
    return d <= max_degree_;
}

SparseSeries SparseSeries::one(MultiIndex bound) {
    SparseSeries s(bound);
    s.add(MultiIndex::zeros(bound.size()), 1);
    return s;
}

BigInt SparseSeries::coefficient(const MultiIndex& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? BigInt(0) : it->second;
}

void SparseSeries::add(const MultiIndex& e, const BigInt& c) {
    if (c == 0 || !fits(e)) return;
    auto& slot = terms_[e];
    slot += c;
    if (slot == 0) terms_.erase(e);
}

SparseSeries SparseSeries::operator*(const SparseSeries& o) const {
    if (bound_ != o.bound_) throw std::invalid_argument("series bounds differ");
    SparseSeries r = with_limits();
    for (auto& [ea, ca] : terms_)
        for (auto& [eb, cb] : o.terms_) r.add(ea + eb, ca * cb);
    return r;
}

SparseSeries SparseSeries::geometric(const MultiIndex& m, const BigInt& e, const MultiIndex& bound) {
    return geometric(m, e, SparseSeries(bound));
}

SparseSeries SparseSeries::geometric(const MultiIndex& m, const BigInt& e, const SparseSeries& like) {
    if (m.is_zero()) throw std::invalid_argument("geometric factor of the constant monomial");
    SparseSeries r = like.with_limits();
    MultiIndex power = MultiIndex::zeros(like.bound().size());
    for (long k = 0; r.fits(power); ++k) {
        // coefficient of m^k in (1 - m)^{-e} is C(e-1+k, k)
        BigInt c, top = e - 1 + k;
        mpz_bin_ui(c.get_mpz_t(), top.get_mpz_t(), static_cast<unsigned long>(k));
        r.add(power, c);
        power = power + m;
    }
    return r;
}

SparseSeries SparseSeries::truncate(const MultiIndex& bound) const {
    SparseSeries r(bound, degree_vars_, max_degree_);
    for (auto& [e, c] : terms_)
        if (e.leq(bound)) r.add(e, c);
    return r;
}

SparseSeries SparseSeries::marginalize(std::size_t from) const {
    auto cut = [&](const MultiIndex& e) {
        return MultiIndex(std::vector<int>(e.entries().begin(), e.entries().begin() + from));
    };
    SparseSeries r(cut(bound_));
    for (auto& [e, c] : terms_) r.add(cut(e), c);
    return r;
}

// ---- |F_p| ----------------------------------------------------------------------

namespace {

bool in_V(const MultiIndex& p) {
    for (int v : p.entries())
        if (v == 0) return false;
    return true;
}

// profiles q in V or 0 with q <= bound, i.e. all child-forest profiles of
// trees with profile (1, q)
std::vector<MultiIndex> sub_profiles(const MultiIndex& bound) {
    std::vector<MultiIndex> out{MultiIndex{}};
    std::vector<int> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == bound.size()) return;
        for (int v = 1; v <= bound[k]; ++v) {
            cur.push_back(v);
            out.emplace_back(cur);
            rec(k + 1);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

MultiIndex pad(const MultiIndex& p, std::size_t L) {
    std::vector<int> v = p.entries();
    v.resize(L, 0);
    return MultiIndex(v);
}

struct ForestCounter {
    std::map<MultiIndex, BigInt> memo;

    BigInt operator()(const MultiIndex& p) {
        if (p.empty()) return 1;  // the empty forest
        if (!in_V(p)) return 0;
        if (auto it = memo.find(p); it != memo.end()) return it->second;
        BigInt result = 0;
        if (p.size() == 1) {
            result = 1;
        } else {
            // k(q) multiplicities over tree profiles B^{-1}(q) = (1, q)
            const MultiIndex target = p.shift();
            const auto qs = sub_profiles(target);
            std::vector<BigInt> sizes;
            for (auto& q : qs) sizes.push_back((*this)(q));
            const std::size_t L = target.size();
            std::vector<int> left = target.entries();
            std::function<void(std::size_t, int, BigInt)> rec = [&](std::size_t i, int roots,
                                                                    BigInt acc) {
                if (i == qs.size()) {
                    if (roots == 0 && std::all_of(left.begin(), left.end(),
                                                  [](int v) { return v == 0; }))
                        result += acc;
                    return;
                }
                const MultiIndex q = pad(qs[i], L);
                for (int k = 0; k <= roots; ++k) {
                    bool fits = true;
                    for (std::size_t j = 0; j < L; ++j) fits = fits && left[j] >= k * q[j];
                    if (!fits) break;
                    for (std::size_t j = 0; j < L; ++j) left[j] -= k * q[j];
                    BigInt c = 1;
                    if (k > 0) {
                        BigInt top = sizes[i] - 1 + k;
                        mpz_bin_ui(c.get_mpz_t(), top.get_mpz_t(), static_cast<unsigned long>(k));
                    }
                    if (c != 0) rec(i + 1, roots - k, acc * c);
                    for (std::size_t j = 0; j < L; ++j) left[j] += k * q[j];
                }
            };
            rec(0, p[0], BigInt(1));
        }
        memo.emplace(p, result);
        return result;
    }
};

}  // namespace

BigInt count_forests(const MultiIndex& p) {
    ForestCounter c;
    return c(p);
}

// ---- Hilbert series ---------------------------------------------------------------

namespace {

// monotone envelope b'_j = max_{i >= j} b_i restricted to the first n+1 entries
MultiIndex envelope(const MultiIndex& b, std::size_t len) {
    std::vector<int> e(len, 0);
    int run = 0;
    for (std::size_t j = b.size(); j-- > 0;) {
        run = std::max(run, b[j]);
        if (j < len) e[j] = run;
    }
    return MultiIndex(e);
}

// profiles p in V_{h} (exactly h+1 entries, all >= 1) with B^{-1}(p) <= bound
std::vector<MultiIndex> height_profiles(int h, const MultiIndex& bound) {
    std::vector<MultiIndex> out;
    if (h < 0) return out;
    std::vector<int> cur(static_cast<std::size_t>(h + 1), 1);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == cur.size()) {
            out.emplace_back(cur);
            return;
        }
        for (int v = 1; v <= bound[k + 1]; ++v) {
            cur[k] = v;
            rec(k + 1);
        }
    };
    if (static_cast<std::size_t>(h + 2) <= bound.size() && bound[0] >= 1) rec(0);
    return out;
}

SparseSeries hilbert_rec(int n, const MultiIndex& bound, long maxv) {
    // bound has n+1 entries and is non-increasing
    if (n == 0) {
        SparseSeries s(bound, 1, maxv);
        for (int p = 0; p <= bound[0]; ++p) s.add(MultiIndex{p}, 1);
        return s;
    }
    const MultiIndex inner_bound(std::vector<int>(bound.entries().begin(), bound.entries().end() - 1));
    const SparseSeries inner = hilbert_rec(n - 1, inner_bound, maxv);
    // lift H^{n-1} into n+1 variables
    SparseSeries r(bound, bound.size(), maxv);
    for (auto& [e, c] : inner.terms()) r.add(pad(e, bound.size()), c);
    for (auto& p : height_profiles(n - 1, bound)) {
        const BigInt cnt = inner.coefficient(pad(p, static_cast<std::size_t>(n)));
        if (cnt == 0) continue;
        r = r * SparseSeries::geometric(pad(p.unshift(1), bound.size()), cnt, r);
    }
    return r;
}

}  // namespace

SparseSeries hilbert_series(int n, const MultiIndex& truncation, long max_vertices) {
    if (n < 0) throw std::invalid_argument("hilbert_series needs n >= 0");
    if (truncation.size() != static_cast<std::size_t>(n + 1))
        throw std::invalid_argument("truncation needs n+1 entries");
    return hilbert_rec(n, envelope(truncation, truncation.size()), max_vertices).truncate(truncation);
}

SparseSeries coalescence_series(int n, const MultiIndex& truncation, const MultiIndex& y_bound,
                                long max_vertices) {
    if (n < 0) throw std::invalid_argument("coalescence_series needs n >= 0");
    if (truncation.size() != static_cast<std::size_t>(n + 1) ||
        y_bound.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("bounds need n+1 x-entries and n y-entries");
    const MultiIndex xb = envelope(truncation, truncation.size());
    const MultiIndex yb = envelope(y_bound, y_bound.size());

    // series in variables x_0..x_m, y_0..y_{m-1} for m = 0..n
    std::function<SparseSeries(int)> rec = [&](int m) -> SparseSeries {
        std::vector<int> bnd(xb.entries().begin(), xb.entries().begin() + m + 1);
        bnd.insert(bnd.end(), yb.entries().begin(), yb.entries().begin() + m);
        const MultiIndex bound(bnd);
        if (m == 0) {
            SparseSeries s(bound, 1, max_vertices);
            for (int p = 0; p <= bound[0]; ++p) s.add(MultiIndex{p}, 1);
            return s;
        }
        const SparseSeries inner = rec(m - 1);
        auto lift = [&](const MultiIndex& e) {
            // inner layout: x_0..x_{m-1}, y_0..y_{m-2}
            std::vector<int> v(e.entries().begin(), e.entries().begin() + m);
            v.push_back(0);
            v.insert(v.end(), e.entries().begin() + m, e.entries().end());
            v.push_back(0);
            return MultiIndex(v);
        };
        SparseSeries r(bound, static_cast<std::size_t>(m + 1), max_vertices);
        for (auto& [e, c] : inner.terms()) r.add(lift(e), c);
        const MultiIndex xbm(std::vector<int>(bnd.begin(), bnd.begin() + m + 1));
        for (auto& p : height_profiles(m - 1, xbm)) {
            // trees (1, p) with coalescence (p_0 - 1, c') number |F_p[c']|
            for (auto& [e, cnt] : inner.terms()) {
                bool match = true;
                for (int j = 0; j < m; ++j) match = match && e[j] == (j < static_cast<int>(p.size()) ? p[j] : 0);
                if (!match) continue;
                std::vector<int> mono(static_cast<std::size_t>(2 * m + 1), 0);
                mono[0] = 1;
                for (std::size_t j = 0; j < p.size(); ++j) mono[j + 1] = p[j];
                mono[static_cast<std::size_t>(m + 1)] = p[0] - 1;
                for (int j = 0; j + 1 < m; ++j) mono[static_cast<std::size_t>(m + 2 + j)] = e[m + j];
                r = r * SparseSeries::geometric(MultiIndex(mono), cnt, r);
            }
        }
        return r;
    };
    std::vector<int> tb = truncation.entries();
    tb.insert(tb.end(), y_bound.entries().begin(), y_bound.entries().end());
    return rec(n).truncate(MultiIndex(tb));
}

SparseSeries weighted_forest_series(int n, const MultiIndex& truncation, const Caps& caps) {
    if (truncation.size() != static_cast<std::size_t>(n + 1))
        throw std::invalid_argument("truncation needs n+1 entries");
    SparseSeries r(truncation);
    std::vector<int> cur(static_cast<std::size_t>(n + 1), 1);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == cur.size()) {
            BigInt total = 0;
            for (auto& f : enumerate_forests(MultiIndex(cur), caps)) total += count_jungles(f);
            r.add(MultiIndex(cur), total);
            return;
        }
        for (int v = 1; v <= truncation[k]; ++v) {
            cur[k] = v;
            rec(k + 1);
        }
    };
    rec(0);
    return r;
}

}  // namespace fkexp
