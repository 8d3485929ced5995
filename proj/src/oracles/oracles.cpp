#include "oracles/oracles.hpp"

#include "fkexp/caps.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace fkexp::oracle {

std::vector<Rational> path_sum_gamma(const FKModel& m, int n) {
    std::vector<Rational> out(static_cast<std::size_t>(m.size(n)));
    std::vector<int> path(static_cast<std::size_t>(n + 1));
    std::function<void(int, Rational)> walk = [&](int k, Rational w) {
        if (k == n) {
            out[path[k]] += w;
            return;
        }
        for (int y = 0; y < m.size(k + 1); ++y) {
            path[k + 1] = y;
            walk(k + 1, w * m.G(k)[path[k]] * m.M(k + 1)(path[k], y));
        }
    };
    for (int x = 0; x < m.size(0); ++x) {
        path[0] = x;
        walk(0, m.eta0()[x]);
    }
    return out;
}

std::vector<std::vector<int>> set_partitions(int q) {
    std::vector<std::vector<int>> out;
    std::vector<int> a(static_cast<std::size_t>(q), 0);
    std::function<void(int, int)> go = [&](int i, int blocks) {
        if (i == q) {
            out.push_back(a);
            return;
        }
        for (int b = 0; b <= blocks; ++b) {
            a[i] = b;
            go(i + 1, std::max(blocks, b + 1));
        }
    };
    if (q == 0) return {{}};
    go(0, 0);
    return out;
}

std::vector<std::vector<std::pair<int, int>>> pair_partitions(int q) {
    std::vector<std::vector<std::pair<int, int>>> out;
    if (q % 2) return out;
    std::vector<std::pair<int, int>> cur;
    std::vector<bool> used(static_cast<std::size_t>(q), false);
    std::function<void()> go = [&]() {
        int i = 0;
        while (i < q && used[i]) ++i;
        if (i == q) {
            out.push_back(cur);
            return;
        }
        used[i] = true;
        for (int j = i + 1; j < q; ++j) {
            if (used[j]) continue;
            used[j] = true;
            cur.emplace_back(i, j);
            go();
            cur.pop_back();
            used[j] = false;
        }
        used[i] = false;
    };
    go();
    return out;
}

namespace {

// gamma_k and Q_{k,n} phi computed from scratch
std::vector<Rational> gamma_at(const FKModel& m, int k) { return path_sum_gamma(m, k); }

std::vector<Rational> pull_back(const FKModel& m, int k, int n, std::vector<Rational> phi) {
    for (int p = n; p > k; --p) {
        std::vector<Rational> next(static_cast<std::size_t>(m.size(p - 1)));
        for (int x = 0; x < m.size(p - 1); ++x)
            for (int y = 0; y < m.size(p); ++y) next[x] += m.G(p - 1)[x] * m.M(p)(x, y) * phi[y];
        phi = std::move(next);
    }
    return phi;
}

}  // namespace

Rational gaussian_cov(const FKModel& m, int n, const std::vector<Rational>& phi, int l,
                      const std::vector<Rational>& psi) {
    Rational s = 0;
    for (int k = 0; k <= std::min(n, l); ++k) {
        const auto g = gamma_at(m, k);
        Rational mass = 0;
        for (auto& x : g) mass += x;
        const auto a = pull_back(m, k, n, phi), b = pull_back(m, k, l, psi);
        Rational inner = 0;
        for (std::size_t x = 0; x < g.size(); ++x) inner += g[x] * a[x] * b[x];
        s += mass * inner;
    }
    return s;
}

Rational gaussian_moment(const FKModel& m, const std::vector<int>& levels,
                         const std::vector<std::vector<Rational>>& phis) {
    const int q = static_cast<int>(levels.size());
    Rational total = 0;
    for (auto& pp : pair_partitions(q)) {
        Rational t = 1;
        for (auto [i, j] : pp) t *= gaussian_cov(m, levels[i], phis[i], levels[j], phis[j]);
        total += t;
    }
    return total;
}

Rational iid_tensor_moment(const FKModel& m, long N, const TensorFunction& F) {
    const int q = static_cast<int>(F.arity());
    const auto& eta = m.eta0();
    const int E = m.size(0);
    Rational total = 0;
    Rational Nq = 1;
    for (int i = 0; i < q; ++i) Nq *= N;
    for (auto& blocks : set_partitions(q)) {
        const int b = blocks.empty() ? 0 : *std::max_element(blocks.begin(), blocks.end()) + 1;
        // number of index tuples realizing exactly this partition
        Rational ways = 1;
        for (int i = 0; i < b; ++i) ways *= (N - i);
        if (ways == 0) continue;
        // sum over block values
        Rational inner = 0;
        std::vector<int> val(static_cast<std::size_t>(b), 0), x(static_cast<std::size_t>(q));
        while (true) {
            Rational w = 1;
            for (int v : val) w *= eta[v];
            for (int i = 0; i < q; ++i) x[i] = val[blocks[i]];
            inner += w * F.values()[F.domain().index(x)];
            int i = 0;
            while (i < b && val[i] == E - 1) val[i++] = 0;
            if (i == b) break;
            ++val[i];
        }
        total += ways * inner;
    }
    return total / Nq;
}

// ---- ordered particle system -----------------------------------------------------------

namespace {

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

void decode(std::size_t idx, int base, int N, std::vector<int>& x) {
    x.resize(static_cast<std::size_t>(N));
    for (int i = N; i-- > 0;) {
        x[i] = static_cast<int>(idx % base);
        idx /= base;
    }
}

}  // namespace

OrderedSystem::OrderedSystem(const FKModel& m, int N, int horizon, std::size_t cap)
    : m_(&m), N_(N), horizon_(horizon) {
    if (N < 1) throw std::invalid_argument("ordered system needs N >= 1");
    if (horizon > m.horizon()) throw std::invalid_argument("horizon beyond the model");
    for (int k = 0; k <= horizon; ++k)
        if (ipow(m.size(k), N) > cap)
            throw CapExceeded("ordered particle tuples", std::to_string(ipow(m.size(k), N)), cap);
    std::vector<int> x, y;
    // level 0
    {
        const std::size_t S = ipow(m.size(0), N);
        std::vector<Rational> law(S);
        for (std::size_t i = 0; i < S; ++i) {
            decode(i, m.size(0), N, x);
            Rational w = 1;
            for (int v : x) w *= m.eta0()[v];
            law[i] = w;
        }
        law_.push_back(std::move(law));
        trans_.emplace_back();
    }
    for (int k = 1; k <= horizon; ++k) {
        const std::size_t S0 = ipow(m.size(k - 1), N), S1 = ipow(m.size(k), N);
        std::vector<std::vector<std::pair<std::size_t, Rational>>> t(S0);
        std::vector<Rational> law(S1);
        for (std::size_t i = 0; i < S0; ++i) {
            decode(i, m.size(k - 1), N, x);
            // selection-mutation law: sum_j G(x_j) M(x_j, .) / sum_j G(x_j)
            std::vector<Rational> phi(static_cast<std::size_t>(m.size(k)));
            Rational z = 0;
            for (int v : x) {
                z += m.G(k - 1)[v];
                for (int s = 0; s < m.size(k); ++s) phi[s] += m.G(k - 1)[v] * m.M(k)(v, s);
            }
            for (auto& p : phi) p /= z;
            for (std::size_t j = 0; j < S1; ++j) {
                decode(j, m.size(k), N, y);
                Rational w = 1;
                for (int v : y) w *= phi[v];
                if (w == 0) continue;
                t[i].emplace_back(j, w);
                law[j] += law_[k - 1][i] * w;
            }
        }
        trans_.push_back(std::move(t));
        law_.push_back(std::move(law));
    }
}

namespace {

// empirical q-fold block at one level: tensor (or injective) product of
// the occupation measure of tuple x
std::vector<Rational> block(const std::vector<int>& x, int E, int q, bool injective) {
    const int N = static_cast<int>(x.size());
    std::vector<Rational> out(ipow(E, q));
    if (q == 0) {
        out[0] = 1;
        return out;
    }
    std::vector<int> idx(static_cast<std::size_t>(q), 0);
    Rational count = 0;
    while (true) {
        bool ok = true;
        if (injective)
            for (int a = 0; a < q && ok; ++a)
                for (int b = a + 1; b < q && ok; ++b) ok = idx[a] != idx[b];
        if (ok) {
            std::size_t pos = 0;
            for (int a = 0; a < q; ++a) pos = pos * E + x[idx[a]];
            out[pos] += 1;
            count += 1;
        }
        int i = q - 1;
        while (i >= 0 && idx[i] == N - 1) idx[i--] = 0;
        if (i < 0) break;
        ++idx[i];
    }
    for (auto& v : out) v /= count;
    return out;
}

}  // namespace

Rational OrderedSystem::moment(const std::vector<int>& q, const TensorFunction& F, bool with_mass) const {
    const int n = static_cast<int>(q.size()) - 1;
    if (n > horizon_) throw std::invalid_argument("profile beyond the oracle horizon");
    std::vector<int> tail(q.size() + 1, 0);
    for (int k = n; k >= 0; --k) tail[k] = tail[k + 1] + q[k];
    int expect = 0;
    for (int v : q) expect += v;
    if (static_cast<int>(F.arity()) != expect) throw std::invalid_argument("F arity does not match q");
    // acc[x] = accumulated measure on frozen coordinates for current tuple x
    std::vector<std::vector<Rational>> acc;
    std::vector<int> x;
    for (int k = 0; k <= n; ++k) {
        const int E = m_->size(k);
        const std::size_t S = law_[k].size();
        std::vector<std::vector<Rational>> next(S);
        if (k == 0) {
            for (std::size_t i = 0; i < S; ++i) next[i] = {law_[0][i]};
        } else {
            for (std::size_t i = 0; i < acc.size(); ++i) {
                if (acc[i].empty()) continue;
                for (auto& [j, w] : trans_[k][i]) {
                    auto& dst = next[j];
                    if (dst.empty()) dst.assign(acc[i].size(), Rational(0));
                    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += acc[i][t] * w;
                }
            }
        }
        for (std::size_t i = 0; i < S; ++i) {
            if (next[i].empty()) continue;
            decode(i, E, N_, x);
            Rational c = 1;
            if (with_mass && tail[k + 1] > 0) {
                Rational g = 0;
                for (int v : x) g += m_->G(k)[v];
                g /= N_;
                for (int e = 0; e < tail[k + 1]; ++e) c *= g;
            }
            const auto b = block(x, E, q[k], false);
            std::vector<Rational> out(next[i].size() * b.size());
            for (std::size_t s = 0; s < next[i].size(); ++s)
                for (std::size_t t = 0; t < b.size(); ++t) out[s * b.size() + t] = next[i][s] * c * b[t];
            next[i] = std::move(out);
        }
        acc = std::move(next);
    }
    Rational total = 0;
    for (auto& a : acc)
        for (std::size_t t = 0; t < a.size(); ++t) total += a[t] * F.values()[t];
    return total;
}

Rational OrderedSystem::tensor_moment(const std::vector<int>& q, const TensorFunction& F) const {
    return moment(q, F, true);
}

Rational OrderedSystem::eta_tensor_moment(const std::vector<int>& q, const TensorFunction& F) const {
    return moment(q, F, false);
}

Rational OrderedSystem::first_particles(int n, const TensorFunction& F) const {
    const int q = static_cast<int>(F.arity());
    if (q > N_) throw std::invalid_argument("more coordinates than particles");
    Rational total = 0;
    std::vector<int> x, y(static_cast<std::size_t>(q));
    for (std::size_t i = 0; i < law_[n].size(); ++i) {
        decode(i, m_->size(n), N_, x);
        std::copy(x.begin(), x.begin() + q, y.begin());
        total += law_[n][i] * F.values()[F.domain().index(y)];
    }
    return total;
}

Rational OrderedSystem::gamma_dot_moment(int n, const TensorFunction& F) const {
    const int q = static_cast<int>(F.arity());
    if (q > N_) throw std::invalid_argument("injective moment needs q <= N");
    // path weight prod_{p<n} eta_p^N(G_p)^q carried forward, final block injective
    std::vector<Rational> w(law_[0]);
    std::vector<int> x;
    for (int k = 0; k < n; ++k) {
        std::vector<Rational> next(law_[k + 1].size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] == 0) continue;
            decode(i, m_->size(k), N_, x);
            Rational g = 0;
            for (int v : x) g += m_->G(k)[v];
            g /= N_;
            Rational c = w[i];
            for (int e = 0; e < q; ++e) c *= g;
            for (auto& [j, t] : trans_[k + 1][i]) next[j] += c * t;
        }
        w = std::move(next);
    }
    Rational total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0) continue;
        decode(i, m_->size(n), N_, x);
        const auto b = block(x, m_->size(n), q, true);
        Rational s = 0;
        for (std::size_t t = 0; t < b.size(); ++t) s += b[t] * F.values()[t];
        total += w[i] * s;
    }
    return total;
}

}  // namespace fkexp::oracle
